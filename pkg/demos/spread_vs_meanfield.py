"""Fifteen stochastic runs on a torus against the deterministic limit system.

The solver integrates the closed system of renewal-type equations for the
per-type densities (X, Y, Z).  Replica means on the torus stabilize quickly,
but they stabilize around the torus's own geometry-limited trajectory, not
around this solver's well-mixed limit; the gap printed at the end is real
and does not shrink with the side length.
"""

import numpy as np

from rumorlab import (
    MeanFieldProblem,
    SimConfig,
    Weibull,
    run_replicas,
    solve_mean_field,
    torus2d,
    validate_blueprint,
)

LAW = Weibull(2.0, 5.0)
LAM = 0.5
Y0 = 0.01

graph = torus2d(30)
config = SimConfig(
    contact_rate=LAM,
    law=LAW,
    t_max=20.0,
    grid_dt=0.5,
    seed=2024,
    initial_fractions=SimConfig.uniform_fractions(1, Y0),
)
print(f"simulating 15 replicas on the {graph.num_vertices}-vertex torus ...")
summary = run_replicas(graph, config, 15)
emp = summary.density_mean()[:, 0, :]

problem = MeanFieldProblem(validate_blueprint([[4]]), LAM, LAW, (Y0,), (0.0,), 20.0, 0.01)
sol = solve_mean_field(problem)

print()
print("   t    sim X     sim Y     sim Z   limit X   limit Y   limit Z")
for t in (0.0, 2.0, 5.0, 10.0, 20.0):
    gi = round(t / 0.5)
    x, y, z = emp[gi]
    lx, ly, lz = sol.at(t)[0]
    print(f"{t:5.1f}  {x:8.4f}  {y:8.4f}  {z:8.4f}  {lx:8.4f}  {ly:8.4f}  {lz:8.4f}")

mf_on_grid = np.stack(
    [sol.X[::50, 0], sol.Y[::50, 0], sol.Z[::50, 0]], axis=1
)
gap = np.abs(emp - mf_on_grid).max(axis=0)
print()
print(f"sup-t gap per component (X, Y, Z): {np.round(gap, 3).tolist()}")
print("local geometry slows the spread: most ignorants on the torus are never")
print("reached, while the well-mixed limit converts nearly four in five.")

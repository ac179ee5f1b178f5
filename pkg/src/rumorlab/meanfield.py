"""Deterministic density limit of the rumor process.

As the graph grows with fixed type structure, per-type densities
(X_k, Y_k, Z_k) / n concentrate on the solution of a system of Volterra
integral equations.  New spreaders created at time s survive spontaneous
retirement to time t with probability F^c(t - s), which makes the spreader
equation a convolution; conversions and contact stiflings close through the
per-density contact coefficients c[k, j] = counts[k][j] / p_j.

Two closures for the contact-stifling drain are provided:

* "survival": contact stifling acts as a per-spreader hazard competing with
  the spontaneous clock, so each cohort carries exp(-integral of hazard) and
  both removal routes together retire each spreader exactly once.
* "linear": the drain enters as a separately accumulated integral subtracted
  from the spreader density.  Spreaders hit by contact after their cohort
  mass already shrank by F are then double counted, which can push Y below
  zero once both mechanisms are active; with no spontaneous retirement the
  two closures coincide.  Kept for comparison studies.

The marching scheme is trapezoidal in all integrals with a per-step fixed
point, second order in dt and O(M^2) overall for M steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FixedPointDiverged, GridMismatch, TimesOutsideGrid
from .qtgraph import TypeBlueprint
from .stifling import Never, StiflingLaw

__all__ = [
    "MeanFieldProblem",
    "MeanFieldSolution",
    "ConvergenceReport",
    "solve_mean_field",
    "solve_classic_mt_ode",
    "convergence_order",
]

_FP_TOL = 1e-12
_FP_MAX_ITER = 50


@dataclass(frozen=True)
class MeanFieldProblem:
    """Densities are global: y0[k] + z0[k] <= p_k and X + Y + Z sums to 1."""

    blueprint: TypeBlueprint
    contact_rate: float
    law: StiflingLaw
    y0: tuple  # initial spreader density per type (fraction of all vertices)
    z0: tuple
    t_max: float
    dt: float

    def __post_init__(self):
        object.__setattr__(self, "y0", tuple(float(v) for v in np.atleast_1d(self.y0)))
        object.__setattr__(self, "z0", tuple(float(v) for v in np.atleast_1d(self.z0)))
        k = self.blueprint.n_types
        if len(self.y0) != k or len(self.z0) != k:
            raise ValueError(f"y0 and z0 must have one entry per type ({k})")
        p = self.blueprint.p
        y, z = np.array(self.y0), np.array(self.z0)
        if np.any(y < -1e-12) or np.any(z < -1e-12) or np.any(y + z > p + 1e-9):
            raise ValueError("need 0 <= y0, z0 and y0 + z0 <= p per type")
        if self.contact_rate <= 0.0:
            raise ValueError("contact_rate must be positive")
        steps = round(self.t_max / self.dt)
        if steps < 1 or abs(steps * self.dt - self.t_max) > 1e-9 * max(1.0, self.t_max):
            raise ValueError("dt must divide t_max")

    @property
    def n_steps(self) -> int:
        return round(self.t_max / self.dt)

    @staticmethod
    def from_fractions(
        blueprint: TypeBlueprint,
        contact_rate: float,
        law: StiflingLaw,
        fractions,
        t_max: float,
        dt: float,
    ) -> "MeanFieldProblem":
        """Per-type state fractions (x, y, z) rescaled to global densities."""
        p = blueprint.p
        y0 = tuple(float(row[1]) * p[k] for k, row in enumerate(fractions))
        z0 = tuple(float(row[2]) * p[k] for k, row in enumerate(fractions))
        return MeanFieldProblem(blueprint, contact_rate, law, y0, z0, t_max, dt)


@dataclass(frozen=True)
class MeanFieldSolution:
    times: np.ndarray
    X: np.ndarray  # (G, K)
    Y: np.ndarray
    Z: np.ndarray
    problem: MeanFieldProblem
    mode: str

    @property
    def n_types(self) -> int:
        return self.X.shape[1]

    def index_of(self, t: float) -> int:
        dt = self.problem.dt
        i = round(float(t) / dt)
        if i < 0 or i >= len(self.times) or abs(i * dt - t) > 1e-9 * max(1.0, abs(t)):
            raise TimesOutsideGrid(f"t = {t} is not on the grid with dt = {dt}")
        return i

    def at(self, t: float) -> np.ndarray:
        """(K, 3) densities at a grid time."""
        i = self.index_of(t)
        return np.stack([self.X[i], self.Y[i], self.Z[i]], axis=-1)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,type,X,Y,Z\n")
            for i, t in enumerate(self.times):
                for k in range(self.n_types):
                    fh.write(
                        f"{t:.10g},{k},{self.X[i, k]:.10g},"
                        f"{self.Y[i, k]:.10g},{self.Z[i, k]:.10g}\n"
                    )


def _grid(problem: MeanFieldProblem):
    m = problem.n_steps
    times = np.arange(m + 1) * (problem.t_max / m)
    return m, times


def solve_mean_field(problem: MeanFieldProblem, drain: str = "survival") -> MeanFieldSolution:
    """March the density system on the grid.

    drain selects the contact-stifling closure described in the module
    docstring; "survival" is the faithful limit of the simulator.
    """
    if drain not in ("survival", "linear"):
        raise ValueError("drain must be 'survival' or 'linear'")
    m_steps, times = _grid(problem)
    bp = problem.blueprint
    k = bp.n_types
    p = bp.p
    c_mat = bp.contact_matrix()
    y0 = np.array(problem.y0)
    z0 = np.array(problem.z0)

    fc = np.asarray(problem.law.survival(times))
    fd = 1.0 - fc

    x = np.empty((m_steps + 1, k))
    y = np.empty((m_steps + 1, k))
    z = np.empty((m_steps + 1, k))
    x[0] = p - y0 - z0
    y[0] = y0 * fc[0]
    z[0] = y0 * fd[0] + z0

    if drain == "linear":
        _march_linear(problem, x, y, z, fc, fd, c_mat)
    else:
        _march_survival(problem, x, y, z, fc, c_mat)
    return MeanFieldSolution(times=times, X=x, Y=y, Z=z, problem=problem, mode=drain)


def _march_linear(problem, x, y, z, fc, fd, c_mat):
    p = problem.blueprint.p
    lam = problem.contact_rate
    dt = problem.dt
    y0 = np.array(problem.y0)
    z0 = np.array(problem.z0)
    m_steps = x.shape[0] - 1
    k = x.shape[1]

    # g[l] = lam * X(l) * (C Y(l)): conversion flux; d[l]: contact-stifling flux
    g = np.empty((m_steps + 1, k))
    d = np.empty((m_steps + 1, k))
    g[0] = lam * x[0] * (c_mat @ y[0])
    d[0] = lam * y[0] * (c_mat @ (p - x[0]))
    gw = g.copy()  # trapezoid-weighted history rows (row 0 halved)
    gw[0] *= 0.5
    b_cum = np.zeros(k)  # integral of d over [0, t_m], updated per step

    for m in range(1, m_steps + 1):
        kernel_c = fc[m:0:-1]
        kernel_d = fd[m:0:-1]
        conv_y_prefix = kernel_c @ gw[:m]
        conv_z_prefix = kernel_d @ gw[:m]
        y_m = y[m - 1].copy()
        z_m = z[m - 1].copy()
        with np.errstate(over="ignore", invalid="ignore"):
            for it in range(_FP_MAX_ITER):
                x_m = p - y_m - z_m
                g_m = lam * x_m * (c_mat @ y_m)
                d_m = lam * y_m * (c_mat @ (p - x_m))
                b_m = b_cum + 0.5 * dt * (d[m - 1] + d_m)
                y_new = y0 * fc[m] + dt * (conv_y_prefix + 0.5 * fc[0] * g_m) - b_m
                z_new = y0 * fd[m] + z0 + dt * (conv_z_prefix + 0.5 * fd[0] * g_m) + b_m
                res = max(np.max(np.abs(y_new - y_m)), np.max(np.abs(z_new - z_m)))
                y_m, z_m = y_new, z_new
                if not np.isfinite(res):
                    raise FixedPointDiverged(
                        f"step {m}: iterates are no longer finite", step=m, residual=res
                    )
                if res <= _FP_TOL:
                    break
            else:
                raise FixedPointDiverged(
                    f"step {m}: residual {res:.3e} after {_FP_MAX_ITER} iterations",
                    step=m,
                    residual=res,
                )
        y[m] = y_m
        z[m] = z_m
        x[m] = p - y_m - z_m
        g[m] = lam * x[m] * (c_mat @ y_m)
        d[m] = lam * y_m * (c_mat @ (p - x[m]))
        gw[m] = g[m]
        b_cum = b_cum + 0.5 * dt * (d[m - 1] + d[m])


def _march_survival(problem, x, y, z, fc, c_mat):
    p = problem.blueprint.p
    lam = problem.contact_rate
    dt = problem.dt
    y0 = np.array(problem.y0)
    x0 = x[0].copy()
    m_steps = x.shape[0] - 1
    k = x.shape[1]

    # cumulative conversion exposure J and contact-stifling hazard H
    jrate = np.empty((m_steps + 1, k))  # lam * C Y
    hrate = np.empty((m_steps + 1, k))  # lam * C (p - X)
    jrate[0] = lam * (c_mat @ y[0])
    hrate[0] = lam * (c_mat @ (p - x[0]))
    j_cum = np.zeros(k)
    h_cum = np.zeros(k)
    # gs[l] = lam * X(l) * (C Y(l)) * exp(H(l)): conversion flux carried to
    # time t by exp(H(s) - H(t)), the survival against contact stifling
    gs = np.empty((m_steps + 1, k))
    gs[0] = lam * x[0] * (c_mat @ y[0])
    gsw = gs.copy()
    gsw[0] *= 0.5

    for m in range(1, m_steps + 1):
        kernel_c = fc[m:0:-1]
        conv_prefix = kernel_c @ gsw[:m]
        x_m = x[m - 1].copy()
        y_m = y[m - 1].copy()
        for it in range(_FP_MAX_ITER):
            j_m = lam * (c_mat @ y_m)
            h_m = lam * (c_mat @ (p - x_m))
            j_tot = j_cum + 0.5 * dt * (jrate[m - 1] + j_m)
            h_tot = h_cum + 0.5 * dt * (hrate[m - 1] + h_m)
            x_new = x0 * np.exp(-j_tot)
            damp = np.exp(-h_tot)
            # endpoint written without exp(H(t_m)) so large hazards cannot
            # overflow in the cancelling pair
            y_new = damp * (y0 * fc[m] + dt * conv_prefix) + 0.5 * dt * fc[0] * (
                lam * x_new * (c_mat @ y_m)
            )
            res = max(np.max(np.abs(y_new - y_m)), np.max(np.abs(x_new - x_m)))
            x_m, y_m = x_new, y_new
            if res <= _FP_TOL:
                break
        else:
            raise FixedPointDiverged(
                f"step {m}: residual {res:.3e} after {_FP_MAX_ITER} iterations",
                step=m,
                residual=res,
            )
        x[m] = x_m
        y[m] = y_m
        z[m] = p - x_m - y_m
        jrate[m] = lam * (c_mat @ y_m)
        hrate[m] = lam * (c_mat @ (p - x_m))
        j_cum = j_cum + 0.5 * dt * (jrate[m - 1] + jrate[m])
        h_cum = h_cum + 0.5 * dt * (hrate[m - 1] + hrate[m])
        gs[m] = lam * x_m * (c_mat @ y_m) * np.exp(h_cum)
        gsw[m] = gs[m]


def solve_classic_mt_ode(problem: MeanFieldProblem) -> MeanFieldSolution:
    """Classic Maki-Thompson densities (no spontaneous stifling) by RK4.

    Independent of the Volterra marcher; requires the Never law, under which
    the integral system reduces to this ODE.
    """
    if not isinstance(problem.law, Never):
        raise ValueError("classic reduction is defined for the Never law only")
    m_steps, times = _grid(problem)
    bp = problem.blueprint
    p = bp.p
    c_mat = bp.contact_matrix()
    lam = problem.contact_rate
    dt = problem.dt
    k = bp.n_types

    def rhs(u):
        y_c, z_c = u[:k], u[k:]
        x_c = p - y_c - z_c
        flux_in = lam * x_c * (c_mat @ y_c)
        flux_out = lam * y_c * (c_mat @ (p - x_c))
        return np.concatenate([flux_in - flux_out, flux_out])

    x = np.empty((m_steps + 1, k))
    y = np.empty((m_steps + 1, k))
    z = np.empty((m_steps + 1, k))
    u = np.concatenate([np.array(problem.y0), np.array(problem.z0)])
    for m in range(m_steps + 1):
        y[m], z[m] = u[:k], u[k:]
        x[m] = p - y[m] - z[m]
        if m == m_steps:
            break
        k1 = rhs(u)
        k2 = rhs(u + 0.5 * dt * k1)
        k3 = rhs(u + 0.5 * dt * k2)
        k4 = rhs(u + dt * k3)
        u = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return MeanFieldSolution(times=times, X=x, Y=y, Z=z, problem=problem, mode="classic")


@dataclass(frozen=True)
class ConvergenceReport:
    dts: tuple
    errors: tuple
    order: float
    degenerate: bool  # errors at roundoff level, slope meaningless


def convergence_order(
    problem: MeanFieldProblem,
    dts,
    solver: str = "limit",
    drain: str = "survival",
    ref_dt: float | None = None,
) -> ConvergenceReport:
    """Observed order of accuracy against a finer-grid reference solution."""
    dts = sorted(float(d) for d in dts)
    if ref_dt is None:
        ref_dt = dts[0] / 2.0

    def solve(dt):
        prob = MeanFieldProblem(
            problem.blueprint,
            problem.contact_rate,
            problem.law,
            problem.y0,
            problem.z0,
            problem.t_max,
            dt,
        )
        if solver == "classic":
            return solve_classic_mt_ode(prob)
        return solve_mean_field(prob, drain=drain)

    ref = solve(ref_dt)
    errors = []
    for dt in dts:
        sol = solve(dt)
        idx = np.round(sol.times / ref_dt).astype(int)
        if np.max(np.abs(idx * ref_dt - sol.times)) > 1e-9 * max(1.0, problem.t_max):
            raise GridMismatch(f"dt = {dt} does not nest into ref_dt = {ref_dt}")
        err = max(
            np.max(np.abs(sol.X - ref.X[idx])),
            np.max(np.abs(sol.Y - ref.Y[idx])),
            np.max(np.abs(sol.Z - ref.Z[idx])),
        )
        errors.append(float(err))
    errors_arr = np.array(errors)
    degenerate = bool(np.all(errors_arr < 1e-12))
    if degenerate:
        order = float("nan")
    else:
        slope = np.polyfit(np.log(dts), np.log(np.maximum(errors_arr, 1e-300)), 1)[0]
        order = float(slope)
    return ConvergenceReport(
        dts=tuple(dts), errors=tuple(errors), order=order, degenerate=degenerate
    )

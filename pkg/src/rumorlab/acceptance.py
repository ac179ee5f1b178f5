"""Self-contained acceptance criteria for the whole package.

Each criterion pins its own parameters and seeds, runs simulator, solver, or
oracle code, and returns a CriterionResult with the measured quantities.
The same functions back the command-line `acceptance` subcommand and the
test suite, so a criterion's pass/fail status has exactly one definition.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .engine import IGNORANT, SPREADER, SimConfig, exact_mean_counts, run_replicas
from .fluctuations import (
    center_and_rescale,
    empirical_noise_check,
    eval_noise_covariance,
    moment_stats,
    sample_limit_noises,
    solve_fclt,
    variance_scaling_check,
)
from .meanfield import MeanFieldProblem, convergence_order, solve_classic_mt_ode, solve_mean_field
from .qtgraph import (
    GrowthTable,
    TypeBlueprint,
    bipartite24,
    boundary_margin_g,
    build_configuration_model,
    comb,
    cycle,
    decorated_grid,
    strip3,
    torus2d,
    validate_blueprint,
    verify_realization,
)
from .stifling import Exponential, Never, Weibull

__all__ = ["CriterionResult", "CRITERION_IDS", "run_criterion", "run_all", "format_result"]


@dataclass(frozen=True)
class CriterionResult:
    criterion_id: str
    passed: bool
    measured: dict
    detail: str
    runtime_seconds: float


def format_result(res: CriterionResult) -> str:
    status = "PASS" if res.passed else "FAIL"
    return f"{status} {res.criterion_id} [{res.runtime_seconds:.1f}s] {res.detail}"


def _finish(criterion_id, passed, measured, detail, started) -> CriterionResult:
    return CriterionResult(
        criterion_id=criterion_id,
        passed=bool(passed),
        measured=measured,
        detail=detail,
        runtime_seconds=time.time() - started,
    )


# one-type degree-4 blueprint shared by several criteria
_DEG4 = validate_blueprint([[4]])
_PATH5_COUNTS = ((0, 1, 0), (1, 0, 1), (0, 2, 0))


def _oracle_graph_check(graph, times, n_replicas, seed):
    """Max |z| between replica means and the exact chain expectations."""
    states = tuple(SPREADER if v == 0 else IGNORANT for v in range(graph.num_vertices))
    law = Exponential(1.0)
    config = SimConfig(
        contact_rate=1.0,
        law=law,
        t_max=max(times),
        grid_dt=0.5,
        seed=seed,
        initial_states=states,
    )
    summary = run_replicas(graph, config, n_replicas)
    exact = exact_mean_counts(graph, 1.0, law, states, times)
    worst = 0.0
    for ti, t in enumerate(times):
        gi = round(t / config.grid_dt)
        mean = summary.mean[gi]
        var = summary.var[gi]
        se = np.sqrt(var / n_replicas)
        diff = np.abs(mean - exact[ti])
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(se > 0, diff / se, np.where(diff > 0, np.inf, 0.0))
        worst = max(worst, float(z.max()))
    return worst


def criterion_oracle_c4(n_replicas: int = 100_000, seed: int = 20240811) -> CriterionResult:
    """Replica means match the exact chain on the 4-cycle."""
    started = time.time()
    worst = _oracle_graph_check(cycle(4), (0.5, 1.0, 2.0, 4.0), n_replicas, seed)
    return _finish(
        "oracle-c4",
        worst <= 3.0,
        {"max_abs_z": worst, "n_replicas": n_replicas},
        f"cycle(4): max |z| = {worst:.2f} over 4 times x 3 states (3.0 allowed)",
        started,
    )


def criterion_oracle_path5(n_replicas: int = 100_000, seed: int = 20240812) -> CriterionResult:
    """Replica means match the exact chain on the 5-vertex path realization."""
    started = time.time()
    bp = validate_blueprint(_PATH5_COUNTS)
    graph = build_configuration_model(bp, 5, seed=1)
    worst = _oracle_graph_check(graph, (0.5, 1.0, 2.0, 4.0), n_replicas, seed)
    return _finish(
        "oracle-path5",
        worst <= 3.0,
        {"max_abs_z": worst, "n_replicas": n_replicas},
        f"path-5 configuration graph: max |z| = {worst:.2f} (3.0 allowed)",
        started,
    )


def criterion_oracle(n_replicas: int = 100_000) -> CriterionResult:
    """Criterion 1: exact-oracle equivalence on both small graphs."""
    started = time.time()
    a = criterion_oracle_c4(n_replicas)
    b = criterion_oracle_path5(n_replicas)
    worst = max(a.measured["max_abs_z"], b.measured["max_abs_z"])
    return _finish(
        "oracle",
        a.passed and b.passed,
        {"cycle4_max_z": a.measured["max_abs_z"], "path5_max_z": b.measured["max_abs_z"]},
        f"max |z|: cycle(4) {a.measured['max_abs_z']:.2f}, path-5 "
        f"{b.measured['max_abs_z']:.2f} (3.0 allowed, {2 * n_replicas} replicas total)",
        started,
    )


_FIG8_LAW = Weibull(2.0, 5.0)
_FIG8_RATE = 0.5
_FIG8_Y0 = 0.01


def _torus_summary(side, n_replicas, seed, t_max=20.0, grid_dt=0.1):
    graph = torus2d(side)
    config = SimConfig(
        contact_rate=_FIG8_RATE,
        law=_FIG8_LAW,
        t_max=t_max,
        grid_dt=grid_dt,
        seed=seed,
        initial_fractions=SimConfig.uniform_fractions(1, _FIG8_Y0),
    )
    return run_replicas(graph, config, n_replicas)


def _fig8_solution(t_max=20.0, dt=0.01):
    problem = MeanFieldProblem(_DEG4, _FIG8_RATE, _FIG8_LAW, (_FIG8_Y0,), (0.0,), t_max, dt)
    return solve_mean_field(problem)


def criterion_flln_convergence(n_replicas: int = 30) -> CriterionResult:
    """Criterion 2: replica-mean densities approach the deterministic limit."""
    started = time.time()
    sol = _fig8_solution()
    stride = round(0.1 / sol.problem.dt)
    mf = np.stack([sol.X[::stride, 0], sol.Y[::stride, 0], sol.Z[::stride, 0]], axis=1)

    errs = {}
    for side, seed in ((20, 101), (50, 102)):
        summary = _torus_summary(side, n_replicas, seed)
        emp = summary.density_mean()[:, 0, :]  # (G, 3)
        errs[side] = np.abs(emp - mf).max(axis=0)  # per component X, Y, Z
    err20, err50 = errs[20], errs[50]
    decreasing = float(err20.max()) > float(err50.max())
    small = bool(np.all(err50 <= 0.03))
    detail = (
        f"sup errors (X,Y,Z): L=20 {np.round(err20, 3).tolist()}, "
        f"L=50 {np.round(err50, 3).tolist()}; need decreasing and <= 0.03"
    )
    return _finish(
        "flln-convergence",
        decreasing and small,
        {"err20": err20.tolist(), "err50": err50.tolist(),
         "decreasing": decreasing, "small_enough": small},
        detail,
        started,
    )


def criterion_variance_scaling(n_replicas: int = 100) -> CriterionResult:
    """Criterion 3: Var of the stifler density at t=2 scales like 1/n."""
    started = time.time()
    small = _torus_summary(20, n_replicas, seed=201, t_max=2.0)
    big = _torus_summary(50, n_replicas, seed=202, t_max=2.0)
    report = variance_scaling_check(small, big, t=2.0, component="Z")
    ok = not report.degenerate and 3.1 <= report.ratio <= 12.5
    return _finish(
        "variance-scaling",
        ok,
        {"ratio": report.ratio, "expected": report.expected,
         "ci": [report.ci_low, report.ci_high]},
        f"Var ratio L=20/L=50 at t=2: {report.ratio:.2f} "
        f"(CI [{report.ci_low:.2f}, {report.ci_high:.2f}]; allowed [3.1, 12.5])",
        started,
    )


def criterion_quadrature_order() -> CriterionResult:
    """Criterion 4: trapezoidal marching converges at second order."""
    started = time.time()
    problem = MeanFieldProblem(_DEG4, _FIG8_RATE, _FIG8_LAW, (_FIG8_Y0,), (0.0,), 20.0, 0.08)
    report = convergence_order(problem, dts=(0.08, 0.04, 0.02, 0.01))
    ok = not report.degenerate and 1.7 <= report.order <= 2.3
    return _finish(
        "quadrature-order",
        ok,
        {"order": report.order, "errors": list(report.errors)},
        f"estimated order {report.order:.2f} from dt {list(report.dts)} (allowed [1.7, 2.3])",
        started,
    )


def criterion_classic_reduction() -> CriterionResult:
    """Criterion 5: with no spontaneous stifling the classic model is recovered."""
    started = time.time()
    dt = 1e-3
    problem = MeanFieldProblem(_DEG4, _FIG8_RATE, Never(), (_FIG8_Y0,), (0.0,), 10.0, dt)
    volterra = solve_mean_field(problem)
    classic = solve_classic_mt_ode(problem)
    gap = max(
        float(np.abs(volterra.X - classic.X).max()),
        float(np.abs(volterra.Y - classic.Y).max()),
        float(np.abs(volterra.Z - classic.Z).max()),
    )
    return _finish(
        "classic-reduction",
        gap <= 1e-3,
        {"sup_gap": gap, "dt": dt},
        f"sup gap to the classic-model ODE at dt={dt:g}: {gap:.2e} (1e-3 allowed)",
        started,
    )


def criterion_gaussian_fluctuations(n_replicas: int = 100) -> CriterionResult:
    """Criterion 6: empirically centered fluctuations look Gaussian at t=2."""
    started = time.time()
    spreads = {}
    stats = None
    for side, seed in ((20, 601), (50, 602)):
        summary = _torus_summary(side, n_replicas, seed, t_max=2.0)
        fluct = center_and_rescale(summary, reference="empirical_mean")
        z_vals = fluct.at(2.0)[:, 0, 2]  # stifler component, single type
        spreads[side] = float(np.std(z_vals, ddof=1))
        if side == 50:
            stats = moment_stats(z_vals)
    spread_ratio = spreads[20] / spreads[50]
    shape_ok = abs(stats.skewness) < 0.5 and abs(stats.excess_kurtosis) < 1.0
    spread_ok = 1.0 / 1.5 <= spread_ratio <= 1.5
    return _finish(
        "gaussian-fluctuations",
        shape_ok and spread_ok,
        {"skewness": stats.skewness, "excess_kurtosis": stats.excess_kurtosis,
         "spread_ratio": spread_ratio, "spread20": spreads[20], "spread50": spreads[50]},
        f"L=50 skew {stats.skewness:+.2f} (<0.5), excess kurtosis "
        f"{stats.excess_kurtosis:+.2f} (<1.0); sqrt(n)-spread ratio L20/L50 "
        f"{spread_ratio:.2f} (within [0.67, 1.5])",
        started,
    )


def criterion_fclt_variance(n_samples: int = 1000, n_replicas: int = 100) -> CriterionResult:
    """Criterion 7 (soft): limit variance of the stifler fluctuation at t=2
    versus the sqrt(n)-rescaled simulator variance on the 50x50 torus."""
    started = time.time()
    sol = _fig8_solution(t_max=2.0, dt=0.01)
    cov = eval_noise_covariance(sol)
    noises = sample_limit_noises(cov, seed=701, n_samples=n_samples, structure="isometry")
    sample = solve_fclt(cov, noises)
    v_limit = float(np.var(sample.Z[:, sample.index_of(2.0), 0], ddof=1))

    summary = _torus_summary(50, n_replicas, seed=602, t_max=2.0)
    fluct = center_and_rescale(summary, reference="empirical_mean")
    v_emp = float(np.var(fluct.at(2.0)[:, 0, 2], ddof=1))

    gap = abs(v_limit - v_emp) / v_emp
    return _finish(
        "fclt-variance",
        gap <= 0.5,
        {"var_limit": v_limit, "var_empirical": v_emp, "relative_gap": gap},
        f"Var Zhat(2): limit {v_limit:.3f} vs empirical {v_emp:.3f}; "
        f"relative gap {gap:.2f} (0.5 allowed; soft criterion, gap reported)",
        started,
    )


def criterion_noise_covariance(n_replicas: int = 1000) -> CriterionResult:
    """Criterion 8: Monte Carlo initial-noise covariances match the formulas."""
    started = time.time()
    ln2 = float(np.log(2.0))
    report = empirical_noise_check(
        Exponential(1.0),
        y0=0.4,
        n_particles=10_000,
        n_replicas=n_replicas,
        times=[(ln2, ln2), (0.3, 1.0), (1.0, 0.3)],
        seed=801,
    )
    return _finish(
        "noise-covariance",
        report.ok(3.0),
        {"max_abs_z": report.max_abs_z,
         "rows": [(r.t, r.r, r.pair, r.empirical, r.predicted, r.z) for r in report.rows]},
        f"9 covariance comparisons (YY/ZZ/YZ at 3 time pairs): max |z| = "
        f"{report.max_abs_z:.2f} (3.0 allowed)",
        started,
    )


def criterion_blueprint_suite() -> CriterionResult:
    """Criterion 9: proportion identities and realization checks."""
    started = time.time()
    failures = []

    gamma24 = validate_blueprint([[0, 2], [4, 0]])
    if gamma24.proportions != (Fraction(2, 3), Fraction(1, 3)):
        failures.append(f"two-type proportions {gamma24.proportions}")

    grid4 = validate_blueprint([[0, 2, 2, 1], [2, 0, 0, 2], [2, 0, 2, 2], [1, 2, 2, 0]])
    if [grid4.degree(i) for i in range(4)] != [5, 4, 6, 5]:
        failures.append("decorated-grid degrees")
    if grid4.proportions != tuple([Fraction(1, 4)] * 4):
        failures.append(f"decorated-grid proportions {grid4.proportions}")

    five = validate_blueprint(
        [
            [0, 24, 2, 0, 3],
            [24, 0, 2, 0, 1],
            [2, 2, 0, 4, 0],
            [0, 0, 4, 0, 0],
            [3, 1, 0, 0, 0],
        ]
    )
    if five.proportions != tuple([Fraction(1, 5)] * 5):
        failures.append(f"five-orbit proportions {five.proportions}")

    builds = [
        ("cycle", cycle, (8,)), ("cycle", cycle, (13,)),
        ("torus2d", torus2d, (4,)), ("torus2d", torus2d, (6,)),
        ("bipartite24", bipartite24, (3,)), ("bipartite24", bipartite24, (5,)),
        ("decorated_grid", decorated_grid, (6, 4)), ("decorated_grid", decorated_grid, (8, 6)),
        ("comb", comb, (5,)), ("comb", comb, (9,)),
        ("strip3", strip3, (4,)), ("strip3", strip3, (7,)),
    ]
    checked = 0
    for name, fn, args in builds:
        rep = verify_realization(fn(*args))
        checked += 1
        if not rep.ok:
            failures.append(f"{name}{args}: {rep.message}")

    return _finish(
        "blueprint-suite",
        not failures,
        {"families_checked": checked, "failures": failures},
        f"3 proportion identities and {checked} realizations verified"
        + (f"; failures: {failures}" if failures else ""),
        started,
    )


def criterion_growth_margin(n_max: int = 10_000) -> CriterionResult:
    """Criterion 10: the boundary-margin function behaves on the plane table."""
    started = time.time()
    table = GrowthTable([(2 * r + 1) ** 2 for r in range(n_max + 1)])
    ns = list(range(2, 201)) + list(range(250, n_max + 1, 50))
    if ns[-1] != n_max:
        ns.append(n_max)
    prev_g = 0
    monotone = True
    bounded = True
    certified = True
    for n in ns:
        rep = boundary_margin_g(table, n)
        if not (1 <= rep.g <= n // 2):
            bounded = False
        if rep.margin > 0 and rep.ratio > rep.bound + 1e-12:
            certified = False
        if rep.g < prev_g:
            monotone = False
        prev_g = max(prev_g, rep.g)
    g_small = boundary_margin_g(table, 100).g
    g_final = boundary_margin_g(table, n_max).g
    diverging = monotone and g_final > g_small
    return _finish(
        "growth-margin",
        bounded and certified and diverging,
        {"g_at_100": g_small, "g_at_nmax": g_final, "monotone": monotone,
         "bounded": bounded, "certified": certified},
        f"g(100)={g_small}, g({n_max})={g_final}; in-range {bounded}, "
        f"certified ratio bound {certified}, nondecreasing {monotone}",
        started,
    )


_CRITERIA = {
    "oracle": criterion_oracle,
    "oracle-c4": criterion_oracle_c4,
    "oracle-path5": criterion_oracle_path5,
    "flln-convergence": criterion_flln_convergence,
    "variance-scaling": criterion_variance_scaling,
    "quadrature-order": criterion_quadrature_order,
    "classic-reduction": criterion_classic_reduction,
    "gaussian-fluctuations": criterion_gaussian_fluctuations,
    "fclt-variance": criterion_fclt_variance,
    "noise-covariance": criterion_noise_covariance,
    "blueprint-suite": criterion_blueprint_suite,
    "growth-margin": criterion_growth_margin,
}

_NUMERIC_ALIASES = {
    "1": "oracle",
    "2": "flln-convergence",
    "3": "variance-scaling",
    "4": "quadrature-order",
    "5": "classic-reduction",
    "6": "gaussian-fluctuations",
    "7": "fclt-variance",
    "8": "noise-covariance",
    "9": "blueprint-suite",
    "10": "growth-margin",
}

CRITERION_IDS = tuple(_NUMERIC_ALIASES[str(i)] for i in range(1, 11))


def run_criterion(criterion_id: str) -> CriterionResult:
    key = _NUMERIC_ALIASES.get(str(criterion_id), str(criterion_id))
    if key not in _CRITERIA:
        raise KeyError(
            f"unknown criterion {criterion_id!r}; choose from "
            f"{sorted(_CRITERIA)} or 1..10"
        )
    return _CRITERIA[key]()


def run_all() -> list:
    return [run_criterion(cid) for cid in CRITERION_IDS]

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from rumorlab import (
    Exponential,
    Immediate,
    MeanFieldProblem,
    Never,
    Weibull,
    convergence_order,
    rescale_law,
    solve_classic_mt_ode,
    solve_mean_field,
    validate_blueprint,
)
from rumorlab.errors import FixedPointDiverged, TimesOutsideGrid

DEG4 = validate_blueprint([[4]])
GAMMA24 = validate_blueprint([[0, 2], [4, 0]])


def _problem(law, t_max=10.0, dt=0.01, y0=0.01, lam=0.5, bp=DEG4):
    k = bp.n_types
    return MeanFieldProblem(bp, lam, law, (y0,) * k, (0.0,) * k, t_max, dt)


def test_no_spreaders_nothing_happens():
    problem = MeanFieldProblem(DEG4, 0.5, Weibull(2.0, 5.0), (0.0,), (0.0,), 5.0, 0.05)
    sol = solve_mean_field(problem)
    np.testing.assert_allclose(sol.Y, 0.0, atol=1e-14)
    np.testing.assert_allclose(sol.X, 1.0, atol=1e-14)


def test_immediate_law_freezes_densities():
    problem = MeanFieldProblem(DEG4, 0.5, Immediate(), (0.3,), (0.1,), 5.0, 0.05)
    sol = solve_mean_field(problem)
    np.testing.assert_allclose(sol.Y[1:], 0.0, atol=1e-12)
    np.testing.assert_allclose(sol.X, 0.6, atol=1e-12)
    np.testing.assert_allclose(sol.Z[1:], 0.4, atol=1e-12)


def test_conservation_and_bounds():
    sol = solve_mean_field(_problem(Weibull(2.0, 5.0), t_max=20.0))
    p = np.array([float(q) for q in DEG4.proportions])
    assert np.abs(sol.X + sol.Y + sol.Z - p[None, :]).max() <= 1e-12
    for arr in (sol.X, sol.Y, sol.Z):
        assert np.all(arr >= -1e-9) and np.all(arr <= 1.0 + 1e-9)


def test_never_reduces_to_classic_ode():
    problem = _problem(Never(), t_max=10.0, dt=0.01)
    a = solve_mean_field(problem)
    b = solve_classic_mt_ode(problem)
    gap = max(np.abs(a.X - b.X).max(), np.abs(a.Y - b.Y).max(), np.abs(a.Z - b.Z).max())
    assert gap <= 2e-3


def test_exponential_matches_markov_ode():
    # with a memoryless law the integral system collapses to the ODE
    #   X' = -lam c X Y,  Y' = lam c X Y - lam c Y (p - X) - mu Y
    lam, mu, c = 0.5, 0.4, 4.0
    problem = _problem(Exponential(mu), t_max=8.0, dt=0.002)
    sol = solve_mean_field(problem)

    def rhs(_t, u):
        x, y = u
        return [-lam * c * x * y, lam * c * x * y - lam * c * y * (1.0 - x) - mu * y]

    ref = solve_ivp(
        rhs, (0.0, 8.0), [0.99, 0.01], t_eval=sol.times, rtol=1e-10, atol=1e-12
    )
    assert np.abs(sol.X[:, 0] - ref.y[0]).max() <= 1e-4
    assert np.abs(sol.Y[:, 0] - ref.y[1]).max() <= 1e-4


def test_time_rescaling_invariance():
    # doubling the contact rate and halving eta compresses time exactly
    law = Weibull(2.0, 5.0)
    c = 2.0
    slow = solve_mean_field(_problem(law, t_max=8.0, dt=0.01, lam=0.5))
    fast = solve_mean_field(
        MeanFieldProblem(DEG4, 0.5 * c, rescale_law(law, c), (0.01,), (0.0,), 8.0 / c, 0.01 / c)
    )
    np.testing.assert_allclose(fast.Y, slow.Y, atol=1e-10)
    np.testing.assert_allclose(fast.X, slow.X, atol=1e-10)


def test_two_type_solution_conserves_per_type():
    problem = MeanFieldProblem(GAMMA24, 0.5, Weibull(2.0, 5.0), (0.02, 0.01), (0.0, 0.0), 10.0, 0.01)
    sol = solve_mean_field(problem)
    p = np.array([float(q) for q in GAMMA24.proportions])
    assert np.abs(sol.X + sol.Y + sol.Z - p[None, :]).max() <= 1e-12
    assert sol.Y.shape == (1001, 2)


def test_convergence_order_is_second():
    problem = _problem(Exponential(0.5), t_max=4.0, dt=0.08)
    report = convergence_order(problem, dts=(0.08, 0.04, 0.02))
    assert 1.6 <= report.order <= 2.4


def test_convergence_order_degenerate_on_flat_solution():
    problem = MeanFieldProblem(DEG4, 0.5, Weibull(2.0, 5.0), (0.0,), (0.0,), 2.0, 0.08)
    report = convergence_order(problem, dts=(0.08, 0.04))
    assert report.degenerate


def test_linear_drain_blows_up_where_survival_succeeds():
    problem = _problem(Weibull(2.0, 5.0), t_max=20.0, dt=0.01)
    solve_mean_field(problem, drain="survival")
    with pytest.raises(FixedPointDiverged):
        solve_mean_field(problem, drain="linear")


def test_linear_and_survival_agree_without_stifling_law():
    # identical continuum systems when F = 0; gap is discretization only
    problem = _problem(Never(), t_max=6.0, dt=0.01)
    a = solve_mean_field(problem, drain="survival")
    b = solve_mean_field(problem, drain="linear")
    assert np.abs(a.Y - b.Y).max() <= 2e-5
    fine = _problem(Never(), t_max=6.0, dt=0.0025)
    a2 = solve_mean_field(fine, drain="survival")
    b2 = solve_mean_field(fine, drain="linear")
    assert np.abs(a2.Y - b2.Y).max() <= np.abs(a.Y - b.Y).max() / 8.0


def test_grid_lookup():
    sol = solve_mean_field(_problem(Never(), t_max=2.0, dt=0.1))
    assert sol.index_of(1.0) == 10
    assert sol.at(1.0).shape == (1, 3)
    with pytest.raises(TimesOutsideGrid):
        sol.index_of(0.55)
    with pytest.raises(TimesOutsideGrid):
        sol.index_of(3.0)


def test_problem_validation():
    with pytest.raises(ValueError):
        MeanFieldProblem(DEG4, 0.5, Never(), (0.5, 0.5), (0.0,), 1.0, 0.1)
    with pytest.raises(ValueError):
        MeanFieldProblem(DEG4, 0.5, Never(), (1.5,), (0.0,), 1.0, 0.1)
    with pytest.raises(ValueError):
        MeanFieldProblem(DEG4, 0.5, Never(), (0.1,), (0.0,), 1.0, 0.3)


def test_solution_csv(tmp_path):
    sol = solve_mean_field(_problem(Never(), t_max=1.0, dt=0.5))
    path = tmp_path / "mf.csv"
    sol.to_csv(path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "t,type,X,Y,Z"
    assert len(lines) == 1 + 3


@given(
    y0=st.floats(min_value=0.001, max_value=0.5),
    z0=st.floats(min_value=0.0, max_value=0.3),
    lam=st.floats(min_value=0.1, max_value=1.5),
)
@settings(max_examples=10, deadline=None)
def test_solution_stays_physical(y0, z0, lam):
    problem = MeanFieldProblem(DEG4, lam, Weibull(2.0, 2.0), (y0,), (z0,), 3.0, 0.05)
    sol = solve_mean_field(problem)
    np.testing.assert_allclose(sol.X + sol.Y + sol.Z, 1.0, atol=1e-8)
    for arr in (sol.X, sol.Y, sol.Z):
        assert np.all(arr >= -1e-8) and np.all(arr <= 1.0 + 1e-8)

import dataclasses
import json
import math

import numpy as np
import pytest

from rumorlab import (
    Exponential,
    MeanFieldProblem,
    Weibull,
    center_and_rescale,
    empirical_noise_check,
    eval_noise_covariance,
    initial_noise_covariance,
    moment_stats,
    sample_limit_noises,
    solve_fclt,
    solve_mean_field,
    validate_blueprint,
    variance_scaling_check,
)
from rumorlab.engine import SimConfig, run_replicas
from rumorlab.errors import GridMismatch, NotPSDAfterRidge
from rumorlab.qtgraph import torus2d

DEG4 = validate_blueprint([[4]])
LN2 = math.log(2.0)


def _solution(t_max=2.0, dt=0.01, law=None, y0=0.01):
    law = law if law is not None else Weibull(2.0, 5.0)
    problem = MeanFieldProblem(DEG4, 0.5, law, (y0,), (0.0,), t_max, dt)
    return solve_mean_field(problem)


def test_initial_covariance_closed_form():
    # Exp(1) at t = r = ln 2: F = F^c = 1/2, so y0 / 4 on the diagonal
    assert initial_noise_covariance(0.4, Exponential(1.0), LN2, LN2) == pytest.approx(0.1)
    assert initial_noise_covariance(0.4, Exponential(1.0), LN2, LN2, pair="YZ") == pytest.approx(-0.1)
    assert initial_noise_covariance(0.4, Exponential(1.0), LN2, LN2, pair="ZZ") == pytest.approx(0.1)


def test_initial_covariance_symmetric_in_time():
    law = Exponential(1.0)
    a = initial_noise_covariance(0.4, law, 0.3, 1.0)
    b = initial_noise_covariance(0.4, law, 1.0, 0.3)
    assert a == pytest.approx(b)
    # explicit product form F(min) * F^c(max)
    assert a == pytest.approx(0.4 * law.cdf(0.3) * law.survival(1.0))


def test_initial_block_structure():
    cov = eval_noise_covariance(_solution(y0=0.4, law=Exponential(1.0)))
    blk = cov.initial_block(0)
    t_len = len(cov.times)
    s = blk[:t_len, :t_len]
    np.testing.assert_allclose(blk[t_len:, t_len:], s, atol=1e-12)  # Z block equals Y block
    np.testing.assert_allclose(blk[:t_len, t_len:], -s, atol=1e-12)  # pathwise Z0 = -Y0
    # off-diagonal entries agree with the scalar closed form
    i, j = cov.solution.index_of(0.5), cov.solution.index_of(1.5)
    assert s[i, j] == pytest.approx(cov.initial_autocovariance(0, 0.5, 1.5))
    w = np.linalg.eigvalsh((blk + blk.T) / 2.0)
    assert w.min() >= -1e-10 * max(1.0, w.max())


def test_pair_block_isometry_psd_and_poisson_coherence():
    sol = _solution(t_max=1.0)
    cov = eval_noise_covariance(sol)
    blk = cov.pair_block(0, 0, structure="isometry")
    t_len = len(cov.times)
    w = np.linalg.eigvalsh((blk + blk.T) / 2.0)
    assert w.min() >= -1e-10 * max(1.0, w.max())
    # Y + Z of a compensated marked arrival stream is the compensated stream
    # itself, so Var(Y+Z)(t) must equal the integrated arrival intensity
    yy, zz, yz = blk[:t_len, :t_len], blk[t_len:, t_len:], blk[:t_len, t_len:]
    var_sum = np.diag(yy) + np.diag(zz) + 2.0 * np.diag(yz)
    lam_c = 0.5 * float(cov.contact[0, 0])
    integrand = lam_c * sol.X[:, 0] * sol.Y[:, 0]
    expected = np.concatenate(
        [[0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(sol.times))]
    )
    np.testing.assert_allclose(var_sum, expected[cov.indices], atol=1e-10)


def test_min_kernel_equal_time_indefinite_when_mostly_surviving():
    # printed equal-time minor [[v, -v], [-v, w]] with w < v cannot be PSD
    cov = eval_noise_covariance(_solution(t_max=2.0))
    blk = cov.pair_block(0, 0, structure="min_kernel")
    t_len = len(cov.times)
    i = t_len - 1
    minor = np.array(
        [[blk[i, i], blk[i, t_len + i]], [blk[t_len + i, i], blk[t_len + i, t_len + i]]]
    )
    assert np.linalg.eigvalsh(minor).min() < -1e-8


def test_min_kernel_sampling_fails_loudly():
    cov = eval_noise_covariance(_solution(t_max=2.0))
    with pytest.raises(NotPSDAfterRidge) as err:
        sample_limit_noises(cov, seed=0, n_samples=2, structure="min_kernel")
    assert err.value.min_eigenvalue < 0.0
    assert err.value.block


def test_sampler_deterministic_and_centered():
    cov = eval_noise_covariance(_solution(t_max=1.0, dt=0.05, y0=0.3))
    a = sample_limit_noises(cov, seed=12, n_samples=400)
    b = sample_limit_noises(cov, seed=12, n_samples=400)
    np.testing.assert_array_equal(a.initial_y, b.initial_y)
    np.testing.assert_array_equal(a.pair_y, b.pair_y)
    np.testing.assert_array_equal(a.initial_z, -a.initial_y)
    assert abs(a.initial_y.mean()) <= 0.05


def test_sampler_covariance_matches_profile():
    law = Exponential(1.0)
    cov = eval_noise_covariance(_solution(t_max=1.0, dt=0.1, y0=0.4, law=law))
    n = 20_000
    draws = sample_limit_noises(cov, seed=5, n_samples=n)
    i = cov.solution.index_of(0.5)
    j = cov.solution.index_of(1.0)
    emp = np.cov(draws.initial_y[:, 0, i], draws.initial_y[:, 0, j])[0, 1]
    want = initial_noise_covariance(0.4, law, 0.5, 1.0)
    # clt band: fourth-moment bound for a gaussian product, 4 sigma
    sd = math.sqrt(2.0) * abs(initial_noise_covariance(0.4, law, 0.75, 0.75)) / math.sqrt(n)
    assert abs(emp - want) <= 4.0 * max(sd, 1e-4)


def test_zero_initial_density_gives_zero_initial_noise():
    cov = eval_noise_covariance(_solution(t_max=1.0, dt=0.1, y0=0.0))
    draws = sample_limit_noises(cov, seed=1, n_samples=10)
    np.testing.assert_allclose(draws.initial_y, 0.0, atol=1e-12)


def test_solve_fclt_zero_noise_zero_solution():
    cov = eval_noise_covariance(_solution(t_max=1.0, dt=0.02))
    noises = sample_limit_noises(cov, seed=2, n_samples=3)
    zeros = dataclasses.replace(
        noises,
        initial_y=np.zeros_like(noises.initial_y),
        pair_y=np.zeros_like(noises.pair_y),
        pair_z=np.zeros_like(noises.pair_z),
        stifling=np.zeros_like(noises.stifling),
    )
    sample = solve_fclt(cov, zeros)
    np.testing.assert_allclose(sample.Y, 0.0, atol=1e-12)
    np.testing.assert_allclose(sample.Z, 0.0, atol=1e-12)


def test_solve_fclt_linear_in_the_noise():
    cov = eval_noise_covariance(_solution(t_max=1.0, dt=0.02))
    noises = sample_limit_noises(cov, seed=3, n_samples=2)
    half = dataclasses.replace(
        noises,
        initial_y=0.5 * noises.initial_y,
        pair_y=0.5 * noises.pair_y,
        pair_z=0.5 * noises.pair_z,
        stifling=0.5 * noises.stifling,
    )
    full = solve_fclt(cov, noises)
    halved = solve_fclt(cov, half)
    np.testing.assert_allclose(halved.Y, 0.5 * full.Y, atol=1e-10)
    np.testing.assert_allclose(halved.Z, 0.5 * full.Z, atol=1e-10)


def test_solve_fclt_rejects_subsampled_grid():
    sol = _solution(t_max=1.0, dt=0.02)
    cov = eval_noise_covariance(sol, times=sol.times[::5])
    noises = sample_limit_noises(cov, seed=4, n_samples=1)
    with pytest.raises(GridMismatch):
        solve_fclt(cov, noises)


def test_solve_fclt_conserves_fluctuation_mass():
    cov = eval_noise_covariance(_solution(t_max=1.0, dt=0.02))
    sample = solve_fclt(cov, sample_limit_noises(cov, seed=6, n_samples=4))
    np.testing.assert_allclose(sample.X + sample.Y + sample.Z, 0.0, atol=1e-9)


def _tiny_summary(seed, side=4, n_replicas=30, t_max=1.0):
    graph = torus2d(side)
    config = SimConfig(
        contact_rate=0.5,
        law=Weibull(2.0, 5.0),
        t_max=t_max,
        grid_dt=0.25,
        seed=seed,
        initial_fractions=SimConfig.uniform_fractions(1, 0.25),
    )
    return run_replicas(graph, config, n_replicas)


def test_center_and_rescale_empirical_mode():
    summary = _tiny_summary(seed=8)
    fluct = center_and_rescale(summary)
    assert fluct.values.shape == (30, len(summary.times), 1, 3)
    # empirical centering removes the cross-replica mean exactly
    np.testing.assert_allclose(fluct.values.mean(axis=0), 0.0, atol=1e-9)
    assert fluct.num_vertices == 16


def test_center_and_rescale_meanfield_reference():
    summary = _tiny_summary(seed=9)
    problem = MeanFieldProblem(DEG4, 0.5, Weibull(2.0, 5.0), (0.25,), (0.0,), 1.0, 0.25)
    sol = solve_mean_field(problem)
    fluct = center_and_rescale(summary, reference=sol)
    assert fluct.reference_mode == "meanfield"
    wrong_grid = solve_mean_field(
        MeanFieldProblem(DEG4, 0.5, Weibull(2.0, 5.0), (0.25,), (0.0,), 1.0, 0.125)
    )
    with pytest.raises(GridMismatch):
        center_and_rescale(summary, reference=wrong_grid)


def test_moment_stats_gaussian_sanity():
    rng = np.random.default_rng(0)
    stats = moment_stats(rng.normal(size=20_000))
    assert abs(stats.skewness) < 0.1
    assert abs(stats.excess_kurtosis) < 0.15
    assert not stats.degenerate
    flat = moment_stats(np.ones(50))
    assert flat.degenerate


def test_moment_stats_needs_samples():
    with pytest.raises(ValueError):
        moment_stats([1.0, 2.0])


def test_variance_scaling_requires_replicas():
    small = _tiny_summary(seed=10, n_replicas=10)
    big = _tiny_summary(seed=11, side=8, n_replicas=10)
    with pytest.raises(ValueError):
        variance_scaling_check(small, big, t=1.0)


def test_variance_scaling_reports_ratio():
    small = _tiny_summary(seed=12, side=4, n_replicas=40)
    big = _tiny_summary(seed=13, side=8, n_replicas=40)
    report = variance_scaling_check(small, big, t=1.0, component="Z", seed=0)
    assert report.expected == pytest.approx(4.0)
    assert not report.degenerate
    assert 0.5 <= report.ratio <= 30.0
    assert report.ci_low < report.ratio < report.ci_high


def test_empirical_noise_check_agrees():
    report = empirical_noise_check(
        Exponential(1.0),
        y0=0.4,
        n_particles=4000,
        n_replicas=400,
        times=[(LN2, LN2), (0.3, 1.0), (1.0, 0.3)],
        seed=77,
    )
    assert report.ok(4.0)
    by_key = {(row.t, row.r, row.pair): row for row in report.rows}
    # time-swapped predictions are symmetric for every pair type
    for pair in ("YY", "ZZ", "YZ"):
        a, b = by_key[(0.3, 1.0, pair)], by_key[(1.0, 0.3, pair)]
        assert a.predicted == pytest.approx(b.predicted)
    assert by_key[(LN2, LN2, "YZ")].predicted < 0.0


def test_write_covariance_blocks(tmp_path):
    from rumorlab import write_covariance_blocks

    cov = eval_noise_covariance(_solution(t_max=1.0, dt=0.1))
    written = write_covariance_blocks(cov, tmp_path)
    names = {p.name if hasattr(p, "name") else str(p).split("/")[-1] for p in written}
    assert "covariance_index.json" in names
    index = json.loads((tmp_path / "covariance_index.json").read_text())
    assert index["structure"] == "isometry"
    blk = np.loadtxt(tmp_path / "covariance_pair_0_0.csv", delimiter=",")
    np.testing.assert_allclose(blk, blk.T, atol=1e-12)

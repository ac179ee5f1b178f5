"""One test per acceptance criterion.

Each test runs its criterion end to end, prints the PASS/FAIL line with the
measured values (also echoed in the terminal summary), and asserts the
criterion's own verdict.  Criteria pin their parameters and seeds inside
rumorlab.acceptance so the command-line `acceptance` subcommand and this
suite are the same experiment.
"""

import pytest

from rumorlab.acceptance import format_result, run_criterion


def _check(criterion_id, acceptance_log):
    res = run_criterion(criterion_id)
    line = format_result(res)
    acceptance_log.append(line)
    print(line)
    assert res.passed, line
    return res


def test_criterion_01_exact_oracle_equivalence(acceptance_log):
    res = _check("oracle", acceptance_log)
    assert res.measured["cycle4_max_z"] <= 3.0
    assert res.measured["path5_max_z"] <= 3.0


def test_criterion_02_deterministic_limit_convergence(acceptance_log):
    _check("flln-convergence", acceptance_log)


def test_criterion_03_variance_scaling(acceptance_log):
    res = _check("variance-scaling", acceptance_log)
    assert 3.1 <= res.measured["ratio"] <= 12.5


def test_criterion_04_quadrature_order(acceptance_log):
    res = _check("quadrature-order", acceptance_log)
    assert 1.7 <= res.measured["order"] <= 2.3


def test_criterion_05_classic_model_reduction(acceptance_log):
    res = _check("classic-reduction", acceptance_log)
    assert res.measured["sup_gap"] <= 1e-3


def test_criterion_06_gaussian_fluctuations(acceptance_log):
    res = _check("gaussian-fluctuations", acceptance_log)
    assert abs(res.measured["skewness"]) < 0.5
    assert abs(res.measured["excess_kurtosis"]) < 1.0


def test_criterion_07_limit_variance_cross_check(acceptance_log):
    _check("fclt-variance", acceptance_log)


def test_criterion_08_noise_covariance_oracle(acceptance_log):
    res = _check("noise-covariance", acceptance_log)
    assert res.measured["max_abs_z"] <= 3.0


def test_criterion_09_blueprint_suite(acceptance_log):
    res = _check("blueprint-suite", acceptance_log)
    assert res.measured["failures"] == []


def test_criterion_10_growth_margin(acceptance_log):
    res = _check("growth-margin", acceptance_log)
    assert res.measured["monotone"] and res.measured["bounded"] and res.measured["certified"]


def test_unknown_criterion_rejected():
    with pytest.raises(KeyError):
        run_criterion("nosuch")

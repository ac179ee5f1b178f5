import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rumorlab import (
    Deterministic,
    Exponential,
    Immediate,
    Never,
    TruncatedCauchy,
    Weibull,
    law_from_config,
    law_to_config,
    parse_law,
    rescale_law,
)

ALL_LAWS = [
    Exponential(1.0),
    Exponential(0.3),
    Weibull(2.0, 5.0),
    Weibull(0.7, 1.3),
    TruncatedCauchy(4.0, 1.4),
    TruncatedCauchy(-1.0, 2.0),
    Deterministic(2.5),
    Never(),
    Immediate(),
]


@pytest.mark.parametrize("law", ALL_LAWS, ids=lambda l: repr(l))
def test_cdf_survival_complementary(law):
    t = np.linspace(0.0, 30.0, 301)
    np.testing.assert_allclose(law.cdf(t) + law.survival(t), 1.0, atol=1e-12)


@pytest.mark.parametrize("law", ALL_LAWS, ids=lambda l: repr(l))
def test_cdf_monotone_and_bounded(law):
    t = np.linspace(0.0, 50.0, 501)
    f = law.cdf(t)
    assert np.all(f >= -1e-15) and np.all(f <= 1.0 + 1e-15)
    assert np.all(np.diff(f) >= -1e-12)
    assert law.cdf(-1.0) == 0.0 and law.survival(-1.0) == 1.0


def test_exponential_memoryless():
    law = Exponential(0.7)
    for s in (0.2, 1.0, 3.0):
        for t in (0.5, 2.0):
            assert law.survival(s + t) == pytest.approx(law.survival(s) * law.survival(t))


def test_weibull_survival_at_scale():
    # (t/scale)^shape = 1 at t = scale regardless of shape
    assert Weibull(2.0, 5.0).survival(5.0) == pytest.approx(math.exp(-1.0))
    assert Weibull(0.5, 3.0).survival(3.0) == pytest.approx(math.exp(-1.0))


def test_weibull_mean_closed_form():
    assert Weibull(2.0, 5.0).mean() == pytest.approx(5.0 * math.gamma(1.5))
    assert Exponential(2.0).mean() == pytest.approx(0.5)


def test_truncated_cauchy_normalization():
    law = TruncatedCauchy(4.0, 1.4)
    assert law.cdf(0.0) == 0.0
    assert law.cdf(1e9) == pytest.approx(1.0, abs=1e-6)
    u = np.linspace(0.01, 0.99, 25)
    np.testing.assert_allclose(law.cdf(law.quantile(u)), u, atol=1e-10)


def test_deterministic_step():
    law = Deterministic(2.5)
    assert law.survival(2.4999) == 1.0
    assert law.survival(2.5) == 0.0
    assert law.mean() == 2.5


def test_never_and_immediate_extremes():
    assert Never().survival(1e12) == 1.0
    assert math.isinf(Never().quantile(0.5))
    assert Immediate().survival(0.0) == 0.0
    assert Immediate().quantile(0.9) == 0.0


@pytest.mark.parametrize(
    "law",
    [l for l in ALL_LAWS if not isinstance(l, (Never, Deterministic, Immediate))],
    ids=lambda l: repr(l),
)
def test_sampling_matches_cdf_dkw(law):
    rng = np.random.default_rng(42)
    n = 20_000
    x = np.sort(law.sample(rng, size=n))
    # empirical CDF deviation bound at confidence 1 - 1e-6
    bound = math.sqrt(math.log(2.0 / 1e-6) / (2.0 * n))
    ecdf_hi = np.arange(1, n + 1) / n
    ecdf_lo = np.arange(0, n) / n
    f = law.cdf(x)
    sup = max(np.abs(ecdf_hi - f).max(), np.abs(ecdf_lo - f).max())
    assert sup <= bound


def test_never_samples_are_infinite():
    rng = np.random.default_rng(0)
    assert np.all(np.isinf(Never().sample(rng, size=100)))


def test_atom_laws_sample_their_atom():
    rng = np.random.default_rng(0)
    assert np.all(Deterministic(2.5).sample(rng, size=100) == 2.5)
    assert np.all(Immediate().sample(rng, size=100) == 0.0)


@pytest.mark.parametrize("law", ALL_LAWS, ids=lambda l: repr(l))
def test_config_round_trip(law):
    assert law_from_config(law_to_config(law)) == law


def test_parse_law_syntax():
    assert parse_law("weibull:2:5") == Weibull(2.0, 5.0)
    assert parse_law("exp:1") == Exponential(1.0)
    assert parse_law("cauchy:4:1.4") == TruncatedCauchy(4.0, 1.4)
    assert parse_law("never") == Never()
    with pytest.raises(ValueError):
        parse_law("weibull:2")
    with pytest.raises(ValueError):
        parse_law("nosuch:1")


def test_law_config_rejects_bad_keys():
    with pytest.raises(ValueError):
        law_from_config({"law": "weibull", "shape": 2.0})
    with pytest.raises(ValueError):
        law_from_config({"law": "never", "extra": 1.0})


@given(
    c=st.floats(min_value=0.1, max_value=10.0, allow_nan=False),
    t=st.floats(min_value=0.0, max_value=20.0, allow_nan=False),
)
@settings(max_examples=60, deadline=None)
def test_rescale_law_survival_identity(c, t):
    # rescale_law(law, c) is the law of eta / c: P(eta/c > t) = P(eta > c t)
    for law in (Exponential(0.8), Weibull(2.0, 5.0), Deterministic(3.0)):
        scaled = rescale_law(law, c)
        assert scaled.survival(t) == pytest.approx(law.survival(c * t), abs=1e-12)


def test_rescale_rejects_nonpositive():
    with pytest.raises(ValueError):
        rescale_law(Exponential(1.0), 0.0)

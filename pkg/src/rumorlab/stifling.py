"""Stifling-time laws.

Each spreader carries an independent waiting time eta drawn at the moment it
starts spreading; when eta elapses the spreader retires spontaneously.  A law
exposes the distribution function F, the survival function F^c = 1 - F, and
inverse-transform sampling so that a single uniform stream reproduces the
whole draw sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "StiflingLaw",
    "Exponential",
    "Weibull",
    "TruncatedCauchy",
    "Deterministic",
    "Never",
    "Immediate",
    "law_from_config",
    "law_to_config",
    "parse_law",
    "rescale_law",
]


class StiflingLaw:
    """Base class: distribution of the spontaneous stifling time on [0, inf]."""

    def survival(self, t):
        """P(eta > t), vectorized over t."""
        raise NotImplementedError

    def cdf(self, t):
        """P(eta <= t), vectorized over t.  Defined as 1 - survival exactly."""
        return 1.0 - self.survival(t)

    def quantile(self, u):
        """Generalized inverse of the cdf on [0, 1); +inf allowed."""
        raise NotImplementedError

    def sample(self, rng, size=None):
        """Inverse-transform draw(s) from a numpy Generator."""
        return self.quantile(rng.random(size))

    def mean(self):
        return float("nan")


def _where_nonneg(t, values_nonneg, value_neg):
    """Piecewise helper: eta is supported on [0, inf), so F(t<0) = 0."""
    t = np.asarray(t, dtype=float)
    out = np.where(t >= 0.0, values_nonneg, value_neg)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class Exponential(StiflingLaw):
    rate: float

    def __post_init__(self):
        if not (self.rate > 0.0 and math.isfinite(self.rate)):
            raise ValueError(f"rate must be positive and finite, got {self.rate}")

    def survival(self, t):
        t = np.asarray(t, dtype=float)
        return _where_nonneg(t, np.exp(-self.rate * np.maximum(t, 0.0)), 1.0)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        out = -np.log1p(-u) / self.rate
        if out.ndim == 0:
            return float(out)
        return out

    def mean(self):
        return 1.0 / self.rate


@dataclass(frozen=True)
class Weibull(StiflingLaw):
    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0.0 and self.scale > 0.0):
            raise ValueError("shape and scale must be positive")

    def survival(self, t):
        t = np.asarray(t, dtype=float)
        z = np.maximum(t, 0.0) / self.scale
        return _where_nonneg(t, np.exp(-(z**self.shape)), 1.0)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        out = self.scale * (-np.log1p(-u)) ** (1.0 / self.shape)
        if out.ndim == 0:
            return float(out)
        return out

    def mean(self):
        return self.scale * math.gamma(1.0 + 1.0 / self.shape)


@dataclass(frozen=True)
class TruncatedCauchy(StiflingLaw):
    """Cauchy(loc, scale) conditioned on eta >= 0 (left truncation at zero)."""

    loc: float
    scale: float

    def __post_init__(self):
        if not (self.scale > 0.0):
            raise ValueError("scale must be positive")

    def _c0(self):
        # mass of the untruncated Cauchy below zero
        return 0.5 + math.atan(-self.loc / self.scale) / math.pi

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        c0 = self._c0()
        raw = 0.5 + np.arctan((np.maximum(t, 0.0) - self.loc) / self.scale) / np.pi
        return _where_nonneg(t, (raw - c0) / (1.0 - c0), 0.0)

    def survival(self, t):
        return 1.0 - self.cdf(t)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        c0 = self._c0()
        q = c0 + u * (1.0 - c0)
        out = self.loc + self.scale * np.tan(math.pi * (q - 0.5))
        out = np.maximum(out, 0.0)
        if out.ndim == 0:
            return float(out)
        return out


@dataclass(frozen=True)
class Deterministic(StiflingLaw):
    t0: float

    def __post_init__(self):
        if not (self.t0 >= 0.0):
            raise ValueError("t0 must be nonnegative")

    def survival(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(t < self.t0, 1.0, 0.0)
        if out.ndim == 0:
            return float(out)
        return out

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        out = np.full_like(u, self.t0, dtype=float)
        if out.ndim == 0:
            return float(out)
        return out

    def mean(self):
        return self.t0


@dataclass(frozen=True)
class Never(StiflingLaw):
    """No spontaneous stifling: F identically zero, samples are +inf."""

    def survival(self, t):
        t = np.asarray(t, dtype=float)
        out = np.ones_like(t)
        if out.ndim == 0:
            return 1.0
        return out

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        out = np.full_like(u, np.inf, dtype=float)
        if out.ndim == 0:
            return float(out)
        return out

    def mean(self):
        return float("inf")


@dataclass(frozen=True)
class Immediate(StiflingLaw):
    """Spreaders retire the instant they are created: F(t) = 1 for t >= 0."""

    def survival(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(t >= 0.0, 0.0, 1.0)
        if out.ndim == 0:
            return float(out)
        return out

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        if out.ndim == 0:
            return 0.0
        return out

    def mean(self):
        return 0.0


_LAW_NAMES = {
    "exponential": (Exponential, ("rate",)),
    "weibull": (Weibull, ("shape", "scale")),
    "truncated_cauchy": (TruncatedCauchy, ("loc", "scale")),
    "deterministic": (Deterministic, ("t0",)),
    "never": (Never, ()),
    "immediate": (Immediate, ()),
}

_SHORT_NAMES = {
    "exp": "exponential",
    "exponential": "exponential",
    "weibull": "weibull",
    "cauchy": "truncated_cauchy",
    "truncated_cauchy": "truncated_cauchy",
    "det": "deterministic",
    "deterministic": "deterministic",
    "never": "never",
    "immediate": "immediate",
}


def law_from_config(cfg: dict) -> StiflingLaw:
    """Build a law from a JSON-style dict, e.g. {"law": "weibull", "shape": 2, "scale": 5}."""
    if not isinstance(cfg, dict) or "law" not in cfg:
        raise ValueError("law config must be a dict with a 'law' key")
    name = cfg["law"]
    if name not in _LAW_NAMES:
        raise ValueError(f"unknown law {name!r}; choices: {sorted(_LAW_NAMES)}")
    cls, params = _LAW_NAMES[name]
    missing = [p for p in params if p not in cfg]
    if missing:
        raise ValueError(f"law {name!r} missing parameters {missing}")
    extra = set(cfg) - {"law"} - set(params)
    if extra:
        raise ValueError(f"law {name!r} got unexpected keys {sorted(extra)}")
    return cls(**{p: float(cfg[p]) for p in params})


def law_to_config(law: StiflingLaw) -> dict:
    for name, (cls, params) in _LAW_NAMES.items():
        if type(law) is cls:
            return {"law": name, **{p: getattr(law, p) for p in params}}
    raise ValueError(f"unregistered law type {type(law)!r}")


def parse_law(text: str) -> StiflingLaw:
    """Parse compact CLI syntax like 'weibull:2:5', 'exp:1', 'never'."""
    parts = text.split(":")
    key = parts[0].strip().lower()
    if key not in _SHORT_NAMES:
        raise ValueError(f"unknown law {key!r}; choices: {sorted(set(_SHORT_NAMES))}")
    name = _SHORT_NAMES[key]
    cls, params = _LAW_NAMES[name]
    args = parts[1:]
    if len(args) != len(params):
        raise ValueError(f"law {key!r} takes {len(params)} parameters {params}, got {len(args)}")
    return cls(**{p: float(a) for p, a in zip(params, args)})


def rescale_law(law: StiflingLaw, c: float) -> StiflingLaw:
    """Law of eta / c.  Compressing time by c leaves the dynamics invariant
    when the contact rate is multiplied by c."""
    if c <= 0.0:
        raise ValueError("c must be positive")
    if isinstance(law, Exponential):
        return Exponential(rate=law.rate * c)
    if isinstance(law, Weibull):
        return Weibull(shape=law.shape, scale=law.scale / c)
    if isinstance(law, TruncatedCauchy):
        return TruncatedCauchy(loc=law.loc / c, scale=law.scale / c)
    if isinstance(law, Deterministic):
        return Deterministic(t0=law.t0 / c)
    if isinstance(law, (Never, Immediate)):
        return law
    raise ValueError(f"unregistered law type {type(law)!r}")

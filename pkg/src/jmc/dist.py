"""Primitive one-dimensional laws with closed-form interval probabilities
and conditional means, and their independent products.

Truncated laws are normalised by the mass of the untruncated law on the
support, so ``prob(W) = P_eta(W) / P_eta(support)`` while conditional means
need no normalisation at all.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property
from typing import ClassVar, Sequence

import numpy as np
from scipy import special as sc

from . import special
from .errors import ConfigError, DimensionError, DomainError, ZeroProbabilityError
from .interval import Box, Interval


def _as_interval(W) -> Interval:
    return W if isinstance(W, Interval) else Interval(float(W[0]), float(W[1]))


class Distribution(ABC):
    """A one-dimensional law supported on ``[lo, hi]``."""

    kind: ClassVar[str]
    lo: float
    hi: float

    @property
    def support(self) -> Interval:
        return Interval(self.lo, self.hi)

    @abstractmethod
    def _mass(self, a: float, b: float) -> float:
        """Mass of the untruncated law on ``[a, b]`` (any fixed scaling)."""

    @abstractmethod
    def _mean(self, a: float, b: float, mass: float) -> float:
        """Conditional mean on ``[a, b]`` given its ``_mass``."""

    @abstractmethod
    def pdf(self, w) -> np.ndarray:
        """Density of the truncated law (zero off the support)."""

    @abstractmethod
    def ppf(self, u) -> np.ndarray:
        """Inverse CDF of the truncated law, vectorised."""

    @abstractmethod
    def to_dict(self) -> dict:
        ...

    @cached_property
    def _total(self) -> float:
        return self._mass(self.lo, self.hi)

    def _check(self, W: Interval) -> Interval:
        if not (self.lo <= W.lo and W.hi <= self.hi):
            raise DomainError(f"{W} is not inside the support [{self.lo}, {self.hi}]")
        return W

    def prob(self, W) -> float:
        W = self._check(_as_interval(W))
        if W.lo == self.lo and W.hi == self.hi:
            return 1.0
        return min(1.0, self._mass(W.lo, W.hi) / self._total)

    def cond_mean(self, W=None) -> float:
        W = self.support if W is None else self._check(_as_interval(W))
        m = self._mass(W.lo, W.hi)
        if not m > 0.0:
            raise ZeroProbabilityError(f"{W} has zero probability under {self}")
        return W.clip(self._mean(W.lo, W.hi, m))

    def mean(self) -> float:
        return self.cond_mean(None)

    def cdf(self, w) -> np.ndarray:
        w = np.clip(np.asarray(w, dtype=float), self.lo, self.hi)
        return np.vectorize(lambda v: self._mass(self.lo, v) / self._total)(w)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.ppf(rng.random(n))


@dataclass(frozen=True)
class Uniform(Distribution):
    lo: float
    hi: float
    kind: ClassVar[str] = "uniform"

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError(f"uniform needs lo < hi, got [{self.lo}, {self.hi}]")

    def _mass(self, a, b):
        return b - a

    def _mean(self, a, b, mass):
        return 0.5 * (a + b)

    def prob(self, W) -> float:
        W = self._check(_as_interval(W))
        return (W.hi - W.lo) / (self.hi - self.lo)

    def pdf(self, w):
        w = np.asarray(w, dtype=float)
        return np.where((w >= self.lo) & (w <= self.hi), 1.0 / (self.hi - self.lo), 0.0)

    def cdf(self, w):
        w = np.clip(np.asarray(w, dtype=float), self.lo, self.hi)
        return (w - self.lo) / (self.hi - self.lo)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        return np.clip(self.lo + u * (self.hi - self.lo), self.lo, self.hi)

    def to_dict(self):
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class TruncatedNormal(Distribution):
    mu: float
    sigma: float
    lo: float
    hi: float
    kind: ClassVar[str] = "truncated-normal"

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise DomainError("sigma must be positive")
        if not self.lo < self.hi:
            raise DomainError(f"truncation needs lo < hi, got [{self.lo}, {self.hi}]")

    def _z(self, v):
        return (v - self.mu) / self.sigma

    def _mass(self, a, b):
        return special.normal_mass(self._z(a), self._z(b))

    def _mean(self, a, b, mass):
        return self.mu + self.sigma * (special.phi(self._z(a)) - special.phi(self._z(b))) / mass

    def pdf(self, w):
        w = np.asarray(w, dtype=float)
        z = self._z(w)
        d = np.exp(-0.5 * z * z) * special.INV_SQRT_2PI / (self.sigma * self._total)
        return np.where((w >= self.lo) & (w <= self.hi), d, 0.0)

    def _mass_vec(self, za, z):
        # Phi(z) - Phi(za), evaluated on whichever tail avoids cancellation
        return np.where(z <= 0.0, sc.ndtr(z) - sc.ndtr(za), sc.ndtr(-za) - sc.ndtr(-z))

    def ppf(self, u):
        """Inverse CDF by ``ndtri`` followed by Newton polishing to ~1e-12."""
        u = np.asarray(u, dtype=float)
        za, zb = self._z(self.lo), self._z(self.hi)
        target = u * self._total
        # Start from the better-conditioned tail.
        upper = u > 0.5
        p_lo = sc.ndtr(za) + target
        p_hi = sc.ndtr(-zb) + (1.0 - u) * self._total
        z = np.where(upper, -sc.ndtri(np.clip(p_hi, 1e-300, 1.0)),
                     sc.ndtri(np.clip(p_lo, 1e-300, 1.0)))
        z = np.clip(np.nan_to_num(z, nan=0.0), za, zb)
        for _ in range(4):
            resid = self._mass_vec(za, z) - target
            dens = np.exp(-0.5 * z * z) * special.INV_SQRT_2PI
            step = np.where(dens > 0.0, resid / np.maximum(dens, 1e-300), 0.0)
            z = np.clip(z - step, za, zb)
        return np.clip(self.mu + self.sigma * z, self.lo, self.hi)

    def to_dict(self):
        return {"kind": self.kind, "mu": self.mu, "sigma": self.sigma,
                "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class TruncatedGamma(Distribution):
    """Gamma law with shape ``alpha`` and scale ``beta`` truncated to ``[lo, hi]``."""

    alpha: float
    beta: float
    lo: float
    hi: float
    kind: ClassVar[str] = "truncated-gamma"

    def __post_init__(self):
        if not (self.alpha > 0.0 and self.beta > 0.0):
            raise DomainError("alpha and beta must be positive")
        if not 0.0 <= self.lo < self.hi:
            raise DomainError(f"truncation needs 0 <= lo < hi, got [{self.lo}, {self.hi}]")

    def _mass(self, a, b):
        return special.gamma_mass(self.alpha, a / self.beta, b / self.beta)

    def _mean(self, a, b, mass):
        upper = special.gamma_mass(self.alpha + 1.0, a / self.beta, b / self.beta)
        return self.beta * self.alpha * upper / mass

    def pdf(self, w):
        w = np.asarray(w, dtype=float)
        a, s = self.alpha, self.beta
        with np.errstate(divide="ignore", invalid="ignore"):
            logd = (a - 1.0) * np.log(w / s) - w / s - sc.gammaln(a) - math.log(s)
            d = np.exp(logd) / self._total
        return np.where((w >= self.lo) & (w <= self.hi), d, 0.0)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        p0 = sc.gammainc(self.alpha, self.lo / self.beta)
        z = sc.gammaincinv(self.alpha, np.clip(p0 + u * self._total, 0.0, 1.0))
        return np.clip(z * self.beta, self.lo, self.hi)

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha, "beta": self.beta,
                "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class Beta(Distribution):
    """Beta(alpha, beta) on [0, 1]; other supports go through an affine transform."""

    alpha: float
    beta: float
    lo: float = field(default=0.0, init=False)
    hi: float = field(default=1.0, init=False)
    kind: ClassVar[str] = "beta"

    def __post_init__(self):
        if not (self.alpha > 0.0 and self.beta > 0.0):
            raise DomainError("alpha and beta must be positive")

    def _mass(self, a, b):
        return special.beta_mass(self.alpha, self.beta, a, b)

    def _mean(self, a, b, mass):
        upper = special.beta_mass(self.alpha + 1.0, self.beta, a, b)
        return self.alpha / (self.alpha + self.beta) * upper / mass

    def pdf(self, w):
        w = np.asarray(w, dtype=float)
        a, b = self.alpha, self.beta
        with np.errstate(divide="ignore", invalid="ignore"):
            logd = (a - 1.0) * np.log(w) + (b - 1.0) * np.log1p(-w) - sc.betaln(a, b)
            d = np.exp(logd)
        return np.where((w >= 0.0) & (w <= 1.0), d, 0.0)

    def ppf(self, u):
        return np.clip(sc.betaincinv(self.alpha, self.beta, np.asarray(u, dtype=float)), 0.0, 1.0)

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True)
class ProductDistribution:
    """Independent components; probabilities multiply, means are componentwise."""

    factors: tuple[Distribution, ...]

    def __init__(self, factors: Sequence[Distribution]):
        object.__setattr__(self, "factors", tuple(factors))

    def __len__(self):
        return len(self.factors)

    @property
    def support(self) -> Box:
        return Box(d.support for d in self.factors)

    def _check(self, omega) -> Box:
        omega = omega if isinstance(omega, Box) else Box(omega)
        if len(omega) != len(self.factors):
            raise DimensionError(f"box has {len(omega)} components; law has {len(self.factors)}")
        return omega

    def prob(self, omega) -> float:
        omega = self._check(omega)
        return math.prod(d.prob(W) for d, W in zip(self.factors, omega))

    def cond_mean(self, omega=None) -> tuple[float, ...]:
        if omega is None:
            return tuple(d.mean() for d in self.factors)
        omega = self._check(omega)
        return tuple(d.cond_mean(W) for d, W in zip(self.factors, omega))

    def pdf(self, points) -> np.ndarray:
        """Joint density at an ``(n, d)`` array of points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.ones(pts.shape[0])
        for k, d in enumerate(self.factors):
            out = out * d.pdf(pts[:, k])
        return out

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """``(n, d)`` array of independent draws; components use one stream in order."""
        u = rng.random((n, len(self.factors)))
        return np.column_stack([d.ppf(u[:, k]) for k, d in enumerate(self.factors)]) \
            if self.factors else np.empty((n, 0))

    def to_list(self) -> list[dict]:
        return [d.to_dict() for d in self.factors]


def product_prob(pd: ProductDistribution, omega) -> float:
    return pd.prob(omega)


def product_cond_mean(pd: ProductDistribution, omega) -> tuple[float, ...]:
    return pd.cond_mean(omega)


_KINDS = {
    "uniform": (Uniform, ("lo", "hi")),
    "truncated-normal": (TruncatedNormal, ("mu", "sigma", "lo", "hi")),
    "truncated-gamma": (TruncatedGamma, ("alpha", "beta", "lo", "hi")),
    "beta": (Beta, ("alpha", "beta")),
}


def from_dict(spec: dict) -> Distribution:
    """Build a law from its JSON form, e.g. ``{"kind": "uniform", "lo": 0, "hi": 1}``."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"distribution spec needs a 'kind': {spec!r}")
    kind = spec["kind"]
    if kind not in _KINDS:
        raise ConfigError(f"unknown distribution kind {kind!r}; expected one of {sorted(_KINDS)}")
    cls, names = _KINDS[kind]
    extra = set(spec) - set(names) - {"kind"}
    missing = [n for n in names if n not in spec]
    if missing or extra:
        raise ConfigError(f"{kind}: missing {missing}, unexpected {sorted(extra)}")
    try:
        return cls(*(float(spec[n]) for n in names))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{kind}: {exc}") from exc

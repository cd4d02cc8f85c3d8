"""Factorable random vectors: omega = psi(gamma) with gamma primitive.

Transforms are ordinary :class:`~jmc.expr.ExprGraph` objects over the
``g`` variables, so an integrand ``f(x, w)`` becomes ``compose(f, psi)``
and is relaxed over the gamma box like any other expression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from .dist import ProductDistribution, Uniform, from_dict
from .errors import ConfigError, DimensionError, DomainError
from .expr import ExprGraph, compose, eval_batch, parse
from .interval import Box

BOX_MULLER_DELTA = 1e-12
JACOBI_TOL = 1e-14
PD_TOL = 1e-12


@dataclass(frozen=True)
class FactorableRV:
    """``omega = psi(gamma)`` with ``gamma ~ base`` on ``gamma_box``.

    ``mean`` is E[omega], recorded at construction so that later affine
    stages can centre their input without numerical integration.
    """

    base: ProductDistribution
    psi: tuple[ExprGraph, ...]
    mean: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "psi", tuple(self.psi))
        object.__setattr__(self, "mean", tuple(float(m) for m in self.mean))
        n = len(self.base)
        for k, p in enumerate(self.psi):
            if p.uses_x() or p.n_w != n:
                raise DimensionError(f"psi[{k}] must be a g-only graph with n_w={n}")
        if len(self.mean) != len(self.psi):
            raise DimensionError("mean and psi lengths differ")

    @property
    def gamma_box(self) -> Box:
        return self.base.support

    @property
    def n_omega(self) -> int:
        return len(self.psi)

    @property
    def n_gamma(self) -> int:
        return len(self.base)

    def apply(self, gamma) -> np.ndarray:
        """Push an ``(n, n_gamma)`` array of gamma points through psi."""
        g = np.atleast_2d(np.asarray(gamma, dtype=float))
        cols = [g[:, j] for j in range(self.n_gamma)]
        return np.column_stack([np.broadcast_to(eval_batch(p, [], cols), (g.shape[0],))
                                for p in self.psi])

    def sample(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(omega, gamma)`` sample arrays of shape ``(n, .)``."""
        gamma = self.base.sample(rng, n)
        return self.apply(gamma), gamma

    def transform(self, integrand: ExprGraph) -> ExprGraph:
        """``f_hat(x, gamma) = f(x, psi(gamma))``."""
        return compose(integrand, self.psi)


def _num(v: float) -> str:
    v = float(v)
    if not math.isfinite(v):
        raise DomainError(f"non-finite constant {v} in transform")
    return f"({v!r})"


def _graph(text: str, n_gamma: int) -> ExprGraph:
    return parse(text, n_x=0, n_w=n_gamma)


def identity(law: ProductDistribution | Sequence) -> FactorableRV:
    """Primitive law viewed as a factorable RV with ``psi(gamma) = gamma``."""
    law = law if isinstance(law, ProductDistribution) else ProductDistribution(law)
    n = len(law)
    return FactorableRV(law, tuple(_graph(f"g{j + 1}", n) for j in range(n)), law.cond_mean())


# ---------------------------------------------------------------------------
# Inverse-CDF catalogue
# ---------------------------------------------------------------------------

_PARAMS = {
    "truncated-exponential": ("lambda",),
    "truncated-weibull": ("alpha", "beta"),
    "truncated-cauchy": ("alpha", "beta"),
    "truncated-rayleigh": ("sigma",),
    "truncated-pareto": ("m", "alpha"),
}


def _check_params(kind: str, params: dict, lo: float, hi: float):
    if kind not in _PARAMS:
        raise DomainError(f"unknown inverse-cdf kind {kind!r}; expected one of {sorted(_PARAMS)}")
    missing = [p for p in _PARAMS[kind] if p not in params]
    if missing:
        raise DomainError(f"{kind}: missing parameters {missing}")
    if not lo < hi:
        raise DomainError(f"degenerate truncation [{lo}, {hi}]")
    positive = {"truncated-cauchy": ("beta",)}.get(kind, _PARAMS[kind])
    for p in positive:
        if not float(params[p]) > 0.0:
            raise DomainError(f"{kind}: {p} must be positive")
    if kind == "truncated-weibull" and lo <= 0.0:
        # psi contains ln(-ln(.)) which is unbounded at the origin
        raise DomainError("truncated-weibull needs lo > 0")
    if kind in ("truncated-exponential", "truncated-rayleigh") and lo < 0.0:
        raise DomainError(f"{kind} needs lo >= 0")
    if kind == "truncated-pareto" and lo < float(params["m"]):
        raise DomainError("truncated-pareto needs lo >= m")


def _survival_pair(kind: str, p: dict, lo: float, hi: float) -> tuple[float, float]:
    """Values ``(s(lo), s(hi))`` of the monotone quantity interpolated by gamma."""
    if kind == "truncated-exponential":
        s = lambda v: math.exp(-p["lambda"] * v)
    elif kind == "truncated-weibull":
        s = lambda v: math.exp(-((v / p["alpha"]) ** p["beta"]))
    elif kind == "truncated-cauchy":
        s = lambda v: math.atan((v - p["alpha"]) / p["beta"])
    elif kind == "truncated-rayleigh":
        s = lambda v: math.exp(-v * v / (2.0 * p["sigma"] ** 2))
    else:
        s = lambda v: (p["m"] / v) ** p["alpha"]
    return s(lo), s(hi)


def inverse_cdf_text(kind: str, params: dict, lo: float, hi: float, var: str = "g1") -> str:
    """Expression text of ``P^{-1}(var)`` for a truncated law."""
    p = {k: float(v) for k, v in params.items()}
    _check_params(kind, p, lo, hi)
    a, b = _survival_pair(kind, p, lo, hi)
    if a == b:
        raise DomainError(f"{kind}: truncation carries no probability mass")
    t = f"({_num(a)}+{_num(b - a)}*{var})"
    if kind == "truncated-exponential":
        return f"{_num(-1.0 / p['lambda'])}*ln{t}"
    if kind == "truncated-weibull":
        return f"{_num(p['alpha'])}*exp(ln(-ln{t})/{_num(p['beta'])})"
    if kind == "truncated-cauchy":
        return f"{_num(p['beta'])}*sin{t}/cos{t}+{_num(p['alpha'])}"
    if kind == "truncated-rayleigh":
        return f"sqrt({_num(-2.0 * p['sigma'] ** 2)}*ln{t})"
    return f"{_num(p['m'])}*exp(ln{t}/{_num(-p['alpha'])})"


def truncated_cdf(kind: str, params: dict, lo: float, hi: float, w) -> np.ndarray:
    """Closed-form CDF of the truncated law, vectorised over ``w``."""
    p = {k: float(v) for k, v in params.items()}
    _check_params(kind, p, lo, hi)
    w = np.clip(np.asarray(w, dtype=float), lo, hi)
    a, b = _survival_pair(kind, p, lo, hi)
    if kind == "truncated-exponential":
        s = np.exp(-p["lambda"] * w)
    elif kind == "truncated-weibull":
        s = np.exp(-((w / p["alpha"]) ** p["beta"]))
    elif kind == "truncated-cauchy":
        s = np.arctan((w - p["alpha"]) / p["beta"])
    elif kind == "truncated-rayleigh":
        s = np.exp(-w * w / (2.0 * p["sigma"] ** 2))
    else:
        s = (p["m"] / w) ** p["alpha"]
    return (s - a) / (b - a)


def inverse_cdf_transform(kind: str, params: dict, lo: float, hi: float) -> FactorableRV:
    """Truncated law as ``psi(gamma)`` with gamma uniform on [0, 1]."""
    lo, hi = float(lo), float(hi)
    psi = _graph(inverse_cdf_text(kind, params, lo, hi), 1)
    f = lambda u: float(eval_batch(psi, [], [np.asarray(u)]))
    m, _ = integrate.quad(f, 0.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=200)
    return FactorableRV(ProductDistribution([Uniform(0.0, 1.0)]), (psi,), (min(max(m, lo), hi),))


def box_muller(r: float | None = None) -> FactorableRV:
    """Two standard normals from a uniform pair; ``r`` truncates to a disc."""
    if r is None:
        g1_lo = BOX_MULLER_DELTA
    else:
        if not r > 0.0:
            raise DomainError("disc radius must be positive")
        g1_lo = math.exp(-0.5 * r * r)
    base = ProductDistribution([Uniform(g1_lo, 1.0), Uniform(0.0, 1.0)])
    radius = "sqrt((-2)*ln(g1))"
    angle = f"{_num(2.0 * math.pi)}*g2"
    psi = (_graph(f"{radius}*cos({angle})", 2), _graph(f"{radius}*sin({angle})", 2))
    # gamma2 spans a full period, so both components have mean zero
    return FactorableRV(base, psi, (0.0, 0.0))


def _shift(g: ExprGraph, offset: int, n_gamma: int) -> ExprGraph:
    subs = [_graph(f"g{j + 1 + offset}", n_gamma) for j in range(g.n_w)]
    return compose(g, subs)


def stack(*rvs: FactorableRV) -> FactorableRV:
    """Independent concatenation: gamma and omega components are appended in order."""
    factors, psi, mean = [], [], []
    n = sum(rv.n_gamma for rv in rvs)
    offset = 0
    for rv in rvs:
        factors.extend(rv.base.factors)
        psi.extend(_shift(p, offset, n) for p in rv.psi)
        mean.extend(rv.mean)
        offset += rv.n_gamma
    return FactorableRV(ProductDistribution(factors), tuple(psi), tuple(mean))


# ---------------------------------------------------------------------------
# Linear mean/covariance maps
# ---------------------------------------------------------------------------

def affine_transform(rv: FactorableRV, d: Sequence[float], A) -> FactorableRV:
    """``omega' = d + A (omega - E[omega])`` for any nonsingular square ``A``."""
    A = np.asarray(A, dtype=float)
    d = [float(v) for v in d]
    n = rv.n_omega
    if A.shape != (n, n) or len(d) != n:
        raise DimensionError(f"need d of length {n} and A of shape ({n}, {n})")
    if abs(np.linalg.det(A)) <= PD_TOL * max(1.0, float(np.abs(A).max())) ** n:
        raise DomainError("affine map is singular")
    # Centred inputs, as graphs over omega; a zero mean is elided so that
    # the composed graph matches the plain linear map d + A*gamma exactly.
    centred = [f"(w{j + 1}-{_num(m)})" if m != 0.0 else f"w{j + 1}"
               for j, m in enumerate(rv.mean)]
    rows = []
    for i in range(n):
        terms = [f"{_num(A[i, j])}*{centred[j]}" for j in range(n) if A[i, j] != 0.0]
        rows.append(parse("+".join([_num(d[i])] + terms), n_x=0, n_w=n))
    return FactorableRV(rv.base, tuple(compose(r, rv.psi) for r in rows), tuple(d))


def _symmetric(C: np.ndarray, what: str) -> np.ndarray:
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise DimensionError(f"{what} must be square")
    scale = max(1.0, float(np.abs(C).max()))
    if np.abs(C - C.T).max() > PD_TOL * scale:
        raise DomainError(f"{what} is not symmetric")
    return 0.5 * (C + C.T)


def jacobi_eigh(C, tol: float = JACOBI_TOL, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of a symmetric matrix by cyclic Jacobi rotations.

    Iterates until the off-diagonal Frobenius norm is below ``tol`` times the
    matrix norm.  Returns ``(eigenvalues, V)`` with ``C = V diag(lam) V^T``.
    """
    a = _symmetric(np.array(C, dtype=float), "matrix")
    n = a.shape[0]
    v = np.eye(n)
    norm = np.linalg.norm(a)
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta  # theta^2 would overflow
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q], rot[q, p] = s, -s
                a = rot.T @ a @ rot
                a[p, q] = a[q, p] = 0.0
                v = v @ rot
    else:
        raise DomainError("Jacobi iteration did not converge")
    return np.diag(a).copy(), v


def matrix_sqrt(C) -> np.ndarray:
    """Unique symmetric positive definite square root of a symmetric PD matrix."""
    lam, v = jacobi_eigh(C)
    if lam.min() <= PD_TOL * max(1.0, float(np.abs(lam).max())):
        raise DomainError(f"matrix is not positive definite (min eigenvalue {lam.min():.3g})")
    s = (v * np.sqrt(lam)) @ v.T
    return 0.5 * (s + s.T)


def covariance_transform(rv: FactorableRV | ProductDistribution, d: Sequence[float],
                         C_half) -> FactorableRV:
    """``omega = d + C_half (omega_hat - E[omega_hat])`` with ``C_half`` symmetric PD."""
    if isinstance(rv, ProductDistribution):
        rv = identity(rv)
    C_half = _symmetric(np.asarray(C_half, dtype=float), "C_half")
    lam, _ = jacobi_eigh(C_half)
    if lam.min() <= PD_TOL * max(1.0, float(np.abs(lam).max())):
        raise DomainError("C_half is not positive definite")
    return affine_transform(rv, d, C_half)


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------

def from_config(law: Sequence[dict] = (), transforms: Sequence[dict] = ()) -> FactorableRV:
    """Build a factorable RV from JSON fragments.

    ``law`` lists primitive components (identity transform).  Each entry of
    ``transforms`` is applied left to right: ``inverse-cdf`` and
    ``box-muller`` append new components; ``covariance`` and ``affine`` map
    all current components.
    """
    rv = identity([from_dict(s) for s in law]) if law else None
    for k, t in enumerate(transforms):
        if not isinstance(t, dict) or "transform" not in t:
            raise ConfigError(f"transforms[{k}]: needs a 'transform' key")
        kind = t["transform"]
        try:
            if kind == "inverse-cdf":
                params = {p: t[p] for p in _PARAMS.get(t.get("kind"), ()) if p in t}
                new = inverse_cdf_transform(t.get("kind"), params, t["lo"], t["hi"])
            elif kind == "box-muller":
                new = box_muller(t.get("r"))
            elif kind in ("covariance", "affine"):
                if rv is None:
                    raise ConfigError(f"transforms[{k}]: {kind} needs existing components")
                fn = covariance_transform if kind == "covariance" else affine_transform
                rv = fn(rv, t["d"], t["C_half"] if kind == "covariance" else t["A"])
                continue
            else:
                raise ConfigError(f"transforms[{k}]: unknown transform {kind!r}")
        except KeyError as exc:
            raise ConfigError(f"transforms[{k}]: missing key {exc}") from exc
        except (DomainError, DimensionError) as exc:
            raise ConfigError(f"transforms[{k}]: {exc}") from exc
        rv = new if rv is None else stack(rv, new)
    if rv is None:
        raise ConfigError("no random components configured")
    return rv

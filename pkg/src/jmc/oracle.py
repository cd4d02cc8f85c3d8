"""Reference estimators of F(x): tensor Gauss-Legendre quadrature and Monte Carlo."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from .dist import ProductDistribution
from .errors import DimensionError, DomainError
from .expr import ExprGraph, eval_batch
from .rvtransform import FactorableRV

QUAD_TOL = 1e-9
QUAD_START = 16
QUAD_CAP = 4096
CHUNK = 1 << 17


@dataclass(frozen=True)
class Estimate:
    value: float
    half_width: float
    method: str
    n: int
    converged: bool = True

    def contains(self, v: float, margin: float = 0.0) -> bool:
        return abs(v - self.value) <= self.half_width + margin


def _resolve(integrand: ExprGraph, law) -> tuple[ExprGraph, ProductDistribution]:
    if isinstance(law, FactorableRV):
        return law.transform(integrand), law.base
    if not isinstance(law, ProductDistribution):
        law = ProductDistribution(law)
    return integrand, law


def _eval_chunked(g: ExprGraph, x: Sequence[float], pts: np.ndarray) -> np.ndarray:
    out = np.empty(pts.shape[0])
    for s in range(0, pts.shape[0], CHUNK):
        block = pts[s:s + CHUNK]
        v = eval_batch(g, list(x), [block[:, j] for j in range(block.shape[1])])
        out[s:s + CHUNK] = v
    return out


def _gl_rule(law: ProductDistribution, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor nodes and weights (density folded in) over the law's support."""
    t, wt = leggauss(m)
    axes, weights = [], []
    for f in law.factors:
        half = 0.5 * (f.hi - f.lo)
        nodes = f.lo + half * (t + 1.0)
        axes.append(nodes)
        weights.append(wt * half * f.pdf(nodes))
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([gr.ravel() for gr in grids])
    w = weights[0]
    for extra in weights[1:]:
        w = np.multiply.outer(w, extra)
    return pts, np.ravel(w)


def quad_expect(integrand: ExprGraph, x: Sequence[float], law,
                nodes_per_dim: int | None = None, tol: float = QUAD_TOL,
                cap: int = QUAD_CAP) -> Estimate:
    """E[f(x, omega)] by Gauss-Legendre on the support (at most two uncertain dims).

    With ``nodes_per_dim`` a single rule is used.  Otherwise node counts double
    from 16 until successive values agree to ``tol`` relative (with an
    absolute floor of ``tol * 1e-6``); the last difference is reported as
    ``half_width`` when the cap is hit first.
    """
    g, law = _resolve(integrand, law)
    if len(law) > 2:
        raise DimensionError(f"quadrature supports n_w <= 2, got {len(law)}; use mc_expect")
    if len(law) == 0:
        return Estimate(float(eval_batch(g, list(x), [])), 0.0, "gauss-legendre", 1)

    def rule(m: int) -> float:
        pts, w = _gl_rule(law, m)
        vals = _eval_chunked(g, x, pts)
        return math.fsum(w * vals)

    if nodes_per_dim is not None:
        return Estimate(rule(int(nodes_per_dim)), 0.0, "gauss-legendre", int(nodes_per_dim))
    cap = cap if len(law) == 1 else min(cap, 1024)
    m = QUAD_START
    prev = rule(m)
    while True:
        m2 = 2 * m
        cur = rule(m2)
        diff = abs(cur - prev)
        if diff <= tol * max(abs(cur), 1e-6):
            return Estimate(cur, 0.0, "gauss-legendre", m2)
        if m2 >= cap:
            return Estimate(cur, diff, "gauss-legendre", m2, converged=False)
        m, prev = m2, cur


def mc_expect(integrand: ExprGraph, x: Sequence[float], law, n: int,
              seed: int = 0) -> Estimate:
    """Seeded Monte Carlo mean with half width ``4 s / sqrt(n)``.

    Draws use numpy's PCG64.  For a :class:`FactorableRV` gamma is sampled and
    pushed through psi, then ``f`` is evaluated in omega space.
    """
    if n < 2:
        raise ValueError("mc_expect needs n >= 2")
    rng = np.random.Generator(np.random.PCG64(seed))
    if isinstance(law, FactorableRV):
        omega, _ = law.sample(rng, n)
    else:
        law = law if isinstance(law, ProductDistribution) else ProductDistribution(law)
        omega = law.sample(rng, n)
    if omega.shape[1] != integrand.n_w:
        raise DimensionError(f"law has {omega.shape[1]} components; integrand n_w={integrand.n_w}")
    try:
        vals = _eval_chunked(integrand, x, omega)
    except DomainError as exc:
        raise DomainError(f"{exc} at some sampled point of x={list(x)}") from exc
    s = float(np.std(vals, ddof=1))
    return Estimate(float(np.mean(vals)), 4.0 * s / math.sqrt(n), "monte-carlo", n)


def mc_samples(integrand: ExprGraph, x: Sequence[float], points: np.ndarray) -> np.ndarray:
    """Integrand values at given uncertainty points (used for overlays)."""
    return _eval_chunked(integrand, x, np.atleast_2d(points))

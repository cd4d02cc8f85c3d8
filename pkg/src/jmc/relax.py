"""McCormick convex/concave relaxations of expression graphs.

A :class:`RelaxationScheme` fixes a graph and a joint box over ``(x, w)``;
interval bounds and univariate envelopes for every node are computed once at
construction, so :func:`relax_at` only propagates the relaxation values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

from .errors import DimensionError, DomainError
from .expr import ExprGraph, ipow
from .interval import Box, Interval, first_phase, last_phase, node_bounds

HALF_PI = 0.5 * math.pi
TWO_PI = 2.0 * math.pi

NEWTON_TOL = 1e-13
NEWTON_MAXIT = 100


def mid(a: float, b: float, c: float) -> float:
    """Median of three numbers."""
    if a > b:
        a, b = b, a
    return a if c < a else (b if c > b else c)


@dataclass(frozen=True, slots=True)
class McCormickValue:
    bounds: Interval
    cv: float
    cc: float

    @property
    def gap(self) -> float:
        return self.cc - self.cv


@dataclass(frozen=True)
class Envelope:
    """Convex and concave envelopes of a univariate function on an interval.

    ``zmin``/``zmax`` are a minimiser of ``cv`` and a maximiser of ``cc``
    over the interval; both feed the McCormick composition rule.
    """

    cv: Callable[[float], float]
    cc: Callable[[float], float]
    zmin: float
    zmax: float


def safeguarded_newton(g: Callable[[float], float], dg: Callable[[float], float],
                       a: float, b: float, x0: float | None = None,
                       tol: float = NEWTON_TOL, maxit: int = NEWTON_MAXIT) -> float:
    """Root of ``g`` in a sign-changing bracket ``[a, b]``.

    Newton steps that leave the bracket (or fail to shrink the residual
    enough) are replaced by bisection.
    """
    ga, gb = g(a), g(b)
    if ga == 0.0:
        return a
    if gb == 0.0:
        return b
    if (ga > 0.0) == (gb > 0.0):
        raise DomainError(f"no sign change on [{a}, {b}]")
    x = 0.5 * (a + b) if x0 is None else min(max(x0, a), b)
    for _ in range(maxit):
        gx = g(x)
        if abs(gx) <= tol:
            return x
        if (gx > 0.0) == (ga > 0.0):
            a, ga = x, gx
        else:
            b = x
        d = dg(x)
        step = x - gx / d if d != 0.0 else math.nan
        x = step if a < step < b else 0.5 * (a + b)
        if b - a <= 4.0 * math.ulp(max(abs(a), abs(b), 1e-300)):
            return x
    return x


def _secant(f: Callable[[float], float], lo: float, hi: float) -> Callable[[float], float]:
    flo = f(lo)
    if hi == lo:
        return lambda x: flo
    slope = (f(hi) - flo) / (hi - lo)
    return lambda x: flo + slope * (x - lo)


def _chord(x0: float, f0: float, x1: float, f1: float) -> Callable[[float], float]:
    slope = (f1 - f0) / (x1 - x0)
    return lambda x: f0 + slope * (x - x0)


# ---------------------------------------------------------------------------
# Integer powers
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def odd_power_ratio(n: int) -> float:
    """Negative root r of (n-1) r^n - n r^(n-1) + 1 = 0.

    For x^n (n odd) on [lo, hi] with lo < 0 < hi the tangent through
    (lo, lo^n) touches the curve at r*lo.
    """
    def g(r):
        return (n - 1) * r ** n - n * r ** (n - 1) + 1.0

    def dg(r):
        return n * (n - 1) * (r ** (n - 1) - r ** (n - 2))

    return safeguarded_newton(g, dg, -1.0, 0.0, -0.5)


def _pow_envelope(n: int, lo: float, hi: float) -> Envelope:
    def f(x):
        return ipow(x, n)

    if n % 2 == 0:
        zmax = lo if f(lo) >= f(hi) else hi
        return Envelope(f, _secant(f, lo, hi), mid(lo, hi, 0.0), zmax)
    if lo >= 0.0:
        return Envelope(f, _secant(f, lo, hi), lo, hi)
    if hi <= 0.0:
        return Envelope(_secant(f, lo, hi), f, lo, hi)
    r = odd_power_ratio(n)
    t = r * lo
    if t >= hi:
        cv = _secant(f, lo, hi)
    else:
        line = _chord(lo, f(lo), t, f(t))

        def cv(x, line=line, t=t):
            return line(x) if x <= t else f(x)
    s = r * hi
    if s <= lo:
        cc = _secant(f, lo, hi)
    else:
        line2 = _chord(s, f(s), hi, f(hi))

        def cc(x, line=line2, s=s):
            return f(x) if x <= s else line(x)
    return Envelope(cv, cc, lo, hi)


# ---------------------------------------------------------------------------
# Trigonometric functions
# ---------------------------------------------------------------------------

def _trig_convex_envelope(fn, dfn, phase: float, lo: float, hi: float):
    """Convex envelope of ``fn(x) = cos(x - phase)`` on ``[lo, hi]``.

    ``fn`` and ``dfn`` are evaluated directly (never through the phase
    shift) so that envelope pieces coinciding with ``fn`` are bit-exact.
    """
    if lo == hi:
        v = fn(lo)
        return lambda x: v

    def d2fn(t):
        return -fn(t)

    def tangent_from(e: float, a: float, b: float) -> float:
        fe = fn(e)

        def g(t):
            return dfn(t) * (t - e) - (fn(t) - fe)

        def dg(t):
            return d2fn(t) * (t - e)

        return safeguarded_newton(g, dg, a, b)

    minimum = phase + math.pi
    m1 = first_phase(lo, minimum)
    if m1 <= hi:
        m2 = last_phase(hi, minimum)
        tl = tr = None
        if lo < m1 - HALF_PI:
            tl = tangent_from(lo, m1 - HALF_PI, m1)
            left = _chord(lo, fn(lo), tl, fn(tl))
        if hi > m2 + HALF_PI:
            tr = tangent_from(hi, m2, m2 + HALF_PI)
            right = _chord(tr, fn(tr), hi, fn(hi))

        def cv(x):
            if x < m1:
                return left(x) if tl is not None and x <= tl else fn(x)
            if x <= m2:
                return -1.0
            return right(x) if tr is not None and x >= tr else fn(x)
        return cv

    m0 = m1 - TWO_PI
    i1, i2 = m0 + HALF_PI, m0 + 1.5 * math.pi
    if hi <= i1 or lo >= i2:
        return fn
    flo, fhi = fn(lo), fn(hi)
    chord_rise = fhi - flo
    if lo < i1 and dfn(lo) * (hi - lo) - chord_rise < 0.0:
        t = tangent_from(hi, lo, i1)
        line = _chord(t, fn(t), hi, fhi)
        return lambda x: fn(x) if x <= t else line(x)
    if hi > i2 and dfn(hi) * (hi - lo) - chord_rise > 0.0:
        t = tangent_from(lo, max(i2, lo), hi)
        line = _chord(lo, flo, t, fn(t))
        return lambda x: line(x) if x < t else fn(x)
    return _secant(fn, lo, hi)


def _trig_extrema(fn, phase: float, lo: float, hi: float) -> tuple[float, float]:
    """(argmin, argmax) of ``fn(x) = cos(x - phase)`` on ``[lo, hi]``."""
    flo, fhi = fn(lo), fn(hi)
    m = first_phase(lo, phase + math.pi)
    zmin = m if m <= hi else (lo if flo <= fhi else hi)
    m = first_phase(lo, phase)
    zmax = m if m <= hi else (lo if flo >= fhi else hi)
    return zmin, zmax


def _neg(f):
    return lambda x: -f(x)


def _sin_envelope(lo: float, hi: float) -> Envelope:
    cv = _trig_convex_envelope(math.sin, math.cos, HALF_PI, lo, hi)
    neg_cv = _trig_convex_envelope(_neg(math.sin), _neg(math.cos), -HALF_PI, lo, hi)
    zmin, zmax = _trig_extrema(math.sin, HALF_PI, lo, hi)
    return Envelope(cv, _neg(neg_cv), zmin, zmax)


def _cos_envelope(lo: float, hi: float) -> Envelope:
    cv = _trig_convex_envelope(math.cos, _neg(math.sin), 0.0, lo, hi)
    neg_cv = _trig_convex_envelope(_neg(math.cos), math.sin, math.pi, lo, hi)
    zmin, zmax = _trig_extrema(math.cos, 0.0, lo, hi)
    return Envelope(cv, _neg(neg_cv), zmin, zmax)


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------

def _recip(x):
    return 1.0 / x


def envelope_catalog(op: str, bounds: Interval, n: int | None = None) -> Envelope:
    """Envelopes of the univariate ``op`` (``pow`` takes exponent ``n``) on ``bounds``."""
    lo, hi = bounds.lo, bounds.hi
    if op == "exp":
        return Envelope(math.exp, _secant(math.exp, lo, hi), lo, hi)
    if op == "ln":
        if lo <= 0.0:
            raise DomainError(f"ln on {bounds}")
        return Envelope(_secant(math.log, lo, hi), math.log, lo, hi)
    if op == "sqrt":
        if lo < 0.0:
            raise DomainError(f"sqrt on {bounds}")
        return Envelope(_secant(math.sqrt, lo, hi), math.sqrt, lo, hi)
    if op == "recip":
        if lo > 0.0:
            return Envelope(_recip, _secant(_recip, lo, hi), hi, lo)
        if hi < 0.0:
            return Envelope(_secant(_recip, lo, hi), _recip, hi, lo)
        raise DomainError(f"reciprocal of {bounds}, which is not sign-definite")
    if op == "pow":
        if n is None or n < 2:
            raise ValueError("pow envelope needs an exponent >= 2")
        return _pow_envelope(n, lo, hi)
    if op == "sin":
        return _sin_envelope(lo, hi)
    if op == "cos":
        return _cos_envelope(lo, hi)
    raise ValueError(f"no envelope for {op!r}")


# ---------------------------------------------------------------------------
# Propagation
# ---------------------------------------------------------------------------

def mc_product(xL, xU, xcv, xcc, yL, yU, ycv, ycc) -> tuple[float, float]:
    """Bilinear McCormick rule for a product of two relaxed factors."""
    # A point factor collapses the rule to scaling; skip its cancellations.
    if yL == yU:
        return (yL * xcv, yL * xcc) if yL >= 0.0 else (yL * xcc, yL * xcv)
    if xL == xU:
        return (xL * ycv, xL * ycc) if xL >= 0.0 else (xL * ycc, xL * ycv)
    a1 = min(yL * xcv, yL * xcc)
    a2 = min(xL * ycv, xL * ycc)
    b1 = min(yU * xcv, yU * xcc)
    b2 = min(xU * ycv, xU * ycc)
    cv = max(a1 + a2 - xL * yL, b1 + b2 - xU * yU)
    g1 = max(yL * xcv, yL * xcc)
    g2 = max(xU * ycv, xU * ycc)
    d1 = max(yU * xcv, yU * xcc)
    d2 = max(xL * ycv, xL * ycc)
    cc = min(g1 + g2 - xU * yL, d1 + d2 - xL * yU)
    return cv, cc


def _cut(cv: float, cc: float, b: Interval) -> tuple[float, float]:
    lo, hi = b.lo, b.hi
    cv = lo if cv < lo else (hi if cv > hi else cv)
    cc = hi if cc > hi else (lo if cc < lo else cc)
    return cv, cc


@dataclass(frozen=True)
class RelaxationScheme:
    """McCormick relaxations of ``graph`` on the joint box over ``(x, w)``."""

    graph: ExprGraph
    box: Box
    bounds: tuple[Interval, ...] = field(init=False, repr=False)
    _aux: tuple = field(init=False, repr=False)

    def __post_init__(self):
        box = self.box if isinstance(self.box, Box) else Box(self.box)
        object.__setattr__(self, "box", box)
        g = self.graph
        if len(box) != g.n_x + g.n_w:
            raise DimensionError(f"box has {len(box)} components; need {g.n_x + g.n_w}")
        X = Box(box.components[:g.n_x])
        W = Box(box.components[g.n_x:])
        bounds = node_bounds(g, X, W)
        aux = []
        for node in g.nodes:
            op = node.op
            if op in ("exp", "ln", "sqrt", "sin", "cos"):
                aux.append(envelope_catalog(op, bounds[node.args[0]]))
            elif op == "pow" and node.value >= 2:
                aux.append(envelope_catalog("pow", bounds[node.args[0]], node.value))
            elif op == "div":
                d = bounds[node.args[1]]
                env = envelope_catalog("recip", d)
                aux.append((env, Interval(1.0 / d.hi, 1.0 / d.lo)))
            else:
                aux.append(None)
        object.__setattr__(self, "bounds", tuple(bounds))
        object.__setattr__(self, "_aux", tuple(aux))

    @property
    def root_bounds(self) -> Interval:
        return self.bounds[self.graph.root]

    def relax_at(self, p: Sequence[float]) -> McCormickValue:
        return relax_at(self, p)


def _clip_point(box: Box, p: Sequence[float]) -> list[float]:
    if len(p) != len(box):
        raise DimensionError(f"point has {len(p)} components; box has {len(box)}")
    out = []
    for c, v in zip(box, p):
        v = float(v)
        slack = 1e-12 * max(c.width, abs(c.lo), abs(c.hi), 1.0)
        if not (c.lo - slack <= v <= c.hi + slack):
            raise DomainError(f"point component {v} outside {c}")
        out.append(c.clip(v))
    return out


def relax_at(scheme: RelaxationScheme, p: Sequence[float]) -> McCormickValue:
    """McCormick relaxation values of the scheme's graph at ``p = (x, w)``.

    ``p`` is clipped into the box; points further than rounding slack
    outside raise :class:`DomainError`.
    """
    g = scheme.graph
    q = _clip_point(scheme.box, p)
    nx = g.n_x
    bounds = scheme.bounds
    aux = scheme._aux
    cvs: list[float] = []
    ccs: list[float] = []
    for k, node in enumerate(g.nodes):
        op = node.op
        b = bounds[k]
        if op == "const":
            cv = cc = node.value
        elif op == "x":
            cv = cc = q[node.value]
        elif op == "w":
            cv = cc = q[nx + node.value]
        else:
            i = node.args[0]
            acv, acc = cvs[i], ccs[i]
            if op == "add":
                j = node.args[1]
                cv, cc = acv + cvs[j], acc + ccs[j]
            elif op == "sub":
                j = node.args[1]
                cv, cc = acv - ccs[j], acc - cvs[j]
            elif op == "neg":
                cv, cc = -acc, -acv
            elif op == "mul":
                j = node.args[1]
                ab, bb = bounds[i], bounds[j]
                cv, cc = mc_product(ab.lo, ab.hi, acv, acc, bb.lo, bb.hi, cvs[j], ccs[j])
            elif op == "div":
                j = node.args[1]
                env, rb = aux[k]
                rcv = env.cv(mid(cvs[j], ccs[j], env.zmin))
                rcc = env.cc(mid(cvs[j], ccs[j], env.zmax))
                rcv, rcc = _cut(rcv, rcc, rb)
                ab = bounds[i]
                cv, cc = mc_product(ab.lo, ab.hi, acv, acc, rb.lo, rb.hi, rcv, rcc)
            elif op == "pow" and node.value == 0:
                cv = cc = 1.0
            elif op == "pow" and node.value == 1:
                cv, cc = acv, acc
            else:
                env = aux[k]
                cv = env.cv(mid(acv, acc, env.zmin))
                cc = env.cc(mid(acv, acc, env.zmax))
            cv, cc = _cut(cv, cc, b)
        cvs.append(cv)
        ccs.append(cc)
    r = g.root
    return McCormickValue(bounds[r], cvs[r], ccs[r])

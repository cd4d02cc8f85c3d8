"""Natural interval arithmetic over expression graphs.

Rounding is to nearest (no outward rounding).  Degenerate intervals use the
exact same floating-point operations as :func:`jmc.expr.eval_real`, so
``eval_interval`` on a point box returns ``[f(p), f(p)]`` bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DimensionError, DomainError
from .expr import ExprGraph, ipow

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, slots=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, v: float) -> Interval:
        return cls(v, v)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def __contains__(self, v) -> bool:
        if isinstance(v, Interval):
            return self.lo <= v.lo and v.hi <= self.hi
        return self.lo <= v <= self.hi

    def clip(self, v: float) -> float:
        return min(max(v, self.lo), self.hi)

    def __iter__(self):
        yield self.lo
        yield self.hi

    def __add__(self, other):
        other = _coerce(other)
        return Interval(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        return Interval(self.lo - other.hi, self.hi - other.lo)

    def __rsub__(self, other):
        return _coerce(other) - self

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __mul__(self, other):
        other = _coerce(other)
        p = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
        return Interval(min(p), max(p))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if other.lo <= 0.0 <= other.hi:
            raise DomainError(f"division by interval {other} containing zero")
        q = (self.lo / other.lo, self.lo / other.hi, self.hi / other.lo, self.hi / other.hi)
        return Interval(min(q), max(q))

    def __rtruediv__(self, other):
        return _coerce(other) / self

    def __pow__(self, n: int):
        return iv_pow(self, n)

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"


def _coerce(v) -> Interval:
    return v if isinstance(v, Interval) else Interval(float(v), float(v))


@dataclass(frozen=True)
class Box:
    """A product of intervals; ``width`` is the max side length."""

    components: tuple[Interval, ...]

    def __init__(self, components: Iterable):
        comps = tuple(c if isinstance(c, Interval) else Interval(float(c[0]), float(c[1]))
                      for c in components)
        object.__setattr__(self, "components", comps)

    @classmethod
    def point(cls, p: Sequence[float]) -> Box:
        return cls(Interval(float(v), float(v)) for v in p)

    def __len__(self):
        return len(self.components)

    def __getitem__(self, i):
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    @property
    def width(self) -> float:
        return max((c.width for c in self.components), default=0.0)

    @property
    def mid(self) -> tuple[float, ...]:
        return tuple(c.mid for c in self.components)

    @property
    def lo(self) -> tuple[float, ...]:
        return tuple(c.lo for c in self.components)

    @property
    def hi(self) -> tuple[float, ...]:
        return tuple(c.hi for c in self.components)

    def contains_point(self, p: Sequence[float]) -> bool:
        return len(p) == len(self) and all(c.lo <= v <= c.hi for c, v in zip(self, p))

    def __contains__(self, other) -> bool:
        if isinstance(other, Box):
            return len(other) == len(self) and all(o in c for c, o in zip(self, other))
        return self.contains_point(other)

    def clip(self, p: Sequence[float]) -> tuple[float, ...]:
        return tuple(c.clip(float(v)) for c, v in zip(self, p))

    def __mul__(self, other: Box) -> Box:
        """Cartesian product."""
        return Box(self.components + other.components)

    def to_list(self) -> list[list[float]]:
        return [[c.lo, c.hi] for c in self.components]


# ---------------------------------------------------------------------------
# Elementary functions
# ---------------------------------------------------------------------------

def iv_pow(a: Interval, n: int) -> Interval:
    if n == 0:
        return Interval(1.0, 1.0)
    try:
        lo, hi = ipow(a.lo, n), ipow(a.hi, n)
    except OverflowError as exc:
        raise DomainError("overflow in pow") from exc
    if n % 2 == 1 or a.lo >= 0.0:
        return Interval(lo, hi)
    if a.hi <= 0.0:
        return Interval(hi, lo)
    return Interval(0.0, max(lo, hi))


def iv_exp(a: Interval) -> Interval:
    try:
        return Interval(math.exp(a.lo), math.exp(a.hi))
    except OverflowError as exc:
        raise DomainError(f"exp overflow on {a}") from exc


def iv_ln(a: Interval) -> Interval:
    if a.lo <= 0.0:
        raise DomainError(f"ln of interval {a} touching non-positive reals")
    return Interval(math.log(a.lo), math.log(a.hi))


def iv_sqrt(a: Interval) -> Interval:
    if a.lo < 0.0:
        raise DomainError(f"sqrt of interval {a} containing negative reals")
    return Interval(math.sqrt(a.lo), math.sqrt(a.hi))


def contains_phase(lo: float, hi: float, phase: float) -> bool:
    """Whether some ``phase + 2*pi*k`` lies in ``[lo, hi]``."""
    k = math.ceil((lo - phase) / TWO_PI)
    return phase + TWO_PI * k <= hi


def first_phase(lo: float, phase: float) -> float:
    """Smallest ``phase + 2*pi*k`` that is ``>= lo``."""
    return phase + TWO_PI * math.ceil((lo - phase) / TWO_PI)


def last_phase(hi: float, phase: float) -> float:
    """Largest ``phase + 2*pi*k`` that is ``<= hi``."""
    return phase + TWO_PI * math.floor((hi - phase) / TWO_PI)


def _iv_trig(a: Interval, fn, max_phase: float) -> Interval:
    flo, fhi = fn(a.lo), fn(a.hi)
    if a.lo == a.hi:
        return Interval(flo, flo)
    if a.width >= TWO_PI:
        return Interval(-1.0, 1.0)
    lo, hi = min(flo, fhi), max(flo, fhi)
    if contains_phase(a.lo, a.hi, max_phase):
        hi = 1.0
    if contains_phase(a.lo, a.hi, max_phase + math.pi):
        lo = -1.0
    return Interval(lo, hi)


def iv_sin(a: Interval) -> Interval:
    return _iv_trig(a, math.sin, 0.5 * math.pi)


def iv_cos(a: Interval) -> Interval:
    return _iv_trig(a, math.cos, 0.0)


_UNARY = {
    "neg": lambda a: -a,
    "exp": iv_exp,
    "ln": iv_ln,
    "sqrt": iv_sqrt,
    "sin": iv_sin,
    "cos": iv_cos,
}

_BINARY = {
    "add": Interval.__add__,
    "sub": Interval.__sub__,
    "mul": Interval.__mul__,
    "div": Interval.__truediv__,
}


def iv_arith(op: str, a: Interval, b: Interval | int | None = None) -> Interval:
    """Apply one expression operation to intervals; ``b`` is the exponent for ``pow``."""
    if op == "pow":
        return iv_pow(a, int(b))
    if op in _UNARY:
        return _UNARY[op](a)
    if op in _BINARY:
        if b is None:
            raise TypeError(f"{op} needs two operands")
        return _BINARY[op](a, b)
    raise ValueError(f"unknown op {op!r}")


def node_bounds(g: ExprGraph, X: Box | Sequence, W: Box | Sequence) -> list[Interval]:
    """Interval enclosure of every node of ``g`` over ``X x W``."""
    X = X if isinstance(X, Box) else Box(X)
    W = W if isinstance(W, Box) else Box(W)
    if len(X) != g.n_x or len(W) != g.n_w:
        raise DimensionError(
            f"expected boxes of dims ({g.n_x}, {g.n_w}); got ({len(X)}, {len(W)})")
    vals: list[Interval] = []
    for node in g.nodes:
        op = node.op
        if op == "const":
            v = Interval(node.value, node.value)
        elif op == "x":
            v = X[node.value]
        elif op == "w":
            v = W[node.value]
        elif op == "pow":
            v = iv_pow(vals[node.args[0]], node.value)
        elif op in _UNARY:
            v = _UNARY[op](vals[node.args[0]])
        else:
            v = _BINARY[op](vals[node.args[0]], vals[node.args[1]])
        if math.isinf(v.lo) or math.isinf(v.hi):
            raise DomainError(f"unbounded enclosure in {op}")
        vals.append(v)
    return vals


def eval_interval(g: ExprGraph, X: Box | Sequence, W: Box | Sequence) -> Interval:
    """Enclosure of ``f`` over ``X x W``; raises :class:`DomainError` on violations."""
    return node_bounds(g, X, W)[g.root]

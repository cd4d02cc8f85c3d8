"""Jensen-McCormick relaxations of F(x) = E[f(x, omega)].

For a partition {Omega_i} with probabilities p_i and conditional means m_i,

    F_cv(x) = sum_i p_i * f_cv on X x Omega_i evaluated at (x, m_i)
    F_cc(x) = sum_i p_i * f_cc on X x Omega_i evaluated at (x, m_i)

Sums run over cells in lexicographic order with ``math.fsum``, so results do
not depend on thread count.
"""

from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .dist import ProductDistribution
from .errors import DimensionError, DomainError
from .expr import ExprGraph
from .interval import Box
from .partition import (IntervalPartition, PartitionedWeights, refine_map_phi,
                        uniform_partition, weights)
from .relax import RelaxationScheme, relax_at
from .rvtransform import FactorableRV


def _box(b) -> Box:
    return b if isinstance(b, Box) else Box(b)


@dataclass(eq=False)
class EVRelaxation:
    integrand: ExprGraph
    X: Box
    partition: IntervalPartition
    law: ProductDistribution
    weights: PartitionedWeights = field(init=False)
    _schemes: list = field(init=False, repr=False)
    _lock: threading.Lock = field(init=False, repr=False, default_factory=threading.Lock)

    def __post_init__(self):
        self.X = _box(self.X)
        g = self.integrand
        if len(self.X) != g.n_x:
            raise DimensionError(f"X has {len(self.X)} components; integrand has n_x={g.n_x}")
        if len(self.partition.parent) != g.n_w or len(self.law) != g.n_w:
            raise DimensionError(f"uncertainty dimension mismatch (integrand n_w={g.n_w})")
        self.weights = weights(self.partition, self.law)
        self._schemes = [None] * len(self.weights)

    def __len__(self):
        return len(self.weights)

    def scheme(self, i: int) -> RelaxationScheme:
        """Relaxation scheme on X x cell_i, built on first use."""
        s = self._schemes[i]
        if s is None:
            cell = self.weights.cells[i]
            try:
                s = RelaxationScheme(self.integrand, self.X * cell)
            except DomainError as exc:
                raise DomainError(f"cell {i} {cell.to_list()}: {exc}") from exc
            with self._lock:
                if self._schemes[i] is None:
                    self._schemes[i] = s
                s = self._schemes[i]
        return s

    def build_all(self, threads: int = 1) -> EVRelaxation:
        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                list(pool.map(self.scheme, range(len(self))))
        else:
            for i in range(len(self)):
                self.scheme(i)
        return self

    def _check_x(self, x: Sequence[float]) -> list[float]:
        x = [float(v) for v in x]
        if len(x) != len(self.X):
            raise DimensionError(f"x has {len(x)} components; X has {len(self.X)}")
        for v, c in zip(x, self.X):
            slack = 1e-12 * max(c.width, abs(c.lo), abs(c.hi), 1.0)
            if not c.lo - slack <= v <= c.hi + slack:
                raise DomainError(f"x component {v} outside {c}")
        return x

    def evaluate(self, x: Sequence[float]) -> tuple[float, float]:
        """``(F_cv(x), F_cc(x))`` in a single pass over the cells."""
        x = self._check_x(x)
        cv, cc = [], []
        for i, (p, m) in enumerate(zip(self.weights.probs, self.weights.means)):
            v = relax_at(self.scheme(i), x + list(m))
            cv.append(p * v.cv)
            cc.append(p * v.cc)
        return math.fsum(cv), math.fsum(cc)

    def eval_cv(self, x: Sequence[float]) -> float:
        return self.evaluate(x)[0]

    def eval_cc(self, x: Sequence[float]) -> float:
        return self.evaluate(x)[1]


def build(integrand: ExprGraph, X, partition: IntervalPartition,
          law: ProductDistribution, threads: int = 1) -> EVRelaxation:
    """Precompute weights and every per-cell scheme."""
    return EVRelaxation(integrand, _box(X), partition, law).build_all(threads)


def build_for_rv(integrand: ExprGraph, X, rv: FactorableRV,
                 partition: IntervalPartition | Sequence[int], threads: int = 1) -> EVRelaxation:
    """Relax ``f(x, psi(gamma))`` over a partition of the gamma box.

    ``partition`` may be given as per-dimension counts of a uniform grid.
    """
    if not isinstance(partition, IntervalPartition):
        partition = uniform_partition(rv.gamma_box, partition)
    return build(rv.transform(integrand), X, partition, rv.base, threads)


def eval_cv(r: EVRelaxation, x) -> float:
    return r.eval_cv(x)


def eval_cc(r: EVRelaxation, x) -> float:
    return r.eval_cc(x)


def point_bounds(integrand: ExprGraph, x: Sequence[float], partition: IntervalPartition,
                 law: ProductDistribution) -> tuple[float, float]:
    """Lower and upper bounds on F(x) from relaxations on the degenerate box [x, x]."""
    r = EVRelaxation(integrand, Box.point(x), partition, law)
    return r.evaluate(x)


@dataclass(frozen=True)
class ConvergentScheme:
    """Relaxations on X using the partition Phi(X) of the uncertainty box."""

    integrand: ExprGraph
    parent: Box
    law: ProductDistribution
    K: float

    def relaxation(self, X) -> EVRelaxation:
        X = _box(X)
        if X.width == 0.0:
            raise DomainError("degenerate X: use point_bounds with an explicit partition")
        P = refine_map_phi(self.parent, X, self.K, self.law)
        return EVRelaxation(self.integrand, X, P, self.law)

    def scheme_eval(self, X, x: Sequence[float]) -> tuple[float, float, float]:
        cv, cc = self.relaxation(X).evaluate(x)
        return cv, cc, cc - cv


def scheme_eval(s: ConvergentScheme, X, x) -> tuple[float, float, float]:
    return s.scheme_eval(X, x)

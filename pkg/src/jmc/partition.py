"""Interval partitions of the uncertainty box and the refinement map Phi(X)."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dist import ProductDistribution
from .errors import DimensionError, DomainError
from .interval import Box, Interval


@dataclass(frozen=True)
class IntervalPartition:
    """Cells tiling ``parent``; ``counts`` is set for tensor-grid partitions.

    Cells of a tensor grid are ordered lexicographically by their index
    tuple, last dimension fastest.
    """

    cells: tuple[Box, ...]
    parent: Box
    counts: tuple[int, ...] | None = None

    def __len__(self):
        return len(self.cells)

    def __iter__(self):
        return iter(self.cells)

    def split(self, index: int, dim: int, at: float | None = None) -> IntervalPartition:
        """Bisect one cell along ``dim`` (at its midpoint by default)."""
        cell = self.cells[index]
        side = cell[dim]
        at = side.mid if at is None else float(at)
        if not side.lo < at < side.hi:
            raise DomainError(f"split point {at} not interior to {side}")
        left = list(cell.components)
        right = list(cell.components)
        left[dim] = Interval(side.lo, at)
        right[dim] = Interval(at, side.hi)
        cells = self.cells[:index] + (Box(left), Box(right)) + self.cells[index + 1:]
        return IntervalPartition(cells, self.parent, None)

    def max_width(self) -> float:
        return max(c.width for c in self.cells)


def _edges(side: Interval, n: int) -> np.ndarray:
    e = np.linspace(side.lo, side.hi, n + 1)
    e[0], e[-1] = side.lo, side.hi
    return e


def uniform_partition(parent: Box | Sequence, counts: Sequence[int]) -> IntervalPartition:
    parent = parent if isinstance(parent, Box) else Box(parent)
    counts = tuple(int(c) for c in counts)
    if len(counts) != len(parent):
        raise DimensionError(f"need {len(parent)} counts, got {len(counts)}")
    if any(c < 1 for c in counts):
        raise DomainError(f"partition counts must be >= 1, got {counts}")
    sides = []
    for side, n in zip(parent, counts):
        e = _edges(side, n)
        sides.append([Interval(float(e[k]), float(e[k + 1])) for k in range(n)])
    cells = tuple(Box(c) for c in itertools.product(*sides))
    return IntervalPartition(cells, parent, counts)


def phi_counts(parent: Box, wX: float, K: float) -> tuple[int, ...]:
    """Smallest per-dimension counts whose cells satisfy ``w(cell)^2 <= K w(X)^2``."""
    if not K > 0.0:
        raise DomainError("K must be positive")
    if not wX > 0.0:
        raise DomainError("w(X) = 0: use point bounds with an explicit partition")
    bound = K * wX * wX
    limit = math.sqrt(K) * wX
    counts = []
    for side in parent:
        n = max(1, math.ceil(side.width / limit))
        while True:
            e = _edges(side, n)
            if float(np.max(np.diff(e))) ** 2 <= bound:
                break
            n += 1
        counts.append(n)
    return tuple(counts)


def refine_map_phi(parent: Box | Sequence, X: Box | Sequence, K: float,
                   law: ProductDistribution | None = None) -> IntervalPartition:
    """The partition Phi(X): uniform with every cell satisfying ``w(cell)^2 <= K w(X)^2``.

    Since the cell probabilities sum to one this also certifies
    ``sum_i p_i w(cell_i)^2 <= K w(X)^2``.  ``law`` is accepted for interface
    symmetry; the rule itself does not depend on it.
    """
    parent = parent if isinstance(parent, Box) else Box(parent)
    X = X if isinstance(X, Box) else Box(X)
    if law is not None and len(law) != len(parent):
        raise DimensionError("law and parent box dimensions differ")
    return uniform_partition(parent, phi_counts(parent, X.width, K))


@dataclass(frozen=True)
class PartitionedWeights:
    """Per-cell probabilities and conditional means, aligned with ``cells``."""

    cells: tuple[Box, ...]
    probs: tuple[float, ...]
    means: tuple[tuple[float, ...], ...]

    def __len__(self):
        return len(self.probs)

    def total(self) -> float:
        return math.fsum(self.probs)

    def expectation(self) -> tuple[float, ...]:
        """``sum_i p_i m_i``; equals E[omega] by total expectation."""
        d = len(self.means[0]) if self.means else 0
        return tuple(math.fsum(p * m[k] for p, m in zip(self.probs, self.means))
                     for k in range(d))


def weights(partition: IntervalPartition, law: ProductDistribution) -> PartitionedWeights:
    """Exact ``p_i`` and ``m_i`` for every cell; zero-probability cells are dropped."""
    if len(law) != len(partition.parent):
        raise DimensionError("law and partition dimensions differ")
    cells, probs, means = [], [], []
    if partition.counts is not None:
        # Tensor grid: one-dimensional weights, combined per cell.
        per_dim = []
        for d, n in enumerate(partition.counts):
            e = _edges(partition.parent[d], n)
            f = law.factors[d]
            pm = []
            for k in range(n):
                s = Interval(float(e[k]), float(e[k + 1]))
                p = f.prob(s)
                pm.append((p, f.cond_mean(s) if p > 0.0 else None))
            per_dim.append(pm)
        for cell, combo in zip(partition.cells, itertools.product(*per_dim)):
            p = math.prod(pm[0] for pm in combo)
            if p > 0.0:
                cells.append(cell)
                probs.append(p)
                means.append(tuple(pm[1] for pm in combo))
    else:
        for cell in partition.cells:
            p = law.prob(cell)
            if p > 0.0:
                cells.append(cell)
                probs.append(p)
                means.append(law.cond_mean(cell))
    return PartitionedWeights(tuple(cells), tuple(probs), tuple(means))


def phi_certificate(partition: IntervalPartition, law: ProductDistribution,
                    X: Box | Sequence, K: float) -> tuple[float, float]:
    """``(sum_i p_i w(cell_i)^2, K w(X)^2)``; the first must not exceed the second."""
    X = X if isinstance(X, Box) else Box(X)
    w = weights(partition, law)
    lhs = math.fsum(p * c.width ** 2 for p, c in zip(w.probs, w.cells))
    return lhs, K * X.width ** 2


def tiles(partition: IntervalPartition, tol: float = 0.0) -> bool:
    """Check that the cells cover the parent with disjoint interiors.

    Every cell must lie in the parent and total volume must match; adjacent
    tensor-grid cells must share their faces exactly.
    """
    parent = partition.parent
    vol = lambda b: math.prod(c.width for c in b)
    if any(cell not in parent for cell in partition.cells):
        return False
    if abs(math.fsum(vol(c) for c in partition.cells) - vol(parent)) > tol + 1e-12 * vol(parent):
        return False
    if partition.counts is None:
        return True
    shape = partition.counts
    grid = np.empty(shape, dtype=object)
    for idx, cell in zip(itertools.product(*(range(n) for n in shape)), partition.cells):
        grid[idx] = cell
    for idx in itertools.product(*(range(n) for n in shape)):
        cell = grid[idx]
        for d, n in enumerate(shape):
            if idx[d] == 0 and cell[d].lo != parent[d].lo:
                return False
            if idx[d] == n - 1 and cell[d].hi != parent[d].hi:
                return False
            if idx[d] + 1 < n:
                nxt = grid[idx[:d] + (idx[d] + 1,) + idx[d + 1:]]
                if nxt[d].lo != cell[d].hi:
                    return False
    return True

"""Finite dyadic grid on [0,1): intervals, Haar analysis, exact averages.

Functions are piecewise constant on the 2**depth finest-level intervals, so
every integral is a finite sum and identities can be asserted at machine
precision.  Per-interval data is laid out level-contiguously: the value for
the interval (level, position) sits at flat offset 2**level - 1 + position.
Levels 0..depth-1 carry Haar functions (both children exist); level depth is
the leaf level.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator

import numpy as np

__all__ = [
    "DyadicIndex",
    "Grid",
    "LeafFunction",
    "MultiscaleAverages",
    "HaarSymbol",
    "haar_function",
    "averaging_function",
    "analyze",
    "synthesize",
    "averages",
    "delta_sign",
    "product_formula_coeff",
    "subtree_sums",
    "sum_interval_constants",
    "count_operations",
]


# --------------------------------------------------------------------------
# arithmetic-operation tally (used only to assert the O(2**n) transform cost)

_OP_TALLY: list | None = None


def _tally(n_ops: int) -> None:
    if _OP_TALLY is not None:
        _OP_TALLY[0] += n_ops


class OperationCount:
    """Mutable view of the number of elementwise arithmetic operations."""

    def __init__(self, cell: list):
        self._cell = cell

    @property
    def total(self) -> int:
        return self._cell[0]


@contextmanager
def count_operations():
    """Count elementwise arithmetic done by analyze/synthesize/averages."""
    global _OP_TALLY
    saved = _OP_TALLY
    _OP_TALLY = [0]
    try:
        yield OperationCount(_OP_TALLY)
    finally:
        _OP_TALLY = saved


# --------------------------------------------------------------------------
# indices and grids


@dataclass(frozen=True, order=True)
class DyadicIndex:
    """The dyadic interval [position * 2**-level, (position+1) * 2**-level)."""

    level: int
    position: int

    def __post_init__(self):
        if self.level < 0:
            raise ValueError(f"negative level {self.level}")
        if not 0 <= self.position < (1 << self.level):
            raise ValueError(
                f"position {self.position} out of range at level {self.level}"
            )

    @property
    def length(self) -> float:
        return 2.0 ** (-self.level)

    @property
    def left(self) -> "DyadicIndex":
        return DyadicIndex(self.level + 1, 2 * self.position)

    @property
    def right(self) -> "DyadicIndex":
        return DyadicIndex(self.level + 1, 2 * self.position + 1)

    @property
    def parent(self) -> "DyadicIndex":
        if self.level == 0:
            raise ValueError("root interval has no parent")
        return DyadicIndex(self.level - 1, self.position >> 1)

    @property
    def is_left_child(self) -> bool:
        return self.level >= 1 and self.position % 2 == 0

    @property
    def flat_offset(self) -> int:
        return (1 << self.level) - 1 + self.position

    def contains(self, other: "DyadicIndex") -> bool:
        shift = other.level - self.level
        return shift >= 0 and (other.position >> shift) == self.position

    def strictly_contains(self, other: "DyadicIndex") -> bool:
        return self != other and self.contains(other)

    def ancestors(self) -> Iterator["DyadicIndex"]:
        """Strict ancestors, outermost (root) first."""
        for lev in range(self.level):
            yield DyadicIndex(lev, self.position >> (self.level - lev))

    def leaf_range(self, depth: int) -> tuple[int, int]:
        """Leaf indices covered by this interval on a depth-n grid."""
        width = 1 << (depth - self.level)
        return self.position * width, (self.position + 1) * width

    def __str__(self) -> str:
        return f"({self.level},{self.position})"


@dataclass(frozen=True)
class Grid:
    """Dyadic grid of depth n: leaves are the 2**n intervals at level n."""

    depth: int

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("grid depth must be at least 1")

    @property
    def leaf_count(self) -> int:
        return 1 << self.depth

    @property
    def haar_size(self) -> int:
        """Number of Haar-bearing intervals (levels 0..depth-1)."""
        return (1 << self.depth) - 1

    @property
    def tree_size(self) -> int:
        """Number of intervals over all levels 0..depth."""
        return (1 << (self.depth + 1)) - 1

    @staticmethod
    def level_slice(level: int) -> slice:
        start = (1 << level) - 1
        return slice(start, start + (1 << level))

    def indices(self, level: int) -> Iterator[DyadicIndex]:
        for p in range(1 << level):
            yield DyadicIndex(level, p)

    def haar_indices(self) -> Iterator[DyadicIndex]:
        for lev in range(self.depth):
            yield from self.indices(lev)

    def all_indices(self) -> Iterator[DyadicIndex]:
        for lev in range(self.depth + 1):
            yield from self.indices(lev)

    @cached_property
    def tree_inv_lengths(self) -> np.ndarray:
        """1/|I| for every interval, level-contiguous over levels 0..depth."""
        out = np.empty(self.tree_size)
        for lev in range(self.depth + 1):
            out[self.level_slice(lev)] = 2.0**lev
        out.setflags(write=False)
        return out

    @cached_property
    def haar_inv_lengths(self) -> np.ndarray:
        view = self.tree_inv_lengths[: self.haar_size]
        return view


# --------------------------------------------------------------------------
# leaf functions and their multiscale data


@dataclass(frozen=True, eq=False)
class LeafFunction:
    """Real function piecewise constant on the leaves of a dyadic grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.leaf_count,):
            raise ValueError(
                f"expected {self.grid.leaf_count} leaf values, got {vals.shape}"
            )
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "LeafFunction":
        return cls(grid, np.full(grid.leaf_count, float(c)))

    def inner(self, other: "LeafFunction") -> float:
        """Exact L2([0,1)) inner product of two leaf functions."""
        return float(self.values @ other.values) / self.grid.leaf_count

    def norm(self) -> float:
        return float(np.sqrt(self.inner(self)))

    def mean(self) -> float:
        return float(self.values.mean())

    @cached_property
    def averages(self) -> "MultiscaleAverages":
        return averages(self)

    @cached_property
    def symbol(self) -> "HaarSymbol":
        return analyze(self)


@dataclass(frozen=True, eq=False)
class MultiscaleAverages:
    """Exact average of a leaf function over every interval of the grid."""

    grid: Grid
    tree: np.ndarray  # level-contiguous, levels 0..depth

    def __getitem__(self, index: DyadicIndex) -> float:
        return float(self.tree[index.flat_offset])

    @property
    def haar_part(self) -> np.ndarray:
        """Averages restricted to the Haar-bearing levels 0..depth-1."""
        return self.tree[: self.grid.haar_size]


@dataclass(frozen=True, eq=False)
class HaarSymbol:
    """Haar coefficients over levels 0..depth-1 plus the global mean."""

    grid: Grid
    coeff: np.ndarray  # level-contiguous, Haar-bearing levels only
    mean: float

    def __getitem__(self, index: DyadicIndex) -> float:
        if index.level >= self.grid.depth:
            raise ValueError(f"{index} is not Haar-bearing at depth {self.grid.depth}")
        return float(self.coeff[index.flat_offset])


# --------------------------------------------------------------------------
# transforms: one upward or downward sweep, O(2**depth) arithmetic


def _integral_tree(f: LeafFunction) -> np.ndarray:
    """Integral of f over every interval, computed by one upward sweep."""
    n = f.grid.depth
    tree = np.empty(f.grid.tree_size)
    tree[Grid.level_slice(n)] = f.values * (2.0**-n)
    _tally(f.grid.leaf_count)
    for lev in range(n - 1, -1, -1):
        child = tree[Grid.level_slice(lev + 1)]
        tree[Grid.level_slice(lev)] = child[0::2] + child[1::2]
        _tally(1 << lev)
    return tree


def averages(f: LeafFunction) -> MultiscaleAverages:
    """Averages of f over all dyadic intervals, one upward sweep."""
    tree = _integral_tree(f) * f.grid.tree_inv_lengths
    _tally(f.grid.tree_size)
    tree.setflags(write=False)
    return MultiscaleAverages(f.grid, tree)


def analyze(f: LeafFunction) -> HaarSymbol:
    """Haar coefficients of f plus the mean, one upward sweep."""
    n = f.grid.depth
    ints = _integral_tree(f)
    coeff = np.empty(f.grid.haar_size)
    for lev in range(n):
        child = ints[Grid.level_slice(lev + 1)]
        coeff[Grid.level_slice(lev)] = (child[0::2] - child[1::2]) * 2.0 ** (lev / 2)
        _tally(2 << lev)
    coeff.setflags(write=False)
    return HaarSymbol(f.grid, coeff, float(ints[0]))


def synthesize(symbol: HaarSymbol) -> LeafFunction:
    """Rebuild the leaf function from Haar coefficients, one downward sweep."""
    n = symbol.grid.depth
    vals = np.array([symbol.mean])
    for lev in range(n):
        step = symbol.coeff[Grid.level_slice(lev)] * 2.0 ** (lev / 2)
        nxt = np.empty(2 << lev)
        nxt[0::2] = vals + step
        nxt[1::2] = vals - step
        _tally(3 << lev)
        vals = nxt
    return LeafFunction(symbol.grid, vals)


def subtree_sums(grid: Grid, haar_values: np.ndarray) -> np.ndarray:
    """Sum of a Haar-indexed quantity over all Haar-bearing J inside each I.

    Returns a level-contiguous array over ALL levels 0..depth; leaf entries
    are 0 (a leaf contains no Haar-bearing interval).
    """
    if haar_values.shape != (grid.haar_size,):
        raise ValueError("expected one value per Haar-bearing interval")
    out = np.zeros(grid.tree_size)
    n = grid.depth
    out[Grid.level_slice(n - 1)] = haar_values[Grid.level_slice(n - 1)]
    for lev in range(n - 2, -1, -1):
        child = out[Grid.level_slice(lev + 1)]
        out[Grid.level_slice(lev)] = (
            haar_values[Grid.level_slice(lev)] + child[0::2] + child[1::2]
        )
    return out


def sum_interval_constants(grid: Grid, haar_constants: np.ndarray) -> np.ndarray:
    """Leaf values of sum_I c_I 1_I over Haar-bearing I, one downward sweep."""
    if haar_constants.shape != (grid.haar_size,):
        raise ValueError("expected one constant per Haar-bearing interval")
    acc = haar_constants[Grid.level_slice(0)].copy()
    for lev in range(1, grid.depth):
        acc = np.repeat(acc, 2) + haar_constants[Grid.level_slice(lev)]
        _tally(1 << lev)
    return np.repeat(acc, 2)


# --------------------------------------------------------------------------
# Haar atoms, sign convention, product formula


def haar_function(grid: Grid, index: DyadicIndex) -> LeafFunction:
    """h_I = |I|^{-1/2} (1 on the left child, -1 on the right child)."""
    if index.level >= grid.depth:
        raise ValueError(f"{index} has no Haar function at depth {grid.depth}")
    vals = np.zeros(grid.leaf_count)
    start, stop = index.leaf_range(grid.depth)
    mid = (start + stop) // 2
    height = 2.0 ** (index.level / 2)
    vals[start:mid] = height
    vals[mid:stop] = -height
    return LeafFunction(grid, vals)


def averaging_function(grid: Grid, index: DyadicIndex) -> LeafFunction:
    """h_I^1 = |I|^{-1} 1_I; pairing against it gives the average over I."""
    if index.level > grid.depth:
        raise ValueError(f"{index} is below the leaf level {grid.depth}")
    vals = np.zeros(grid.leaf_count)
    start, stop = index.leaf_range(grid.depth)
    vals[start:stop] = 2.0**index.level
    return LeafFunction(grid, vals)


def delta_sign(J: DyadicIndex, I: DyadicIndex) -> int:
    """+1 if J lies in the left child of I, -1 if in the right, else 0."""
    if not I.strictly_contains(J):
        return 0
    return 1 if I.left.contains(J) else -1


def product_formula_coeff(f: LeafFunction, g: LeafFunction, I: DyadicIndex) -> float:
    """Haar coefficient of the pointwise product f*g at I, assembled from
    the coefficients and averages of the factors:

        sum_{J strictly inside I} fhat(J) ghat(J) delta(J,I) / sqrt(|I|)
          + fhat(I) <g>_I + ghat(I) <f>_I
    """
    grid = f.grid
    if I.level >= grid.depth:
        raise ValueError(f"{I} is not Haar-bearing at depth {grid.depth}")
    fs, gs = f.symbol, g.symbol
    sub = subtree_sums(grid, fs.coeff * gs.coeff)
    inner_sum = (sub[I.left.flat_offset] - sub[I.right.flat_offset]) * 2.0 ** (
        I.level / 2
    )
    return float(inner_sum + fs[I] * g.averages[I] + gs[I] * f.averages[I])

"""A2 weights on the dyadic grid: parameterized families, the A2
characteristic, derived powers, and disbalanced Haar data.

The reciprocal and square-root weights are pointwise transforms of the leaf
values (not re-discretizations), so w^{1/2} * w^{-1/2} = 1 holds exactly and
conjugation identities can be tested at machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .grid import (
    DyadicIndex,
    Grid,
    LeafFunction,
    averaging_function,
    haar_function,
)

__all__ = [
    "WeightSpec",
    "Weight",
    "make_weight",
    "a2_characteristic",
    "weighted_average",
    "disbalanced_data",
]

FAMILIES = ("constant", "power", "cascade", "step")


@dataclass(frozen=True)
class WeightSpec:
    """Parameter bundle for one weight family.

    Text form (CLI): ``constant:c=<real>``, ``power:alpha=<real>``,
    ``cascade:eps=<real>,seed=<u64>``, ``step:a=<real>,b=<real>,split=<dyadic>``.
    """

    family: str
    c: float = 1.0
    alpha: float = 0.0
    eps: float = 0.0
    seed: int = 0
    a: float = 1.0
    b: float = 1.0
    split: float = 0.5

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown weight family {self.family!r}")

    def validate(self) -> None:
        if self.family == "constant" and not self.c > 0:
            raise ValueError("constant weight needs c > 0")
        if self.family == "power" and not -1.0 < self.alpha < 1.0:
            raise ValueError("power weight needs -1 < alpha < 1")
        if self.family == "cascade":
            if not 0.0 <= self.eps < 1.0:
                raise ValueError("cascade weight needs 0 <= eps < 1")
            if self.seed < 0:
                raise ValueError("cascade seed must be a nonnegative integer")
        if self.family == "step":
            if not (self.a > 0 and self.b > 0):
                raise ValueError("step weight needs a > 0 and b > 0")
            if not 0.0 <= self.split <= 1.0:
                raise ValueError("step split must lie in [0, 1]")

    @classmethod
    def parse(cls, text: str) -> "WeightSpec":
        """Parse the CLI grammar, e.g. ``cascade:eps=0.4,seed=7``."""
        family, _, rest = text.partition(":")
        family = family.strip()
        if family not in FAMILIES:
            raise ValueError(f"unknown weight family {family!r} in {text!r}")
        kwargs: dict = {}
        if rest:
            for item in rest.split(","):
                key, sep, value = item.partition("=")
                key = key.strip()
                if not sep or key not in (
                    "c",
                    "alpha",
                    "eps",
                    "seed",
                    "a",
                    "b",
                    "split",
                ):
                    raise ValueError(f"bad weight parameter {item!r} in {text!r}")
                kwargs[key] = int(value) if key == "seed" else float(value)
        spec = cls(family=family, **kwargs)
        spec.validate()
        return spec

    def label(self) -> str:
        if self.family == "constant":
            return f"constant:c={self.c:g}"
        if self.family == "power":
            return f"power:alpha={self.alpha:g}"
        if self.family == "cascade":
            return f"cascade:eps={self.eps:g},seed={self.seed}"
        return f"step:a={self.a:g},b={self.b:g},split={self.split:g}"


@dataclass(frozen=True, eq=False)
class Weight:
    """Strictly positive leaf function with cached derived powers.

    Averages and Haar coefficients of each power are cached on the
    underlying LeafFunctions.  All fields are immutable; instances are safe
    to share across workers.
    """

    w: LeafFunction
    w_inv: LeafFunction
    w_half: LeafFunction
    w_inv_half: LeafFunction

    @classmethod
    def from_values(cls, grid: Grid, values: np.ndarray) -> "Weight":
        vals = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            raise ValueError("weight values must be strictly positive and finite")
        half = np.sqrt(vals)
        return cls(
            w=LeafFunction(grid, vals),
            w_inv=LeafFunction(grid, 1.0 / vals),
            w_half=LeafFunction(grid, half),
            w_inv_half=LeafFunction(grid, 1.0 / half),
        )

    @property
    def grid(self) -> Grid:
        return self.w.grid

    def dual(self) -> "Weight":
        """Swap w and 1/w; fixes the A2 characteristic exactly."""
        return Weight(
            w=self.w_inv, w_inv=self.w, w_half=self.w_inv_half, w_inv_half=self.w_half
        )

    def measure(self, f: LeafFunction, index: DyadicIndex) -> float:
        """The w-mass of f over an interval: integral of f*w."""
        start, stop = index.leaf_range(self.grid.depth)
        chunk = self.w.values[start:stop] * f.values[start:stop]
        return float(chunk.sum()) / self.grid.leaf_count

    def mass(self, index: DyadicIndex) -> float:
        """w(I) = integral of w over I."""
        return self.w.averages[index] * index.length

    @cached_property
    def a2(self) -> float:
        return a2_characteristic(self)


def make_weight(spec: WeightSpec, grid: Grid) -> Weight:
    """Realize a WeightSpec as leaf values on the given grid."""
    spec.validate()
    n = grid.depth
    if spec.family == "constant":
        vals = np.full(grid.leaf_count, spec.c)
    elif spec.family == "power":
        vals = _power_cell_averages(spec.alpha, n)
    elif spec.family == "cascade":
        vals = _cascade_values(spec.eps, spec.seed, n)
    else:  # step
        edges = np.arange(1, grid.leaf_count + 1) * 2.0**-n
        vals = np.where(edges <= spec.split, spec.a, spec.b)
    return Weight.from_values(grid, vals)


def _power_cell_averages(alpha: float, depth: int) -> np.ndarray:
    """Exact cell averages of x**alpha over the leaves, in closed form."""
    if alpha == 0.0:
        return np.ones(1 << depth)
    j = np.arange((1 << depth) + 1, dtype=float)
    edges = j * 2.0**-depth
    anti = edges ** (alpha + 1.0) / (alpha + 1.0)
    return np.diff(anti) * 2.0**depth


def _cascade_values(eps: float, seed: int, depth: int) -> np.ndarray:
    """Multiplicative cascade driven by the Philox counter-based generator.

    At each internal node one child (by a seeded coin flip) gets the factor
    (1+eps), the other (1-eps); identical (eps, seed, depth) give
    bit-identical leaves.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    vals = np.ones(1)
    for lev in range(depth):
        bits = rng.integers(0, 2, size=1 << lev)
        left = np.where(bits == 0, 1.0 + eps, 1.0 - eps)
        nxt = np.empty(2 << lev)
        nxt[0::2] = vals * left
        nxt[1::2] = vals * (2.0 - left)
        vals = nxt
    return vals


def a2_characteristic(weight: Weight) -> float:
    """[w]_{A2}: max of <w>_I <1/w>_I over every interval of the grid."""
    prod = weight.w.averages.tree * weight.w_inv.averages.tree
    return float(prod.max())


def weighted_average(f: LeafFunction, sigma: Weight, K: DyadicIndex) -> float:
    """E_K^sigma(f) = (1/sigma(K)) * integral of f*sigma over K."""
    start, stop = K.leaf_range(sigma.grid.depth)
    sig = sigma.w.values[start:stop]
    return float((f.values[start:stop] * sig).sum() / sig.sum())


def disbalanced_data(
    sigma: Weight, K: DyadicIndex
) -> tuple[float, float, LeafFunction]:
    """Disbalanced Haar data of sigma at K.

    Returns (C_K, D_K, h_K^sigma) with

        C_K = sqrt(<sigma>_{K+} <sigma>_{K-} / <sigma>_K),
        D_K = sigma_hat(K) / <sigma>_K,
        h_K = C_K h_K^sigma + D_K h_K^1   (exactly).

    h_K^sigma is the sigma-normalized Haar function: unit norm in
    L2(sigma) and sigma-mean zero.
    """
    grid = sigma.grid
    if K.level >= grid.depth:
        raise ValueError(f"{K} is not Haar-bearing at depth {grid.depth}")
    avg = sigma.w.averages
    c_k = float(np.sqrt(avg[K.right] * avg[K.left] / avg[K]))
    d_k = sigma.w.symbol[K] / avg[K]
    h = haar_function(grid, K)
    h1 = averaging_function(grid, K)
    h_sigma = LeafFunction(grid, (h.values - d_k * h1.values) / c_k)
    return c_k, d_k, h_sigma

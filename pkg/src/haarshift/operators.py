"""Linear operators on the dyadic grid: paraproducts, pointwise multipliers,
Haar shifts, and the composition operators of the weighted resolution.

Every operator applies matrix-free in O(2**depth) via tree sweeps; a dense
materialization exists only as an oracle for small depths (see norms).
Operators are immutable and stateless after construction: apply and
adjoint_apply are pure and safe to call concurrently.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .grid import (
    DyadicIndex,
    Grid,
    HaarSymbol,
    LeafFunction,
    averaging_function,
    sum_interval_constants,
    synthesize,
)
from .weights import Weight

__all__ = [
    "PARAPRODUCT_KINDS",
    "SHIFT_KINDS",
    "Q_LABELS",
    "DyadicOperator",
    "Paraproduct",
    "MeanCorrection",
    "Multiplier",
    "HaarShift",
    "Composition",
    "OperatorSum",
    "ChildPairForm",
    "paraproduct",
    "multiplier",
    "haar_shift",
    "q_operator",
    "q_symbol",
    "resolution_pieces",
    "mean_cross_operator",
    "conjugated_shift",
    "composed_identity_forms",
    "shift_kernel",
]

PARAPRODUCT_KINDS = ("01", "10", "00", "11")
SHIFT_KINDS = ("identity", "half", "full")

# stable operator labels used in CSV output and reports
Q_LABELS = tuple(
    f"Q_{left}_{right}" for left in ("01", "10", "00") for right in ("01", "10", "00")
)


class DyadicOperator:
    """A linear map on leaf functions with forward and adjoint application."""

    label: str = "operator"
    annihilates_constants: bool = False

    def __init__(self, grid: Grid):
        self.grid = grid

    def apply(self, f: LeafFunction) -> LeafFunction:
        raise NotImplementedError

    def adjoint_apply(self, f: LeafFunction) -> LeafFunction:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.label} depth={self.grid.depth}>"


class Paraproduct(DyadicOperator):
    """P^{(a,b)}_s : f -> sum_I s_I <f, h_I^b> h_I^a over Haar-bearing I.

    Type "01" reads averages and emits Haar atoms; "10" reads Haar
    coefficients and emits averaging atoms; "00" is a Haar multiplier;
    "11" reads averages and emits averaging atoms.
    """

    def __init__(self, grid: Grid, symbol: np.ndarray, kind: str, label: str = ""):
        super().__init__(grid)
        if kind not in PARAPRODUCT_KINDS:
            raise ValueError(f"unknown paraproduct kind {kind!r}")
        symbol = np.asarray(symbol, dtype=float)
        if symbol.shape != (grid.haar_size,):
            raise ValueError("symbol must have one entry per Haar-bearing interval")
        self.symbol = symbol
        self.kind = kind
        self.label = label or f"P{kind}"
        # types reading Haar coefficients send constants to zero
        self.annihilates_constants = kind in ("10", "00")

    def _forward(self, f: LeafFunction, kind: str) -> LeafFunction:
        grid = self.grid
        if kind == "01":
            coeff = self.symbol * f.averages.haar_part
            return synthesize(HaarSymbol(grid, coeff, 0.0))
        if kind == "10":
            consts = self.symbol * f.symbol.coeff * grid.haar_inv_lengths
            return LeafFunction(grid, sum_interval_constants(grid, consts))
        if kind == "00":
            coeff = self.symbol * f.symbol.coeff
            return synthesize(HaarSymbol(grid, coeff, 0.0))
        consts = self.symbol * f.averages.haar_part * grid.haar_inv_lengths
        return LeafFunction(grid, sum_interval_constants(grid, consts))

    def apply(self, f: LeafFunction) -> LeafFunction:
        return self._forward(f, self.kind)

    def adjoint_apply(self, f: LeafFunction) -> LeafFunction:
        return self._forward(f, _ADJOINT_KIND[self.kind])


_ADJOINT_KIND = {"01": "10", "10": "01", "00": "00", "11": "11"}


class MeanCorrection(DyadicOperator):
    """Rank-one piece f -> c * <f>_{[0,1)} * 1; closes the finite-model
    multiplier decomposition on constants."""

    def __init__(self, grid: Grid, scalar: float, label: str = "mean"):
        super().__init__(grid)
        self.scalar = float(scalar)
        self.label = label

    def apply(self, f: LeafFunction) -> LeafFunction:
        return LeafFunction.constant(self.grid, self.scalar * f.mean())

    adjoint_apply = apply


class Multiplier(DyadicOperator):
    """Pointwise multiplication by a leaf function; self-adjoint."""

    def __init__(self, grid: Grid, b: LeafFunction, label: str = "M_b"):
        super().__init__(grid)
        self.b = b
        self.label = label

    def apply(self, f: LeafFunction) -> LeafFunction:
        return LeafFunction(self.grid, self.b.values * f.values)

    adjoint_apply = apply


class HaarShift(DyadicOperator):
    """Dyadic shift acting on Haar coefficients.

    half: h_I -> h_{I-};  full: h_I -> h_{I-} - h_{I+};  identity: h_I -> h_I.
    All kinds annihilate the mean coefficient, and (half/full) drop the
    finest Haar level, whose image would need resolution beyond the grid.
    """

    annihilates_constants = True

    def __init__(self, grid: Grid, kind: str):
        super().__init__(grid)
        if kind not in SHIFT_KINDS:
            raise ValueError(f"unknown shift kind {kind!r}")
        self.kind = kind
        self.label = f"shift_{kind}"

    def apply(self, f: LeafFunction) -> LeafFunction:
        grid = self.grid
        c = f.symbol.coeff
        if self.kind == "identity":
            return synthesize(HaarSymbol(grid, c.copy(), 0.0))
        out = np.zeros(grid.haar_size)
        for lev in range(grid.depth - 1):
            src = c[Grid.level_slice(lev)]
            dst = out[Grid.level_slice(lev + 1)]
            dst[0::2] = src
            if self.kind == "full":
                dst[1::2] = -src
        return synthesize(HaarSymbol(grid, out, 0.0))

    def adjoint_apply(self, f: LeafFunction) -> LeafFunction:
        grid = self.grid
        c = f.symbol.coeff
        if self.kind == "identity":
            return synthesize(HaarSymbol(grid, c.copy(), 0.0))
        out = np.zeros(grid.haar_size)
        for lev in range(grid.depth - 1):
            src = c[Grid.level_slice(lev + 1)]
            if self.kind == "half":
                out[Grid.level_slice(lev)] = src[0::2]
            else:
                out[Grid.level_slice(lev)] = src[0::2] - src[1::2]
        return synthesize(HaarSymbol(grid, out, 0.0))


class Composition(DyadicOperator):
    """Composition in mathematical order: factors[0] is applied last."""

    def __init__(self, factors: Sequence[DyadicOperator], label: str = ""):
        super().__init__(factors[0].grid)
        self.factors = tuple(factors)
        self.label = label or "*".join(op.label for op in self.factors)
        self.annihilates_constants = self.factors[-1].annihilates_constants

    def apply(self, f: LeafFunction) -> LeafFunction:
        for op in reversed(self.factors):
            f = op.apply(f)
        return f

    def adjoint_apply(self, f: LeafFunction) -> LeafFunction:
        for op in self.factors:
            f = op.adjoint_apply(f)
        return f


class OperatorSum(DyadicOperator):
    def __init__(self, terms: Sequence[DyadicOperator], label: str = ""):
        super().__init__(terms[0].grid)
        self.terms = tuple(terms)
        self.label = label or "+".join(op.label for op in self.terms)
        self.annihilates_constants = all(op.annihilates_constants for op in self.terms)

    def apply(self, f: LeafFunction) -> LeafFunction:
        out = np.zeros(self.grid.leaf_count)
        for op in self.terms:
            out += op.apply(f).values
        return LeafFunction(self.grid, out)

    def adjoint_apply(self, f: LeafFunction) -> LeafFunction:
        out = np.zeros(self.grid.leaf_count)
        for op in self.terms:
            out += op.adjoint_apply(f).values
        return LeafFunction(self.grid, out)


class ChildPairForm(DyadicOperator):
    """Rank-sum operator  f -> sum_I c_I <f, atom_in(I)> atom_out(I-)  over
    I with both grandchildren on the grid (levels 0..depth-2).

    atom kinds: "haar" pairs/emits h, "avg" pairs/emits h^1.  These are the
    closed forms the shift compositions collapse to when the shift can be
    absorbed into one factor.
    """

    def __init__(
        self,
        grid: Grid,
        coeffs: np.ndarray,
        in_kind: str,
        out_kind: str,
        label: str = "child_pair_form",
    ):
        super().__init__(grid)
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (grid.haar_size,):
            raise ValueError("coeffs must have one entry per Haar-bearing interval")
        if in_kind not in ("haar", "avg") or out_kind not in ("haar", "avg"):
            raise ValueError("atom kinds must be 'haar' or 'avg'")
        self.coeffs = coeffs
        self.in_kind = in_kind
        self.out_kind = out_kind
        self.label = label
        self.annihilates_constants = in_kind == "haar"

    def _measure(self, f: LeafFunction, kind: str) -> np.ndarray:
        return f.symbol.coeff if kind == "haar" else f.averages.haar_part

    def _emit(self, weights: np.ndarray, kind: str) -> LeafFunction:
        grid = self.grid
        if kind == "haar":
            return synthesize(HaarSymbol(grid, weights, 0.0))
        return LeafFunction(
            grid, sum_interval_constants(grid, weights * grid.haar_inv_lengths)
        )

    def apply(self, f: LeafFunction) -> LeafFunction:
        grid = self.grid
        u = self._measure(f, self.in_kind)
        scattered = np.zeros(grid.haar_size)
        for lev in range(grid.depth - 1):
            t = self.coeffs[Grid.level_slice(lev)] * u[Grid.level_slice(lev)]
            scattered[Grid.level_slice(lev + 1)][0::2] = t
        return self._emit(scattered, self.out_kind)

    def adjoint_apply(self, f: LeafFunction) -> LeafFunction:
        grid = self.grid
        v = self._measure(f, self.out_kind)
        gathered = np.zeros(grid.haar_size)
        for lev in range(grid.depth - 1):
            gathered[Grid.level_slice(lev)] = v[Grid.level_slice(lev + 1)][0::2]
        return self._emit(self.coeffs * gathered, self.in_kind)


# --------------------------------------------------------------------------
# constructors


def paraproduct(grid: Grid, symbol, kind: str, label: str = "") -> Paraproduct:
    """Paraproduct from a Haar-coefficient symbol, an averages symbol, or a
    bare per-interval array."""
    from .grid import MultiscaleAverages

    if isinstance(symbol, HaarSymbol):
        values = symbol.coeff
    elif isinstance(symbol, MultiscaleAverages):
        values = symbol.haar_part
    else:
        values = np.asarray(symbol, dtype=float)
    return Paraproduct(grid, values, kind, label)


def multiplier(b: LeafFunction, label: str = "M_b") -> Multiplier:
    return Multiplier(b.grid, b, label)


def haar_shift(kind: str, grid: Grid) -> HaarShift:
    return HaarShift(grid, kind)


def multiplier_pieces(b: LeafFunction) -> dict[str, DyadicOperator]:
    """The exact finite-model decomposition of M_b into four pieces:

        M_b = P^{(0,1)}_{bhat} + P^{(1,0)}_{bhat} + P^{(0,0)}_{<b>} + mean term.

    The rank-one mean term is absent in the three-term decomposition on the
    line; here it restores exactness on constants.
    """
    grid = b.grid
    hat = b.symbol.coeff
    avg = b.averages.haar_part
    return {
        "01": Paraproduct(grid, hat, "01", "P01"),
        "10": Paraproduct(grid, hat, "10", "P10"),
        "00": Paraproduct(grid, avg, "00", "P00"),
        "mean": MeanCorrection(grid, b.symbol.mean),
    }


def q_symbol(w: Weight, side: str, kind: str) -> np.ndarray:
    """Symbol for one factor of the weighted resolution: the Haar
    coefficients of w^{+-1/2} for kinds (0,1)/(1,0), its averages for (0,0).
    """
    func = w.w_half if side == "left" else w.w_inv_half
    if kind in ("01", "10"):
        return func.symbol.coeff
    if kind == "00":
        return func.averages.haar_part
    raise ValueError(f"no resolution symbol for paraproduct kind {kind!r}")


def q_operator(w: Weight, shift: str, left: str, right: str) -> Composition:
    """One composition operator of the weighted resolution:
    P^{left}_{what} o shift o P^{right}_{w^{-1/2}hat}."""
    grid = w.grid
    return Composition(
        [
            Paraproduct(grid, q_symbol(w, "left", left), left),
            haar_shift(shift, grid),
            Paraproduct(grid, q_symbol(w, "right", right), right),
        ],
        label=f"Q_{left}_{right}",
    )


def resolution_pieces(w: Weight, shift: str) -> dict[str, DyadicOperator]:
    """All sixteen pieces of the conjugation expanded through the four-piece
    multiplier decomposition on both sides: nine paraproduct compositions
    keyed by their Q labels, plus the seven mean-involving cross pieces
    summed under the key "mean_cross"."""
    grid = w.grid
    s = haar_shift(shift, grid)
    left = multiplier_pieces(w.w_half)
    right = multiplier_pieces(w.w_inv_half)
    pieces: dict[str, DyadicOperator] = {}
    for lk in ("01", "10", "00"):
        for rk in ("01", "10", "00"):
            pieces[f"Q_{lk}_{rk}"] = Composition(
                [left[lk], s, right[rk]], label=f"Q_{lk}_{rk}"
            )
    cross = [
        Composition([left["mean"], s, right[rk]]) for rk in ("01", "10", "00", "mean")
    ]
    cross += [Composition([left[lk], s, right["mean"]]) for lk in ("01", "10", "00")]
    pieces["mean_cross"] = OperatorSum(cross, label="mean_cross")
    return pieces


def mean_cross_operator(w: Weight, shift: str) -> DyadicOperator:
    return resolution_pieces(w, shift)["mean_cross"]


def conjugated_shift(w: Weight, shift: str) -> Composition:
    """M_{w^{1/2}} o shift o M_{w^{-1/2}}, applied factor by factor."""
    grid = w.grid
    return Composition(
        [
            Multiplier(grid, w.w_half, "M_w_half"),
            haar_shift(shift, grid),
            Multiplier(grid, w.w_inv_half, "M_w_inv_half"),
        ],
        label="M_conj",
    )


def _gather_left_child(grid: Grid, haar_values: np.ndarray) -> np.ndarray:
    """out_I = value at I- for I at levels 0..depth-2 (0 at the last level)."""
    out = np.zeros(grid.haar_size)
    for lev in range(grid.depth - 1):
        out[Grid.level_slice(lev)] = haar_values[Grid.level_slice(lev + 1)][0::2]
    return out


def composed_identity_forms(w: Weight) -> dict[str, ChildPairForm]:
    """Closed forms of the four compositions that absorb the half shift.

    Each is a rank sum over I of coefficient * atom(I-) x atom(I), exactly
    equal to the corresponding composition operator:

        Q_10_01 = sum  what(I-)   winvhat(I)   h^1_{I-} x h^1_I
        Q_10_00 = sum  what(I-)   <winv>_I     h^1_{I-} x h_I
        Q_00_01 = sum  <whalf>_{I-} winvhat(I) h_{I-}   x h^1_I
        Q_00_00 = sum  <whalf>_{I-} <winv>_I   h_{I-}   x h_I

    (hats and averages taken of w^{1/2} and w^{-1/2} respectively; the
    outer factor's symbol is evaluated at the shifted interval I-).
    """
    grid = w.grid
    hat_left = _gather_left_child(grid, w.w_half.symbol.coeff)
    avg_left = _gather_left_child(grid, w.w_half.averages.haar_part)
    hat_r = w.w_inv_half.symbol.coeff
    avg_r = w.w_inv_half.averages.haar_part
    return {
        "Q_10_01": ChildPairForm(grid, hat_left * hat_r, "avg", "avg", "form_10_01"),
        "Q_10_00": ChildPairForm(grid, hat_left * avg_r, "haar", "avg", "form_10_00"),
        "Q_00_01": ChildPairForm(grid, avg_left * hat_r, "avg", "haar", "form_00_01"),
        "Q_00_00": ChildPairForm(grid, avg_left * avg_r, "haar", "haar", "form_00_00"),
    }


def shift_kernel(grid: Grid, J: DyadicIndex, L: DyadicIndex, kind: str) -> float:
    """<shift h_J^1, h_L^1>, computed by expanding h_J^1 in the
    Haar-plus-mean basis, shifting, and pairing (not by a closed formula).
    Covers nested, equal, and disjoint configurations."""
    shifted = haar_shift(kind, grid).apply(averaging_function(grid, J))
    return shifted.inner(averaging_function(grid, L))

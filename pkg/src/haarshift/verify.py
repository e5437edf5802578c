"""Exact-identity and norm-law verification suite.

Each check returns its worst observed error; the suite passes when every
check is under its threshold.  Identity checks are seed-independent in
outcome; the seed only picks the random test vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimates import (
    carleson_embedding_constant,
    cm_norm,
    ell_inf_norm,
    nested_kernel_value,
    s_coefficient,
)
from .grid import (
    DyadicIndex,
    Grid,
    HaarSymbol,
    LeafFunction,
    averages,
    averaging_function,
    haar_function,
    product_formula_coeff,
)
from .norms import dense_norm, operator_norm
from .operators import (
    Q_LABELS,
    SHIFT_KINDS,
    Paraproduct,
    composed_identity_forms,
    conjugated_shift,
    haar_shift,
    multiplier,
    multiplier_pieces,
    resolution_pieces,
)
from .weights import Weight, WeightSpec, disbalanced_data, make_weight

__all__ = ["CheckResult", "run_verification"]

NORM_LAW_DEPTH = 6  # dense-oracle norm laws stay cheap at this depth


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_err: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.max_err < self.threshold


def _random_leaf(grid: Grid, rng: np.random.Generator) -> LeafFunction:
    return LeafFunction(grid, rng.uniform(-1.0, 1.0, grid.leaf_count))


def _check_orthonormality(grid: Grid) -> float:
    vectors = [LeafFunction.constant(grid, 1.0)]
    vectors += [haar_function(grid, idx) for idx in grid.haar_indices()]
    mat = np.stack([v.values for v in vectors])
    gram = mat @ mat.T / grid.leaf_count
    return float(np.abs(gram - np.eye(len(vectors))).max())


def _check_parseval(grid: Grid, rng) -> float:
    worst = 0.0
    for _ in range(20):
        f = _random_leaf(grid, rng)
        s = f.symbol
        total = s.mean**2 + float(s.coeff @ s.coeff)
        worst = max(worst, abs(total - f.inner(f)) / f.inner(f))
    return worst


def _check_product_formula(grid: Grid, rng) -> float:
    f, g = _random_leaf(grid, rng), _random_leaf(grid, rng)
    product = LeafFunction(grid, f.values * g.values).symbol
    worst = 0.0
    for idx in grid.haar_indices():
        worst = max(
            worst, abs(product_formula_coeff(f, g, idx) - product[idx])
        )
    return worst


def _check_disbalanced(grid: Grid, seed: int) -> float:
    sigma = make_weight(WeightSpec("cascade", eps=0.35, seed=seed), grid)
    worst = 0.0
    for k in grid.haar_indices():
        c_k, d_k, h_sigma = disbalanced_data(sigma, k)
        h = haar_function(grid, k)
        h1 = averaging_function(grid, k)
        rebuilt = c_k * h_sigma.values + d_k * h1.values
        worst = max(worst, float(np.abs(rebuilt - h.values).max()))
        weighted = h_sigma.values * sigma.w.values
        worst = max(worst, abs(float(weighted @ h_sigma.values) / grid.leaf_count - 1))
        worst = max(worst, abs(float(weighted.sum()) / grid.leaf_count))
    return worst


def _check_multiplier_decomposition(grid: Grid, rng) -> float:
    b = _random_leaf(grid, rng)
    m_b = multiplier(b)
    pieces = multiplier_pieces(b)
    worst = 0.0
    for _ in range(20):
        f = _random_leaf(grid, rng)
        direct = m_b.apply(f).values
        split = sum(p.apply(f).values for p in pieces.values())
        worst = max(worst, float(np.abs(direct - split).max()))
    return worst


def _check_resolution_identity(grid: Grid, rng, seed: int) -> float:
    w = make_weight(WeightSpec("cascade", eps=0.4, seed=seed), grid)
    worst = 0.0
    for kind in SHIFT_KINDS:
        conj = conjugated_shift(w, kind)
        pieces = resolution_pieces(w, kind)
        for _ in range(20):
            f = _random_leaf(grid, rng)
            direct = conj.apply(f).values
            split = sum(op.apply(f).values for op in pieces.values())
            worst = max(worst, float(np.abs(direct - split).max()))
    return worst


def _operator_zoo(grid: Grid, rng, seed: int) -> list:
    w = make_weight(WeightSpec("cascade", eps=0.4, seed=seed + 1), grid)
    sym = rng.normal(size=grid.haar_size)
    ops = [Paraproduct(grid, sym, kind) for kind in ("01", "10", "00", "11")]
    ops.append(multiplier(_random_leaf(grid, rng)))
    ops += [haar_shift(kind, grid) for kind in SHIFT_KINDS]
    pieces = resolution_pieces(w, "half")
    ops += [pieces[label] for label in Q_LABELS]
    ops.append(pieces["mean_cross"])
    ops.append(conjugated_shift(w, "half"))
    ops += list(composed_identity_forms(w).values())
    return ops


def _check_adjoints(grid: Grid, rng, seed: int) -> float:
    worst = 0.0
    for op in _operator_zoo(grid, rng, seed):
        for _ in range(20):
            f, g = _random_leaf(grid, rng), _random_leaf(grid, rng)
            lhs = op.apply(f).inner(g)
            rhs = f.inner(op.adjoint_apply(g))
            worst = max(worst, abs(lhs - rhs))
    return worst


def _check_dense_oracle(rng, seed: int) -> float:
    grid = Grid(NORM_LAW_DEPTH)
    worst = 0.0
    for op in _operator_zoo(grid, rng, seed):
        mat = np.column_stack(
            [
                op.apply(LeafFunction(grid, e)).values
                for e in np.eye(grid.leaf_count)
            ]
        )
        for _ in range(5):
            f = _random_leaf(grid, rng)
            worst = max(
                worst, float(np.abs(op.apply(f).values - mat @ f.values).max())
            )
            worst = max(
                worst,
                float(np.abs(op.adjoint_apply(f).values - mat.T @ f.values).max()),
            )
    return worst


def _check_norm_engine_agreement(rng, seed: int, tol: float) -> float:
    grid = Grid(NORM_LAW_DEPTH)
    worst = 0.0
    for kind in ("01", "10", "00", "11"):
        sym = rng.normal(size=grid.haar_size)
        op = Paraproduct(grid, sym, kind)
        dn = dense_norm(op)
        on = operator_norm(op, tol=tol, seed=seed).value
        worst = max(worst, abs(on - dn) / dn)
    return worst


def _check_shift_kernel(grid: Grid) -> float:
    """Nested pairs against the exact closed form, plus the pinned disjoint
    and brother-pair values, batched through one averaging sweep per J."""
    shift = haar_shift("half", grid)
    worst = 0.0
    all_indices = list(grid.all_indices())
    for j_idx in all_indices:
        shifted = shift.apply(averaging_function(grid, j_idx))
        kernel_tree = averages(shifted).tree  # <S h_J^1, h_L^1> for every L
        for l_idx in all_indices:
            if j_idx.strictly_contains(l_idx):
                expected = nested_kernel_value(grid, j_idx, l_idx)
                worst = max(
                    worst, abs(kernel_tree[l_idx.flat_offset] - expected)
                )
        # magnitude of the ancestor sum never exceeds sqrt(2)/|J|
        bound = math.sqrt(2.0) / j_idx.length
        if abs(s_coefficient(grid, j_idx)) > bound + 1e-12:
            worst = max(worst, abs(s_coefficient(grid, j_idx)) - bound)
    # the two level-1 brothers pair to zero
    brothers = [DyadicIndex(1, 0), DyadicIndex(1, 1)]
    for j_idx, l_idx in (brothers, brothers[::-1]):
        shifted = shift.apply(averaging_function(grid, j_idx))
        worst = max(worst, abs(shifted.inner(averaging_function(grid, l_idx))))
    if grid.depth >= 3:
        # right-brother-to-left-brother disjoint pair with value sqrt(2)
        shifted = shift.apply(averaging_function(grid, DyadicIndex(2, 2)))
        value = shifted.inner(averaging_function(grid, DyadicIndex(2, 1)))
        worst = max(worst, abs(value - math.sqrt(2.0)))
    return worst


def _check_cet_factor(grid: Grid, rng) -> float:
    worst = 0.0
    for _ in range(100):
        alpha = rng.uniform(0.0, 1.0, grid.haar_size)
        v = Weight.from_values(grid, np.exp(rng.normal(0.0, 0.8, grid.leaf_count)))
        constant = carleson_embedding_constant(alpha, v)
        f = _random_leaf(grid, rng)
        fv = LeafFunction(grid, f.values * v.w.values)
        cond_exp = averages(fv).haar_part / v.w.averages.haar_part
        lhs = float(np.sum(alpha * cond_exp**2))
        rhs = 4.0 * constant * float(f.values**2 @ v.w.values) / grid.leaf_count
        worst = max(worst, (lhs - rhs) / rhs)
    return worst


def _check_cm_sandwich(rng) -> float:
    grid = Grid(NORM_LAW_DEPTH)
    worst = 0.0
    for _ in range(50):
        sym = HaarSymbol(grid, rng.normal(size=grid.haar_size), 0.0)
        norm = dense_norm(Paraproduct(grid, sym.coeff, "01"))
        cm = cm_norm(sym)
        worst = max(worst, (cm - norm) / cm)  # lower bound
        worst = max(worst, (norm - 2.0 * cm) / cm)  # upper bound
    return worst


def _check_p00_norm_law(rng) -> float:
    grid = Grid(NORM_LAW_DEPTH)
    worst = 0.0
    for _ in range(50):
        sym = HaarSymbol(grid, rng.normal(size=grid.haar_size), 0.0)
        norm = dense_norm(Paraproduct(grid, sym.coeff, "00"))
        worst = max(worst, abs(norm - ell_inf_norm(sym)) / ell_inf_norm(sym))
    return worst


def _check_p11_bound(rng) -> float:
    grid = Grid(NORM_LAW_DEPTH)
    worst = 0.0
    for _ in range(50):
        a = rng.uniform(0.0, 1.0, grid.haar_size)
        norm = dense_norm(Paraproduct(grid, a, "11"))
        bound = 4.0 * cm_norm(HaarSymbol(grid, np.sqrt(a), 0.0)) ** 2
        worst = max(worst, (norm - bound) / bound)
    return worst


def run_verification(depth: int, seed: int, tol: float = 1e-9) -> list[CheckResult]:
    """Run every exact-identity and norm-law check at the given depth."""
    if not 2 <= depth <= 10:
        raise ValueError("verification depth must be between 2 and 10")
    grid = Grid(depth)
    rng = np.random.default_rng(seed)
    identity_tol = 1e-10
    results = [
        CheckResult("orthonormality", _check_orthonormality(grid), 1e-12),
        CheckResult("parseval", _check_parseval(grid, rng), 1e-12),
        CheckResult("product_formula", _check_product_formula(grid, rng), 1e-12),
        CheckResult("disbalanced_reconstruction", _check_disbalanced(grid, seed), identity_tol),
        CheckResult(
            "multiplier_decomposition",
            _check_multiplier_decomposition(grid, rng),
            identity_tol,
        ),
        CheckResult(
            "resolution_identity_16_pieces",
            _check_resolution_identity(grid, rng, seed),
            identity_tol,
        ),
        CheckResult("adjoint_consistency", _check_adjoints(grid, rng, seed), 1e-11),
        CheckResult("dense_oracle_application", _check_dense_oracle(rng, seed), 1e-12),
        CheckResult(
            "norm_engine_vs_dense", _check_norm_engine_agreement(rng, seed, tol), 1e-6
        ),
        CheckResult(
            "shift_kernel_closed_form", _check_shift_kernel(grid), identity_tol
        ),
        CheckResult("carleson_embedding_factor4", _check_cet_factor(grid, rng), 1e-10),
        CheckResult("cm_sandwich", _check_cm_sandwich(rng), 1e-8),
        CheckResult("p00_norm_law", _check_p00_norm_law(rng), 1e-6),
        CheckResult("p11_cm_bound", _check_p11_bound(rng), 1e-8),
    ]
    return results

"""Square functions, sequence norms, Carleson embedding constants, the
stopping-time corona construction, shift-kernel closed forms, and the
battery of weighted Carleson-sum inequalities.

Empirical constants are exact maxima over the finite grid, never sampled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import (
    DyadicIndex,
    Grid,
    HaarSymbol,
    LeafFunction,
    delta_sign,
    subtree_sums,
    sum_interval_constants,
    synthesize,
)
from .norms import ConvergenceError, operator_norm, power_iteration
from .operators import DyadicOperator, haar_shift
from .weights import Weight

__all__ = [
    "square_function",
    "s_pi",
    "weighted_square_norm_sq",
    "s_pi_sharp_ratio",
    "ell_inf_norm",
    "cm_norm",
    "carleson_embedding_constant",
    "s_coefficient",
    "nested_kernel_value",
    "CoronaDecomposition",
    "corona",
    "BatteryRow",
    "InequalityReport",
    "inequality_battery",
    "BATTERY_ROW_LABELS",
    "BATTERY_A2_POWERS",
    "disjoint_block_norm",
]


# --------------------------------------------------------------------------
# square functions


def square_function(f: LeafFunction) -> LeafFunction:
    """Sf(x) = sqrt( sum_I fhat(I)^2 h_I^1(x) ) over Haar-bearing I."""
    grid = f.grid
    consts = f.symbol.coeff**2 * grid.haar_inv_lengths
    return LeafFunction(grid, np.sqrt(sum_interval_constants(grid, consts)))


def s_pi(f: LeafFunction) -> LeafFunction:
    """Modified square function: each I spreads fhat(I)^2 / |I| over the
    parent of I, with the root acting as its own parent."""
    grid = f.grid
    c = f.symbol.coeff
    consts = np.zeros(grid.haar_size)
    consts[0] = c[0] ** 2  # root term, pi(root) = root
    for lev in range(1, grid.depth):
        sq = c[Grid.level_slice(lev)] ** 2 * 2.0**lev
        consts[Grid.level_slice(lev - 1)] += sq[0::2] + sq[1::2]
    return LeafFunction(grid, np.sqrt(sum_interval_constants(grid, consts)))


def weighted_square_norm_sq(f: LeafFunction, v: LeafFunction) -> float:
    """|Sf|^2 in L2(v), which collapses to sum_I fhat(I)^2 <v>_I."""
    return float(np.sum(f.symbol.coeff**2 * v.averages.haar_part))


def _parent_averages(grid: Grid, avg_haar: np.ndarray) -> np.ndarray:
    """<.>_{pi I} for every Haar-bearing I, with pi(root) = root."""
    out = np.empty(grid.haar_size)
    out[0] = avg_haar[0]
    for lev in range(1, grid.depth):
        out[Grid.level_slice(lev)] = np.repeat(avg_haar[Grid.level_slice(lev - 1)], 2)
    return out


def s_pi_sharp_ratio(
    w: Weight, tol: float = 1e-9, max_iter: int = 50000, seed: int = 1
) -> float:
    """Sharp constant  sup { <D phi, phi> / <M_w phi, phi> : phi mean-zero }
    where D sends h_I -> <w>_{pi I} h_I.

    Computed by power iteration on the symmetrized generalized eigenproblem:
    with u = w^{-1/2} and P the projection onto the complement of u, the
    constant is the top eigenvalue of  P (M_u D M_u) P.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    grid = w.grid
    parents = _parent_averages(grid, w.w.averages.haar_part)
    u = w.w_inv_half.values
    u_norm_sq = float(u @ u)

    def project(x: np.ndarray) -> np.ndarray:
        return x - (float(u @ x) / u_norm_sq) * u

    def matvec(x: np.ndarray) -> np.ndarray:
        y = project(x) * u
        sym = LeafFunction(grid, y).symbol
        z = synthesize(HaarSymbol(grid, sym.coeff * parents, 0.0)).values * u
        return project(z)

    rng = np.random.default_rng(seed)
    x0 = project(rng.uniform(-1.0, 1.0, grid.leaf_count))
    lam, _, residual, converged, _ = power_iteration(matvec, x0, tol, max_iter)
    if not converged:
        raise ConvergenceError(
            "sharp-ratio power iteration did not converge", lam, residual
        )
    return float(lam)


# --------------------------------------------------------------------------
# sequence norms and the embedding constant


def _symbol_coeff(a) -> tuple[Grid, np.ndarray]:
    if isinstance(a, HaarSymbol):
        return a.grid, a.coeff
    raise TypeError("expected a HaarSymbol")


def ell_inf_norm(a: HaarSymbol) -> float:
    _, coeff = _symbol_coeff(a)
    return float(np.abs(coeff).max())


def cm_norm(a: HaarSymbol) -> float:
    """Carleson-measure norm: sqrt of the best uniform bound on
    (1/|I|) sum_{J inside I} a_J^2 over all dyadic I."""
    grid, coeff = _symbol_coeff(a)
    sums = subtree_sums(grid, coeff**2) * grid.tree_inv_lengths
    return float(np.sqrt(sums.max()))


def carleson_embedding_constant(alpha: np.ndarray, v: Weight) -> float:
    """Exact testing constant  sup_I v(I)^{-1} sum_{J inside I} a_J <v>_J^2,
    the sup running over every dyadic interval of the grid."""
    grid = v.grid
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (grid.haar_size,):
        raise ValueError("alpha must have one entry per Haar-bearing interval")
    if np.any(alpha < 0):
        raise ValueError("alpha must be nonnegative")
    avg = v.w.averages
    sums = subtree_sums(grid, alpha * avg.haar_part**2)
    masses = avg.tree / grid.tree_inv_lengths  # v(I) = <v>_I |I|
    return float((sums / masses).max())


# --------------------------------------------------------------------------
# shift-kernel closed forms


def s_coefficient(grid: Grid, J: DyadicIndex) -> float:
    """Closed-form nested-pair kernel coefficient for the half shift:
    a signed lacunary sum over the grid ancestors K whose left child
    strictly contains J,

        sqrt(2) * sum_{K: K_left strictly contains J} delta(J, K_left) / |K|.

    The sign records which half of K_left the interval J sits in; it is +1
    along the leftmost chain, where the sum reduces to sqrt(2)/|pi J| terms.
    """
    total = 0.0
    for anc in J.ancestors():
        if anc.is_left_child:
            # anc = K_left for K = anc.parent; 1/|K| = 2^{level(anc) - 1}
            total += delta_sign(J, anc) * 2.0 ** (anc.level - 1)
    return math.sqrt(2.0) * total


def nested_kernel_value(grid: Grid, J: DyadicIndex, L: DyadicIndex) -> float:
    """Exact value of <half-shift h_J^1, h_L^1> for L strictly inside J.

    Equals s_coefficient(J) plus, when J is itself a left child, the
    boundary contribution of K = pi J whose shifted atom lands on J:
    sqrt(2) * delta(L, J) / |pi J|.
    """
    if not J.strictly_contains(L):
        raise ValueError("nested kernel value requires L strictly inside J")
    value = s_coefficient(grid, J)
    if J.is_left_child:
        value += math.sqrt(2.0) * delta_sign(L, J) * 2.0 ** (J.level - 1)
    return value


# --------------------------------------------------------------------------
# corona decomposition


@dataclass(frozen=True)
class CoronaDecomposition:
    """Stopping-time generations for a weight above a root interval.

    generations[0] == [root]; each interval in generations[k+1] is a maximal
    subinterval of its stopping parent whose average exceeds gamma times the
    parent's average.
    """

    root: DyadicIndex
    gamma: float
    generations: tuple[tuple[DyadicIndex, ...], ...]
    stopping_parent: dict

    def stopping_intervals(self) -> list[DyadicIndex]:
        return [q for gen in self.generations for q in gen]

    def chains(self) -> list[list[DyadicIndex]]:
        """All root-to-deepest stopping chains."""
        children: dict[DyadicIndex, list[DyadicIndex]] = {}
        for q, p in self.stopping_parent.items():
            children.setdefault(p, []).append(q)
        chains = []

        def walk(node, path):
            kids = children.get(node, [])
            if not kids:
                chains.append(path)
                return
            for kid in sorted(kids):
                walk(kid, path + [kid])

        walk(self.root, [self.root])
        return chains


def corona(w: Weight, root: DyadicIndex, gamma: float) -> CoronaDecomposition:
    """Top-down stopping-time construction: descend from the root, starting
    a new generation at every maximal interval whose average first exceeds
    gamma times its stopping parent's average."""
    if gamma <= 1:
        raise ValueError("corona threshold gamma must exceed 1")
    grid = w.grid
    avg = w.w.averages
    generations: list[list[DyadicIndex]] = [[root]]
    stopping_parent: dict[DyadicIndex, DyadicIndex] = {}

    def scan(parent: DyadicIndex, generation: int) -> None:
        """Find maximal stopping subintervals of `parent`."""
        threshold = gamma * avg[parent]
        stack = (
            [parent.left, parent.right] if parent.level < grid.depth else []
        )
        found: list[DyadicIndex] = []
        while stack:
            node = stack.pop()
            if avg[node] > threshold:
                found.append(node)
            elif node.level < grid.depth:
                stack.extend([node.left, node.right])
        for node in sorted(found):
            while len(generations) <= generation:
                generations.append([])
            generations[generation].append(node)
            stopping_parent[node] = parent
            scan(node, generation + 1)

    scan(root, 1)
    return CoronaDecomposition(
        root=root,
        gamma=gamma,
        generations=tuple(tuple(g) for g in generations),
        stopping_parent=stopping_parent,
    )


def corona_members(
    decomp: CoronaDecomposition, w: Weight, G: DyadicIndex
) -> list[DyadicIndex]:
    """Intervals of the corona of G: inside G but in no stopping child of G."""
    grid = w.grid
    stop_children = [q for q, p in decomp.stopping_parent.items() if p == G]
    members = []
    stack = [G]
    while stack:
        node = stack.pop()
        if node != G and node in stop_children:
            continue
        members.append(node)
        if node.level < grid.depth:
            stack.extend([node.left, node.right])
    return members


def corona_sum(decomp: CoronaDecomposition, w: Weight) -> float:
    """sum over stopping intervals G of <w>_G^2 * (1/w)(G), the quantity
    dominating the nested Carleson sum in the stopping-time argument."""
    total = 0.0
    for g in decomp.stopping_intervals():
        total += w.w.averages[g] ** 2 * w.w_inv.averages[g] * g.length
    return total


# --------------------------------------------------------------------------
# the inequality battery


BATTERY_ROW_LABELS = ("a", "b", "c", "d", "e", "f", "g", "h", "i")

# the power of the A2 characteristic each row's constant is measured against
BATTERY_A2_POWERS = {
    "a": 2.0,
    "b": 2.0,
    "c": 2.0,
    "d": 1.0,
    "e": 1.0,
    "f": 0.0,
    "g": 1.0,
    "h": 1.0,
    "i": 2.0,
}


@dataclass(frozen=True)
class BatteryRow:
    label: str
    c_emp: float
    attaining: DyadicIndex
    normalizer_value: float


@dataclass(frozen=True)
class InequalityReport:
    rows: tuple[BatteryRow, ...]

    def __getitem__(self, label: str) -> BatteryRow:
        for row in self.rows:
            if row.label == label:
                return row
        raise KeyError(label)

    def format(self) -> str:
        lines = ["row_label  C_emp  attaining_interval(level,pos)  normalizer_value"]
        for row in self.rows:
            lines.append(
                f"{row.label}  {row.c_emp:.17g}  "
                f"({row.attaining.level},{row.attaining.position})  "
                f"{row.normalizer_value:.17g}"
            )
        return "\n".join(lines)


def _index_from_offset(offset: int) -> DyadicIndex:
    level = int(offset + 1).bit_length() - 1
    return DyadicIndex(level, offset - ((1 << level) - 1))


def _shift_to_left_child(grid: Grid, haar_values: np.ndarray) -> np.ndarray:
    """q_K -> value at K_left, zero at the finest level (no grandchildren)."""
    out = np.zeros(grid.haar_size)
    for lev in range(grid.depth - 1):
        out[Grid.level_slice(lev)] = haar_values[Grid.level_slice(lev + 1)][0::2]
    return out


def inequality_battery(w: Weight) -> InequalityReport:
    """Empirical constants for the nine weighted Carleson-sum inequalities.

    Each row reports max over all outer dyadic intervals of
    (sum over Haar-bearing inner J inside I of q_J) / normalizer(I),
    together with the attaining interval.  Inner sums use non-strict
    containment; rows pairing K with K_left restrict K to levels with
    grandchildren on the grid.
    """
    grid = w.grid
    inv_hat = w.w_inv.symbol.coeff
    inv_half_hat = w.w_inv_half.symbol.coeff
    w_hat = w.w.symbol.coeff
    avg_w = w.w.averages
    avg_inv = w.w_inv.averages
    avg_half = w.w_half.averages

    lengths = 1.0 / grid.tree_inv_lengths
    mass_w = avg_w.tree * lengths  # w(I)
    mass_inv = avg_inv.tree * lengths  # (1/w)(I)

    hat_w_left = _shift_to_left_child(grid, w_hat)
    cross = np.abs(inv_hat * hat_w_left)

    quantities = {
        "a": inv_half_hat**2 * avg_w.haar_part,
        "b": inv_half_hat**2 * avg_half.haar_part**2,
        "c": inv_half_hat**2 * _parent_averages(grid, avg_w.haar_part),
        "d": inv_hat**2 / avg_inv.haar_part**2,
        "e": inv_hat**2 / avg_inv.haar_part,
        "f": inv_hat**2 / avg_inv.haar_part**3,
        "g": cross,
        "h": cross / avg_inv.haar_part,
        "i": inv_half_hat**2 * avg_w.haar_part**2,
    }
    normalizers = {
        "a": lengths,
        "b": lengths,
        "c": lengths,
        "d": lengths,
        "e": mass_inv,
        "f": mass_w,
        "g": lengths,
        "h": mass_w,
        "i": mass_w,
    }

    rows = []
    for label in BATTERY_ROW_LABELS:
        ratios = subtree_sums(grid, quantities[label]) / normalizers[label]
        best = int(np.argmax(ratios))
        rows.append(
            BatteryRow(
                label=label,
                c_emp=float(ratios[best]),
                attaining=_index_from_offset(best),
                normalizer_value=float(normalizers[label][best]),
            )
        )
    return InequalityReport(tuple(rows))


# --------------------------------------------------------------------------
# disjoint-support block of the shifted averaging kernel


class _HaarMatrixOperator(DyadicOperator):
    """Operator given by a dense matrix acting on Haar coefficients."""

    label = "disjoint_block"
    annihilates_constants = True

    def __init__(self, grid: Grid, matrix: np.ndarray):
        super().__init__(grid)
        self.matrix = matrix

    def apply(self, f: LeafFunction) -> LeafFunction:
        return synthesize(HaarSymbol(self.grid, self.matrix @ f.symbol.coeff, 0.0))

    def adjoint_apply(self, f: LeafFunction) -> LeafFunction:
        return synthesize(HaarSymbol(self.grid, self.matrix.T @ f.symbol.coeff, 0.0))


def _haar_index_arrays(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    levels = np.concatenate(
        [np.full(1 << lev, lev, dtype=np.int64) for lev in range(grid.depth)]
    )
    positions = np.concatenate(
        [np.arange(1 << lev, dtype=np.int64) for lev in range(grid.depth)]
    )
    return levels, positions


def _disjoint_mask(grid: Grid) -> np.ndarray:
    """mask[i, j] true when Haar intervals i and j are disjoint."""
    lev, pos = _haar_index_arrays(grid)
    li, lj = lev[:, None], lev[None, :]
    pi, pj = pos[:, None], pos[None, :]
    i_contains_j = (lj >= li) & ((pj >> np.maximum(lj - li, 0)) == pi)
    j_contains_i = (li >= lj) & ((pi >> np.maximum(li - lj, 0)) == pj)
    return ~(i_contains_j | j_contains_i)


def disjoint_block_matrix(w: Weight) -> np.ndarray:
    """Matrix A[L, J] = what(L) <S h_J^1, h_L^1> winvhat(J) over disjoint
    Haar pairs (half shift), acting on Haar coefficient vectors."""
    grid = w.grid
    n_leaves = grid.leaf_count
    shift = haar_shift("half", grid)

    # kernel(J, L) for all Haar pairs in one batch of tree sweeps
    avg_atoms = np.zeros((n_leaves, grid.haar_size))
    lev, pos = _haar_index_arrays(grid)
    for j in range(grid.haar_size):
        width = n_leaves >> lev[j]
        avg_atoms[pos[j] * width : (pos[j] + 1) * width, j] = 2.0 ** lev[j]
    shifted = np.column_stack(
        [
            shift.apply(LeafFunction(grid, avg_atoms[:, j])).values
            for j in range(grid.haar_size)
        ]
    )
    kernel = (avg_atoms.T @ shifted) / n_leaves  # kernel[L, J] = <S h_J^1, h_L^1>

    hat_half = w.w_half.symbol.coeff
    hat_inv_half = w.w_inv_half.symbol.coeff
    return np.where(
        _disjoint_mask(grid), hat_half[:, None] * kernel * hat_inv_half[None, :], 0.0
    )


def disjoint_block_norm(w: Weight, tol: float = 1e-9) -> float:
    """Operator norm of the disjoint-support block; dense materialization
    only (no fast apply exists for this kernel), capped at depth 10."""
    if w.grid.depth > 10:
        raise ValueError("disjoint block norm capped at depth 10")
    if tol <= 0:
        raise ValueError("tol must be positive")
    op = _HaarMatrixOperator(w.grid, disjoint_block_matrix(w))
    result = operator_norm(op, tol=tol)
    if not result.converged:
        raise ConvergenceError(
            "disjoint block norm did not converge", result.value, result.residual
        )
    return result.value

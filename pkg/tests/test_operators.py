"""Operators: paraproducts, multipliers, shifts, the weighted resolution,
easy-term closed forms, and the shifted averaging kernel.

Dense matrices materialized from the matrix-free applies serve as the
oracle throughout.
"""

import math

import numpy as np
import pytest

from haarshift import (
    DyadicIndex,
    Grid,
    HaarSymbol,
    LeafFunction,
    Paraproduct,
    Q_LABELS,
    SHIFT_KINDS,
    WeightSpec,
    averaging_function,
    composed_identity_forms,
    conjugated_shift,
    dense_norm,
    haar_function,
    haar_shift,
    make_weight,
    materialize,
    multiplier,
    multiplier_pieces,
    nested_kernel_value,
    resolution_pieces,
    s_coefficient,
    shift_kernel,
    synthesize,
)


def _rand(grid, rng):
    return LeafFunction(grid, rng.uniform(-1.0, 1.0, grid.leaf_count))


def _cascade(grid, eps=0.4, seed=0):
    return make_weight(WeightSpec("cascade", eps=eps, seed=seed), grid)


# -- paraproducts -------------------------------------------------------------


def test_p00_flat_symbol_projects_out_mean():
    grid = Grid(5)
    rng = np.random.default_rng(0)
    op = Paraproduct(grid, np.ones(grid.haar_size), "00")
    f = _rand(grid, rng)
    expected = f.values - f.mean()
    assert np.abs(op.apply(f).values - expected).max() < 1e-12
    const = LeafFunction.constant(grid, 3.0)
    assert np.abs(op.apply(const).values).max() < 1e-12


def test_p01_on_constant_recovers_mean_free_symbol_function():
    grid = Grid(6)
    rng = np.random.default_rng(1)
    b = _rand(grid, rng)
    op = Paraproduct(grid, b.symbol.coeff, "01")
    out = op.apply(LeafFunction.constant(grid, 1.0))
    assert np.abs(out.values - (b.values - b.mean())).max() < 1e-12


def test_paraproducts_match_dense_matrices():
    grid = Grid(6)
    rng = np.random.default_rng(2)
    symbol = rng.normal(size=grid.haar_size)
    for kind in ("01", "10", "00", "11"):
        op = Paraproduct(grid, symbol, kind)
        mat = materialize(op)
        for _ in range(5):
            f = _rand(grid, rng)
            assert np.abs(op.apply(f).values - mat @ f.values).max() < 1e-12
            assert np.abs(op.adjoint_apply(f).values - mat.T @ f.values).max() < 1e-12


def test_paraproduct_dense_matrix_brute_force():
    # entry-by-entry against the defining sum over Haar-bearing intervals
    grid = Grid(4)
    rng = np.random.default_rng(3)
    symbol = rng.normal(size=grid.haar_size)
    f = _rand(grid, rng)
    atoms = {
        "haar": {i: haar_function(grid, i) for i in grid.haar_indices()},
        "avg": {i: averaging_function(grid, i) for i in grid.haar_indices()},
    }
    kinds = {"01": ("haar", "avg"), "10": ("avg", "haar"),
             "00": ("haar", "haar"), "11": ("avg", "avg")}
    for kind, (out_k, in_k) in kinds.items():
        expected = np.zeros(grid.leaf_count)
        for i in grid.haar_indices():
            pairing = f.inner(atoms[in_k][i])
            expected += symbol[i.flat_offset] * pairing * atoms[out_k][i].values
        got = Paraproduct(grid, symbol, kind).apply(f)
        assert np.abs(got.values - expected).max() < 1e-12


def test_paraproduct_factory_accepts_symbol_objects():
    grid = Grid(5)
    rng = np.random.default_rng(21)
    from haarshift import paraproduct

    b = _rand(grid, rng)
    f = _rand(grid, rng)
    via_symbol = paraproduct(grid, b.symbol, "01").apply(f)
    via_array = paraproduct(grid, b.symbol.coeff, "01").apply(f)
    assert np.array_equal(via_symbol.values, via_array.values)
    via_avg = paraproduct(grid, b.averages, "00").apply(f)
    via_arr2 = paraproduct(grid, b.averages.haar_part, "00").apply(f)
    assert np.array_equal(via_avg.values, via_arr2.values)


def test_multiplier_identity_and_norm():
    grid = Grid(6)
    rng = np.random.default_rng(4)
    one = multiplier(LeafFunction.constant(grid, 1.0))
    f = _rand(grid, rng)
    assert np.array_equal(one.apply(f).values, f.values)
    b = _rand(grid, rng)
    assert dense_norm(multiplier(b)) == pytest.approx(
        np.abs(b.values).max(), rel=1e-9
    )


def test_multiplier_decomposition_with_mean_term():
    grid = Grid(8)
    rng = np.random.default_rng(5)
    b = _rand(grid, rng)
    pieces = multiplier_pieces(b)
    direct = multiplier(b)
    for _ in range(10):
        f = _rand(grid, rng)
        split = sum(p.apply(f).values for p in pieces.values())
        assert np.abs(direct.apply(f).values - split).max() < 1e-12


# -- shifts -------------------------------------------------------------------


def test_half_shift_moves_root_haar_to_left_child():
    grid = Grid(4)
    out = haar_shift("half", grid).apply(haar_function(grid, DyadicIndex(0, 0)))
    expected = haar_function(grid, DyadicIndex(1, 0))
    assert np.abs(out.values - expected.values).max() < 1e-13


def test_half_shift_truncates_finest_level():
    grid = Grid(4)
    out = haar_shift("half", grid).apply(haar_function(grid, DyadicIndex(3, 5)))
    assert np.abs(out.values).max() == 0.0


def test_full_shift_action():
    grid = Grid(4)
    k = DyadicIndex(1, 1)
    out = haar_shift("full", grid).apply(haar_function(grid, k))
    expected = (
        haar_function(grid, k.left).values - haar_function(grid, k.right).values
    )
    assert np.abs(out.values - expected).max() < 1e-13


def test_identity_shift_is_mean_zero_projection():
    grid = Grid(5)
    rng = np.random.default_rng(6)
    f = _rand(grid, rng)
    out = haar_shift("identity", grid).apply(f)
    assert np.abs(out.values - (f.values - f.mean())).max() < 1e-12


def test_shifts_annihilate_constants():
    grid = Grid(5)
    c = LeafFunction.constant(grid, 2.0)
    for kind in SHIFT_KINDS:
        assert np.abs(haar_shift(kind, grid).apply(c).values).max() < 1e-13


def test_half_shift_norm_at_most_one():
    assert dense_norm(haar_shift("half", Grid(8))) <= 1.0 + 1e-9


def test_half_shift_isometry_below_truncation():
    # on the span of Haar levels 0..n-2 the half shift permutes the basis
    grid = Grid(6)
    rng = np.random.default_rng(7)
    shift = haar_shift("half", grid)
    for _ in range(20):
        coeff = rng.normal(size=grid.haar_size)
        coeff[Grid.level_slice(grid.depth - 1)] = 0.0
        f = synthesize(HaarSymbol(grid, coeff, 0.0))
        assert shift.apply(f).norm() == pytest.approx(f.norm(), abs=1e-10)


def test_shift_adjoints_against_dense():
    grid = Grid(5)
    rng = np.random.default_rng(8)
    for kind in SHIFT_KINDS:
        op = haar_shift(kind, grid)
        mat = materialize(op)
        for _ in range(5):
            f = _rand(grid, rng)
            assert np.abs(op.adjoint_apply(f).values - mat.T @ f.values).max() < 1e-12


# -- weighted resolution -------------------------------------------------------


def test_q_operator_matches_resolution_piece():
    grid = Grid(6)
    rng = np.random.default_rng(20)
    w = _cascade(grid, 0.45, 12)
    from haarshift import q_operator

    pieces = resolution_pieces(w, "half")
    for left in ("01", "10", "00"):
        for right in ("01", "10", "00"):
            direct = q_operator(w, "half", left, right)
            assert direct.label == f"Q_{left}_{right}"
            via_pieces = pieces[direct.label]
            for _ in range(3):
                f = _rand(grid, rng)
                assert (
                    np.abs(direct.apply(f).values - via_pieces.apply(f).values).max()
                    < 1e-13
                )
    with pytest.raises(ValueError):
        q_operator(w, "half", "11", "00")


def test_flat_weight_resolution():
    grid = Grid(6)
    rng = np.random.default_rng(9)
    w = make_weight(WeightSpec("constant", c=1.0), grid)
    pieces = resolution_pieces(w, "half")
    f = _rand(grid, rng)
    # hatted symbols vanish, so only Q_00_00 survives and acts as the shift
    for label in Q_LABELS:
        out = pieces[label].apply(f)
        if label == "Q_00_00":
            expected = haar_shift("half", grid).apply(f)
            assert np.abs(out.values - expected.values).max() < 1e-12
        else:
            assert np.abs(out.values).max() < 1e-13


def test_sixteen_piece_resolution_identity_all_kinds():
    grid = Grid(8)
    rng = np.random.default_rng(10)
    w = _cascade(grid, 0.4, 3)
    for kind in SHIFT_KINDS:
        conj = conjugated_shift(w, kind)
        pieces = resolution_pieces(w, kind)
        for _ in range(20):
            f = _rand(grid, rng)
            split = sum(op.apply(f).values for op in pieces.values())
            assert np.abs(conj.apply(f).values - split).max() < 1e-10


def test_adjoint_consistency_all_operators():
    grid = Grid(8)
    rng = np.random.default_rng(11)
    w = _cascade(grid, 0.4, 4)
    ops = [
        Paraproduct(grid, rng.normal(size=grid.haar_size), k)
        for k in ("01", "10", "00", "11")
    ]
    ops += [haar_shift(k, grid) for k in SHIFT_KINDS]
    pieces = resolution_pieces(w, "half")
    ops += list(pieces.values())
    ops.append(conjugated_shift(w, "half"))
    ops += list(composed_identity_forms(w).values())
    for op in ops:
        for _ in range(20):
            f, g = _rand(grid, rng), _rand(grid, rng)
            assert abs(op.apply(f).inner(g) - f.inner(op.adjoint_apply(g))) < 1e-11


def test_matrix_free_equals_dense_for_resolution():
    grid = Grid(6)
    rng = np.random.default_rng(12)
    w = _cascade(grid, 0.45, 5)
    pieces = resolution_pieces(w, "half")
    pieces["M_conj"] = conjugated_shift(w, "half")
    for op in pieces.values():
        mat = materialize(op)
        for _ in range(3):
            f = _rand(grid, rng)
            assert np.abs(op.apply(f).values - mat @ f.values).max() < 1e-12


def test_mean_cross_pieces_vanish_for_mean_annihilating_shifts():
    # the shift kills constants and outputs mean-zero functions, so every
    # mean-involving cross piece is the zero operator
    grid = Grid(6)
    rng = np.random.default_rng(13)
    w = _cascade(grid, 0.4, 6)
    for kind in SHIFT_KINDS:
        op = resolution_pieces(w, kind)["mean_cross"]
        for _ in range(5):
            f = _rand(grid, rng)
            assert np.abs(op.apply(f).values).max() < 1e-12


# -- easy-term closed forms ----------------------------------------------------


def test_closed_forms_match_compositions():
    grid = Grid(6)
    rng = np.random.default_rng(14)
    w = _cascade(grid, 0.45, 7)
    pieces = resolution_pieces(w, "half")
    forms = composed_identity_forms(w)
    for label, form in forms.items():
        composed = pieces[label]
        for _ in range(50):
            f = _rand(grid, rng)
            assert np.abs(form.apply(f).values - composed.apply(f).values).max() < 1e-11
            assert (
                np.abs(
                    form.adjoint_apply(f).values - composed.adjoint_apply(f).values
                ).max()
                < 1e-11
            )


def test_flat_weight_easy4_form_is_half_shift_below_truncation():
    grid = Grid(5)
    rng = np.random.default_rng(15)
    w = make_weight(WeightSpec("constant", c=1.0), grid)
    form = composed_identity_forms(w)["Q_00_00"]
    shift = haar_shift("half", grid)
    for _ in range(10):
        f = _rand(grid, rng)
        assert np.abs(form.apply(f).values - shift.apply(f).values).max() < 1e-12


def test_easy4_norm_is_sup_of_coefficients():
    # the form maps the orthonormal family h_I to the disjoint family
    # h_{I-}, so the norm is the largest coefficient magnitude; the outer
    # factor's average is evaluated at the shifted interval I-
    grid = Grid(6)
    w = _cascade(grid, 0.5, 8)
    avg_half = w.w_half.averages
    avg_inv = w.w_inv_half.averages
    best = 0.0
    for idx in grid.haar_indices():
        if idx.level <= grid.depth - 2:
            best = max(best, abs(avg_half[idx.left] * avg_inv[idx]))
    got = dense_norm(composed_identity_forms(w)["Q_00_00"])
    assert got == pytest.approx(best, rel=1e-9)


def test_easy1_rank_sum_oracle():
    # build sum_I what(I-) winvhat(I) h^1_{I-} x h^1_I directly
    grid = Grid(6)
    rng = np.random.default_rng(16)
    w = _cascade(grid, 0.4, 9)
    hat_half = w.w_half.symbol
    hat_inv = w.w_inv_half.symbol
    f = _rand(grid, rng)
    expected = np.zeros(grid.leaf_count)
    for idx in grid.haar_indices():
        if idx.level > grid.depth - 2:
            continue
        coeff = hat_half[idx.left] * hat_inv[idx]
        expected += (
            coeff * f.averages[idx] * averaging_function(grid, idx.left).values
        )
    got = resolution_pieces(w, "half")["Q_10_01"].apply(f)
    assert np.abs(got.values - expected).max() < 1e-11


# -- shift kernel ---------------------------------------------------------------


def test_kernel_brother_pairs_vanish():
    grid = Grid(5)
    j, l = DyadicIndex(1, 0), DyadicIndex(1, 1)
    assert shift_kernel(grid, j, l, "half") == pytest.approx(0.0, abs=1e-14)
    assert shift_kernel(grid, l, j, "half") == pytest.approx(0.0, abs=1e-14)


def test_kernel_disjoint_example_sqrt2():
    # J = [1/2, 3/4), L = [1/4, 1/2): h_J^1 = 1 - h_root + sqrt(2) h_{[1/2,1)}
    for depth in (3, 4, 6):
        grid = Grid(depth)
        value = shift_kernel(grid, DyadicIndex(2, 2), DyadicIndex(2, 1), "half")
        assert value == pytest.approx(math.sqrt(2.0), abs=1e-12)


def test_kernel_nested_pairs_match_closed_form():
    for depth in (4, 5, 6):
        grid = Grid(depth)
        for j in grid.all_indices():
            for l in grid.all_indices():
                if j.strictly_contains(l):
                    got = shift_kernel(grid, j, l, "half")
                    expected = nested_kernel_value(grid, j, l)
                    assert abs(got - expected) < 1e-12


def test_kernel_constant_in_l_for_right_children_and_root():
    # away from the left-child boundary term the kernel on nested pairs
    # depends on J alone and equals the signed ancestor sum
    grid = Grid(5)
    for j in grid.all_indices():
        if j.is_left_child:
            continue
        for l in grid.all_indices():
            if j.strictly_contains(l):
                assert shift_kernel(grid, j, l, "half") == pytest.approx(
                    s_coefficient(grid, j), abs=1e-12
                )


def test_s_coefficient_examples():
    grid = Grid(5)
    # level-1 intervals: no grid ancestor has a left child strictly above them
    assert s_coefficient(grid, DyadicIndex(1, 0)) == 0.0
    assert s_coefficient(grid, DyadicIndex(1, 1)) == 0.0
    # J = [0, 1/4): single ancestor term from K = [0,1)
    assert s_coefficient(grid, DyadicIndex(2, 0)) == pytest.approx(
        math.sqrt(2.0), abs=1e-15
    )


def test_s_coefficient_bound():
    grid = Grid(10)
    for j in grid.all_indices():
        assert abs(s_coefficient(grid, j)) <= math.sqrt(2.0) / j.length + 1e-12

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circspline.circulant import (
    CirculantGraph,
    DegenerateParameterWarning,
    ExponentParam,
    SymLaurentPoly,
    apply_circulant,
    e_laplacian_row,
    exp_poly_signal,
    laplacian_row,
    make_circulant,
    poly_signal,
    root_multiplicity,
)


@st.composite
def circulant_graphs(draw, max_n=24, connected=False):
    n = draw(st.integers(4, max_n))
    gens = draw(st.sets(st.integers(1, n // 2), min_size=1, max_size=min(4, n // 2)))
    if connected:
        gens.add(1)
    weights = draw(st.lists(st.floats(0.1, 3.0), min_size=len(gens), max_size=len(gens)))
    return make_circulant(n, list(zip(sorted(gens), weights)))


# -------------------------------------------------------------- construction


def test_cycle_degree_and_connectivity():
    g = make_circulant(8, [(1, 1)])
    assert g.degree == 2
    assert g.connected
    assert g.bipartite


def test_two_connected_ring():
    g = make_circulant(16, [(1, 1), (2, 1)])
    assert g.degree == 4
    assert not g.bipartite


def test_disconnected_by_gcd():
    assert not make_circulant(6, [(2, 1)]).connected


def test_half_generator_counted_once():
    g = make_circulant(8, [(1, 1.0), (4, 2.0)])
    assert g.degree == 4.0
    a = g.adjacency()
    np.testing.assert_array_equal(a.sum(axis=1), np.full(8, 4.0))
    assert a[0, 4] == 2.0


@pytest.mark.parametrize(
    "n,gens",
    [(8, [(1, 1), (1, 2)]), (8, [(0, 1)]), (8, [(5, 1)]), (8, [(1, 0.0)]), (8, [(2, -1.0)]), (1, [(1, 1)])],
)
def test_invalid_graphs(n, gens):
    with pytest.raises(ValueError):
        make_circulant(n, gens)


def test_bare_generators_get_unit_weight():
    assert make_circulant(10, [1, 3]).gens == ((1, 1.0), (3, 1.0))


def test_graph_dict_round_trip():
    g = make_circulant(16, [(1, 1.0), (2, 0.5)])
    assert CirculantGraph.from_dict(g.to_dict()) == g


# ------------------------------------------------------------ Laurent algebra


def test_laplacian_rows():
    np.testing.assert_array_equal(laplacian_row(make_circulant(8, [1])).coeffs, [2, -1])
    np.testing.assert_array_equal(laplacian_row(make_circulant(16, [1, 2])).coeffs, [4, -1, -1])


def test_cycle_laplacian_eigenvalues_n4():
    # dense 4x4 cycle Laplacian has eigenvalues {0, 2, 2, 4}
    lam = SymLaurentPoly([2, -1]).eigenvalues(4)
    np.testing.assert_allclose(lam, [0, 2, 4, 2], atol=1e-15)


def test_product_is_matrix_product():
    a = SymLaurentPoly([0.5, 0.25])
    b = SymLaurentPoly([1.0, -0.3, 0.2])
    np.testing.assert_allclose((a * b).dense(12), a.dense(12) @ b.dense(12), atol=1e-15)


def test_square_of_cycle_lowpass():
    np.testing.assert_allclose((SymLaurentPoly([0.5, 0.25]) ** 2).coeffs, [0.375, 0.25, 0.0625])


def test_first_row_wraps_long_support():
    row = SymLaurentPoly([1.0, 2.0, 3.0]).first_row(3)
    # z^2 and z^-2 alias onto positions 2 and 1 of a 3-cycle
    np.testing.assert_allclose(row, [1.0, 5.0, 5.0])


def test_modulated_flips_odd_coefficients():
    np.testing.assert_array_equal(SymLaurentPoly([2, -1]).modulated().coeffs, [2, 1])


@given(circulant_graphs())
@settings(max_examples=60, deadline=None)
def test_spectrum_matches_dense_eigenvalues(g):
    lam = np.sort(laplacian_row(g).eigenvalues(g.n))
    dense = np.linalg.eigvalsh(g.laplacian())
    np.testing.assert_allclose(lam, dense, atol=1e-9)


@given(circulant_graphs())
@settings(max_examples=60, deadline=None)
def test_laplacian_kills_constants(g):
    y = apply_circulant(laplacian_row(g), np.ones(g.n))
    assert np.max(np.abs(y)) <= 1e-12 * g.degree


@given(circulant_graphs(max_n=40))
@settings(max_examples=60, deadline=None)
def test_border_effect_for_linear_signals(g):
    m = g.bandwidth
    x = poly_signal(g.n, [(0, [0.3, 1.0 / g.n])])
    y = apply_circulant(laplacian_row(g), x)
    interior = np.arange(m, g.n - m)
    assert np.max(np.abs(y[interior]), initial=0) <= 1e-12 * g.degree


# ------------------------------------------------------------ e-Laplacian


def test_e_laplacian_reduces_to_laplacian():
    g = make_circulant(8, [1])
    assert e_laplacian_row(g, ExponentParam(0.0)).allclose(laplacian_row(g))


def test_e_laplacian_cycle():
    g = make_circulant(16, [1])
    a = 2 * np.pi / 16
    np.testing.assert_allclose(e_laplacian_row(g, ExponentParam(a)).coeffs, [2 * math.cos(a), -1])


def test_e_laplacian_degenerate_is_flagged():
    with pytest.warns(DegenerateParameterWarning):
        row = e_laplacian_row(make_circulant(8, [1]), ExponentParam(math.pi / 2))
    assert row.coeffs[0] == 0


def test_hyperbolic_e_degree_dominates_degree():
    g = make_circulant(16, [(1, 1.0), (3, 0.5)])
    assert g.e_degree(ExponentParam(0.4, "hyperbolic")) >= g.degree


@pytest.mark.parametrize("gens", [[1], [1, 2], [1, 3], [2, 5]])
@pytest.mark.parametrize("j", [1, 3])
def test_on_grid_exponential_is_annihilated_everywhere(gens, j):
    n = 16
    g = make_circulant(n, gens)
    p = ExponentParam(2 * np.pi * j / n)
    y = apply_circulant(e_laplacian_row(g, p), exp_poly_signal(n, p))
    assert np.max(np.abs(y)) <= 1e-12


def test_off_grid_exponential_annihilated_on_interior_only():
    n, g = 32, make_circulant(32, [1, 2])
    p = ExponentParam(0.3)
    y = apply_circulant(e_laplacian_row(g, p), exp_poly_signal(n, p))
    assert np.max(np.abs(y[2 : n - 2])) <= 1e-12
    assert np.abs(y[0]) > 1e-3


# ------------------------------------------------------------ apply_circulant


def test_apply_ramp_interior_zeros():
    y = apply_circulant(SymLaurentPoly([2, -1]), np.arange(8.0))
    assert np.max(np.abs(y[1:7])) <= 1e-12
    # dense oracle: row 0 gives 2*0 - 1 - 7, row 7 gives 14 - 6 - 0
    np.testing.assert_allclose(y[[0, 7]], [-8, 8], atol=1e-12)


def test_apply_identity_row():
    x = np.random.default_rng(0).standard_normal(10)
    np.testing.assert_allclose(apply_circulant(SymLaurentPoly([1.0]), x), x, atol=1e-15)


def test_apply_batched_columns():
    rng = np.random.default_rng(1)
    row = SymLaurentPoly([1.0, 0.2, -0.4])
    x = rng.standard_normal((12, 3))
    np.testing.assert_allclose(apply_circulant(row, x), row.dense(12) @ x, atol=1e-13)


@given(circulant_graphs(max_n=64), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_apply_matches_dense(g, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n)
    row = laplacian_row(g) ** 2
    dense = row.dense(g.n) @ x
    assert np.linalg.norm(apply_circulant(row, x) - dense) <= 1e-12 * np.linalg.norm(dense) + 1e-13


# ------------------------------------------------------------ signal builders


def test_poly_signal_examples():
    np.testing.assert_array_equal(poly_signal(8, [(0, [0, 1])]).real, np.arange(8))
    np.testing.assert_array_equal(poly_signal(8, [(0, [2.5])]).real, np.full(8, 2.5))
    np.testing.assert_array_equal(poly_signal(8, [(0, [0, 1]), (4, [10])]).real, [0, 1, 2, 3, 10, 10, 10, 10])


@pytest.mark.parametrize("pieces", [[(1, [1])], [(0, [1]), (0, [2])], [(0, [1]), (5, [1]), (3, [1])], [(0, [1]), (8, [1])]])
def test_poly_signal_bad_breakpoints(pieces):
    with pytest.raises(ValueError):
        poly_signal(8, pieces)


def test_exp_poly_signal_examples():
    n = 16
    col = np.exp(2j * np.pi * np.arange(n) / n)
    np.testing.assert_allclose(exp_poly_signal(n, ExponentParam(2 * np.pi / n)), col)
    np.testing.assert_allclose(exp_poly_signal(n, ExponentParam(0.0), [0, 1]), np.arange(n))
    j = np.arange(8)
    np.testing.assert_allclose(exp_poly_signal(8, ExponentParam(np.pi / 4), [0, 1]), j * np.exp(1j * np.pi * j / 4))


def test_hyperbolic_exp_signal():
    np.testing.assert_allclose(exp_poly_signal(5, ExponentParam(0.5, "hyperbolic")), np.exp(0.5 * np.arange(5)))


def test_piecewise_interior_annihilation():
    # away from breakpoints each linear piece is killed; near them it is not
    n, g = 32, make_circulant(32, [1, 2])
    x = poly_signal(n, [(0, [0, 1]), (16, [40, -1])])
    y = apply_circulant(laplacian_row(g), x)
    m = g.bandwidth
    interior = [i for i in range(m, n - m) if i + m < 16 or i - m >= 16]
    assert np.max(np.abs(y[interior])) <= 1e-11
    assert np.max(np.abs(y[16 - m : 16 + m])) > 1


# ------------------------------------------------------------ root multiplicity


def test_multiplicity_examples():
    assert root_multiplicity(SymLaurentPoly([2, 1]), -1) == 2
    assert root_multiplicity(SymLaurentPoly([4, -1, -1]), -1) == 0
    assert root_multiplicity(laplacian_row(make_circulant(16, [1, 2])), 1) == 2


def test_multiplicity_of_ordinary_polynomial():
    # (z - 1)^3 (z + 2), ascending coefficients
    p = np.polynomial.polynomial.polyfromroots([1, 1, 1, -2])
    assert root_multiplicity(p, 1) == 3
    assert root_multiplicity(p, -2) == 1
    assert root_multiplicity(p, 0.5) == 0


@given(circulant_graphs(max_n=40), st.integers(1, 4))
@settings(max_examples=50, deadline=None)
def test_laplacian_power_multiplicity(g, k):
    row = laplacian_row(g)
    assert root_multiplicity(row, 1) >= 2
    assert root_multiplicity(row**k, 1) == 2 * k

import numpy as np
import pytest

from oracles import CAT2_LOG, CAT_LOG, CUBIC_C, CUBIC_C_PLUS_I
from zkdyn.action import sample_grid, torus_distance, wrap
from zkdyn.errors import (
    DimensionMismatch,
    EpsilonTooLarge,
    NotCommutingExact,
    NotIntegerMatrix,
    NotSimultaneouslyDiagonalizable,
    NotUnimodular,
)
from zkdyn.spectrum import block_order_key
from zkdyn.toral import (
    MODELS,
    ConjugacyParams,
    _h,
    _h_inv,
    analytic_spectrum,
    conjugate_action,
    from_matrices,
    integer_inverse,
    lattice_matrix,
    matrix_entropy,
)

A = [[2, 1], [1, 1]]


def test_shipped_models_are_valid():
    for mats in MODELS.values():
        action = from_matrices(mats)
        assert action.is_linear


def test_validation_errors():
    with pytest.raises(NotUnimodular):
        from_matrices([[[2, 0], [0, 1]]])
    with pytest.raises(NotIntegerMatrix):
        from_matrices([[[2.5, 1], [1, 1]]])
    with pytest.raises(NotCommutingExact):
        from_matrices([A, [[1, 1], [0, 1]]])
    with pytest.raises(DimensionMismatch):
        from_matrices([A, np.eye(3, dtype=int)])


def test_integer_inverse():
    np.testing.assert_array_equal(integer_inverse(A), [[1, -1], [-1, 2]])


def test_analytic_spectrum_cat_pair():
    spec = analytic_spectrum(MODELS["cat_pair"])
    assert spec.exact
    np.testing.assert_allclose(spec.rates, [[-CAT_LOG, -CAT2_LOG], [CAT_LOG, CAT2_LOG]], rtol=1e-12)


def test_analytic_spectrum_cubic():
    spec = analytic_spectrum(MODELS["cubic_pair"])
    expected = sorted(zip(CUBIC_C, CUBIC_C_PLUS_I), key=block_order_key)
    np.testing.assert_allclose(spec.rates, expected, rtol=1e-10)


def test_conjugate_eigenvalues_merge():
    # rotation by 90 degrees: eigenvalues +-i share the rate 0
    spec = analytic_spectrum([[[0, -1], [1, 0]]])
    assert list(spec.multiplicities) == [2]
    assert spec.rates[0, 0] == pytest.approx(0.0, abs=1e-12)


def test_defective_family_refused():
    with pytest.raises(NotSimultaneouslyDiagonalizable):
        analytic_spectrum([[[1, 1], [0, 1]]])


def test_matrix_entropy_and_lattice_matrix():
    assert matrix_entropy(A) == pytest.approx(CAT_LOG, rel=1e-14)
    a3 = lattice_matrix(MODELS["cat_pair"], (1, 1))
    np.testing.assert_array_equal(a3.astype(np.int64), np.linalg.matrix_power(np.array(A), 3))
    inv = lattice_matrix(MODELS["cat_pair"], (0, -1))
    np.testing.assert_array_equal(inv.astype(np.int64), [[2, -3], [-3, 5]])
    big = lattice_matrix(MODELS["cat_pair"], (30, 30))  # entries beyond int64
    assert matrix_entropy(big) == pytest.approx(90 * CAT_LOG, rel=1e-12)
    with pytest.raises(NotUnimodular):
        matrix_entropy([[2, 0], [0, 1]])


def test_conjugacy_map_roundtrip():
    eps = np.array([0.3, -0.5])
    x = sample_grid(2)
    np.testing.assert_allclose(_h_inv(_h(x, eps), eps), x, atol=1e-12)


def test_conjugacy_params():
    with pytest.raises(EpsilonTooLarge):
        ConjugacyParams((1.0, 0.0))
    action = from_matrices(MODELS["cat_pair"])
    assert conjugate_action(action, (0.0, 0.0)) is action


def test_conjugated_jacobian_matches_finite_differences():
    action = conjugate_action(from_matrices(MODELS["cat_pair"]), (0.3, 0.3))
    g = action.generators[0]
    y = np.array([0.31, 0.47])
    h = 1e-6
    fd = np.empty((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        diff = g.forward(y + e) - g.forward(y - e)
        fd[:, j] = (diff + 0.5) % 1.0 - 0.5
    np.testing.assert_allclose(g.jacobian(y), fd / (2 * h), rtol=1e-6, atol=1e-6)


def test_conjugated_generators_commute():
    action = conjugate_action(from_matrices(MODELS["cat_pair"]), (0.3, 0.3))
    f, g = action.generators
    pts = sample_grid(2)
    d = torus_distance(wrap(f.forward(wrap(g.forward(pts)))), wrap(g.forward(wrap(f.forward(pts)))))
    assert d.max() <= 1e-9
    assert not action.is_linear

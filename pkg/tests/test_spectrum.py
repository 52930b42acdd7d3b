import numpy as np
import pytest

from oracles import CAT2_LOG, CAT_LOG, CUBIC_C, CUBIC_C_PLUS_I
from zkdyn.action import Generator, make_action
from zkdyn.errors import NumericalBlowup, ValidationError
from zkdyn.spectrum import (
    Block,
    EstimatorConfig,
    LyapunovSpectrum,
    block_order_key,
    generator_spectrum,
    group_exponents,
    qr_exponents,
)
from zkdyn.toral import MODELS, from_matrices

X0 = np.array([0.1234, 0.5678])
CFG = EstimatorConfig(n_steps=20000, burn_in=200)


def test_config_validation():
    with pytest.raises(ValidationError):
        EstimatorConfig(n_steps=10, burn_in=10)
    with pytest.raises(ValidationError):
        EstimatorConfig(reorth_period=0)
    with pytest.raises(ValidationError):
        EstimatorConfig(grouping_epsilon=0.0)
    assert CFG.replace(seed=3).seed == 3


def test_grouping_uses_transitive_closure():
    # 0.0 -- 0.04 -- 0.08 chain into one block at eps = 0.05
    g = group_exponents([[0.0], [0.04], [0.08], [1.0]], 0.05)
    assert [b.multiplicity for b in g.blocks] == [3, 1]
    assert g.blocks[0].rates == pytest.approx((0.04,))


def test_grouping_ambiguity_flag():
    assert not group_exponents([0.0, 1.0], 0.05).ambiguous
    assert group_exponents([0.0, 0.06], 0.05).ambiguous


def test_block_order():
    assert block_order_key((-1.0, 1.0)) < block_order_key((1.0, -1.0))
    assert block_order_key((2.0, -3.0)) < block_order_key((0.0, 0.0))


def test_spectrum_validation():
    with pytest.raises(ValidationError):
        LyapunovSpectrum((Block(1, (0.0,)),), 2)
    with pytest.raises(ValidationError):
        LyapunovSpectrum((Block(1, (0.0,)), Block(1, (0.0, 1.0))), 2)


def test_single_map_exponents():
    action = from_matrices([MODELS["cat_pair"][0]])
    stream = ((0, 1) for _ in iter(int, 1))
    rates = qr_exponents(action, stream, X0, CFG)
    np.testing.assert_allclose(rates, [CAT_LOG, -CAT_LOG], atol=1e-9)


def test_letter_array_stream_and_period():
    action = from_matrices(MODELS["cat_pair"])
    letters = np.tile([[1, -1]], (CFG.n_steps, 1))
    rates = qr_exponents(action, letters, X0, CFG.replace(reorth_period=5))
    np.testing.assert_allclose(rates, [CAT2_LOG, -CAT2_LOG], atol=1e-3)


def test_cat_pair_spectrum():
    spec = generator_spectrum(from_matrices(MODELS["cat_pair"]), X0, CFG)
    np.testing.assert_allclose(spec.rates, [[-CAT_LOG, -CAT2_LOG], [CAT_LOG, CAT2_LOG]], atol=1e-3)
    np.testing.assert_allclose(spec.volume_defect(), 0.0, atol=1e-9)


def test_inverse_pair_needs_fallback_word():
    # A A^-1 = id cannot separate the blocks; the fallback word can
    spec = generator_spectrum(from_matrices(MODELS["cat_inverse_pair"]), X0, CFG)
    np.testing.assert_allclose(spec.rates, [[-CAT_LOG, CAT_LOG], [CAT_LOG, -CAT_LOG]], atol=1e-3)


def test_identity_is_one_block():
    spec = generator_spectrum(from_matrices(MODELS["identity"]), X0, CFG)
    assert spec.to_dict() == {"blocks": [{"d": 2, "rates": [0.0, 0.0]}]}


def test_cubic_pair_against_eigenvalue_oracle():
    spec = generator_spectrum(from_matrices(MODELS["cubic_pair"]), np.array([0.1, 0.4, 0.7]), CFG)
    expected = sorted(zip(CUBIC_C, CUBIC_C_PLUS_I), key=block_order_key)
    assert list(spec.multiplicities) == [1, 1, 1]
    np.testing.assert_allclose(spec.rates, expected, atol=1e-3)


def test_estimates_are_deterministic():
    action = from_matrices(MODELS["cat_pair"])
    assert generator_spectrum(action, X0, CFG) == generator_spectrum(action, X0, CFG)


def test_blowup_is_reported():
    def bad_jac(x):
        x = np.asarray(x)
        return np.full(x.shape[:-1] + (1, 1), np.nan)

    g = Generator(lambda x: x + 0.1, lambda x: x - 0.1, bad_jac, bad_jac)
    action = make_action([g], 1)
    with pytest.raises(NumericalBlowup):
        qr_exponents(action, np.tile([[0, 1]], (100, 1)), [0.0], EstimatorConfig(n_steps=100, burn_in=0))

from dataclasses import replace

import numpy as np
import pytest

from salsa.autograd import Rng, Tensor, gradcheck, no_grad
from salsa.exceptions import ConfigError, ContractError, DimensionError
from salsa.nn import (
    EVAL,
    ForwardContext,
    NormVariant,
    ParameterStore,
    causal_mask,
    init_lstm,
    key_padding_mask,
    lstm_step,
    multi_head_attention,
    positional_encoding,
    scaled_dot_attention,
    transformer_decoder_block,
    transformer_encoder_block,
)
from salsa.nn.layers import init_attention, init_decoder_block, init_encoder_block

TOLERANCE = 1e-4


def test_positional_encoding_values():
    pe = positional_encoding(3, 4).data
    assert pe[1, 0] == pytest.approx(np.sin(1.0), abs=1e-9)
    assert pe[1, 1] == pytest.approx(np.cos(1.0), abs=1e-9)
    assert pe[2, 2] == pytest.approx(np.sin(2.0 / 100.0), abs=1e-12)
    np.testing.assert_array_equal(pe[0], [0.0, 1.0, 0.0, 1.0])
    with pytest.raises(ConfigError):
        positional_encoding(3, 5)


def test_masks():
    np.testing.assert_array_equal(causal_mask(3), [[1, 0, 0], [1, 1, 0], [1, 1, 1]])
    mask = key_padding_mask(np.array([1, 3]), 3)
    assert mask.shape == (2, 1, 1, 3)
    np.testing.assert_array_equal(mask[:, 0, 0], [[1, 0, 0], [1, 1, 1]])


def test_attention_ignores_masked_keys_and_rejects_empty_rows():
    rng = Rng(0)
    q, k, v = (Tensor(rng.normal((2, 3, 4))) for _ in range(3))
    mask = causal_mask(3)
    out = scaled_dot_attention(q, k, v, mask).data
    np.testing.assert_allclose(out[:, 0], v.data[:, 0], atol=1e-12)
    with pytest.raises(ContractError):
        scaled_dot_attention(q, k, v, np.zeros((3, 3), dtype=bool))
    with pytest.raises(DimensionError):
        scaled_dot_attention(q, Tensor(np.ones((2, 3, 5))), v)


def test_multi_head_attention_shapes(toy_arch):
    store = ParameterStore()
    init_attention(store, "attn", toy_arch, Rng(0))
    x = Tensor(Rng(1).normal((2, 5, toy_arch.d_model)))
    assert multi_head_attention(x, x, store, "attn", toy_arch, EVAL).shape == (2, 5, 16)
    single = multi_head_attention(x[0], x[0], store, "attn", toy_arch, EVAL)
    np.testing.assert_allclose(single.data, multi_head_attention(x, x, store, "attn", toy_arch, EVAL).data[0], atol=1e-12)
    with pytest.raises(DimensionError):
        multi_head_attention(Tensor(np.ones((1, 2, 8))), Tensor(np.ones((1, 2, 8))), store, "attn", toy_arch, EVAL)


@pytest.fixture
def encoder_store(toy_arch):
    store = ParameterStore()
    init_encoder_block(store, "enc", toy_arch, Rng(2), NormVariant.LAYER_NORM)
    init_encoder_block(store, "gan", toy_arch, Rng(3), NormVariant.SPECTRAL_ONLY)
    init_decoder_block(store, "dec", toy_arch, Rng(4))
    return store


def test_spectral_only_block_has_no_layer_norm(encoder_store):
    gan = encoder_store.names("gan.")
    assert not [n for n in gan if ".ln" in n]
    matrices = [n for n in gan if encoder_store[n].ndim == 2]
    assert matrices and all(encoder_store.spectral_state(n) is not None for n in matrices)
    assert all(encoder_store.spectral_state(n) is None for n in encoder_store.names("enc."))


def test_encoder_block_gradient(encoder_store, toy_arch):
    weights = Tensor(Rng(5).normal((2, 4, toy_arch.d_model)))
    keys = key_padding_mask(np.array([4, 2]), 4)

    def f(x):
        return (transformer_encoder_block(x, encoder_store, "enc", toy_arch, EVAL, NormVariant.LAYER_NORM, keys) * weights).sum()

    assert gradcheck(f, Tensor(Rng(6).normal((2, 4, toy_arch.d_model)))) < TOLERANCE


def test_spectral_only_block_gradient(encoder_store, toy_arch):
    weights = Tensor(Rng(7).normal((2, 4, toy_arch.d_model)))

    def f(x):
        return (transformer_encoder_block(x, encoder_store, "gan", toy_arch, EVAL, NormVariant.SPECTRAL_ONLY) * weights).sum()

    assert gradcheck(f, Tensor(Rng(8).normal((2, 4, toy_arch.d_model)))) < TOLERANCE


def test_decoder_block_gradient(encoder_store, toy_arch):
    weights = Tensor(Rng(9).normal((2, 4, toy_arch.d_model)))
    memory = Tensor(Rng(10).normal((2, 1, toy_arch.d_model)))

    def f(x):
        return (transformer_decoder_block(x, memory, encoder_store, "dec", toy_arch, EVAL) * weights).sum()

    assert gradcheck(f, Tensor(Rng(11).normal((2, 4, toy_arch.d_model)))) < TOLERANCE

    x = Tensor(Rng(12).normal((2, 4, toy_arch.d_model)))
    assert gradcheck(lambda m: (transformer_decoder_block(x, m, encoder_store, "dec", toy_arch, EVAL) * weights).sum(), memory) < TOLERANCE


def test_lstm_cell_gradient_and_shapes():
    store = ParameterStore()
    init_lstm(store, "cell", 3, 4, Rng(0))
    h0, c0 = Tensor(Rng(1).normal((2, 4))), Tensor(Rng(2).normal((2, 4)))
    weights = Tensor(Rng(3).normal((2, 4)))

    def f(x):
        h, c = lstm_step(x, h0, c0, store, "cell")
        return (h * weights + c).sum()

    assert gradcheck(f, Tensor(Rng(4).normal((2, 3)))) < TOLERANCE
    with pytest.raises(DimensionError):
        lstm_step(Tensor(np.ones((3, 3))), h0, c0, store, "cell")


def test_decoder_block_is_causal(encoder_store, toy_arch):
    rng = Rng(13)
    memory = Tensor(rng.normal((1, 1, toy_arch.d_model)))
    with no_grad():
        for _ in range(100):
            x = rng.normal((1, 5, toy_arch.d_model))
            t = int(rng.integers(0, 4))
            perturbed = x.copy()
            perturbed[:, t + 1:] += rng.normal(perturbed[:, t + 1:].shape)
            a = transformer_decoder_block(Tensor(x), memory, encoder_store, "dec", toy_arch, EVAL).data
            b = transformer_decoder_block(Tensor(perturbed), memory, encoder_store, "dec", toy_arch, EVAL).data
            assert np.array_equal(a[:, : t + 1], b[:, : t + 1])


def test_encoder_block_ignores_pad_keys(encoder_store, toy_arch):
    rng = Rng(14)
    with no_grad():
        for _ in range(100):
            length = int(rng.integers(1, 5))
            keys = key_padding_mask(np.array([length]), 5)
            x = rng.normal((1, 5, toy_arch.d_model))
            perturbed = x.copy()
            perturbed[:, length:] = rng.normal(perturbed[:, length:].shape)
            a = transformer_encoder_block(Tensor(x), encoder_store, "enc", toy_arch, EVAL, NormVariant.LAYER_NORM, keys).data
            b = transformer_encoder_block(Tensor(perturbed), encoder_store, "enc", toy_arch, EVAL, NormVariant.LAYER_NORM, keys).data
            assert np.array_equal(a[:, :length], b[:, :length])


def test_training_context_drops_heads(encoder_store, toy_arch):
    x = Tensor(Rng(15).normal((4, 3, toy_arch.d_model)))
    ctx = ForwardContext(training=True, rng=Rng(16))
    out = transformer_encoder_block(x, encoder_store, "enc", toy_arch, ctx, NormVariant.LAYER_NORM, dropout_p=0.5)
    ref = transformer_encoder_block(x, encoder_store, "enc", toy_arch, EVAL, NormVariant.LAYER_NORM)
    assert out.shape == ref.shape
    assert not np.allclose(out.data, ref.data)


def test_single_head_attention_is_projected_scaled_dot_attention(toy_arch):
    arch = replace(toy_arch, n_heads=1)
    store = ParameterStore()
    init_attention(store, "attn", arch, Rng(17))
    x_q = Rng(18).normal((2, 3, arch.d_model))
    x_kv = Rng(19).normal((2, 4, arch.d_model))

    def project(x, part):
        return Tensor(x @ store[f"attn.{part}.weight"].data + store[f"attn.{part}.bias"].data)

    heads = scaled_dot_attention(project(x_q, "q"), project(x_kv, "k"), project(x_kv, "v")).data
    expected = heads @ store["attn.o.weight"].data + store["attn.o.bias"].data
    out = multi_head_attention(Tensor(x_q), Tensor(x_kv), store, "attn", arch, EVAL).data
    np.testing.assert_allclose(out, expected, atol=1e-12)


def test_attention_over_one_key_returns_its_value():
    rng = Rng(20)
    q = Tensor(rng.normal((2, 5, 4)))
    k, v = Tensor(rng.normal((2, 1, 4))), Tensor(rng.normal((2, 1, 4)))
    out = scaled_dot_attention(q, k, v).data
    np.testing.assert_allclose(out, np.broadcast_to(v.data, (2, 5, 4)), atol=1e-15)


def test_evaluation_ignores_dropout(encoder_store, toy_arch):
    x = Tensor(Rng(21).normal((3, 4, toy_arch.d_model)))
    evaluated = transformer_encoder_block(x, encoder_store, "enc", toy_arch, EVAL, NormVariant.LAYER_NORM, dropout_p=0.1)
    ctx = ForwardContext(training=True, rng=Rng(22))
    trained = transformer_encoder_block(x, encoder_store, "enc", toy_arch, ctx, NormVariant.LAYER_NORM, dropout_p=0.0)
    assert np.array_equal(evaluated.data, trained.data)


def test_lstm_with_zero_weights_halves_the_cell():
    store = ParameterStore()
    init_lstm(store, "cell", 3, 4, Rng(23))
    for name in store.names("cell."):
        store[name].data[...] = 0.0
    x, h0 = Tensor(Rng(24).normal((2, 3))), Tensor(Rng(25).normal((2, 4)))
    c0 = Rng(26).normal((2, 4))

    h, c = lstm_step(x, h0, Tensor(c0), store, "cell")
    np.testing.assert_allclose(c.data, 0.5 * c0, atol=1e-15)
    np.testing.assert_allclose(h.data, 0.5 * np.tanh(0.5 * c0), atol=1e-15)

    h, c = lstm_step(x, h0, Tensor(np.zeros((2, 4))), store, "cell")
    assert np.array_equal(h.data, np.zeros((2, 4)))
    assert np.array_equal(c.data, np.zeros((2, 4)))


def test_unrolled_lstm_gradient():
    store = ParameterStore()
    init_lstm(store, "cell", 3, 4, Rng(27))
    weights = Tensor(Rng(28).normal((2, 4)))

    def f(xs):
        h, c = Tensor(np.zeros((2, 4))), Tensor(np.zeros((2, 4)))
        for t in range(3):
            h, c = lstm_step(xs[t], h, c, store, "cell")
        return (h * weights).sum()

    assert gradcheck(f, Tensor(Rng(29).normal((3, 2, 3)))) < TOLERANCE

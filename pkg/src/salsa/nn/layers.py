"""Transformer building blocks over :class:`~salsa.nn.params.ParameterStore` entries.

Blocks are plain functions: an ``init_*`` function registers the parameters under a dotted
prefix, and the matching forward function reads them back by the same prefix. Inputs are
batched ``[B, T, d]``; attention also accepts unbatched ``[T, d]``.
"""
import logging
from enum import Enum

import numpy as np

from salsa.autograd import Rng, Tensor, dropout, layer_norm, masked_fill, relu, softmax
from salsa.autograd.tensor import scale
from salsa.exceptions import ConfigError, ContractError, DimensionError
from salsa.nn.config import ArchitectureConfig
from salsa.nn.params import ForwardContext, ParameterStore, xavier_uniform

logger = logging.getLogger(__name__)


class NormVariant(str, Enum):
    LAYER_NORM = "layer_norm"
    SPECTRAL_ONLY = "spectral_only"


def positional_encoding(length: int, d: int) -> Tensor:
    """Sinusoidal encodings: ``PE[pos, 2i] = sin(pos / 10000^(2i/d))``, ``PE[pos, 2i+1] = cos(...)``.

    :raises ConfigError:
        If ``d`` is odd.
    """
    if d % 2:
        raise ConfigError(f"positional encoding dimension must be even, got {d}")
    positions = np.arange(length, dtype=np.float64)[:, None]
    angles = positions / np.power(10000.0, np.arange(0, d, 2, dtype=np.float64) / d)
    table = np.empty((length, d))
    table[:, 0::2] = np.sin(angles)
    table[:, 1::2] = np.cos(angles)
    return Tensor(table)


def causal_mask(length: int) -> np.ndarray:
    """``allowed[q, k]`` is True when key ``k`` is not in the future of query ``q``."""
    return np.tril(np.ones((length, length), dtype=bool))


def key_padding_mask(lengths: np.ndarray, length: int) -> np.ndarray:
    """``[B, 1, 1, T]`` mask letting every query attend only to real (non-pad) keys."""
    return (np.arange(length)[None, :] < np.asarray(lengths)[:, None])[:, None, None, :]


# -- linear --------------------------------------------------------------------------------------

def init_linear(store: ParameterStore, prefix: str, d_in: int, d_out: int, rng: Rng, spectral: bool = False, n_power_iters: int = 1):
    store.add(f"{prefix}.weight", xavier_uniform(rng, d_in, d_out), spectral=spectral, rng=rng, n_power_iters=n_power_iters)
    store.add(f"{prefix}.bias", np.zeros(d_out))


def linear(x: Tensor, store: ParameterStore, prefix: str, ctx: ForwardContext) -> Tensor:
    return x @ store.weight(f"{prefix}.weight", ctx) + store[f"{prefix}.bias"]


# -- attention -----------------------------------------------------------------------------------

def _swap_last(x: Tensor) -> Tensor:
    axes = list(range(x.ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return x.transpose(axes)


def scaled_dot_attention(q: Tensor, k: Tensor, v: Tensor, mask: np.ndarray | None = None) -> Tensor:
    """``softmax(QKᵀ/√dk + mask) V`` over the last two axes.

    :param mask:
        Boolean array broadcastable to ``[..., Tq, Tk]``; True marks keys a query may attend to.

    :raises ContractError:
        If some query row has no key left to attend to.
    """
    if q.shape[-1] != k.shape[-1] or k.shape[-2] != v.shape[-2]:
        raise DimensionError(f"attention shapes disagree: q {q.shape}, k {k.shape}, v {v.shape}")
    logits = scale(q @ _swap_last(k), 1.0 / np.sqrt(q.shape[-1]))
    if mask is not None:
        allowed = np.broadcast_to(np.asarray(mask, dtype=bool), logits.shape)
        if not allowed.any(axis=-1).all():
            raise ContractError("attention mask leaves a query row with no key to attend to")
        logits = masked_fill(logits, ~allowed, -np.inf)
    return softmax(logits, axis=-1) @ v


def init_attention(store: ParameterStore, prefix: str, cfg: ArchitectureConfig, rng: Rng, spectral: bool = False):
    for part in ("q", "k", "v", "o"):
        init_linear(store, f"{prefix}.{part}", cfg.d_model, cfg.d_model, rng, spectral, cfg.n_power_iters)


def multi_head_attention(
    x_q: Tensor,
    x_kv: Tensor,
    store: ParameterStore,
    prefix: str,
    cfg: ArchitectureConfig,
    ctx: ForwardContext,
    mask: np.ndarray | None = None,
    dropout_p: float = 0.0,
) -> Tensor:
    """``h`` heads of projected scaled dot-product attention, concatenated and output-projected.

    In training mode whole head outputs are dropped per example with probability ``dropout_p``.
    """
    unbatched = x_q.ndim == 2
    if unbatched:
        x_q, x_kv = x_q.reshape((1, *x_q.shape)), x_kv.reshape((1, *x_kv.shape))
    batch, t_q, d = x_q.shape
    t_k = x_kv.shape[1]
    if d != cfg.d_model or x_kv.shape[2] != cfg.d_model:
        raise DimensionError(f"attention expects model width {cfg.d_model}, got {x_q.shape} and {x_kv.shape}")
    h, dh = cfg.n_heads, cfg.head_dim

    def split_heads(t: Tensor, length: int) -> Tensor:
        return t.reshape(batch, length, h, dh).transpose(0, 2, 1, 3)

    q = split_heads(linear(x_q, store, f"{prefix}.q", ctx), t_q)
    k = split_heads(linear(x_kv, store, f"{prefix}.k", ctx), t_k)
    v = split_heads(linear(x_kv, store, f"{prefix}.v", ctx), t_k)
    heads = scaled_dot_attention(q, k, v, mask)
    heads = dropout(heads, dropout_p, ctx.rng, ctx.training, mask_shape=(batch, h, 1, 1))
    merged = heads.transpose(0, 2, 1, 3).reshape(batch, t_q, d)
    out = linear(merged, store, f"{prefix}.o", ctx)
    return out.reshape(t_q, d) if unbatched else out


# -- feed-forward and normalization --------------------------------------------------------------

def init_feed_forward(store: ParameterStore, prefix: str, cfg: ArchitectureConfig, rng: Rng, spectral: bool = False):
    init_linear(store, f"{prefix}.ff1", cfg.d_model, cfg.ff_size, rng, spectral, cfg.n_power_iters)
    init_linear(store, f"{prefix}.ff2", cfg.ff_size, cfg.d_model, rng, spectral, cfg.n_power_iters)


def feed_forward(x: Tensor, store: ParameterStore, prefix: str, ctx: ForwardContext) -> Tensor:
    return linear(relu(linear(x, store, f"{prefix}.ff1", ctx)), store, f"{prefix}.ff2", ctx)


def init_layer_norm(store: ParameterStore, prefix: str, d: int):
    store.add(f"{prefix}.gain", np.ones(d))
    store.add(f"{prefix}.bias", np.zeros(d))


def norm(x: Tensor, store: ParameterStore, prefix: str, cfg: ArchitectureConfig) -> Tensor:
    return layer_norm(x, store[f"{prefix}.gain"], store[f"{prefix}.bias"], cfg.layer_norm_eps)


# -- blocks --------------------------------------------------------------------------------------

def init_encoder_block(store: ParameterStore, prefix: str, cfg: ArchitectureConfig, rng: Rng, variant: NormVariant):
    spectral = variant is NormVariant.SPECTRAL_ONLY and cfg.spectral_norm
    init_attention(store, f"{prefix}.attn", cfg, rng, spectral)
    init_feed_forward(store, prefix, cfg, rng, spectral)
    if variant is NormVariant.LAYER_NORM:
        init_layer_norm(store, f"{prefix}.ln1", cfg.d_model)
        init_layer_norm(store, f"{prefix}.ln2", cfg.d_model)


def transformer_encoder_block(
    x: Tensor,
    store: ParameterStore,
    prefix: str,
    cfg: ArchitectureConfig,
    ctx: ForwardContext,
    variant: NormVariant,
    key_mask: np.ndarray | None = None,
    dropout_p: float | None = None,
) -> Tensor:
    """Residual self-attention then residual position-wise feed-forward.

    The layer-norm variant normalizes after each residual sum (post-norm); the spectral-only
    variant has no normalization and relies on spectrally normalized weights.
    """
    p = cfg.dropout_p if dropout_p is None else dropout_p
    attended = multi_head_attention(x, x, store, f"{prefix}.attn", cfg, ctx, key_mask, p)
    if variant is NormVariant.LAYER_NORM:
        x = norm(x + attended, store, f"{prefix}.ln1", cfg)
        return norm(x + feed_forward(x, store, prefix, ctx), store, f"{prefix}.ln2", cfg)
    x = x + attended
    return x + feed_forward(x, store, prefix, ctx)


def init_decoder_block(store: ParameterStore, prefix: str, cfg: ArchitectureConfig, rng: Rng):
    init_attention(store, f"{prefix}.self_attn", cfg, rng)
    init_attention(store, f"{prefix}.cross_attn", cfg, rng)
    init_feed_forward(store, prefix, cfg, rng)
    for i in (1, 2, 3):
        init_layer_norm(store, f"{prefix}.ln{i}", cfg.d_model)


def transformer_decoder_block(
    x: Tensor,
    memory: Tensor,
    store: ParameterStore,
    prefix: str,
    cfg: ArchitectureConfig,
    ctx: ForwardContext,
    memory_mask: np.ndarray | None = None,
) -> Tensor:
    """Causal self-attention, cross-attention over ``memory`` and feed-forward, each residual and layer-normed."""
    p = cfg.dropout_p
    attended = multi_head_attention(x, x, store, f"{prefix}.self_attn", cfg, ctx, causal_mask(x.shape[-2]), p)
    x = norm(x + attended, store, f"{prefix}.ln1", cfg)
    crossed = multi_head_attention(x, memory, store, f"{prefix}.cross_attn", cfg, ctx, memory_mask, p)
    x = norm(x + crossed, store, f"{prefix}.ln2", cfg)
    return norm(x + feed_forward(x, store, prefix, ctx), store, f"{prefix}.ln3", cfg)


__all__ = [
    "NormVariant",
    "causal_mask",
    "feed_forward",
    "init_attention",
    "init_decoder_block",
    "init_encoder_block",
    "init_feed_forward",
    "init_layer_norm",
    "init_linear",
    "key_padding_mask",
    "linear",
    "multi_head_attention",
    "norm",
    "positional_encoding",
    "scaled_dot_attention",
    "transformer_decoder_block",
    "transformer_encoder_block",
]

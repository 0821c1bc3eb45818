"""Fused differentiable operations built directly on numpy with closed-form backward rules."""
import numpy as np

from salsa.autograd.rng import Rng
from salsa.autograd.tensor import Tensor, make_result
from salsa.exceptions import ContractError, DimensionError


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return make_result(out, (x,), backward)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

    def backward(g):
        return (g - np.exp(out) * g.sum(axis=axis, keepdims=True),)

    return make_result(out, (x,), backward)


def cross_entropy(logits: Tensor, targets, mask=None) -> Tensor:
    """Mean next-token cross-entropy over the unmasked positions.

    :param Tensor logits:
        Scores of shape ``[..., V]``.

    :param targets:
        Integer class ids of shape ``[...]``.

    :param mask:
        Optional boolean array of shape ``[...]``; ``False`` positions are excluded.

    :returns:
        A scalar tensor. Its gradient with respect to the logits is ``(softmax − onehot) / count``.
    """
    targets = np.asarray(targets, dtype=np.int64)
    if logits.shape[:-1] != targets.shape:
        raise DimensionError(f"logits {logits.shape} do not match targets {targets.shape}")
    keep = np.ones(targets.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    count = int(keep.sum())
    if count == 0:
        raise ContractError("cross_entropy needs at least one unmasked position")

    shifted = logits.data - logits.data.max(axis=-1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    picked = np.take_along_axis(log_probs, targets[..., None], axis=-1)[..., 0]
    loss = -np.where(keep, picked, 0.0).sum() / count

    def backward(g):
        grad = np.exp(log_probs)
        np.put_along_axis(grad, targets[..., None], np.take_along_axis(grad, targets[..., None], axis=-1) - 1.0, axis=-1)
        grad *= (keep / count)[..., None]
        return (grad * g,)

    return make_result(np.array(loss), (logits,), backward)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Standardize the last axis of ``x`` then apply ``gain`` and ``bias``."""
    if eps <= 0:
        raise ContractError(f"layer_norm eps must be positive, got {eps}")
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    inv_std = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + eps)
    normed = centered * inv_std
    d = x.shape[-1]

    def backward(g):
        g_normed = g * gain.data
        gx = inv_std * (g_normed - g_normed.mean(axis=-1, keepdims=True)
                        - normed * (g_normed * normed).mean(axis=-1, keepdims=True))
        lead = tuple(range(g.ndim - 1))
        return gx, (g * normed).sum(axis=lead).reshape(d), g.sum(axis=lead).reshape(d)

    return make_result(normed * gain.data + bias.data, (x, gain, bias), backward)


def l2_normalize(x: Tensor, axis: int = -1) -> Tensor:
    """Project each slice along ``axis`` onto the unit sphere."""
    norm = np.sqrt((x.data * x.data).sum(axis=axis, keepdims=True))
    if np.any(norm == 0.0):
        raise ContractError("cannot project a zero vector onto the unit sphere")
    out = x.data / norm

    def backward(g):
        return ((g - out * (g * out).sum(axis=axis, keepdims=True)) / norm,)

    return make_result(out, (x,), backward)


def masked_mean(x: Tensor, mask: np.ndarray) -> Tensor:
    """Mean over axis 1 of ``x[B, T, d]`` restricted to positions where ``mask[B, T]`` is set."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != x.shape[:2]:
        raise DimensionError(f"mask {mask.shape} does not match tensor {x.shape}")
    counts = mask.sum(axis=1, keepdims=True).astype(np.float64)
    if np.any(counts == 0):
        raise ContractError("masked_mean needs at least one unmasked position per row")
    selected = np.where(mask[..., None], x.data, 0.0)

    def backward(g):
        return (np.where(mask[..., None], (g / counts)[:, None, :], 0.0),)

    return make_result(selected.sum(axis=1) / counts, (x,), backward)


def dropout(x: Tensor, p: float, rng: Rng | None, training: bool, mask_shape=None) -> Tensor:
    """Inverted dropout; the identity outside training or when ``p`` is zero.

    ``mask_shape`` (broadcastable to ``x``) drops whole slices, e.g. ``[B, h, 1, 1]`` for heads.
    """
    if not 0.0 <= p < 1.0:
        raise ContractError(f"dropout probability must lie in [0, 1), got {p}")
    if not training or p == 0.0:
        return x
    if rng is None:
        raise ContractError("dropout in training mode needs an Rng")
    keep = (rng.random(x.shape if mask_shape is None else tuple(mask_shape)) >= p) / (1.0 - p)
    keep = np.broadcast_to(keep, x.shape)
    return make_result(x.data * keep, (x,), lambda g: (g * keep,))


__all__ = ["cross_entropy", "dropout", "l2_normalize", "layer_norm", "log_softmax", "masked_mean", "softmax"]

import numpy as np

from salsa.autograd import Rng, Tensor, sigmoid, tanh
from salsa.exceptions import DimensionError
from salsa.nn.params import ParameterStore, xavier_uniform


def init_lstm(store: ParameterStore, prefix: str, d_in: int, d_hidden: int, rng: Rng):
    """Register the input, recurrent and bias parameters of one LSTM cell (gates packed i, f, g, o)."""
    store.add(f"{prefix}.w_x", xavier_uniform(rng, d_in, 4 * d_hidden))
    store.add(f"{prefix}.w_h", xavier_uniform(rng, d_hidden, 4 * d_hidden))
    store.add(f"{prefix}.bias", np.zeros(4 * d_hidden))


def lstm_step(x_t: Tensor, h: Tensor, c: Tensor, store: ParameterStore, prefix: str) -> tuple[Tensor, Tensor]:
    """One step of a standard LSTM cell over a batch ``[B, d_in]``.

    :returns:
        ``(h', c')`` with ``c' = f·c + i·g`` and ``h' = o·tanh(c')``.
    """
    d_hidden = h.shape[-1]
    if c.shape != h.shape or x_t.shape[:-1] != h.shape[:-1]:
        raise DimensionError(f"lstm_step shapes disagree: x {x_t.shape}, h {h.shape}, c {c.shape}")
    gates = x_t @ store[f"{prefix}.w_x"] + h @ store[f"{prefix}.w_h"] + store[f"{prefix}.bias"]
    i = sigmoid(gates[..., 0:d_hidden])
    f = sigmoid(gates[..., d_hidden:2 * d_hidden])
    g = tanh(gates[..., 2 * d_hidden:3 * d_hidden])
    o = sigmoid(gates[..., 3 * d_hidden:])
    c_next = f * c + i * g
    return o * tanh(c_next), c_next


__all__ = ["init_lstm", "lstm_step"]

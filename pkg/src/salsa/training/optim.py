import logging

import numpy as np

from salsa.exceptions import TrainingDivergenceError
from salsa.nn import ParameterStore

logger = logging.getLogger(__name__)


def adam_step(
    data: np.ndarray,
    grad: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    t: int,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One bias-corrected Adam update of step number ``t`` (1-based).

    :returns:
        ``(data', m', v')``.
    """
    m = beta1 * m + (1.0 - beta1) * grad
    v = beta2 * v + (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    return data - lr * m_hat / (np.sqrt(v_hat) + eps), m, v


class Adam:
    """Adam over a fixed set of store parameters with per-parameter step counts.

    :meth:`step` may be restricted to a subset, so one optimizer can serve several phases that
    update overlapping parameter groups.
    """

    def __init__(self, store: ParameterStore, names: list[str], lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.store = store
        self.names = list(names)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {name: np.zeros_like(store[name].data) for name in self.names}
        self.v = {name: np.zeros_like(store[name].data) for name in self.names}
        self.steps = dict.fromkeys(self.names, 0)

    def step(self, names: list[str] | None = None) -> None:
        """Update every named parameter that holds a gradient.

        :raises TrainingDivergenceError:
            If a gradient holds NaN or infinity; no parameter is modified in that case.
        """
        names = self.names if names is None else names
        active = [name for name in names if self.store[name].grad is not None]
        for name in active:
            if not np.all(np.isfinite(self.store[name].grad)):
                logger.error(f"Non-finite gradient for parameter {name}")
                raise TrainingDivergenceError(f"non-finite gradient for parameter {name!r}", name=name)
        for name in active:
            param = self.store[name]
            self.steps[name] += 1
            param.data[...], self.m[name], self.v[name] = adam_step(
                param.data, param.grad, self.m[name], self.v[name], self.steps[name], self.lr, self.beta1, self.beta2, self.eps
            )

    def state_dict(self) -> dict:
        return {"steps": dict(self.steps), "m": self.m, "v": self.v}

    def load_state_dict(self, state: dict) -> None:
        for name in self.names:
            self.steps[name] = int(state["steps"][name])
            self.m[name] = np.array(state["m"][name], dtype=np.float64).reshape(self.m[name].shape)
            self.v[name] = np.array(state["v"][name], dtype=np.float64).reshape(self.v[name].shape)


def clip_grad_norm(store: ParameterStore, names: list[str], max_norm: float) -> float:
    """Rescale gradients of ``names`` so their joint L2 norm is at most ``max_norm``; returns the norm before clipping."""
    grads = [store[name].grad for name in names if store[name].grad is not None]
    total = float(np.sqrt(sum(float((g * g).sum()) for g in grads)))
    if np.isfinite(total) and total > max_norm:
        factor = max_norm / total
        for g in grads:
            g *= factor
    return total


__all__ = ["Adam", "adam_step", "clip_grad_norm"]

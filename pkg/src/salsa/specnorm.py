"""Spectral normalization of weight matrices by power iteration.

A normalized weight is ``W / σ(W)`` where σ is the largest singular value. During training the
left singular vector estimate ``u`` persists between steps and is refined by a few power
iterations per use; σ is treated as a constant in the backward pass (``u`` and ``v`` detached).
"""
import logging
from dataclasses import dataclass

import numpy as np

from salsa.autograd import Rng, Tensor
from salsa.autograd.tensor import scale
from salsa.exceptions import ContractError

logger = logging.getLogger(__name__)


@dataclass
class SpecNormState:
    u: np.ndarray
    sigma: float
    n_power_iters: int = 1

    @classmethod
    def initialize(cls, weight: np.ndarray, rng: Rng, n_power_iters: int = 1) -> "SpecNormState":
        u = rng.normal(weight.shape[0])
        u /= np.linalg.norm(u)
        sigma, u = power_iteration_step(weight, u)
        return cls(u=u, sigma=sigma, n_power_iters=n_power_iters)


def _unit(vector: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(vector)
    if norm == 0.0:
        raise ContractError("degenerate matrix: power iteration produced a zero vector")
    return vector / norm


def power_iteration_step(weight, u: np.ndarray) -> tuple[float, np.ndarray]:
    """One power-iteration refinement of the dominant singular pair.

    :param weight:
        Matrix ``W`` of shape ``[m, n]`` (array or :class:`~salsa.autograd.Tensor`).

    :param u:
        Current unit left-singular-vector estimate of length ``m``.

    :returns:
        ``(sigma_est, u')`` with ``v = normalize(Wᵀu)``, ``u' = normalize(Wv)`` and ``sigma_est = u'ᵀWv``.

    :raises ContractError:
        If ``W`` is the zero matrix (or annihilates ``u``).
    """
    w = weight.data if isinstance(weight, Tensor) else np.asarray(weight, dtype=np.float64)
    if not np.any(w):
        raise ContractError(f"degenerate matrix: cannot normalize an all-zero weight of shape {w.shape}")
    v = _unit(w.T @ u)
    wv = w @ v
    u_next = _unit(wv)
    return float(u_next @ wv), u_next


def spectral_normalize(weight: Tensor, state: SpecNormState, update: bool = True) -> Tensor:
    """Return ``W / σ`` using (and, when ``update`` is set, refining) ``state``."""
    if update:
        for _ in range(state.n_power_iters):
            state.sigma, state.u = power_iteration_step(weight, state.u)
    return scale(weight, 1.0 / state.sigma)


def exact_spectral_norm(weight, tol: float = 1e-12, max_iters: int = 200_000, seed: int = 0) -> float:
    """Largest singular value by power iteration on the Gram matrix ``WᵀW``.

    Two starts are run (the all-ones vector and a seeded Gaussian vector) so that a start
    orthogonal to the dominant eigenvector cannot hide it; the larger estimate wins.
    """
    w = weight.data if isinstance(weight, Tensor) else np.asarray(weight, dtype=np.float64)
    gram = w.T @ w
    if not np.any(gram):
        return 0.0
    starts = [np.ones(gram.shape[0]), np.random.default_rng(seed).standard_normal(gram.shape[0])]
    best = 0.0
    for x in starts:
        x = x / np.linalg.norm(x)
        estimate = 0.0
        for _ in range(max_iters):
            y = gram @ x
            norm = np.linalg.norm(y)
            if norm == 0.0:
                break
            x = y / norm
            previous, estimate = estimate, float(x @ gram @ x)
            if abs(estimate - previous) <= tol * abs(estimate):
                break
        best = max(best, estimate)
    return float(np.sqrt(best))


__all__ = ["SpecNormState", "exact_spectral_norm", "power_iteration_step", "spectral_normalize"]

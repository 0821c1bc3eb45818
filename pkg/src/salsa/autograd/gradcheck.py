import logging
from collections.abc import Callable

import numpy as np

from salsa.autograd.rng import Rng
from salsa.autograd.tensor import Tensor, no_grad

logger = logging.getLogger(__name__)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    return np.abs(analytic - numeric) / np.maximum(1e-8, np.abs(analytic) + np.abs(numeric))


def gradcheck(f: Callable[[Tensor], Tensor], x: Tensor, eps: float = 1e-5, skip: np.ndarray | None = None) -> float:
    """Compare the analytic gradient of a scalar function with central differences.

    :param f:
        Function mapping a tensor shaped like ``x`` to a scalar tensor.

    :param Tensor x:
        Point at which to check.

    :param float eps:
        Finite-difference step.

        **Default**: ``1e-5``

    :param skip:
        Optional boolean mask of entries to leave out (nondifferentiable points such as relu at 0).

    :returns:
        ``max |analytic − numeric| / max(1e-8, |analytic| + |numeric|)`` over the compared entries.

    **Example:**

    ```python
    err = gradcheck(lambda t: (t * t).sum(), Tensor([3.0]))
    assert err < 1e-9
    ```
    """
    base = x.data.copy()
    leaf = Tensor(base.copy(), requires_grad=True)
    f(leaf).backward()
    analytic = np.zeros_like(base) if leaf.grad is None else leaf.grad

    numeric = np.zeros_like(base)
    with no_grad():
        for idx in np.ndindex(base.shape):
            if skip is not None and skip[idx]:
                continue
            shifted = base.copy()
            shifted[idx] += eps
            upper = f(Tensor(shifted)).item()
            shifted[idx] -= 2 * eps
            lower = f(Tensor(shifted)).item()
            numeric[idx] = (upper - lower) / (2 * eps)

    errors = relative_error(analytic, numeric)
    if skip is not None:
        errors = errors[~np.asarray(skip, dtype=bool)]
    return float(errors.max()) if errors.size else 0.0


def gradcheck_store(
    loss_fn: Callable[[], Tensor],
    store,
    eps: float = 1e-5,
    entries_per_tensor: int | None = None,
    rng: Rng | None = None,
    names: list[str] | None = None,
) -> dict[str, float]:
    """Gradient check every tensor of a :class:`~salsa.nn.params.ParameterStore`.

    ``loss_fn`` must be deterministic (evaluation mode, no dropout). When ``entries_per_tensor``
    is given, a seeded subset of entries of each tensor is perturbed instead of all of them.

    :returns:
        Maximum relative error per parameter name.
    """
    store.zero_grad()
    loss_fn().backward()
    rng = rng or Rng(0)
    report = {}
    for name in names or store.names():
        param = store[name]
        analytic = np.zeros_like(param.data) if param.grad is None else param.grad.copy()
        flat = np.arange(param.size)
        if entries_per_tensor is not None and entries_per_tensor < param.size:
            flat = np.sort(rng.generator.choice(param.size, size=entries_per_tensor, replace=False))
        errors = []
        with no_grad():
            for k in flat:
                idx = np.unravel_index(k, param.shape)
                original = param.data[idx]
                param.data[idx] = original + eps
                upper = loss_fn().item()
                param.data[idx] = original - eps
                lower = loss_fn().item()
                param.data[idx] = original
                numeric = (upper - lower) / (2 * eps)
                errors.append(relative_error(np.array(analytic[idx]), np.array(numeric)))
        report[name] = float(np.max(errors)) if errors else 0.0
        logger.debug(f"gradcheck {name}: max relative error {report[name]:.3e}")
    store.zero_grad()
    return report


__all__ = ["gradcheck", "gradcheck_store", "relative_error"]

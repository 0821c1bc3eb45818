import logging
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np

from salsa.autograd import Rng, Tensor
from salsa.exceptions import DimensionError
from salsa.specnorm import SpecNormState, spectral_normalize

logger = logging.getLogger(__name__)


@dataclass
class ForwardContext:
    """Mode and randomness threaded through every block.

    ``training`` switches dropout on and lets spectrally normalized weights refine their
    singular-vector estimates; in evaluation the cached σ is reused.
    """

    training: bool = False
    rng: Rng | None = None


EVAL = ForwardContext()


def xavier_uniform(rng: Rng, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, (fan_in, fan_out))


class ParameterStore:
    """Named trainable tensors, each optionally carrying spectral-normalization state.

    Names are dotted paths (``encoder.blocks.0.attn.w_q``); insertion order is preserved and
    defines the order of checkpoints and parameter counts.
    """

    def __init__(self):
        self._params: dict[str, Tensor] = {}
        self._spectral: dict[str, SpecNormState] = {}

    def add(self, name: str, data: np.ndarray, spectral: bool = False, rng: Rng | None = None, n_power_iters: int = 1) -> Tensor:
        if name in self._params:
            raise KeyError(f"parameter {name!r} registered twice")
        param = Tensor(data, requires_grad=True, name=name)
        self._params[name] = param
        if spectral:
            if param.ndim != 2:
                raise ValueError(f"spectral normalization applies to matrices only, {name!r} has shape {param.shape}")
            self._spectral[name] = SpecNormState.initialize(param.data, rng or Rng(0), n_power_iters)
        return param

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def names(self, prefix: str | tuple[str, ...] | None = None) -> list[str]:
        if prefix is None:
            return list(self._params)
        return [name for name in self._params if name.startswith(prefix)]

    def items(self):
        return self._params.items()

    def spectral_state(self, name: str) -> SpecNormState | None:
        return self._spectral.get(name)

    def spectral_items(self):
        return self._spectral.items()

    def weight(self, name: str, ctx: ForwardContext) -> Tensor:
        """The tensor to use in a forward pass: spectrally normalized when it carries state."""
        param = self._params[name]
        state = self._spectral.get(name)
        if state is None:
            return param
        return spectral_normalize(param, state, update=ctx.training)

    def zero_grad(self, names=None) -> None:
        for name in names or self._params:
            self._params[name].grad = None

    def num_parameters(self, prefix: str | tuple[str, ...] | None = None) -> int:
        return int(sum(self._params[name].size for name in self.names(prefix)))

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: param.data.copy() for name, param in self._params.items()}

    def load(self, values: dict[str, np.ndarray]) -> None:
        for name, value in values.items():
            param = self._params[name]
            if param.shape != value.shape:
                raise DimensionError(f"parameter {name!r} expects shape {param.shape}, got {value.shape}")
            param.data[...] = value


__all__ = ["EVAL", "ForwardContext", "ParameterStore", "xavier_uniform"]

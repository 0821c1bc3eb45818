"""Run configuration: presets, flat YAML files and typed coercion.

A run file is a flat mapping whose keys are fields of :class:`~salsa.nn.ArchitectureConfig`,
:class:`~salsa.training.TrainConfig` or :class:`RunConfig` itself. Values override the chosen
preset; unknown keys are rejected.
"""
import dataclasses
import logging
import typing
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from types import NoneType, UnionType

from salsa.exceptions import ConfigError
from salsa.io import get_params
from salsa.models.salsa import Mode
from salsa.nn.config import PRESETS, ArchitectureConfig
from salsa.training.config import TrainConfig

logger = logging.getLogger(__name__)

# Per-preset overrides of the training and run defaults.
PRESET_TRAIN = {"desk": {}, "paper": {"lam": 20.0}}
PRESET_RUN = {"desk": {"max_tokens": 19}, "paper": {"max_tokens": 50}}


@dataclass(frozen=True)
class RunConfig:
    """Everything one ``salsa train`` invocation needs."""

    arch: ArchitectureConfig = field(default_factory=ArchitectureConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    preset: str = "desk"
    corpus: Path | None = None
    bpe: Path | None = None
    checkpoint_dir: Path = Path("runs/default")
    bpe_vocab: int = 1000
    max_tokens: int = 19

    def validate(self) -> "RunConfig":
        self.arch.validate()
        self.train.validate()
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; choose one of {sorted(PRESETS)}")
        if self.max_tokens < 1:
            raise ConfigError(f"max_tokens must be >= 1, got {self.max_tokens}")
        return self

    def to_dict(self) -> dict:
        """Flat, JSON-friendly view (the same keys a run file accepts, plus ``preset``)."""
        values = {**self.arch.to_dict(), **self.train.to_dict()}
        for f in dataclasses.fields(self):
            if f.name in ("arch", "train"):
                continue
            value = getattr(self, f.name)
            values[f.name] = str(value) if isinstance(value, Path) else value
        return values


def _coerce(name: str, value, hint):
    origin = typing.get_origin(hint)
    if origin in (typing.Union, UnionType):
        options = [a for a in typing.get_args(hint) if a is not NoneType]
        if value is None:
            return None
        return _coerce(name, value, options[0])
    try:
        if hint is bool:
            if isinstance(value, bool):
                return value
            if isinstance(value, str) and value.lower() in ("true", "yes", "1", "false", "no", "0"):
                return value.lower() in ("true", "yes", "1")
            raise ValueError(f"not a boolean: {value!r}")
        if hint is int:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError(f"not an integer: {value!r}")
            return int(value)
        if hint is float:
            if isinstance(value, bool):
                raise ValueError(f"not a number: {value!r}")
            return float(value)
        if hint is Path:
            return Path(value).expanduser()
        if isinstance(hint, type) and issubclass(hint, Enum):
            return value if isinstance(value, hint) else hint(str(value).lower())
        return hint(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid value for {name!r}: {value!r} ({e})") from e


def _split_fields(values: dict) -> tuple[dict, dict, dict]:
    arch_hints = typing.get_type_hints(ArchitectureConfig)
    train_hints = typing.get_type_hints(TrainConfig)
    run_hints = {k: v for k, v in typing.get_type_hints(RunConfig).items() if k not in ("arch", "train")}
    arch, train, run = {}, {}, {}
    unknown = []
    for key, value in values.items():
        if key in arch_hints:
            arch[key] = _coerce(key, value, arch_hints[key])
        elif key in train_hints:
            train[key] = _coerce(key, value, train_hints[key])
        elif key in run_hints:
            run[key] = _coerce(key, value, run_hints[key])
        else:
            unknown.append(key)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    return arch, train, run


def build_run_config(values: dict | None = None, preset: str | None = None, seed: int | None = None) -> RunConfig:
    """Preset defaults, overridden by ``values``, overridden by explicit ``preset``/``seed`` flags."""
    values = dict(values or {})
    preset = preset or str(values.pop("preset", "desk"))
    values.pop("preset", None)
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose one of {sorted(PRESETS)}")
    arch, train, run = _split_fields(values)
    if seed is not None:
        train["seed"] = seed
    config = RunConfig(
        arch=replace(PRESETS[preset], **arch),
        train=TrainConfig(**{**PRESET_TRAIN[preset], **train}),
        preset=preset,
        **{**PRESET_RUN[preset], **run},
    )
    return config.validate()


def load_run_config(path: Path | None = None, preset: str | None = None, seed: int | None = None) -> RunConfig:
    """Read a flat YAML run file (optional) and resolve it against its preset.

    :raises ConfigError:
        On unknown keys, values of the wrong type or values outside their valid range.
    """
    values = {}
    if path is not None:
        values = get_params(path)
        if not isinstance(values, dict):
            raise ConfigError(f"{path} must hold a flat key: value mapping")
        nested = [k for k, v in values.items() if isinstance(v, dict | list)]
        if nested:
            raise ConfigError(f"{path}: configuration is flat, but {', '.join(nested)} hold nested values")
        logger.debug(f"Loaded {len(values)} configuration values from {path}")
    return build_run_config(values, preset, seed)


def run_config_from_dict(values: dict) -> RunConfig:
    """Inverse of :meth:`RunConfig.to_dict` (used when reading checkpoint headers)."""
    return build_run_config(values)


__all__ = ["PRESET_RUN", "PRESET_TRAIN", "RunConfig", "build_run_config", "load_run_config", "run_config_from_dict"]

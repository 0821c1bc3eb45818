from dataclasses import asdict, dataclass

from salsa.exceptions import ConfigError
from salsa.models.salsa import Mode


@dataclass(frozen=True)
class TrainConfig:
    """Optimisation schedule for AAE and ARAE runs.

    Learning rates, Adam constants, batch size and epoch counts are desk-scale defaults of our own;
    ``lam`` (the AAE reconstruction/adversarial trade-off) is 20.
    """

    mode: Mode = Mode.AAE
    lam: float = 20.0
    lam_arae: float = 0.01
    lr_ae: float = 1e-3
    lr_gan: float = 1e-4
    beta1_ae: float = 0.9
    beta1_gan: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 32
    epochs: int = 10
    n_critic: int = 5
    clip_norm: float = 5.0
    p_word_drop: float = 0.1
    max_shift: int = 3
    seed: int = 0
    checkpoint_every: int = 1
    prefetch_depth: int = 2
    log_wall_time: bool = True
    metric_hook: bool = False
    metric_samples: int = 200

    def validate(self) -> "TrainConfig":
        if self.lam < 0 or self.lam_arae < 0:
            raise ConfigError(f"adversarial weights must be non-negative, got lam={self.lam}, lam_arae={self.lam_arae}")
        if self.n_critic < 1:
            raise ConfigError(f"n_critic must be >= 1, got {self.n_critic}")
        for name in ("lr_ae", "lr_gan", "eps", "clip_norm"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("beta1_ae", "beta1_gan", "beta2"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ConfigError(f"{name} must lie in [0, 1), got {getattr(self, name)}")
        for name in ("batch_size", "metric_samples"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("epochs", "checkpoint_every", "prefetch_depth", "max_shift"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative, got {getattr(self, name)}")
        if not 0.0 <= self.p_word_drop < 1.0:
            raise ConfigError(f"p_word_drop must lie in [0, 1), got {self.p_word_drop}")
        return self

    def to_dict(self) -> dict:
        values = asdict(self)
        values["mode"] = self.mode.value
        return values

    @classmethod
    def from_dict(cls, values: dict) -> "TrainConfig":
        return cls(**{**values, "mode": Mode(values.get("mode", Mode.AAE))})


__all__ = ["TrainConfig"]

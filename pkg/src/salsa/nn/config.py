from dataclasses import asdict, dataclass, replace

from salsa.exceptions import ConfigError


@dataclass(frozen=True)
class ArchitectureConfig:
    """Network sizes shared by the autoencoder, the code GAN and the parameter-count formula.

    Defaults are the desk-scale preset; :data:`PAPER` holds the full-size values.
    """

    d_model: int = 64
    n_heads: int = 8
    n_blocks_ae: int = 2
    n_blocks_gan: int = 2
    d_ff: int | None = None
    dropout_p: float = 0.1
    max_len: int = 20
    d_code: int = 128
    d_noise: int = 100
    vocab_size: int = 0
    spectral_norm: bool = True
    n_power_iters: int = 1
    layer_norm_eps: float = 1e-5

    @property
    def ff_size(self) -> int:
        return self.d_ff if self.d_ff is not None else 4 * self.d_model

    @property
    def head_dim(self) -> int:
        return self.d_model // self.n_heads

    def validate(self) -> "ArchitectureConfig":
        for name in ("d_model", "n_heads", "n_blocks_ae", "n_blocks_gan", "max_len", "d_code", "d_noise", "n_power_iters"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.d_ff is not None and self.d_ff < 1:
            raise ConfigError(f"d_ff must be >= 1, got {self.d_ff}")
        if self.d_model % self.n_heads:
            raise ConfigError(f"d_model ({self.d_model}) must be a multiple of n_heads ({self.n_heads})")
        if self.d_model % 2:
            raise ConfigError(f"d_model must be even for sinusoidal positional encodings, got {self.d_model}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError(f"dropout_p must lie in [0, 1), got {self.dropout_p}")
        if self.layer_norm_eps <= 0:
            raise ConfigError(f"layer_norm_eps must be positive, got {self.layer_norm_eps}")
        if self.vocab_size < 0:
            raise ConfigError(f"vocab_size must be non-negative, got {self.vocab_size}")
        return self

    def with_vocab(self, vocab_size: int) -> "ArchitectureConfig":
        return replace(self, vocab_size=vocab_size)

    def to_dict(self) -> dict:
        return asdict(self)


DESK = ArchitectureConfig()
PAPER = ArchitectureConfig(d_model=304, n_heads=8, n_blocks_ae=3, n_blocks_gan=3, max_len=50)

PRESETS = {"desk": DESK, "paper": PAPER}

__all__ = ["DESK", "PAPER", "PRESETS", "ArchitectureConfig"]

"""The four networks of the self-attentive adversarial text autoencoder.

An encoder and a decoder (layer-normed Transformer blocks) learn to reconstruct sentences
through a fixed-size latent code. The code distribution is then shaped adversarially:

* ``AAE`` mode pulls encoder codes onto the unit sphere and trains a discriminator to tell them
  apart from uniform prior samples; new sentences decode prior samples.
* ``ARAE`` mode trains a generator that maps Gaussian noise to codes against a WGAN critic that
  compares them with encoder codes; new sentences decode generator outputs.

Generator and discriminator are spectrally normalized self-attention stacks without layer norm.
Parameters live in one :class:`~salsa.nn.ParameterStore` under the prefixes ``embedding.``,
``encoder.``, ``decoder.``, ``generator.`` and ``discriminator.``.
"""
import logging
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import softmax as np_softmax

from salsa.autograd import Rng, Tensor, expand, gather, l2_normalize, masked_mean, no_grad
from salsa.autograd.functional import dropout
from salsa.autograd.tensor import scale
from salsa.data.bpe import END, PAD, START
from salsa.data.sequences import TokenBatch, TokenSequence
from salsa.exceptions import ConfigError
from salsa.nn import EVAL, ArchitectureConfig, ForwardContext, NormVariant, ParameterStore, positional_encoding
from salsa.nn.layers import (
    init_decoder_block,
    init_encoder_block,
    init_linear,
    key_padding_mask,
    linear,
    transformer_decoder_block,
    transformer_encoder_block,
)

logger = logging.getLogger(__name__)


class Mode(str, Enum):
    AAE = "aae"
    ARAE = "arae"


# Which parameters each training phase may update.
PHASE_PREFIXES = {
    "ae": ("embedding.", "encoder.", "decoder."),
    "encoder": ("embedding.", "encoder."),
    "discriminator": ("discriminator.",),
    "generator": ("generator.",),
}


@dataclass(frozen=True)
class SamplingStrategy:
    """Greedy decoding when ``temperature`` is None, otherwise sampling from ``softmax(logits / τ)``."""

    temperature: float | None = None

    @classmethod
    def parse(cls, text: str) -> "SamplingStrategy":
        """Parse ``greedy`` or ``temp=τ``."""
        text = text.strip().lower()
        if text == "greedy":
            return cls()
        if text.startswith("temp="):
            try:
                tau = float(text[len("temp="):])
            except ValueError as e:
                raise ConfigError(f"cannot parse temperature in strategy {text!r}") from e
            if not tau > 0:
                raise ConfigError(f"temperature must be positive, got {tau}")
            return cls(temperature=tau)
        raise ConfigError(f"unknown sampling strategy {text!r}; use 'greedy' or 'temp=<tau>'")

    def __str__(self) -> str:
        return "greedy" if self.temperature is None else f"temp={self.temperature:g}"


GREEDY = SamplingStrategy()


def _mha_count(d: int) -> int:
    return 4 * (d * d + d)


def _ff_count(d: int, f: int) -> int:
    return 2 * d * f + f + d


def expected_parameter_count(arch: ArchitectureConfig, mode: Mode) -> dict[str, int]:
    """Closed-form parameter counts per network.

    With ``d`` the model width, ``f`` the feed-forward width, ``c`` the code size, ``n`` the noise
    size, ``V`` the vocabulary, ``L`` the autoencoder depth and ``N`` the GAN depth::

        attention      = 4 (d² + d)
        feed-forward   = 2 d f + f + d
        embedding      = V d
        encoder        = L (attention + feed-forward + 4 d) + d c + c
        decoder        = c d + d + L (2 attention + feed-forward + 6 d) + d V + V
        generator      = n d + d + N (attention + feed-forward) + d c + c      (ARAE only)
        discriminator  = c d + d + N (attention + feed-forward) + d + 1
    """
    d, f, c, n, v = arch.d_model, arch.ff_size, arch.d_code, arch.d_noise, arch.vocab_size
    gan_block = _mha_count(d) + _ff_count(d, f)
    counts = {
        "embedding": v * d,
        "encoder": arch.n_blocks_ae * (_mha_count(d) + _ff_count(d, f) + 4 * d) + d * c + c,
        "decoder": c * d + d + arch.n_blocks_ae * (2 * _mha_count(d) + _ff_count(d, f) + 6 * d) + d * v + v,
        "generator": n * d + d + arch.n_blocks_gan * gan_block + d * c + c if mode is Mode.ARAE else 0,
        "discriminator": c * d + d + arch.n_blocks_gan * gan_block + d + 1,
    }
    counts["total"] = sum(counts.values())
    return counts


def sample_prior(d_code: int, rng: Rng, n: int | None = None) -> np.ndarray:
    """Uniform samples on the unit sphere: standard normal vectors divided by their norm."""
    if d_code < 1:
        raise ConfigError(f"d_code must be >= 1, got {d_code}")
    z = rng.normal((d_code,) if n is None else (n, d_code))
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def _as_batch(tokens) -> tuple[TokenBatch, bool]:
    if isinstance(tokens, TokenSequence):
        return TokenBatch.stack([tokens]), True
    return tokens, False


class SalsaModel:
    """Encoder, decoder, code generator (ARAE) and code discriminator sharing one parameter store."""

    def __init__(self, arch: ArchitectureConfig, mode: Mode, store: ParameterStore):
        self.arch = arch
        self.mode = Mode(mode)
        self.store = store
        self._positions: dict[int, Tensor] = {}

    @classmethod
    def build(cls, arch: ArchitectureConfig, mode: Mode, rng: Rng) -> "SalsaModel":
        """Initialize every network: Xavier-uniform matrices, zero biases, unit layer-norm gains.

        :raises ConfigError:
            If the architecture is invalid or carries no vocabulary size.
        """
        arch.validate()
        if arch.vocab_size <= len((PAD, START, END)):
            raise ConfigError(f"vocab_size must be set from the BPE model, got {arch.vocab_size}")
        mode = Mode(mode)
        d, sn, iters = arch.d_model, arch.spectral_norm, arch.n_power_iters
        store = ParameterStore()

        store.add("embedding.tokens", rng.normal((arch.vocab_size, d)) / np.sqrt(d))

        for i in range(arch.n_blocks_ae):
            init_encoder_block(store, f"encoder.blocks.{i}", arch, rng, NormVariant.LAYER_NORM)
        init_linear(store, "encoder.out", d, arch.d_code, rng)

        init_linear(store, "decoder.code", arch.d_code, d, rng)
        for i in range(arch.n_blocks_ae):
            init_decoder_block(store, f"decoder.blocks.{i}", arch, rng)
        init_linear(store, "decoder.out", d, arch.vocab_size, rng)

        if mode is Mode.ARAE:
            init_linear(store, "generator.noise", arch.d_noise, d, rng, sn, iters)
            for i in range(arch.n_blocks_gan):
                init_encoder_block(store, f"generator.blocks.{i}", arch, rng, NormVariant.SPECTRAL_ONLY)
            init_linear(store, "generator.out", d, arch.d_code, rng, sn, iters)

        init_linear(store, "discriminator.code", arch.d_code, d, rng, sn, iters)
        for i in range(arch.n_blocks_gan):
            init_encoder_block(store, f"discriminator.blocks.{i}", arch, rng, NormVariant.SPECTRAL_ONLY)
        init_linear(store, "discriminator.out", d, 1, rng, sn, iters)

        logger.info(f"Built {mode.value.upper()} model with {store.num_parameters():,} parameters")
        return cls(arch, mode, store)

    def context(self, training: bool, rng: Rng | None = None) -> ForwardContext:
        return ForwardContext(training=training, rng=rng)

    def phase_names(self, phase: str) -> list[str]:
        return self.store.names(PHASE_PREFIXES[phase])

    def positions(self, length: int) -> Tensor:
        if length not in self._positions:
            self._positions[length] = positional_encoding(length, self.arch.d_model)
        return self._positions[length]

    def _embed(self, ids: np.ndarray, ctx: ForwardContext) -> Tensor:
        x = scale(gather(self.store["embedding.tokens"], ids), np.sqrt(self.arch.d_model))
        x = x + self.positions(ids.shape[-1])
        return dropout(x, self.arch.dropout_p, ctx.rng, ctx.training)

    # -- autoencoder -----------------------------------------------------------------------------

    def encode(self, tokens: TokenBatch | TokenSequence, ctx: ForwardContext = EVAL) -> Tensor:
        """Codes ``[B, d_code]`` (or ``[d_code]`` for a single sequence).

        Pad positions are excluded from attention keys and from the mean pool, so the code does
        not depend on what the pad region holds. AAE codes are projected onto the unit sphere.
        """
        batch, single = _as_batch(tokens)
        x = self._embed(batch.ids, ctx)
        keys = key_padding_mask(batch.lengths, batch.max_len)
        for i in range(self.arch.n_blocks_ae):
            x = transformer_encoder_block(x, self.store, f"encoder.blocks.{i}", self.arch, ctx, NormVariant.LAYER_NORM, keys)
        code = linear(masked_mean(x, batch.mask), self.store, "encoder.out", ctx)
        if self.mode is Mode.AAE:
            code = l2_normalize(code)
        return code.reshape(self.arch.d_code) if single else code

    def _memory(self, code: Tensor, ctx: ForwardContext) -> Tensor:
        projected = linear(code, self.store, "decoder.code", ctx)
        return projected.reshape(code.shape[0], 1, self.arch.d_model)

    def _decode_inputs(self, inputs: np.ndarray, memory: Tensor, ctx: ForwardContext) -> Tensor:
        x = self._embed(inputs, ctx)
        for i in range(self.arch.n_blocks_ae):
            x = transformer_decoder_block(x, memory, self.store, f"decoder.blocks.{i}", self.arch, ctx)
        return linear(x, self.store, "decoder.out", ctx)

    def decode_teacher_forced(self, code: Tensor, target: TokenBatch | TokenSequence, ctx: ForwardContext = EVAL) -> Tensor:
        """Next-token logits ``[B, T, V]`` for the start-shifted targets, conditioned on ``code``.

        The code becomes a length-one memory for the cross-attention of every decoder block.
        """
        batch, single = _as_batch(target)
        if single:
            code = code.reshape(1, self.arch.d_code)
        logits = self._decode_inputs(batch.decoder_inputs(), self._memory(code, ctx), ctx)
        return logits.reshape(batch.max_len, self.arch.vocab_size) if single else logits

    def decode_sample(
        self,
        codes,
        strategy: SamplingStrategy = GREEDY,
        max_len: int | None = None,
        rng: Rng | None = None,
    ) -> list[TokenSequence]:
        """Autoregressive generation from the start token, one sequence per code row.

        Each row stops at its first end token or after ``max_len`` tokens. Pad and start ids are
        never emitted. Greedy decoding picks the lowest id among maximal logits.
        """
        max_len = max_len or self.arch.max_len
        codes = np.atleast_2d(codes.data if isinstance(codes, Tensor) else np.asarray(codes, dtype=np.float64))
        n = codes.shape[0]
        if strategy.temperature is not None and rng is None:
            raise ConfigError("temperature sampling needs an Rng")
        if n == 0:
            return []

        tokens = np.full((n, max_len + 1), PAD, dtype=np.int64)
        tokens[:, 0] = START
        lengths = np.full(n, max_len, dtype=np.int64)
        finished = np.zeros(n, dtype=bool)
        with no_grad():
            memory = self._memory(Tensor(codes), EVAL)
            for t in range(max_len):
                logits = self._decode_inputs(tokens[:, : t + 1], memory, EVAL).data[:, -1, :]
                logits[:, [PAD, START]] = -np.inf
                if strategy.temperature is None:
                    chosen = logits.argmax(axis=-1)
                else:
                    probs = np_softmax(logits / strategy.temperature, axis=-1)
                    draws = rng.random(n)
                    chosen = np.array([np.searchsorted(np.cumsum(p), u, side="right") for p, u in zip(probs, draws, strict=True)])
                    chosen = np.minimum(chosen, self.arch.vocab_size - 1)
                chosen = np.where(finished, PAD, chosen)
                tokens[:, t + 1] = chosen
                ended = ~finished & (chosen == END)
                lengths[ended] = t + 1
                finished |= ended
                if finished.all():
                    break
        return [TokenSequence(ids=row[1:].copy(), length=int(length)) for row, length in zip(tokens, lengths, strict=True)]

    # -- code GAN --------------------------------------------------------------------------------

    def _gan_stack(self, h: Tensor, prefix: str, ctx: ForwardContext, dropout_p: float) -> Tensor:
        """Broadcast ``h[B, d]`` over T positions, add encodings before every block, mean-pool."""
        x = expand(h, 1, self.arch.max_len)
        positions = self.positions(self.arch.max_len)
        for i in range(self.arch.n_blocks_gan):
            x = transformer_encoder_block(
                x + positions, self.store, f"{prefix}.blocks.{i}", self.arch, ctx, NormVariant.SPECTRAL_ONLY, None, dropout_p
            )
        return x.mean(axis=1)

    def generate_code(self, noise, ctx: ForwardContext = EVAL) -> Tensor:
        """ARAE generator: noise ``[B, d_noise]`` (or ``[d_noise]``) to unconstrained codes.

        :raises ConfigError:
            If the model has no generator or the noise width is wrong.
        """
        if self.mode is not Mode.ARAE:
            raise ConfigError("AAE models sample codes from the sphere prior and have no generator")
        noise = noise if isinstance(noise, Tensor) else Tensor(noise)
        if noise.shape[-1] != self.arch.d_noise or noise.ndim not in (1, 2):
            raise ConfigError(f"generator expects noise of width {self.arch.d_noise}, got shape {noise.shape}")
        single = noise.ndim == 1
        if single:
            noise = noise.reshape(1, self.arch.d_noise)
        h = linear(noise, self.store, "generator.noise", ctx)
        code = linear(self._gan_stack(h, "generator", ctx, 0.0), self.store, "generator.out", ctx)
        return code.reshape(self.arch.d_code) if single else code

    def sample_noise(self, n: int, rng: Rng) -> np.ndarray:
        return rng.normal((n, self.arch.d_noise))

    def sample_codes(self, n: int, rng: Rng) -> np.ndarray:
        """Codes to decode into new sentences: sphere prior (AAE) or generator output (ARAE)."""
        if self.mode is Mode.AAE:
            return sample_prior(self.arch.d_code, rng, n)
        with no_grad():
            return self.generate_code(self.sample_noise(n, rng)).data

    def discriminate(self, code, ctx: ForwardContext = EVAL) -> Tensor:
        """Raw scores ``[B]`` (or a scalar for one code): logits in AAE mode, critic values in ARAE mode."""
        code = code if isinstance(code, Tensor) else Tensor(code)
        single = code.ndim == 1
        if single:
            code = code.reshape(1, self.arch.d_code)
        h = linear(code, self.store, "discriminator.code", ctx)
        pooled = self._gan_stack(h, "discriminator", ctx, self.arch.dropout_p)
        score = linear(pooled, self.store, "discriminator.out", ctx)
        return score.reshape(()) if single else score.reshape(code.shape[0])

    # -- text helpers ----------------------------------------------------------------------------

    def generate(self, n: int, rng: Rng, strategy: SamplingStrategy = GREEDY, batch_size: int = 64) -> list[TokenSequence]:
        """Sample ``n`` codes and decode them in batches."""
        if n == 0:
            return []
        codes = self.sample_codes(n, rng)
        out: list[TokenSequence] = []
        for start in range(0, n, batch_size):
            out += self.decode_sample(codes[start: start + batch_size], strategy, rng=rng)
        return out


def decode_texts(sequences: Sequence[TokenSequence], bpe) -> list[str]:
    return [bpe.decode(s.ids[: s.length]) for s in sequences]


__all__ = [
    "GREEDY",
    "PHASE_PREFIXES",
    "Mode",
    "SalsaModel",
    "SamplingStrategy",
    "decode_texts",
    "expected_parameter_count",
    "sample_prior",
]

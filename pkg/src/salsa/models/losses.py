"""Per-phase objectives for AAE and ARAE training.

Every function returns a scalar :class:`~salsa.autograd.Tensor`. Adversarial terms are written
in terms of raw discriminator scores ``s``: the AAE discriminator probability is ``sigmoid(s)``,
so ``-log D = softplus(-s)`` and ``-log(1 - D) = softplus(s)``; the ARAE critic uses ``s``
directly as ``f``.
"""
import logging
from collections.abc import Iterable
from typing import NamedTuple

import numpy as np

from salsa.autograd import Rng, Tensor, cross_entropy, no_grad, softplus
from salsa.data.sequences import TokenBatch
from salsa.models.salsa import SalsaModel, sample_prior
from salsa.nn import EVAL, ForwardContext

logger = logging.getLogger(__name__)


class AaeLosses(NamedTuple):
    reconstruction: Tensor
    discriminator: Tensor
    encoder_adversarial: Tensor


class AraeLosses(NamedTuple):
    reconstruction: Tensor
    critic: Tensor
    generator: Tensor
    encoder_adversarial: Tensor


def reconstruction_loss(model: SalsaModel, batch: TokenBatch, ctx: ForwardContext, inputs: TokenBatch | None = None) -> Tensor:
    """Mean token cross-entropy of decoding ``encode(inputs)`` into the clean ``batch`` targets."""
    code = model.encode(inputs if inputs is not None else batch, ctx)
    logits = model.decode_teacher_forced(code, batch, ctx)
    return cross_entropy(logits, batch.ids, batch.mask)


def aae_discriminator_loss(model: SalsaModel, encoded: Tensor, prior: Tensor, ctx: ForwardContext) -> Tensor:
    """``mean(-log D(prior)) + mean(-log(1 - D(enc(x))))``."""
    return softplus(-model.discriminate(prior, ctx)).mean() + softplus(model.discriminate(encoded, ctx)).mean()


def aae_encoder_adversarial_loss(model: SalsaModel, encoded: Tensor, ctx: ForwardContext) -> Tensor:
    """Non-saturating ``mean(-log D(enc(x)))``."""
    return softplus(-model.discriminate(encoded, ctx)).mean()


def arae_critic_loss(model: SalsaModel, real: Tensor, fake: Tensor, ctx: ForwardContext) -> Tensor:
    """WGAN critic objective ``mean f(G(z)) - mean f(enc(x))``."""
    return model.discriminate(fake, ctx).mean() - model.discriminate(real, ctx).mean()


def arae_generator_loss(model: SalsaModel, fake: Tensor, ctx: ForwardContext) -> Tensor:
    return -model.discriminate(fake, ctx).mean()


def arae_encoder_adversarial_loss(model: SalsaModel, real: Tensor, ctx: ForwardContext, weight: float) -> Tensor:
    """``weight · mean f(enc(x))``; its encoder gradient is the critic-loss gradient reversed and scaled."""
    return model.discriminate(real, ctx).mean() * weight


def aae_losses(model: SalsaModel, batch: TokenBatch, rng: Rng, ctx: ForwardContext | None = None) -> AaeLosses:
    """All three AAE terms on one batch. The encoder objective is ``reconstruction + λ · encoder_adversarial``."""
    ctx = ctx or model.context(training=True, rng=rng)
    code = model.encode(batch, ctx)
    logits = model.decode_teacher_forced(code, batch, ctx)
    prior = Tensor(sample_prior(model.arch.d_code, rng, len(batch)))
    return AaeLosses(
        reconstruction=cross_entropy(logits, batch.ids, batch.mask),
        discriminator=aae_discriminator_loss(model, code, prior, ctx),
        encoder_adversarial=aae_encoder_adversarial_loss(model, code, ctx),
    )


def arae_losses(
    model: SalsaModel,
    batch: TokenBatch,
    noise: np.ndarray,
    rng: Rng,
    inputs: TokenBatch | None = None,
    ctx: ForwardContext | None = None,
    weight: float = 0.01,
) -> AraeLosses:
    """All ARAE terms on one batch; ``inputs`` are the noised encoder inputs (``batch`` if None)."""
    ctx = ctx or model.context(training=True, rng=rng)
    real = model.encode(inputs if inputs is not None else batch, ctx)
    logits = model.decode_teacher_forced(real, batch, ctx)
    fake = model.generate_code(noise, ctx)
    return AraeLosses(
        reconstruction=cross_entropy(logits, batch.ids, batch.mask),
        critic=arae_critic_loss(model, real, fake, ctx),
        generator=arae_generator_loss(model, fake, ctx),
        encoder_adversarial=arae_encoder_adversarial_loss(model, real, ctx, weight),
    )


def reconstruction_accuracy(model: SalsaModel, batches: Iterable[TokenBatch]) -> float:
    """Teacher-forced token accuracy over non-pad targets, in evaluation mode."""
    correct = total = 0
    with no_grad():
        for batch in batches:
            logits = model.decode_teacher_forced(model.encode(batch, EVAL), batch, EVAL).data
            hits = (logits.argmax(axis=-1) == batch.ids) & batch.mask
            correct += int(hits.sum())
            total += int(batch.mask.sum())
    return correct / total if total else 0.0


__all__ = [
    "AaeLosses",
    "AraeLosses",
    "aae_discriminator_loss",
    "aae_encoder_adversarial_loss",
    "aae_losses",
    "arae_critic_loss",
    "arae_encoder_adversarial_loss",
    "arae_generator_loss",
    "arae_losses",
    "reconstruction_accuracy",
    "reconstruction_loss",
]

"""AAE and ARAE training loops.

Each batch runs a fixed sequence of phases. A phase computes one loss, back-propagates it and
steps only the parameters it owns:

========================  ==========================================  ===========
phase                     parameters stepped                          optimizer
========================  ==========================================  ===========
``ae``                    embedding, encoder, decoder                 ``ae``
``discriminator``         discriminator (AAE)                         ``gan``
``critic``                discriminator (ARAE)                        ``gan``
``encoder``               embedding, encoder                          ``ae``
``generator``             generator (ARAE)                            ``gan``
========================  ==========================================  ===========

One :class:`~salsa.autograd.Rng` drives shuffling, dropout, input noise, prior and generator
noise, so a run is reproducible from its seed and resumable from any epoch checkpoint.
"""
import logging
from collections.abc import Sequence
from pathlib import Path

import numpy as np
from tqdm import tqdm

from salsa.autograd import Rng, Tensor, no_grad
from salsa.data.sequences import TokenBatch, TokenSequence, make_batches, noise_batch, prefetch
from salsa.exceptions import ConfigError, ContractError, TrainingDivergenceError
from salsa.io.checkpoint import Checkpoint, load_checkpoint, restore_parameters, save_checkpoint
from salsa.models.losses import (
    aae_discriminator_loss,
    aae_encoder_adversarial_loss,
    arae_critic_loss,
    arae_encoder_adversarial_loss,
    arae_generator_loss,
    reconstruction_accuracy,
    reconstruction_loss,
)
from salsa.models.salsa import Mode, SalsaModel, decode_texts, sample_prior
from salsa.training.config import TrainConfig
from salsa.training.log import TrainLog
from salsa.training.optim import Adam, clip_grad_norm

logger = logging.getLogger(__name__)

ACCURACY_SAMPLE = 256


class Trainer:
    """Owns the optimizers, the random stream, the loss log and the checkpoint schedule of one run.

    :param SalsaModel model:
        Model to train in place.

    :param TrainConfig config:
        Schedule; ``config.mode`` must match ``model.mode``.

    :param Path out_dir:
        Directory for ``train_log.csv`` and checkpoints. Nothing is written when None.

    :param dict run_config:
        Flat run configuration stored in checkpoint headers.

    :param bpe:
        Optional BPE model, needed only by the epoch metric hook.
    """

    def __init__(self, model: SalsaModel, config: TrainConfig, out_dir: Path | None = None, run_config: dict | None = None, bpe=None):
        config.validate()
        if config.mode is not model.mode:
            raise ConfigError(f"train config mode {config.mode.value} does not match model mode {model.mode.value}")
        self.model = model
        self.config = config
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.run_config = run_config or {}
        self.bpe = bpe
        self.rng = Rng(config.seed)
        self.step = 0
        self.epoch = 0
        store = model.store
        self.optimizers = {
            "ae": Adam(store, model.phase_names("ae"), config.lr_ae, config.beta1_ae, config.beta2, config.eps),
            "gan": Adam(
                store,
                model.phase_names("discriminator") + model.phase_names("generator"),
                config.lr_gan,
                config.beta1_gan,
                config.beta2,
                config.eps,
            ),
        }
        self.log = TrainLog(self.out_dir / "train_log.csv" if self.out_dir else None, wall_time=config.log_wall_time)

    # -- state -----------------------------------------------------------------------------------

    def save(self, path: Path) -> Path:
        return save_checkpoint(
            path, self.model, self.config.to_dict(), self.run_config, self.rng, self.step, self.epoch, self.optimizers
        )

    def restore(self, ckpt: Checkpoint) -> None:
        """Continue from a checkpoint written by :meth:`save` at an epoch boundary."""
        restore_parameters(self.model.store, ckpt)
        for group, opt in self.optimizers.items():
            if group in ckpt.adam:
                opt.load_state_dict(ckpt.adam[group])
        if ckpt.rng_state is not None:
            self.rng.set_state(ckpt.rng_state)
        self.step, self.epoch = ckpt.step, ckpt.epoch
        self.log.rewind(self.epoch)
        logger.info(f"Resumed at epoch {self.epoch}, step {self.step}")

    def resume(self, path: Path) -> None:
        self.restore(load_checkpoint(path))

    # -- phases ----------------------------------------------------------------------------------

    def _apply(self, loss: Tensor, phase: str, name: str, optimizer: str, names: list[str], clip: bool, value: float | None = None):
        """Back-propagate ``loss`` and step ``names``; abort with a diagnostic checkpoint on a non-finite loss or gradient."""
        value = loss.item() if value is None else value
        if not np.isfinite(loss.item()):
            logger.error(f"Loss {name} is {value} at step {self.step} (epoch {self.epoch}, phase {phase})")
            if self.out_dir is not None:
                self.save(self.out_dir / "diverged.ckpt")
            raise TrainingDivergenceError(f"loss {name!r} became non-finite at step {self.step}", name=name)
        self.model.store.zero_grad()
        loss.backward()
        if clip:
            clip_grad_norm(self.model.store, names, self.config.clip_norm)
        try:
            self.optimizers[optimizer].step(names)
        except TrainingDivergenceError:
            if self.out_dir is not None:
                self.save(self.out_dir / "diverged.ckpt")
            raise
        self.log.record(self.step, self.epoch, phase, name, value)

    def _context(self):
        return self.model.context(training=True, rng=self.rng)

    def _encode_detached(self, batch: TokenBatch) -> Tensor:
        with no_grad():
            return self.model.encode(batch, self._context())

    def aae_step(self, batch: TokenBatch) -> None:
        model, cfg = self.model, self.config
        ctx = self._context()
        self._apply(reconstruction_loss(model, batch, ctx), "ae", "reconstruction", "ae", model.phase_names("ae"), clip=True)

        prior = Tensor(sample_prior(model.arch.d_code, self.rng, len(batch)))
        disc = aae_discriminator_loss(model, self._encode_detached(batch), prior, ctx)
        self._apply(disc, "discriminator", "discriminator", "gan", model.phase_names("discriminator"), clip=False)

        if cfg.lam > 0:
            adversarial = aae_encoder_adversarial_loss(model, model.encode(batch, ctx), ctx)
            self._apply(
                adversarial * cfg.lam, "encoder", "encoder_adversarial", "ae", model.phase_names("encoder"),
                clip=True, value=adversarial.item(),
            )

    def arae_step(self, batch: TokenBatch) -> None:
        model, cfg = self.model, self.config
        ctx = self._context()
        noised = noise_batch(batch, cfg.p_word_drop, cfg.max_shift, self.rng)
        self._apply(
            reconstruction_loss(model, batch, ctx, inputs=noised), "ae", "reconstruction", "ae", model.phase_names("ae"), clip=True
        )

        for _ in range(cfg.n_critic):
            real = self._encode_detached(batch)
            with no_grad():
                fake = model.generate_code(model.sample_noise(len(batch), self.rng), ctx)
            critic = arae_critic_loss(model, real, fake, ctx)
            self._apply(critic, "critic", "critic", "gan", model.phase_names("discriminator"), clip=False)

        if cfg.lam_arae > 0:
            adversarial = arae_encoder_adversarial_loss(model, model.encode(batch, ctx), ctx, cfg.lam_arae)
            self._apply(adversarial, "encoder", "encoder_adversarial", "ae", model.phase_names("encoder"), clip=True)

        fake = model.generate_code(model.sample_noise(len(batch), self.rng), ctx)
        self._apply(arae_generator_loss(model, fake, ctx), "generator", "generator", "gan", model.phase_names("generator"), clip=False)

    # -- epochs ----------------------------------------------------------------------------------

    def _metric_hook(self) -> None:
        from salsa.metrics.bleu import bleu_tokens, self_bleu

        hook_rng = Rng(np.random.SeedSequence([self.config.seed, self.epoch]))
        texts = decode_texts(self.model.generate(self.config.metric_samples, hook_rng), self.bpe)
        tokens = [t for t in bleu_tokens(texts, self.bpe) if t]
        if len(tokens) >= 2:
            self.log.record(self.step, self.epoch - 1, "metric", "self_bleu_2", self_bleu(tokens, max_n=2))

    def fit(self, corpus: Sequence[TokenSequence], epochs: int | None = None, progress: bool = True) -> TrainLog:
        """Train until ``epochs`` epochs are complete (counting epochs restored from a checkpoint).

        :raises ContractError:
            If the corpus is empty.

        :raises TrainingDivergenceError:
            If a loss or gradient becomes non-finite.
        """
        if not corpus:
            raise ContractError("cannot train on an empty corpus")
        epochs = self.config.epochs if epochs is None else epochs
        step_fn = self.aae_step if self.model.mode is Mode.AAE else self.arae_step
        accuracy_sample = list(corpus[:ACCURACY_SAMPLE])
        mode = self.model.mode.value.upper()
        if self.epoch == 0:
            self.log.restart()

        for _ in tqdm(range(self.epoch, epochs), desc=f"{mode} epochs", disable=not progress, initial=self.epoch, total=epochs):
            batches = make_batches(corpus, self.config.batch_size, self.model.arch.max_len, self.rng)
            for batch in prefetch(batches, self.config.prefetch_depth):
                step_fn(batch)
                self.step += 1
            self.epoch += 1

            if self.config.metric_hook and self.bpe is not None:
                self._metric_hook()
            accuracy = reconstruction_accuracy(self.model, [TokenBatch.stack(accuracy_sample)])
            self.log.record(self.step, self.epoch - 1, "eval", "reconstruction_accuracy", accuracy)
            self.log.flush()
            summary = ", ".join(f"{k}={v:.4f}" for k, v in self.log.epoch_summary(self.epoch - 1).items())
            logger.info(f"{mode} epoch {self.epoch}/{epochs}: {summary}")

            if self.out_dir is not None and self.config.checkpoint_every and self.epoch % self.config.checkpoint_every == 0:
                self.save(self.out_dir / f"epoch-{self.epoch:06d}.ckpt")

        if self.out_dir is not None:
            self.save(self.out_dir / "final.ckpt")
        return self.log


def _train(mode: Mode, config: TrainConfig, data, model: SalsaModel, **kwargs) -> tuple[SalsaModel, TrainLog]:
    if config.mode is not mode:
        raise ConfigError(f"expected a {mode.value} train config, got {config.mode.value}")
    trainer = Trainer(model, config, **{k: v for k, v in kwargs.items() if k in ("out_dir", "run_config", "bpe")})
    if kwargs.get("resume") is not None:
        trainer.resume(kwargs["resume"])
    log = trainer.fit(data, progress=kwargs.get("progress", True))
    return model, log


def train_aae(config: TrainConfig, data, model: SalsaModel, **kwargs) -> tuple[SalsaModel, TrainLog]:
    """Alternate reconstruction, discriminator and λ-weighted encoder-adversarial updates per batch.

    Keyword arguments ``out_dir``, ``run_config``, ``bpe``, ``resume`` and ``progress`` are passed to :class:`Trainer`.
    """
    return _train(Mode.AAE, config, data, model, **kwargs)


def train_arae(config: TrainConfig, data, model: SalsaModel, **kwargs) -> tuple[SalsaModel, TrainLog]:
    """Denoising reconstruction, ``n_critic`` critic updates, encoder-adversarial and generator updates per batch."""
    return _train(Mode.ARAE, config, data, model, **kwargs)


__all__ = ["Trainer", "train_aae", "train_arae"]

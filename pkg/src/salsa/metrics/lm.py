"""Single-layer LSTM language model for forward and reverse perplexity."""
import logging
from collections.abc import Sequence
from dataclasses import asdict, dataclass

import numpy as np
from tqdm import tqdm

from salsa.autograd import Rng, Tensor, cross_entropy, gather, log_softmax, no_grad, stack
from salsa.data.sequences import TokenBatch, TokenSequence, make_batches
from salsa.exceptions import ConfigError, DataError
from salsa.nn import ParameterStore, init_lstm, lstm_step
from salsa.training.optim import Adam, clip_grad_norm

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LMConfig:
    d_embed: int = 64
    d_hidden: int = 256
    epochs: int = 20
    batch_size: int = 32
    lr: float = 1e-3
    clip_norm: float = 5.0
    max_len: int = 50

    def validate(self) -> "LMConfig":
        for name, value in asdict(self).items():
            if value <= 0:
                raise ConfigError(f"LM {name} must be positive, got {value}")
        return self


class LanguageModel:
    """Embedding, one LSTM layer and a vocabulary projection whose weights start at zero.

    With a zero output layer every next-token distribution is uniform, so an untrained model has
    perplexity exactly ``vocab_size``.
    """

    def __init__(self, vocab_size: int, config: LMConfig, rng: Rng):
        self.vocab_size = vocab_size
        self.config = config.validate()
        self.store = ParameterStore()
        self.store.add("lm.embedding", rng.normal((vocab_size, config.d_embed)) / np.sqrt(config.d_embed))
        init_lstm(self.store, "lm.lstm", config.d_embed, config.d_hidden, rng)
        self.store.add("lm.out.weight", np.zeros((config.d_hidden, vocab_size)))
        self.store.add("lm.out.bias", np.zeros(vocab_size))
        self.history: list[float] = []

    def logits(self, batch: TokenBatch) -> Tensor:
        """Teacher-forced next-token logits ``[B, T, V]``."""
        inputs = batch.decoder_inputs()
        n = len(batch)
        h = Tensor(np.zeros((n, self.config.d_hidden)))
        c = Tensor(np.zeros((n, self.config.d_hidden)))
        outputs = []
        for t in range(batch.max_len):
            h, c = lstm_step(gather(self.store["lm.embedding"], inputs[:, t]), h, c, self.store, "lm.lstm")
            outputs.append(h)
        hidden = stack(outputs, axis=1)
        return hidden @ self.store["lm.out.weight"] + self.store["lm.out.bias"]

    def loss(self, batch: TokenBatch) -> Tensor:
        return cross_entropy(self.logits(batch), batch.ids, batch.mask)

    def score(self, sequences: Sequence[TokenSequence]) -> np.ndarray:
        """Negative log-likelihood of each sequence, end token included."""
        out = []
        with no_grad():
            for start in range(0, len(sequences), self.config.batch_size):
                batch = TokenBatch.stack(sequences[start: start + self.config.batch_size])
                log_probs = log_softmax(self.logits(batch)).data
                picked = np.take_along_axis(log_probs, batch.ids[..., None], axis=-1)[..., 0]
                out.append(-np.where(batch.mask, picked, 0.0).sum(axis=1))
        return np.concatenate(out) if out else np.zeros(0)


def train_lm(corpus: Sequence[TokenSequence], vocab_size: int, config: LMConfig | None = None, seed: int = 0, progress: bool = False) -> LanguageModel:
    """Fit a language model with teacher forcing; identical inputs and seed give identical weights.

    :raises DataError:
        If the corpus is empty.
    """
    config = config or LMConfig()
    if not corpus:
        raise DataError("cannot train a language model on an empty corpus")
    rng = Rng(seed)
    lm = LanguageModel(vocab_size, config, rng)
    names = lm.store.names()
    optimizer = Adam(lm.store, names, config.lr)
    for epoch in tqdm(range(config.epochs), desc="LM epochs", disable=not progress):
        losses = []
        for batch in make_batches(corpus, config.batch_size, config.max_len, rng):
            loss = lm.loss(batch)
            lm.store.zero_grad()
            loss.backward()
            clip_grad_norm(lm.store, names, config.clip_norm)
            optimizer.step()
            losses.append(loss.item())
        lm.history.append(float(np.mean(losses)))
        logger.debug(f"LM epoch {epoch + 1}/{config.epochs}: loss {lm.history[-1]:.4f}")
    logger.info(f"Trained LSTM LM on {len(corpus)} sequences, final loss {lm.history[-1] if lm.history else float('nan'):.4f}")
    return lm


def perplexity(lm, sequences: Sequence[TokenSequence]) -> float:
    """``exp(total NLL / total tokens)`` for any model exposing ``score(sequences)``.

    :raises DataError:
        If no sequences are given.
    """
    if not sequences:
        raise DataError("perplexity needs at least one sentence")
    total_tokens = sum(s.length for s in sequences)
    return float(np.exp(np.sum(lm.score(sequences)) / total_tokens))


def forward_perplexity(reference: Sequence[TokenSequence], generated: Sequence[TokenSequence], vocab_size: int,
                       config: LMConfig | None = None, seed: int = 0) -> float:
    """Perplexity of generated sentences under an LM trained on real text."""
    if not generated:
        raise DataError("forward perplexity needs generated sentences")
    return perplexity(train_lm(reference, vocab_size, config, seed), generated)


def reverse_perplexity(generated: Sequence[TokenSequence], test: Sequence[TokenSequence], vocab_size: int,
                       config: LMConfig | None = None, seed: int = 0) -> float:
    """Perplexity of real test sentences under an LM trained on generated text."""
    if not generated:
        raise DataError("reverse perplexity needs generated sentences")
    return perplexity(train_lm(generated, vocab_size, config, seed), test)


__all__ = ["LMConfig", "LanguageModel", "forward_perplexity", "perplexity", "reverse_perplexity", "train_lm"]

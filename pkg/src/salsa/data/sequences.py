"""Fixed-length token sequences, batching and the denoising transforms applied to encoder inputs."""
import logging
import queue
import threading
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass

import numpy as np

from salsa.autograd import Rng
from salsa.data.bpe import END, PAD, START, UNK, BpeModel
from salsa.exceptions import ContractError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TokenSequence:
    """``ids`` of length T; the first ``length`` entries are real tokens (end token included), the rest pad."""

    ids: np.ndarray
    length: int

    @classmethod
    def from_tokens(cls, tokens: Sequence[int], max_len: int) -> "TokenSequence":
        """Truncate to ``max_len``, append the end token when it fits, pad the rest.

        :raises ContractError:
            If ``tokens`` is empty.
        """
        if len(tokens) == 0:
            raise ContractError("cannot build a token sequence from an empty sentence")
        real = list(tokens[:max_len])
        if len(real) < max_len:
            real.append(END)
        ids = np.full(max_len, PAD, dtype=np.int64)
        ids[: len(real)] = real
        return cls(ids=ids, length=len(real))

    @property
    def max_len(self) -> int:
        return int(self.ids.shape[0])

    @property
    def mask(self) -> np.ndarray:
        return np.arange(self.max_len) < self.length

    @property
    def content_length(self) -> int:
        """Number of real tokens excluding a trailing end token."""
        return self.length - 1 if self.ids[self.length - 1] == END else self.length

    def content(self) -> list[int]:
        return [int(i) for i in self.ids[: self.content_length]]


@dataclass(frozen=True)
class TokenBatch:
    ids: np.ndarray
    lengths: np.ndarray

    @classmethod
    def stack(cls, sequences: Sequence[TokenSequence]) -> "TokenBatch":
        return cls(
            ids=np.stack([s.ids for s in sequences]),
            lengths=np.array([s.length for s in sequences], dtype=np.int64),
        )

    def __len__(self) -> int:
        return int(self.ids.shape[0])

    @property
    def max_len(self) -> int:
        return int(self.ids.shape[1])

    @property
    def mask(self) -> np.ndarray:
        return np.arange(self.max_len)[None, :] < self.lengths[:, None]

    def decoder_inputs(self) -> np.ndarray:
        """Targets shifted right behind the start token."""
        shifted = np.full_like(self.ids, PAD)
        shifted[:, 0] = START
        shifted[:, 1:] = self.ids[:, :-1]
        return shifted

    def sequences(self) -> list[TokenSequence]:
        return [TokenSequence(ids=row.copy(), length=int(n)) for row, n in zip(self.ids, self.lengths, strict=True)]


def encode_corpus(sentences: Iterable[str], bpe: BpeModel, max_len: int) -> list[TokenSequence]:
    return [TokenSequence.from_tokens(bpe.encode(s), max_len) for s in sentences]


def filter_corpus(sentences: Iterable[str], bpe: BpeModel, max_tokens: int = 50) -> list[str]:
    """Keep sentences whose BPE length (start/end excluded) is at most ``max_tokens``."""
    sentences = list(sentences)
    kept = [s for s in sentences if len(bpe.encode(s)) <= max_tokens]
    logger.info(f"Kept {len(kept)}/{len(sentences)} sentences with at most {max_tokens} BPE tokens")
    return kept


def apply_word_noise(seq: TokenSequence, p_drop: float = 0.1, max_shift: int = 3, rng: Rng | None = None) -> TokenSequence:
    """Word dropout followed by a bounded local shuffle of the content tokens.

    Each content token is replaced by ``<unk>`` with probability ``p_drop``; then every token
    gets an offset drawn uniformly from ``[-max_shift, max_shift]`` and tokens are stably sorted
    by ``index + offset`` (ties by original index). The end token and the pad region are untouched.
    """
    if not 0.0 <= p_drop <= 1.0:
        raise ContractError(f"p_drop must lie in [0, 1], got {p_drop}")
    if max_shift < 0:
        raise ContractError(f"max_shift must be non-negative, got {max_shift}")
    n = seq.content_length
    tokens = seq.ids[:n].copy()
    if n and p_drop > 0.0:
        tokens[rng.random(n) < p_drop] = UNK
    if n > 1 and max_shift > 0:
        positions = np.arange(n)
        keys = positions + rng.integers(-max_shift, max_shift + 1, n)
        tokens = tokens[np.lexsort((positions, keys))]
    ids = seq.ids.copy()
    ids[:n] = tokens
    return TokenSequence(ids=ids, length=seq.length)


def noise_batch(batch: TokenBatch, p_drop: float, max_shift: int, rng: Rng) -> TokenBatch:
    return TokenBatch.stack([apply_word_noise(s, p_drop, max_shift, rng) for s in batch.sequences()])


def make_batches(corpus: Sequence, batch_size: int, max_len: int, rng: Rng) -> Iterator[TokenBatch]:
    """One epoch of shuffled batches; the final partial batch is kept.

    The shuffle is drawn when this function is called, not lazily, so consuming the batches on
    another thread never changes the order of draws from ``rng``.
    """
    if batch_size < 1:
        raise ContractError(f"batch_size must be >= 1, got {batch_size}")
    sequences = [s if isinstance(s, TokenSequence) else TokenSequence.from_tokens(s, max_len) for s in corpus]
    order = rng.permutation(len(sequences))
    chunks = [order[i: i + batch_size] for i in range(0, len(order), batch_size)]
    return (TokenBatch.stack([sequences[j] for j in chunk]) for chunk in chunks)


def prefetch(batches: Iterable[TokenBatch], depth: int = 2) -> Iterator[TokenBatch]:
    """Produce batches on a background thread through a queue holding at most ``depth`` items.

    An exception raised while producing is re-raised in the consumer after the batches produced
    before it. Closing the consumer early stops the worker.
    """
    if depth <= 0:
        yield from batches
        return
    buffer: queue.Queue = queue.Queue(maxsize=depth)
    stop = threading.Event()
    errors: list[BaseException] = []
    done = object()

    def put(item) -> bool:
        while not stop.is_set():
            try:
                buffer.put(item, timeout=0.05)
                return True
            except queue.Full:
                continue
        return False

    def produce():
        try:
            for item in batches:
                if not put(item):
                    return
        except BaseException as e:
            logger.error(f"Batch producer failed: {e}")
            errors.append(e)
        finally:
            put(done)

    worker = threading.Thread(target=produce, name="salsa-prefetch", daemon=True)
    worker.start()
    try:
        while (item := buffer.get()) is not done:
            yield item
    finally:
        stop.set()
        worker.join()
    if errors:
        raise errors[0]


__all__ = [
    "TokenBatch",
    "TokenSequence",
    "apply_word_noise",
    "encode_corpus",
    "filter_corpus",
    "make_batches",
    "noise_batch",
    "prefetch",
]

"""Byte-pair encoding tokenizer.

Words are whitespace-separated; each word is segmented into characters preceded by the
word-start marker ``▁``. Training greedily merges the most frequent adjacent pair (ties broken
lexicographically by pair) until the target vocabulary size is reached. Encoding replays the
merge list in order, which reproduces the training-time segmentation exactly.
"""
import logging
from collections import Counter
from collections.abc import Iterable, Sequence
from pathlib import Path

from salsa.exceptions import ConfigError, DataError

logger = logging.getLogger(__name__)

PAD, START, END, UNK = 0, 1, 2, 3
RESERVED = ("<pad>", "<s>", "</s>", "<unk>")
WORD_START = "▁"
HEADER = "#salsa-bpe 1"


def normalize_text(text: str) -> str:
    return " ".join(text.split())


def _apply_merge(symbols: list[str], pair: tuple[str, str]) -> list[str]:
    a, b = pair
    out = []
    i = 0
    while i < len(symbols):
        if i + 1 < len(symbols) and symbols[i] == a and symbols[i + 1] == b:
            out.append(a + b)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return out


class BpeModel:
    """Base symbols, ordered merges and the token/id bijection (ids 0-3 reserved)."""

    def __init__(self, base: Iterable[str], merges: Sequence[tuple[str, str]]):
        self.base = sorted(set(base))
        self.merges = [tuple(pair) for pair in merges]
        self.id_to_token = list(RESERVED) + self.base
        for a, b in self.merges:
            token = a + b
            if token not in self.id_to_token:
                self.id_to_token.append(token)
        self.token_to_id = {token: i for i, token in enumerate(self.id_to_token)}
        self._base_set = set(self.base)
        self._cache: dict[str, list[str]] = {}

    @property
    def vocab_size(self) -> int:
        return len(self.id_to_token)

    def segment_word(self, word: str) -> list[str]:
        if word not in self._cache:
            symbols = [WORD_START, *word]
            for pair in self.merges:
                if len(symbols) < 2:
                    break
                symbols = _apply_merge(symbols, pair)
            self._cache[word] = symbols
        return self._cache[word]

    def segment(self, text: str) -> list[str]:
        return [symbol for word in normalize_text(text).split() for symbol in self.segment_word(word)]

    def encode(self, text: str) -> list[int]:
        """Token ids for ``text``; symbols outside the base vocabulary become ``<unk>``."""
        return [self.token_to_id.get(symbol, UNK) for symbol in self.segment(text)]

    def decode(self, ids: Iterable[int]) -> str:
        """Text for ``ids`` with reserved tokens (pad, start, end, unk) stripped."""
        pieces = [self.id_to_token[i] for i in ids if i >= len(RESERVED)]
        return "".join(pieces).replace(WORD_START, " ").strip()

    def save(self, path: Path) -> None:
        lines = [HEADER, "#base " + " ".join(self.base)]
        lines += [f"{a} {b}" for a, b in self.merges]
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        logger.info(f"Wrote BPE model with {self.vocab_size} tokens to {path}")

    @classmethod
    def load(cls, path: Path) -> "BpeModel":
        path = Path(path)
        if not path.is_file():
            raise DataError(f"BPE model file not found: {path}")
        lines = path.read_text(encoding="utf-8").split("\n")
        if len(lines) < 2 or lines[0] != HEADER or not lines[1].startswith("#base "):
            raise DataError(f"{path} is not a salsa BPE model file")
        base = lines[1][len("#base "):].split(" ")
        merges = []
        for number, line in enumerate(lines[2:], start=3):
            if not line:
                continue
            parts = line.split(" ")
            if len(parts) != 2:
                raise DataError(f"{path}:{number}: expected one merge pair, got {line!r}")
            merges.append((parts[0], parts[1]))
        return cls(base, merges)

    def __eq__(self, other) -> bool:
        return isinstance(other, BpeModel) and self.base == other.base and self.merges == other.merges


def train_bpe(corpus: Iterable[str], target_vocab: int) -> BpeModel:
    """Learn merges from ``corpus`` until the vocabulary (reserved ids included) reaches ``target_vocab``.

    :param corpus:
        Training sentences.

    :param int target_vocab:
        Desired vocabulary size, at least the number of base symbols plus the 4 reserved tokens.

    :returns:
        The trained :class:`BpeModel`.

    :raises DataError:
        If the corpus holds no words.

    :raises ConfigError:
        If ``target_vocab`` is smaller than the base vocabulary plus the reserved tokens.

    **Example:**

    ```python
    bpe = train_bpe(["the cat sat", "the dog sat"], target_vocab=30)
    ids = bpe.encode("the cat")
    assert bpe.decode(ids) == "the cat"
    ```
    """
    words = Counter(word for sentence in corpus for word in normalize_text(sentence).split())
    if not words:
        logger.error("Cannot train BPE on an empty corpus")
        raise DataError("cannot train BPE on an empty corpus")

    base = sorted({ch for word in words for ch in word} | {WORD_START})
    floor = len(base) + len(RESERVED)
    if target_vocab < floor:
        raise ConfigError(f"target_vocab {target_vocab} is below base vocabulary + reserved tokens ({floor})")

    segments = {word: [WORD_START, *word] for word in words}
    vocab = set(RESERVED) | set(base)
    merges: list[tuple[str, str]] = []
    while len(vocab) < target_vocab:
        counts: Counter = Counter()
        for word, freq in words.items():
            symbols = segments[word]
            for pair in zip(symbols, symbols[1:], strict=False):
                counts[pair] += freq
        if not counts:
            logger.warning(f"BPE ran out of pairs at vocabulary size {len(vocab)} (target {target_vocab})")
            break
        best = min(counts.items(), key=lambda item: (-item[1], item[0]))[0]
        merges.append(best)
        vocab.add(best[0] + best[1])
        for word in words:
            segments[word] = _apply_merge(segments[word], best)

    logger.info(f"Trained BPE: {len(base)} base symbols, {len(merges)} merges, vocabulary {len(vocab)}")
    return BpeModel(base, merges)


__all__ = ["END", "PAD", "RESERVED", "START", "UNK", "WORD_START", "BpeModel", "normalize_text", "train_bpe"]

import json
import logging
from collections.abc import Iterable, Iterator
from pathlib import Path

from salsa.autograd import Rng
from salsa.data.bpe import normalize_text
from salsa.exceptions import ConfigError, DataError

logger = logging.getLogger(__name__)


def read_corpus(path: Path) -> list[str]:
    """Read a UTF-8 corpus with one sentence per line; blank lines are skipped.

    :param Path path:
        Corpus file.

    :returns:
        Whitespace-normalized sentences in file order.

    :raises DataError:
        If the file does not exist or cannot be decoded as UTF-8.
    """
    path = Path(path)
    if not path.is_file():
        logger.error(f"Corpus file not found: {path}")
        raise DataError(f"corpus file not found: {path}")
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except UnicodeDecodeError as e:
        logger.error(f"Corpus {path} is not valid UTF-8: {e}")
        raise DataError(f"corpus {path} is not valid UTF-8") from e
    sentences = [normalize_text(line) for line in lines]
    sentences = [s for s in sentences if s]
    logger.debug(f"Read {len(sentences)} sentences from {path}")
    return sentences


def write_corpus(sentences: Iterable[str], path: Path) -> Path:
    """Write sentences one per line, newline-terminated; an empty iterable yields an empty file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sentences = list(sentences)
    path.write_text("".join(f"{s}\n" for s in sentences), encoding="utf-8")
    logger.info(f"Wrote {len(sentences)} sentences to {path}")
    return path


def _iter_json_objects(text: str) -> Iterator[dict]:
    decoder = json.JSONDecoder()
    position = 0
    while True:
        while position < len(text) and text[position].isspace():
            position += 1
        if position >= len(text):
            return
        obj, position = decoder.raw_decode(text, position)
        yield obj


def load_gsc_sentences(path: Path) -> list[str]:
    """Source sentences of a downloaded Google sentence-compression dump.

    The dump is a stream of concatenated JSON objects; the sentence is read from
    ``graph.sentence`` (or ``source_tree.sentence`` in older releases).

    :raises DataError:
        If the file is missing or holds malformed JSON.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"sentence-compression dump not found: {path}")
    sentences = []
    try:
        for record in _iter_json_objects(path.read_text(encoding="utf-8")):
            holder = record.get("graph") or record.get("source_tree") or {}
            sentence = normalize_text(holder.get("sentence", ""))
            if sentence:
                sentences.append(sentence)
    except json.JSONDecodeError as e:
        logger.error(f"Malformed JSON in {path}: {e}")
        raise DataError(f"malformed sentence-compression dump {path}: {e}") from e
    logger.info(f"Loaded {len(sentences)} sentences from {path}")
    return sentences


def split_corpus(sentences: list[str], test_fraction: float, rng: Rng) -> tuple[list[str], list[str]]:
    """Seeded shuffle into ``(train, test)``; the test part holds ``round(n * test_fraction)`` sentences."""
    if not 0.0 <= test_fraction < 1.0:
        raise ConfigError(f"test_fraction must lie in [0, 1), got {test_fraction}")
    order = rng.permutation(len(sentences))
    n_test = int(round(len(sentences) * test_fraction))
    test = [sentences[i] for i in order[:n_test]]
    train = [sentences[i] for i in order[n_test:]]
    return train, test


__all__ = ["load_gsc_sentences", "read_corpus", "split_corpus", "write_corpus"]

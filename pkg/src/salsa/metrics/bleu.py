"""Corpus-level BLEU and Self-BLEU over token sequences.

Hypothesis n-gram counts are clipped by the largest count of that n-gram in any single
reference of the reference set. Clipped counts and hypothesis totals are summed over the corpus
before forming precisions. A zero precision is floored at :data:`SMOOTHING_FLOOR` so scores stay
defined on tiny corpora. The effective reference length of a hypothesis is the closest reference
length (ties go to the shorter one).
"""
import bisect
import logging
import math
import os
from collections import Counter
from collections.abc import Hashable, Sequence

import numpy as np
from joblib import Parallel, delayed

from salsa.exceptions import ConfigError, DataError

logger = logging.getLogger(__name__)

SMOOTHING_FLOOR = 1e-9
MAX_ORDER = 5

Tokens = Sequence[Hashable]


def ngram_counts(tokens: Tokens, max_n: int = MAX_ORDER) -> dict[int, Counter]:
    """Counts of every n-gram of orders 1..``max_n``, keyed by order."""
    tokens = tuple(tokens)
    return {n: Counter(tokens[i: i + n] for i in range(len(tokens) - n + 1)) for n in range(1, max_n + 1)}


def closest_length(hyp_len: int, lengths: Sequence[int]) -> int:
    """Reference length closest to ``hyp_len`` from sorted distinct ``lengths``; ties to the shorter."""
    i = bisect.bisect_left(lengths, hyp_len)
    if i == len(lengths):
        return lengths[-1]
    if lengths[i] == hyp_len or i == 0:
        return lengths[i]
    below, above = lengths[i - 1], lengths[i]
    return below if hyp_len - below <= above - hyp_len else above


def score_from_stats(matches: Sequence[float], totals: Sequence[float], hyp_len: int, ref_len: int) -> float:
    """Geometric mean of floored precisions times the brevity penalty."""
    if hyp_len == 0:
        return 0.0
    log_precision = 0.0
    for match, total in zip(matches, totals, strict=True):
        precision = match / total if total > 0 and match > 0 else SMOOTHING_FLOOR
        log_precision += math.log(precision)
    log_precision /= len(matches)
    brevity = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return brevity * math.exp(log_precision)


def _check_order(max_n: int) -> None:
    if not 1 <= max_n <= MAX_ORDER:
        raise ConfigError(f"BLEU order must lie in 1..{MAX_ORDER}, got {max_n}")


def bleu(hypotheses: Sequence[Tokens], references: Sequence[Tokens], max_n: int = 4) -> float:
    """Corpus BLEU-``max_n`` of ``hypotheses`` against the whole ``references`` set.

    :raises DataError:
        If either set is empty.

    **Example:**

    ```python
    bleu([["the", "the", "the", "the"]], [["the", "cat"]], max_n=1)  # 0.25
    ```
    """
    _check_order(max_n)
    if not hypotheses:
        raise DataError("BLEU needs at least one hypothesis")
    if not references:
        raise DataError("BLEU needs at least one reference")
    best: dict[tuple, int] = {}
    for ref in references:
        for counts in ngram_counts(ref, max_n).values():
            for gram, count in counts.items():
                if count > best.get(gram, 0):
                    best[gram] = count
    lengths = sorted({len(ref) for ref in references})

    matches, totals = [0] * max_n, [0] * max_n
    hyp_len = ref_len = 0
    for hyp in hypotheses:
        hyp_len += len(hyp)
        ref_len += closest_length(len(hyp), lengths)
        for n, counts in ngram_counts(hyp, max_n).items():
            matches[n - 1] += sum(min(count, best.get(gram, 0)) for gram, count in counts.items())
            totals[n - 1] += sum(counts.values())
    return score_from_stats(matches, totals, hyp_len, ref_len)


def _leave_one_out_scores(indices, counts, top, lengths_counter: Counter, sentences, max_n: int) -> list[float]:
    scores = []
    for i in indices:
        others = lengths_counter.copy()
        others[len(sentences[i])] -= 1
        lengths = sorted(length for length, c in others.items() if c > 0)
        matches, totals = [0] * max_n, [0] * max_n
        for n, grams in counts[i].items():
            for gram, count in grams.items():
                first, owner, second = top[gram]
                best = second if owner == i else first
                matches[n - 1] += min(count, best)
            totals[n - 1] = sum(grams.values())
        scores.append(score_from_stats(matches, totals, len(sentences[i]), closest_length(len(sentences[i]), lengths)))
    return scores


def self_bleu(sentences: Sequence[Tokens], max_n: int = 4, n_jobs: int | None = None) -> float:
    """Mean over sentences of BLEU(sentence, all other sentences).

    For every n-gram the two largest per-sentence counts (and the owner of the largest) are kept,
    so the reference maximum with one sentence left out is available without recounting. Sentences
    are scored in ``n_jobs`` joblib workers (``$SALSA_N_JOBS`` or 1 when None).

    :raises DataError:
        If fewer than two sentences are given.
    """
    _check_order(max_n)
    if len(sentences) < 2:
        raise DataError(f"Self-BLEU needs at least two sentences, got {len(sentences)}")
    n_jobs = n_jobs or int(os.getenv("SALSA_N_JOBS", "1"))
    counts = [ngram_counts(s, max_n) for s in sentences]
    top: dict[tuple, list] = {}
    for i, per_order in enumerate(counts):
        for grams in per_order.values():
            for gram, count in grams.items():
                entry = top.setdefault(gram, [0, -1, 0])
                if count > entry[0]:
                    entry[:] = [count, i, entry[0]]
                elif count > entry[2]:
                    entry[2] = count
    lengths = Counter(len(s) for s in sentences)

    chunks = [chunk for chunk in np.array_split(np.arange(len(sentences)), max(1, n_jobs)) if len(chunk)]
    results = Parallel(n_jobs=n_jobs)(
        delayed(_leave_one_out_scores)(chunk.tolist(), counts, top, lengths, sentences, max_n) for chunk in chunks
    )
    scores = [score for part in results for score in part]
    logger.debug(f"Self-BLEU-{max_n} over {len(sentences)} sentences with {n_jobs} workers")
    return float(np.mean(scores))


def bleu_tokens(sentences: Sequence[str], bpe=None, level: str = "bpe") -> list[list[str]]:
    """Tokenize sentences for BLEU: BPE symbols (``level="bpe"``) or whitespace words (``level="word"``)."""
    if level == "word":
        return [s.split() for s in sentences]
    if level != "bpe":
        raise ConfigError(f"unknown BLEU token level {level!r}; use 'bpe' or 'word'")
    if bpe is None:
        raise ConfigError("BPE-level BLEU needs a BPE model")
    return [bpe.segment(s) for s in sentences]


__all__ = ["MAX_ORDER", "SMOOTHING_FLOOR", "bleu", "bleu_tokens", "closest_length", "ngram_counts", "self_bleu"]

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import pandas as pd

from salsa.exceptions import DataError
from salsa.metrics.bleu import MAX_ORDER, bleu, self_bleu
from salsa.metrics.lm import LMConfig, forward_perplexity, reverse_perplexity

logger = logging.getLogger(__name__)

ROWS = [f"BLEU-{n}" for n in range(1, MAX_ORDER + 1)] + [f"Self BLEU-{n}" for n in range(1, MAX_ORDER + 1)] + [
    "Perplexity",
    "Reverse perplexity",
]
MODE_COLLAPSE_SELF_BLEU_2 = 0.9


class Status(Enum):
    OK = 1
    MODE_COLLAPSE = 2


@dataclass
class ReportEntry:
    model_name: str
    scores: dict[str, float]

    @property
    def status(self) -> Status:
        if self.scores.get("Self BLEU-2", 0.0) >= MODE_COLLAPSE_SELF_BLEU_2:
            return Status.MODE_COLLAPSE
        return Status.OK


class MetricReport:
    """Objective evaluation table: one column per model, rows BLEU-1..5, Self BLEU-1..5 and both perplexities."""

    entries: list[ReportEntry]

    def __init__(self):
        self.entries = []

    def add_model(self, model_name: str, scores: dict[str, float]) -> ReportEntry:
        unknown = set(scores) - set(ROWS)
        if unknown:
            raise DataError(f"unknown metric rows {sorted(unknown)}")
        entry = ReportEntry(model_name, dict(scores))
        self.entries.append(entry)
        if entry.status is Status.MODE_COLLAPSE:
            logger.warning(f"{model_name}: Self BLEU-2 {entry.scores['Self BLEU-2']:.3f} suggests mode collapse")
        return entry

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame({entry.model_name: entry.scores for entry in self.entries}, index=ROWS)

    def to_table(self) -> str:
        return self.frame().to_string(float_format=lambda v: f"{v:.3f}")

    def to_csv(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.frame().to_csv(path, index_label="metric")
        logger.info(f"Wrote metric report to {path}")
        return path

    def any_mode_collapse(self) -> bool:
        return any(entry.status is Status.MODE_COLLAPSE for entry in self.entries)


def evaluate_generated(
    generated_tokens,
    reference_tokens,
    generated_sequences,
    reference_sequences,
    test_sequences,
    vocab_size: int,
    lm_config: LMConfig | None = None,
    n_jobs: int | None = None,
    seed: int = 0,
) -> dict[str, float]:
    """Every report row for one generated set.

    BLEU compares generated sentences against the reference corpus; perplexity uses an LM trained
    on the reference corpus; reverse perplexity trains on generated text and scores the test corpus.
    """
    scores = {f"BLEU-{n}": bleu(generated_tokens, reference_tokens, n) for n in range(1, MAX_ORDER + 1)}
    scores |= {f"Self BLEU-{n}": self_bleu(generated_tokens, n, n_jobs) for n in range(1, MAX_ORDER + 1)}
    scores["Perplexity"] = forward_perplexity(reference_sequences, generated_sequences, vocab_size, lm_config, seed)
    scores["Reverse perplexity"] = reverse_perplexity(generated_sequences, test_sequences, vocab_size, lm_config, seed)
    return scores


__all__ = ["MODE_COLLAPSE_SELF_BLEU_2", "ROWS", "MetricReport", "ReportEntry", "Status", "evaluate_generated"]

from salsa.metrics.bleu import bleu, bleu_tokens, ngram_counts, self_bleu
from salsa.metrics.lm import LMConfig, LanguageModel, forward_perplexity, perplexity, reverse_perplexity, train_lm
from salsa.metrics.report import MetricReport, Status, evaluate_generated

__all__ = [
    "LMConfig",
    "LanguageModel",
    "MetricReport",
    "Status",
    "bleu",
    "bleu_tokens",
    "evaluate_generated",
    "forward_perplexity",
    "ngram_counts",
    "perplexity",
    "reverse_perplexity",
    "self_bleu",
    "train_lm",
]

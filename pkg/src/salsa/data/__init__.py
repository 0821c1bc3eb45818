from salsa.data.bpe import END, PAD, RESERVED, START, UNK, BpeModel, train_bpe
from salsa.data.corpus import load_gsc_sentences, read_corpus, split_corpus, write_corpus
from salsa.data.sequences import (
    TokenBatch,
    TokenSequence,
    apply_word_noise,
    encode_corpus,
    filter_corpus,
    make_batches,
    noise_batch,
    prefetch,
)
from salsa.data.synthetic import synthesize_corpus

__all__ = [
    "END",
    "PAD",
    "RESERVED",
    "START",
    "UNK",
    "BpeModel",
    "TokenBatch",
    "TokenSequence",
    "apply_word_noise",
    "encode_corpus",
    "filter_corpus",
    "load_gsc_sentences",
    "make_batches",
    "noise_batch",
    "prefetch",
    "read_corpus",
    "split_corpus",
    "synthesize_corpus",
    "train_bpe",
    "write_corpus",
]

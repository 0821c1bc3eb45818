import numpy as np
import pytest

from salsa.autograd import Rng
from salsa.data import TokenBatch, TokenSequence, train_bpe
from salsa.models import Mode, SalsaModel
from salsa.nn import ArchitectureConfig

SENTENCES = [
    "the cat sat",
    "the dog ran",
    "a cat ran home",
    "a dog sat down",
    "the small cat ran",
    "the old dog sat",
]


@pytest.fixture
def rng():
    return Rng(0)


@pytest.fixture
def toy_arch():
    return ArchitectureConfig(
        d_model=16, n_heads=4, n_blocks_ae=1, n_blocks_gan=1, d_ff=32, dropout_p=0.0,
        max_len=6, d_code=8, d_noise=5, vocab_size=12,
    )


@pytest.fixture
def aae_model(toy_arch):
    return SalsaModel.build(toy_arch, Mode.AAE, Rng(1))


@pytest.fixture
def arae_model(toy_arch):
    return SalsaModel.build(toy_arch, Mode.ARAE, Rng(1))


def random_batch(rng: Rng, n: int, max_len: int, vocab_size: int, min_len: int = 1) -> TokenBatch:
    sequences = []
    for _ in range(n):
        length = int(rng.integers(min_len, max_len))
        sequences.append(TokenSequence.from_tokens(rng.integers(4, vocab_size, length).tolist(), max_len))
    return TokenBatch.stack(sequences)


@pytest.fixture
def toy_batch(toy_arch):
    return random_batch(Rng(7), 3, toy_arch.max_len, toy_arch.vocab_size)


@pytest.fixture
def sentences():
    return list(SENTENCES)


@pytest.fixture
def tiny_bpe():
    return train_bpe(SENTENCES, 40)


@pytest.fixture
def bigram_table():
    """Bigram probabilities over a 5-symbol vocabulary, as a ``score``-compatible model."""
    probs = np.full((5, 5), 0.25)
    probs[:, 0] = 0.0
    probs[1] = [0.0, 0.0, 0.5, 0.25, 0.25]

    class BigramModel:
        table = probs

        def score(self, sequences):
            out = []
            for seq in sequences:
                previous, nll = 1, 0.0
                for token in seq.ids[: seq.length]:
                    nll -= np.log(probs[previous, token])
                    previous = token
                out.append(nll)
            return np.array(out)

    return BigramModel()


@pytest.fixture
def make_batch():
    return random_batch

import numpy as np


class Rng:
    """Seeded random stream backed by ``numpy.random.Generator`` (PCG64).

    The same seed always yields the same stream. :meth:`split` derives independent child
    streams through the underlying ``SeedSequence``, so the children depend only on the seed
    and on how many children were spawned before them.
    """

    def __init__(self, seed: int | np.random.SeedSequence):
        if isinstance(seed, np.random.SeedSequence):
            self._sequence = seed
            self.seed = seed.entropy if isinstance(seed.entropy, int) else [int(e) for e in np.atleast_1d(seed.entropy)]
        else:
            self.seed = int(seed)
            self._sequence = np.random.SeedSequence(self.seed)
        self.generator = np.random.Generator(np.random.PCG64(self._sequence))

    def split(self, n: int) -> list["Rng"]:
        return [Rng(child) for child in self._sequence.spawn(n)]

    def normal(self, shape) -> np.ndarray:
        return self.generator.standard_normal(shape)

    def uniform(self, low: float, high: float, shape) -> np.ndarray:
        return self.generator.uniform(low, high, shape)

    def random(self, shape=None) -> np.ndarray:
        return self.generator.random(shape)

    def integers(self, low: int, high: int, shape=None) -> np.ndarray:
        return self.generator.integers(low, high, shape)

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def get_state(self) -> dict:
        return {
            "seed": self.seed,
            "spawn_key": [int(k) for k in self._sequence.spawn_key],
            "spawned": self._sequence.n_children_spawned,
            "bit_generator": self.generator.bit_generator.state,
        }

    def set_state(self, state: dict) -> None:
        self.seed = state["seed"]
        self._sequence = np.random.SeedSequence(
            self.seed, spawn_key=tuple(state.get("spawn_key", ())), n_children_spawned=int(state["spawned"])
        )
        self.generator = np.random.Generator(np.random.PCG64(self._sequence))
        self.generator.bit_generator.state = state["bit_generator"]

    @classmethod
    def from_state(cls, state: dict) -> "Rng":
        rng = cls(0)
        rng.set_state(state)
        return rng

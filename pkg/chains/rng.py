"""Reproducible random streams.

Every sampler in the toolkit takes a ``numpy.random.Generator``. Generators
are obtained from an :class:`RngStream`, a value object naming substream
``stream_index`` of ``master_seed``. Streams are derived with
``SeedSequence(entropy=master_seed, spawn_key=(stream_index,))`` and drive a
counter-based Philox bit generator, so the same pair reproduces the same
sequence on every platform and distinct pairs are independent.
"""

from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from chains.errors import DomainError

MAX_SEED = 2**64 - 1

# (k + 0.5) * 2**-52 for k in [0, 2**52) is exact in double precision and never hits 0 or 1.
_OPEN_STEP = 2.0**-52
_OPEN_COUNT = 2**52


@dataclass(frozen=True)
class RngStream:
    """Substream ``stream_index`` of ``master_seed``."""
    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not 0 <= int(self.master_seed) <= MAX_SEED:
            raise DomainError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if int(self.stream_index) < 0:
            raise DomainError(f"stream_index must be >= 0, got {self.stream_index}")

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(
            entropy=int(self.master_seed),
            spawn_key=(int(self.stream_index),),
        )

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        return np.random.Generator(np.random.Philox(self.seed_sequence()))

    def to_dict(self) -> dict:
        return {'master_seed': int(self.master_seed), 'stream_index': int(self.stream_index)}

    @classmethod
    def from_dict(cls, data: dict) -> 'RngStream':
        return cls(master_seed=int(data['master_seed']), stream_index=int(data.get('stream_index', 0)))


def make_generator(seed: Union[int, RngStream, np.random.Generator], stream_index: int = 0) -> np.random.Generator:
    """Coerce a seed, stream or generator into a generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, RngStream):
        return seed.generator()
    return RngStream(int(seed), stream_index).generator()


def open_uniform(rng: np.random.Generator, size: Optional[Union[int, Tuple[int, ...]]] = None):
    """Uniform draws on the open interval (0, 1)."""
    k = rng.integers(0, _OPEN_COUNT, size=size, dtype=np.int64)
    return (k + 0.5) * _OPEN_STEP

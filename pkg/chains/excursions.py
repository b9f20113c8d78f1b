"""Regeneration structure of the exemplar chains.

An excursion is a (mark, length) pair: for the renewal chain the mark is the
jump height J taken from state 0 and the excursion lasts J + 1 steps; for the
Harris chain the mark is the fresh nu-draw y and the chain holds there for a
geometric number of steps with success probability y.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from chains.errors import DomainError
from chains.laws import HarrisParams, RenewalLaw
from chains.rng import open_uniform


@dataclass(frozen=True)
class ExcursionSample:
    mark: Union[int, float]
    length: int

    def __post_init__(self):
        if self.length < 1:
            raise DomainError(f"excursion length must be >= 1, got {self.length}")


class ExcursionSource(ABC):
    """Vectorized sampler of i.i.d. excursions with a closed-form mean length."""

    name: str = "excursions"

    @property
    @abstractmethod
    def mean_length(self) -> float:
        pass

    @abstractmethod
    def sample(self, rng: np.random.Generator, size) -> Tuple[np.ndarray, np.ndarray]:
        """
        Draw excursions.

        Returns:
            Tuple of (marks, lengths) arrays of shape ``size``
        """
        pass

    def sample_lengths(self, rng: np.random.Generator, size) -> np.ndarray:
        return self.sample(rng, size)[1]

    def draw(self, rng: np.random.Generator) -> ExcursionSample:
        marks, lengths = self.sample(rng, 1)
        mark = marks[0].item()
        return ExcursionSample(mark=mark, length=int(lengths[0]))


class RenewalExcursions(ExcursionSource):
    name = "renewal"

    def __init__(self, law: RenewalLaw):
        self.law = law

    @property
    def mean_length(self) -> float:
        return self.law.mean_tau

    def sample(self, rng, size):
        jumps = self.law.sample_jumps(rng, size)
        return jumps, jumps + 1


class HarrisExcursions(ExcursionSource):
    name = "harris"

    def __init__(self, params: HarrisParams):
        self.params = params

    @property
    def mean_length(self) -> float:
        return self.params.mean_tau

    def sample(self, rng, size):
        marks = open_uniform(rng, size) ** (1.0 / (self.params.a + 1.0))
        # numpy's geometric counts trials up to and including the first success.
        lengths = rng.geometric(marks)
        return marks, lengths


class TabulatedExcursions(ExcursionSource):
    """Excursion lengths drawn from a finite pmf over {1, ..., K}."""
    name = "tabulated"

    def __init__(self, pmf):
        pmf = np.asarray(pmf, dtype=np.float64)
        if pmf.ndim != 1 or pmf.size == 0 or np.any(pmf < 0):
            raise DomainError("length pmf must be a nonempty nonnegative vector")
        total = pmf.sum()
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"length pmf must sum to 1, sums to {total!r}")
        self.pmf = pmf
        self._cdf = np.cumsum(pmf) / total

    @property
    def support_max(self) -> int:
        return int(self.pmf.size)

    @property
    def mean_length(self) -> float:
        return float(np.arange(1, self.pmf.size + 1) @ self.pmf)

    def sample(self, rng, size):
        lengths = np.searchsorted(self._cdf, rng.random(size), side='right') + 1
        return lengths - 1, lengths


def truncated_tau_pmf(law: RenewalLaw, K: int) -> np.ndarray:
    """
    Renewal excursion length law restricted to {1, ..., K} and renormalized.

    Entry k - 1 is P(tau = k); tau = J + 1 so length 1 has mass 0.
    """
    if K < 2 or K > law.truncation_N + 1:
        raise DomainError(f"K must lie in [2, {law.truncation_N + 1}], got {K}")
    pmf = np.zeros(K)
    pmf[1:] = law.jump_pmf[1:K]
    return pmf / pmf.sum()


def renewal_excursion(law: RenewalLaw, rng: np.random.Generator) -> ExcursionSample:
    jump = int(law.sample_jumps(rng))
    return ExcursionSample(mark=jump, length=jump + 1)


def harris_excursion(params: HarrisParams, rng: np.random.Generator) -> ExcursionSample:
    y = float(open_uniform(rng) ** (1.0 / (params.a + 1.0)))
    return ExcursionSample(mark=y, length=int(rng.geometric(y)))

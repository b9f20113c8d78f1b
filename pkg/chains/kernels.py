import math
from abc import ABC, abstractmethod
from typing import Optional, Tuple, Union

import numpy as np

from chains.errors import DomainError, UnsupportedOperationError
from chains.excursions import ExcursionSource, HarrisExcursions, RenewalExcursions
from chains.laws import DEFAULT_TRUNCATION_N, HarrisParams, RenewalLaw, renewal_law
from chains.observables import (
    Observable,
    ObservableKind,
    harris_power,
    identity_observable,
    renewal_indicator,
    table_observable,
)
from chains.rng import RngStream, make_generator, open_uniform


class ChainModel(ABC):
    """Base class for sampleable Markov kernels."""

    name: str = "chain"

    @abstractmethod
    def step_many(self, states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """
        Advance every state in ``states`` by one transition.

        Args:
            states: Current states, one per independent trajectory
            rng: Generator consumed in a fixed order

        Returns:
            Array of next states with the same shape
        """
        pass

    @abstractmethod
    def stationary_sample(self, rng: np.random.Generator, size=None):
        """Draw from the stationary law (scalar when ``size`` is None)."""
        pass

    @abstractmethod
    def default_observable(self) -> Observable:
        pass

    def step(self, state, rng: np.random.Generator):
        return self.step_many(np.asarray([state]), rng)[0].item()

    def excursion_source(self) -> ExcursionSource:
        raise UnsupportedOperationError(f"{self.name} chain has no regeneration structure")

    def observable_segments(
        self,
        obs: Observable,
        rng: np.random.Generator,
        batch: int,
        horizon: int,
    ) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """
        Piecewise-constant representation of f(Y_1), f(Y_2), ... per trajectory.

        Returns (values, lengths) of shape (batch, m) whose lengths cover at
        least ``horizon`` steps on every row, or None when the observable has
        no such representation on this chain.
        """
        return None

    def segments_per_step(self) -> float:
        """Expected number of segments per time step (for batch sizing)."""
        return 1.0

    def describe(self) -> dict:
        return {'chain': self.name}


class RenewalChain(ChainModel):
    """From n > 0 go to n - 1; from 0 jump to n >= 1 with probability jump_pmf[n]."""

    name = "renewal"

    def __init__(self, law: RenewalLaw, name: Optional[str] = None, provenance: Optional[str] = None):
        self.law = law
        if name is not None:
            self.name = name
        self.provenance = provenance

    @property
    def p(self) -> float:
        return self.law.p

    def step_many(self, states, rng):
        states = np.asarray(states, dtype=np.int64)
        at_zero = states == 0
        nxt = states - 1
        count = int(at_zero.sum())
        if count:
            nxt[at_zero] = self.law.sample_jumps(rng, count)
        return nxt

    def stationary_sample(self, rng, size=None):
        draw = self.law.sample_stationary(rng, size)
        return int(draw) if size is None else draw

    def default_observable(self) -> Observable:
        return renewal_indicator(self.law)

    def excursion_source(self) -> ExcursionSource:
        return RenewalExcursions(self.law)

    def segments_per_step(self) -> float:
        return 2.0 / self.law.mean_tau

    def observable_segments(self, obs, rng, batch, horizon):
        if obs.kind != ObservableKind.RENEWAL_INDICATOR:
            return None
        up = obs.centering
        down = obs.centering - 1.0
        start = self.law.sample_stationary(rng, batch)

        # States start, start-1, ..., 1 precede the first visit to 0.
        values = [np.full((batch, 1), up)]
        lengths = [start.reshape(batch, 1).astype(np.int64)]
        covered = start.astype(np.int64)
        pairs = max(8, int(math.ceil(1.1 * horizon / self.law.mean_tau)) + 8)
        while covered.min() < horizon:
            jumps = self.law.sample_jumps(rng, (batch, pairs))
            blk_len = np.ones((batch, 2 * pairs), dtype=np.int64)
            blk_len[:, 1::2] = jumps
            blk_val = np.empty((batch, 2 * pairs))
            blk_val[:, 0::2] = down
            blk_val[:, 1::2] = up
            values.append(blk_val)
            lengths.append(blk_len)
            covered = covered + blk_len.sum(axis=1)
            pairs = max(8, pairs // 4)
        return np.hstack(values), np.hstack(lengths)

    def describe(self) -> dict:
        info = {'chain': self.name, 'p': self.law.p, 'truncation_N': self.law.truncation_N}
        if self.provenance:
            info['provenance'] = self.provenance
        return info


class HarrisChain(ChainModel):
    """K(x, .) = (1 - x) delta_x + x nu on [0, 1]; 0 is an unreachable absorbing point."""

    name = "harris"

    def __init__(self, params: HarrisParams):
        self.params = params

    @property
    def p(self) -> float:
        return self.params.p

    def _nu(self, rng, size):
        return open_uniform(rng, size) ** (1.0 / (self.params.a + 1.0))

    def step_many(self, states, rng):
        states = np.asarray(states, dtype=np.float64)
        move = rng.random(states.shape) < states
        nxt = states.copy()
        count = int(move.sum())
        if count:
            nxt[move] = self._nu(rng, count)
        return nxt

    def stationary_sample(self, rng, size=None):
        draw = open_uniform(rng, size) ** (1.0 / self.params.a)
        return float(draw) if size is None else draw

    def default_observable(self) -> Observable:
        return harris_power(self.params)

    def excursion_source(self) -> ExcursionSource:
        return HarrisExcursions(self.params)

    def segments_per_step(self) -> float:
        return 1.0 / self.params.mean_tau

    def observable_segments(self, obs, rng, batch, horizon):
        if obs.kind != ObservableKind.HARRIS_POWER:
            return None
        c = obs.centering
        gamma = obs.gamma
        start = self.stationary_sample(rng, batch)
        hold = rng.geometric(start)
        values = [(start ** gamma - c).reshape(batch, 1)]
        lengths = [hold.reshape(batch, 1).astype(np.int64)]
        covered = hold.astype(np.int64)
        width = max(8, int(math.ceil(1.1 * horizon / self.params.mean_tau)) + 8)
        while covered.min() < horizon:
            marks = self._nu(rng, (batch, width))
            holds = rng.geometric(marks).astype(np.int64)
            values.append(marks ** gamma - c)
            lengths.append(holds)
            covered = covered + holds.sum(axis=1)
            width = max(8, width // 4)
        return np.hstack(values), np.hstack(lengths)

    def describe(self) -> dict:
        return {'chain': self.name, 'p': self.params.p, 'gamma': self.params.gamma}


class DoublingChain(ChainModel):
    """X' = (X + xi)/2 with xi uniform on {0, 1}; Lebesgue measure is invariant."""

    name = "doubling"

    def step_many(self, states, rng):
        states = np.asarray(states, dtype=np.float64)
        return (states + rng.integers(0, 2, size=states.shape)) / 2.0

    def stationary_sample(self, rng, size=None):
        draw = rng.random(size)
        return float(draw) if size is None else draw

    def default_observable(self) -> Observable:
        return identity_observable()


class TableChain(ChainModel):
    """Finite chain on {0, ..., K - 1} given by a row-stochastic transition table."""

    name = "table"

    def __init__(self, matrix, pi=None):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DomainError(f"transition table must be square, got shape {matrix.shape}")
        if np.any(matrix < 0) or np.max(np.abs(matrix.sum(axis=1) - 1.0)) > 1e-12:
            raise DomainError("transition table rows must be nonnegative and sum to 1")
        self.matrix = matrix
        self.pi = None if pi is None else np.asarray(pi, dtype=np.float64)
        self._cdf = np.cumsum(matrix, axis=1)
        self._cdf[:, -1] = 1.0

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def step_many(self, states, rng):
        states = np.asarray(states, dtype=np.int64)
        u = rng.random(states.shape)
        return (self._cdf[states] <= u[..., None]).sum(axis=-1)

    def stationary_sample(self, rng, size=None):
        if self.pi is None:
            raise UnsupportedOperationError("table chain was built without a stationary law")
        cdf = np.cumsum(self.pi)
        draw = np.searchsorted(cdf / cdf[-1], rng.random(size), side='right')
        return int(draw) if size is None else draw

    def default_observable(self) -> Observable:
        if self.pi is None:
            raise UnsupportedOperationError("table chain needs pi to center an observable")
        return table_observable(np.arange(self.size, dtype=np.float64), self.pi)


def renewal_chain(p: float, N: int = DEFAULT_TRUNCATION_N) -> RenewalChain:
    return RenewalChain(renewal_law(p, N))


def harris_chain(p: float, gamma: float = 1.0) -> HarrisChain:
    return HarrisChain(HarrisParams(p=p, gamma=gamma))


def doubling_chain() -> DoublingChain:
    return DoublingChain()


def table_chain(matrix, pi=None) -> TableChain:
    return TableChain(matrix, pi)


def product_tower(p: float, N: int = DEFAULT_TRUNCATION_N) -> RenewalChain:
    """
    Independent-return product tower over the renewal excursion law.

    With independent returns the distortion constant is 1 and the dual
    Markov chain of the tower is exactly the renewal chain, so the model is a
    renewal chain carrying its own name and provenance.
    """
    return RenewalChain(
        renewal_law(p, N),
        name="tower",
        provenance="product tower with i.i.d. returns; dual chain equals the renewal chain",
    )


def build_chain(name: str, p: Optional[float] = None, gamma: Optional[float] = None,
                truncation_N: int = DEFAULT_TRUNCATION_N) -> ChainModel:
    """Construct a built-in chain by name."""
    if name == "doubling":
        return doubling_chain()
    if p is None:
        raise DomainError(f"chain '{name}' requires p")
    if name == "renewal":
        return renewal_chain(p, truncation_N)
    if name == "tower":
        return product_tower(p, truncation_N)
    if name == "harris":
        return harris_chain(p, 1.0 if gamma is None else gamma)
    raise DomainError(f"unknown chain '{name}'. Valid chains: doubling, harris, renewal, tower")


def renewal_step(law: RenewalLaw, state: int, rng: Union[RngStream, np.random.Generator]) -> int:
    """One renewal transition. An RngStream starts a fresh generator at its first draw."""
    if state < 0:
        raise DomainError(f"renewal state must be >= 0, got {state}")
    if state > 0:
        return int(state) - 1
    return int(law.sample_jumps(make_generator(rng)))


def harris_step(params: HarrisParams, x: float, rng: Union[RngStream, np.random.Generator]) -> float:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"Harris state must lie in [0, 1], got {x}")
    rng = make_generator(rng)
    if rng.random() < x:
        return float(open_uniform(rng) ** (1.0 / (params.a + 1.0)))
    return float(x)


def doubling_step(x: float, rng: Union[RngStream, np.random.Generator]) -> float:
    if not 0.0 <= x < 1.0:
        raise DomainError(f"doubling state must lie in [0, 1), got {x}")
    return (x + int(make_generator(rng).integers(0, 2))) / 2.0


def stationary_sample(chain: ChainModel, rng: np.random.Generator):
    return chain.stationary_sample(rng)

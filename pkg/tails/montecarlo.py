"""Monte-Carlo deviation probabilities of partial sums along chain trajectories."""

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import List, Optional, Sequence

import numpy as np

from chains.errors import DomainError, UsageError
from chains.excursions import ExcursionSource
from chains.kernels import ChainModel
from chains.observables import Observable
from tails.estimate import Statistic, TailEstimate, estimates_from_extremes
from tails.parallel import run_chunks

logger = logging.getLogger(__name__)

MIN_TRIALS = 100
# Upper bound on array cells held per sub-batch of trajectories.
CELL_BUDGET = 4_000_000
# Stream indices of independent centering samples start here.
CENTERING_STREAM_OFFSET = 1 << 32


def _check_grid(x_grid: Sequence[float]) -> np.ndarray:
    grid = np.asarray(x_grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("x_grid must be a nonempty sequence")
    if np.any(np.diff(grid) < 0):
        raise DomainError("x_grid must be sorted ascending")
    return grid


def _check_trials(trials: int) -> None:
    if trials < MIN_TRIALS:
        raise DomainError(f"Monte-Carlo estimates need trials >= {MIN_TRIALS}, got {trials}")


def _meta(source, seed: int) -> dict:
    info = source.describe() if hasattr(source, 'describe') else {'chain': getattr(source, 'name', None)}
    return {'chain': info.get('chain'), 'p': info.get('p'), 'gamma': info.get('gamma'), 'seed': int(seed)}


def segment_statistics(values: np.ndarray, lengths: np.ndarray, n: int, statistic: Statistic) -> np.ndarray:
    """
    max_k |S_k| (or |S_n|) for k <= n from piecewise-constant increments.

    Within a segment the partial sum is linear in time, so its extremes sit
    at segment ends; the segment straddling n is clipped at n.
    """
    ends = np.cumsum(lengths, axis=1)
    starts = ends - lengths
    s_end = np.cumsum(values * lengths, axis=1)
    s_start = s_end - values * lengths
    active = starts < n
    s_clip = s_start + values * (np.minimum(ends, n) - starts)
    if statistic == Statistic.MAX_ABS_PARTIAL_SUM:
        return np.max(np.where(active, np.abs(s_clip), 0.0), axis=1)
    last = active.sum(axis=1) - 1
    final = s_clip[np.arange(values.shape[0]), last]
    return final if statistic == Statistic.FUNCTIONAL else np.abs(final)


def _time_loop(chain: ChainModel, obs: Observable, n: int, rows: int, rng, weights=None, signed=False) -> tuple:
    states = chain.stationary_sample(rng, rows)
    total = np.zeros(rows)
    running_max = np.zeros(rows)
    for i in range(n):
        values = obs.values(states)
        if weights is not None:
            values = values * weights[i]
        total += values
        np.maximum(running_max, np.abs(total), out=running_max)
        if i < n - 1:
            states = chain.step_many(states, rng)
    return running_max, (total if signed else np.abs(total))


def path_statistics(chain: ChainModel, obs: Observable, n: int, statistic: Statistic, size: int, rng) -> np.ndarray:
    """One statistic per stationary trajectory of length n (a chunk task)."""
    width = n * chain.segments_per_step() * 1.2 + 16
    rows = int(max(1, min(size, CELL_BUDGET // width)))
    out = []
    done = 0
    while done < size:
        batch = min(rows, size - done)
        segments = chain.observable_segments(obs, rng, batch, n)
        if segments is not None:
            out.append(segment_statistics(segments[0], segments[1], n, statistic))
        else:
            running_max, final = _time_loop(chain, obs, n, batch, rng,
                                            signed=statistic == Statistic.FUNCTIONAL)
            out.append(running_max if statistic == Statistic.MAX_ABS_PARTIAL_SUM else final)
        done += batch
    return np.concatenate(out)


def weighted_sums(chain: ChainModel, obs: Observable, weights: np.ndarray, size: int, rng) -> np.ndarray:
    """Signed sum_i w_i f(Y_i) per trajectory (a chunk task)."""
    n = weights.size
    if np.all(weights == weights[0]):
        return weights[0] * path_statistics(chain, obs, n, Statistic.FUNCTIONAL, size, rng)
    _, final = _time_loop(chain, obs, n, size, rng, weights=weights, signed=True)
    return final


def excursion_sums(source: ExcursionSource, n: int, size: int, rng) -> np.ndarray:
    """sum_{i<n} tau_i - n E(tau) per trial (a chunk task)."""
    rows = int(max(1, min(size, CELL_BUDGET // max(n, 1))))
    out = []
    done = 0
    mean = source.mean_length
    while done < size:
        batch = min(rows, size - done)
        lengths = source.sample_lengths(rng, (batch, n))
        out.append(lengths.sum(axis=1, dtype=np.float64) - n * mean)
        done += batch
    return np.concatenate(out)


def mc_tail(
    chain: ChainModel,
    obs: Optional[Observable],
    n: int,
    x_grid: Sequence[float],
    trials: int,
    seed: int,
    statistic=Statistic.MAX_ABS_PARTIAL_SUM,
    workers: Optional[int] = 1,
    weights: Optional[Sequence[float]] = None,
) -> List[TailEstimate]:
    """
    Estimate P(stat >= x) on a whole grid from shared stationary trajectories.

    Args:
        chain: Built-in chain, started from its stationary law
        obs: Centered observable (defaults to the chain's canonical one)
        n: Path length
        x_grid: Ascending deviation levels
        trials: Number of trajectories (>= 100)
        seed: Master seed
        statistic: max_abs_partial_sum, abs_sum, excursion_sum or functional
        workers: Worker processes (results do not depend on it)
        weights: Functional weights, required for statistic=functional

    Returns:
        One TailEstimate per grid point
    """
    statistic = Statistic(statistic)
    _check_trials(trials)
    grid = _check_grid(x_grid)
    if n < 1:
        raise DomainError(f"path length must be >= 1, got {n}")
    if obs is None:
        obs = chain.default_observable()

    if statistic == Statistic.FUNCTIONAL:
        if weights is None:
            raise UsageError("statistic=functional needs functional weights")
        return young_functional_tail(chain, weights, obs, n, grid, trials, seed, workers=workers).estimates
    if statistic == Statistic.EXCURSION_SUM:
        return excursion_sum_tails(chain.excursion_source(), n, grid, trials, seed, workers=workers)

    logger.info("mc_tail: chain=%s n=%d trials=%d grid=%d", chain.name, n, trials, grid.size)
    task = partial(path_statistics, chain, obs, n, statistic)
    extremes = run_chunks(task, trials, seed, workers)
    return estimates_from_extremes(extremes, n, grid, statistic, **_meta(chain, seed))


def excursion_sum_tails(
    source: ExcursionSource,
    n: int,
    x_grid: Sequence[float],
    trials: int,
    seed: int,
    workers: Optional[int] = 1,
) -> List[TailEstimate]:
    """P(sum_{i<n} tau_i >= n E(tau) + x) for every x in the grid, E(tau) in closed form."""
    _check_trials(trials)
    grid = _check_grid(x_grid)
    if np.any(grid < 0):
        raise DomainError("excursion deviation levels must be >= 0")
    sums = run_chunks(partial(excursion_sums, source, n), trials, seed, workers)
    meta = {'chain': source.name, 'p': getattr(getattr(source, 'law', getattr(source, 'params', None)), 'p', None),
            'seed': int(seed)}
    return estimates_from_extremes(sums, n, grid, Statistic.EXCURSION_SUM, **meta)


def excursion_sum_tail(source: ExcursionSource, n: int, x: float, trials: int, seed: int,
                       workers: Optional[int] = 1) -> TailEstimate:
    return excursion_sum_tails(source, n, [x], trials, seed, workers)[0]


def excursion_sum_samples(
    source: ExcursionSource,
    n: int,
    trials: int,
    seed: int,
    scale: float = 1.0,
    workers: Optional[int] = 1,
) -> np.ndarray:
    """Centered excursion sums divided by ``scale`` (e.g. sqrt(n), n^(1/p), sqrt(n log n))."""
    if scale <= 0:
        raise DomainError(f"scale must be > 0, got {scale}")
    return run_chunks(partial(excursion_sums, source, n), trials, seed, workers) / scale


@dataclass
class FunctionalTail:
    estimates: List[TailEstimate]
    center: float
    center_stderr: float
    centering: str
    flags: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            'center': self.center,
            'center_stderr': self.center_stderr,
            'centering': self.centering,
            'flags': list(self.flags),
        }


def young_functional_tail(
    chain: ChainModel,
    weights: Sequence[float],
    obs: Optional[Observable],
    n: int,
    x_grid: Sequence[float],
    trials: int,
    seed: int,
    workers: Optional[int] = 1,
    centering: str = "estimated",
    center_trials: Optional[int] = None,
) -> FunctionalTail:
    """
    P(|K - E K| > x) for K = sum_i w_i f(Y_i) along stationary trajectories.

    With ``centering="estimated"`` E K comes from an independent sample
    (streams offset by 2^32) and its standard error is reported; with
    ``"exact"`` E K = 0 because f is centered under pi.
    """
    _check_trials(trials)
    grid = _check_grid(x_grid)
    w = np.asarray(weights, dtype=np.float64)
    if w.size != n:
        raise DomainError(f"need {n} weights, got {w.size}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise DomainError("functional weights must be finite and nonnegative")
    if obs is None:
        obs = chain.default_observable()
    if centering not in ("estimated", "exact"):
        raise UsageError(f"centering must be 'estimated' or 'exact', got '{centering}'")

    task = partial(weighted_sums, chain, obs, w)
    values = run_chunks(task, trials, seed, workers)

    center, center_se = 0.0, 0.0
    if centering == "estimated":
        m = center_trials or trials
        sample = run_chunks(task, m, seed, workers, stream_offset=CENTERING_STREAM_OFFSET)
        center = float(sample.mean())
        center_se = float(sample.std(ddof=1) / math.sqrt(m))

    deviations = np.abs(values - center)
    estimates = estimates_from_extremes(
        deviations, n, grid, Statistic.FUNCTIONAL, strict=True, **_meta(chain, seed)
    )
    return FunctionalTail(estimates=estimates, center=center, center_stderr=center_se, centering=centering)

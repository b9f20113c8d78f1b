"""
Deterministic parallel Monte Carlo.

Trials are cut into fixed-size chunks; chunk c always draws from
RngStream(seed, stream_offset + c) and results are concatenated in chunk
order. Workers receive contiguous runs of chunks, so the worker count changes
wall time only, never the output.
"""

import concurrent.futures
import logging
import os
from typing import Callable, List, Optional, Sequence

import numpy as np

from chains.errors import ConfigError
from chains.rng import RngStream

logger = logging.getLogger(__name__)

CHUNK_TRIALS = 2048
WORKERS_ENV = "POLYMIX_WORKERS"

# task(size, rng) -> 1-d array of per-trial statistics
ChunkTask = Callable[[int, np.random.Generator], np.ndarray]


def resolve_workers(workers: Optional[int] = None) -> int:
    """Flag value, else POLYMIX_WORKERS, else available parallelism."""
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        if env:
            try:
                workers = int(env)
            except ValueError:
                raise ConfigError(f"{WORKERS_ENV} must be an integer, got '{env}'")
        else:
            workers = os.cpu_count() or 1
    if workers < 1:
        raise ConfigError(f"worker count must be >= 1, got {workers}")
    return int(workers)


def chunk_sizes(trials: int, chunk: int = CHUNK_TRIALS) -> List[int]:
    full, rest = divmod(int(trials), chunk)
    return [chunk] * full + ([rest] if rest else [])


def _run_group(task: ChunkTask, seed: int, stream_offset: int, indices: Sequence[int], sizes: Sequence[int]) -> List[np.ndarray]:
    out = []
    for index, size in zip(indices, sizes):
        rng = RngStream(seed, stream_offset + index).generator()
        out.append(np.asarray(task(size, rng)))
    return out


def run_chunks(
    task: ChunkTask,
    trials: int,
    seed: int,
    workers: Optional[int] = 1,
    stream_offset: int = 0,
) -> np.ndarray:
    """
    Evaluate ``task`` over ``trials`` trials split into seeded chunks.

    Args:
        task: Picklable callable (size, rng) -> per-trial statistics
        trials: Total number of trials
        seed: Master seed
        workers: Process count (None resolves from the environment)
        stream_offset: First stream index, to separate independent samples

    Returns:
        Concatenated statistics in chunk order
    """
    sizes = chunk_sizes(trials)
    indices = list(range(len(sizes)))
    workers = min(resolve_workers(workers), len(sizes))

    if workers <= 1:
        parts = _run_group(task, seed, stream_offset, indices, sizes)
    else:
        groups = np.array_split(np.arange(len(sizes)), workers)
        logger.debug("running %d chunks on %d workers", len(sizes), workers)
        parts = []
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [
                executor.submit(_run_group, task, seed, stream_offset, list(g), [sizes[i] for i in g])
                for g in groups if len(g)
            ]
            for future in futures:
                parts.extend(future.result())
    return np.concatenate(parts) if parts else np.empty(0)

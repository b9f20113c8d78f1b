"""Exact sum-of-lengths probabilities for small excursion instances."""

import numpy as np

from chains.errors import DomainError, SizeError

MAX_SUPPORT_CELLS = 10**7


def dp_sum_tail(pmf, n: int, threshold: int) -> float:
    """
    Exact P(tau_0 + ... + tau_{n-1} >= threshold) for i.i.d. tau with law ``pmf``.

    Args:
        pmf: Weights of tau = 1, ..., K (entry k - 1 is P(tau = k))
        n: Number of summands
        threshold: Integer level

    Returns:
        The tail probability by iterated convolution
    """
    weights = np.asarray(pmf, dtype=np.float64)
    if weights.ndim != 1 or weights.size == 0 or np.any(weights < 0):
        raise DomainError("pmf must be a nonempty nonnegative vector")
    if abs(weights.sum() - 1.0) > 1e-12:
        raise DomainError(f"pmf must sum to 1, sums to {weights.sum()!r}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    K = weights.size
    if n * K > MAX_SUPPORT_CELLS:
        raise SizeError(f"n*K = {n * K} exceeds the exact-convolution limit {MAX_SUPPORT_CELLS}")
    if threshold <= n:
        return 1.0

    # dist[s] = P(sum = s + count) after ``count`` summands, support shifted by 1 per step
    dist = weights.copy()
    for _ in range(n - 1):
        dist = np.convolve(dist, weights)
    shift = threshold - n
    if shift >= dist.size:
        return 0.0
    return float(min(1.0, dist[shift:].sum()))

"""Exponent fits, constant calibration and limit-law diagnostics for tail estimates."""

import logging
import math
from enum import Enum
from typing import Callable, Dict, Optional, Sequence

import numpy as np
from scipy import stats

from chains.errors import DegenerateInputError, DomainError, FitError, UsageError
from tails.estimate import ScalingFit, TailEstimate, loglog_fit

logger = logging.getLogger(__name__)

MIN_HITS = 10
MIN_DIAGNOSTIC_SAMPLES = 500
HILL_FRACTION = 0.05


class FitMode(Enum):
    X_EXPONENT = "x_exponent"
    N_EXPONENT = "n_exponent"


class LimitKind(Enum):
    KS_NORMAL = "ks_normal"
    HILL_INDEX = "hill_index"


def scaling_fit(
    estimates: Sequence[TailEstimate],
    mode="x_exponent",
    alpha: Optional[float] = None,
    min_hits: int = MIN_HITS,
) -> ScalingFit:
    """
    Slope of log p_hat against log x (fixed n) or log n (x = c n^alpha).

    Points with p_hat = 0 or fewer than ``min_hits`` hits are dropped and
    named in the fit's flags.
    """
    mode = FitMode(mode)
    if mode == FitMode.N_EXPONENT:
        if alpha is None:
            raise UsageError("n_exponent fits need alpha")
        if not 0.5 < alpha <= 1.0:
            raise DomainError(f"alpha must lie in (1/2, 1], got {alpha}")

    flags = []
    xs, ys = [], []
    for est in estimates:
        if est.p_hat == 0.0:
            flags.append(f"excluded_zero:n={est.n},x={est.x!r}")
            continue
        if est.hits < min_hits:
            flags.append(f"excluded_low_hits:n={est.n},x={est.x!r}")
            continue
        xs.append(est.x if mode == FitMode.X_EXPONENT else est.n)
        ys.append(est.p_hat)
    if len(xs) < 3:
        raise FitError(f"scaling fit needs >= 3 usable points, got {len(xs)}")
    if flags:
        logger.info("scaling fit dropped %d point(s)", len(flags))
    return loglog_fit(xs, ys, flags=flags)


def kappa_fit(estimates: Sequence[TailEstimate], bound_shape: Callable[[float, float], float]) -> float:
    """Smallest kappa with kappa * bound_shape(n, x) >= p_hat at every estimate."""
    if not estimates:
        raise UsageError("kappa_fit needs at least one estimate")
    ratios = []
    for est in estimates:
        shape = float(bound_shape(est.n, est.x))
        if not shape > 0.0:
            raise DomainError(f"bound shape must be > 0, got {shape} at n={est.n}, x={est.x}")
        ratios.append(est.p_hat / shape)
    return max(ratios)


def _hill(samples: np.ndarray) -> float:
    tail = np.sort(samples[samples > 0])[::-1]
    k = int(math.floor(HILL_FRACTION * samples.size))
    if k < 2 or tail.size <= k:
        raise DegenerateInputError(f"Hill estimate needs more than {k} positive samples, got {tail.size}")
    logs = np.log(tail[:k] / tail[k])
    total = float(logs.sum())
    if total <= 0.0:
        raise DegenerateInputError("upper order statistics are tied")
    return k / total


def limit_diagnostic(p: float, normalized_samples: Sequence[float], kind="ks_normal") -> float:
    """
    Distance to the limit law predicted for moment exponent p.

    ks_normal: Kolmogorov-Smirnov distance of the studentized samples to N(0, 1).
    hill_index: Hill estimate over the top 5% of the positive samples; centered
    excursion sums for p < 2 have a one-sided heavy right tail.
    """
    kind = LimitKind(kind)
    samples = np.asarray(normalized_samples, dtype=np.float64)
    if samples.size < MIN_DIAGNOSTIC_SAMPLES:
        raise DomainError(f"limit diagnostics need >= {MIN_DIAGNOSTIC_SAMPLES} samples, got {samples.size}")
    if not np.all(np.isfinite(samples)):
        raise DomainError("samples must be finite")
    if np.ptp(samples) == 0.0:
        raise DegenerateInputError("samples are constant")

    if kind == LimitKind.KS_NORMAL:
        studentized = (samples - samples.mean()) / samples.std(ddof=1)
        return float(stats.kstest(studentized, 'norm').statistic)
    logger.debug("hill index for p=%s over %d samples", p, samples.size)
    return _hill(samples)


def variance_stability(samples_by_n: Dict[int, Sequence[float]], scale: str = "variance") -> float:
    """
    max/min ratio of squared spreads across n (1 means perfectly stable).

    ``scale="variance"`` uses sample variances; ``scale="iqr"`` squares the
    interquartile range, which single huge excursions cannot inflate.
    """
    if len(samples_by_n) < 2:
        raise UsageError("variance stability needs samples for at least two n values")
    if scale == "variance":
        spreads = [float(np.var(np.asarray(s, dtype=np.float64), ddof=1)) for s in samples_by_n.values()]
    elif scale == "iqr":
        spreads = [float(stats.iqr(np.asarray(s, dtype=np.float64))) ** 2 for s in samples_by_n.values()]
    else:
        raise UsageError(f"scale must be 'variance' or 'iqr', got '{scale}'")
    if min(spreads) <= 0.0:
        raise DegenerateInputError("a sample has zero spread")
    return max(spreads) / min(spreads)

"""Tail estimates with Wilson intervals and log-log scaling fits."""

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from chains.errors import FitError

WILSON_Z = float(stats.norm.ppf(0.975))

TAIL_CSV_COLUMNS = [
    "statistic", "chain", "p", "gamma", "n", "x", "hits", "trials",
    "p_hat", "ci_low", "ci_high", "seed",
]


class Statistic(Enum):
    MAX_ABS_PARTIAL_SUM = "max_abs_partial_sum"
    ABS_SUM = "abs_sum"
    EXCURSION_SUM = "excursion_sum"
    FUNCTIONAL = "functional"


def wilson_interval(hits: int, trials: int, z: float = WILSON_Z) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    p_hat = hits / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p_hat + z2 / (2.0 * trials)) / denom
    half = z / denom * math.sqrt(p_hat * (1.0 - p_hat) / trials + z2 / (4.0 * trials * trials))
    low = min(max(center - half, 0.0), p_hat)
    high = max(min(center + half, 1.0), p_hat)
    return low, high


@dataclass(frozen=True)
class TailEstimate:
    """One (n, x) cell of an empirical deviation probability."""
    n: int
    x: float
    hits: int
    trials: int
    p_hat: float
    ci_low: float
    ci_high: float
    statistic: Statistic
    chain: Optional[str] = None
    p: Optional[float] = None
    gamma: Optional[float] = None
    seed: Optional[int] = None

    @classmethod
    def from_counts(cls, n: int, x: float, hits: int, trials: int, statistic: Statistic, **meta) -> 'TailEstimate':
        low, high = wilson_interval(hits, trials)
        return cls(
            n=int(n),
            x=float(x),
            hits=int(hits),
            trials=int(trials),
            p_hat=hits / trials,
            ci_low=low,
            ci_high=high,
            statistic=statistic,
            **meta,
        )

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)

    def to_row(self) -> dict:
        return {
            "statistic": self.statistic.value,
            "chain": self.chain if self.chain is not None else "",
            "p": "" if self.p is None else repr(float(self.p)),
            "gamma": "" if self.gamma is None else repr(float(self.gamma)),
            "n": str(self.n),
            "x": repr(float(self.x)),
            "hits": str(self.hits),
            "trials": str(self.trials),
            "p_hat": repr(float(self.p_hat)),
            "ci_low": repr(float(self.ci_low)),
            "ci_high": repr(float(self.ci_high)),
            "seed": "" if self.seed is None else str(self.seed),
        }

    @classmethod
    def from_row(cls, row: dict) -> 'TailEstimate':
        def opt_float(value):
            return None if value in ("", None) else float(value)

        return cls(
            n=int(row["n"]),
            x=float(row["x"]),
            hits=int(row["hits"]),
            trials=int(row["trials"]),
            p_hat=float(row["p_hat"]),
            ci_low=float(row["ci_low"]),
            ci_high=float(row["ci_high"]),
            statistic=Statistic(row["statistic"]),
            chain=row.get("chain") or None,
            p=opt_float(row.get("p")),
            gamma=opt_float(row.get("gamma")),
            seed=None if row.get("seed") in ("", None) else int(row["seed"]),
        )


def estimates_from_extremes(
    extremes: np.ndarray,
    n: int,
    x_grid: Sequence[float],
    statistic: Statistic,
    strict: bool = False,
    **meta,
) -> List[TailEstimate]:
    """
    Score a sorted grid against one extreme value per trajectory.

    A trajectory hits x when its extreme is >= x (> x when ``strict``), so
    hits are nonincreasing along an ascending grid.
    """
    ordered = np.sort(np.asarray(extremes, dtype=np.float64))
    trials = ordered.size
    side = 'right' if strict else 'left'
    below = np.searchsorted(ordered, np.asarray(x_grid, dtype=np.float64), side=side)
    return [
        TailEstimate.from_counts(n, x, trials - int(k), trials, statistic, **meta)
        for x, k in zip(x_grid, below)
    ]


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    stderr: float
    points_used: int
    flags: Tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        data = asdict(self)
        data['flags'] = list(self.flags)
        return data


def loglog_fit(xs, ys, weights=None, flags: Sequence[str] = ()) -> ScalingFit:
    """
    Least-squares line through (log x, log y).

    Args:
        xs: Positive abscissae
        ys: Positive ordinates
        weights: Optional per-point weights (inverse variances on the log scale)
        flags: Notes carried into the result

    Returns:
        ScalingFit with slope, intercept and slope standard error
    """
    lx = np.log(np.asarray(xs, dtype=np.float64))
    ly = np.log(np.asarray(ys, dtype=np.float64))
    if lx.size < 3:
        raise FitError(f"need at least 3 positive points for a log-log fit, got {lx.size}")
    if np.ptp(lx) == 0.0:
        raise FitError("log-log fit needs at least two distinct abscissae")

    if weights is None:
        res = stats.linregress(lx, ly)
        slope, intercept, stderr = float(res.slope), float(res.intercept), float(res.stderr)
    else:
        w = np.asarray(weights, dtype=np.float64)
        design = np.column_stack([lx, np.ones_like(lx)])
        sw = np.sqrt(w)
        coef, *_ = np.linalg.lstsq(design * sw[:, None], ly * sw, rcond=None)
        slope, intercept = float(coef[0]), float(coef[1])
        resid = ly - design @ coef
        dof = max(lx.size - 2, 1)
        sigma2 = float(w @ resid**2) / dof
        cov = sigma2 * np.linalg.inv(design.T @ (design * w[:, None]))
        stderr = float(math.sqrt(max(cov[0, 0], 0.0)))

    if not math.isfinite(stderr):
        stderr = 0.0
    return ScalingFit(
        slope=slope,
        intercept=intercept,
        stderr=max(stderr, 0.0),
        points_used=int(lx.size),
        flags=tuple(flags),
    )

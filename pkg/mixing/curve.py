"""H1 mixing coefficients pi(|K^n f - pi f|) and their polynomial decay rate."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, Optional, Sequence

import numpy as np

from chains.errors import DomainError, FitError, UnsupportedOperationError
from chains.kernels import ChainModel, DoublingChain, HarrisChain, RenewalChain, TableChain
from chains.observables import Observable, ObservableKind
from chains.rng import RngStream
from mixing.finite import (
    DEFAULT_HARRIS_BINS,
    FiniteKernel,
    harris_kernel,
    renewal_kernel,
    table_kernel,
)
from tails.estimate import ScalingFit, loglog_fit

logger = logging.getLogger(__name__)

CURVE_CSV_COLUMNS = ["n", "coeff", "stderr", "method"]
MIN_MC_TRIALS = 100
DEFAULT_INNER_SAMPLES = 64


class CurveMethod(Enum):
    EXACT = "exact"
    MC = "mc"


@dataclass(frozen=True)
class CurveEntry:
    n: int
    coeff: float
    method: CurveMethod
    stderr: float = 0.0

    def to_row(self) -> dict:
        return {
            "n": str(self.n),
            "coeff": repr(float(self.coeff)),
            "stderr": repr(float(self.stderr)),
            "method": self.method.value,
        }


@dataclass
class MixingCurve:
    entries: List[CurveEntry] = field(default_factory=list)
    discretization_error: float = 0.0
    chain: Optional[str] = None

    def add(self, n: int, coeff: float, method: CurveMethod, stderr: float = 0.0) -> None:
        if coeff < 0:
            raise DomainError(f"mixing coefficient must be >= 0, got {coeff} at n={n}")
        if method == CurveMethod.EXACT:
            stderr = 0.0
        self.entries.append(CurveEntry(n=int(n), coeff=float(coeff), method=method, stderr=float(stderr)))

    def coefficients(self) -> np.ndarray:
        return np.array([e.coeff for e in self.entries])

    def n_values(self) -> np.ndarray:
        return np.array([e.n for e in self.entries])

    def to_rows(self) -> List[dict]:
        return [e.to_row() for e in self.entries]

    @classmethod
    def from_rows(cls, rows: Iterable[dict]) -> 'MixingCurve':
        curve = cls()
        for row in rows:
            curve.add(int(row["n"]), float(row["coeff"]), CurveMethod(row["method"]), float(row["stderr"]))
        return curve

    @classmethod
    def synthetic(cls, n_values: Sequence[int], coeffs: Sequence[float]) -> 'MixingCurve':
        curve = cls()
        for n, c in zip(n_values, coeffs):
            curve.add(n, c, CurveMethod.EXACT)
        return curve


@dataclass(frozen=True)
class H1Estimate:
    coeff: float
    stderr: float
    method: CurveMethod
    discretization_error: float = 0.0


def kernel_h1_curve(kernel: FiniteKernel, f, n_values: Sequence[int]) -> List[float]:
    """
    Exact pi(|K^n f - pi f|) at each requested n from a single iteration pass.

    ``f`` need not be centered: the pi-mean under ``kernel.pi`` is removed.
    """
    targets = sorted(set(int(n) for n in n_values))
    if targets and targets[0] < 0:
        raise DomainError(f"iteration counts must be >= 0, got {targets[0]}")
    values = np.asarray(f, dtype=np.float64)
    values = values - kernel.expectation(values)
    coeffs = {}
    current = 0
    for n in targets:
        while current < n:
            values = kernel.apply(values)
            current += 1
        coeffs[n] = float(kernel.pi @ np.abs(values))
    return [coeffs[int(n)] for n in n_values]


def chain_kernel(chain: ChainModel, harris_bins: int = DEFAULT_HARRIS_BINS) -> FiniteKernel:
    """Finite or discretized kernel of a built-in chain."""
    if isinstance(chain, RenewalChain):
        return renewal_kernel(chain.law)
    if isinstance(chain, HarrisChain):
        return harris_kernel(chain.params, harris_bins)
    if isinstance(chain, TableChain):
        return table_kernel(chain)
    raise UnsupportedOperationError(f"{chain.name} chain has no finite kernel representation")


def _doubling_exact(obs: Observable, n_values: Sequence[int]) -> List[float]:
    if obs.kind != ObservableKind.IDENTITY:
        raise UnsupportedOperationError("exact doubling coefficients are available for the identity observable")
    # K^n f(x) - 1/2 = 2^-n (x - 1/2), whose mean absolute value is 2^-(n+2).
    return [2.0 ** (-(int(n) + 2)) for n in n_values]


def _exact_curve(chain, obs, n_values, harris_bins) -> MixingCurve:
    curve = MixingCurve(chain=chain.name)
    if isinstance(chain, DoublingChain):
        for n, c in zip(n_values, _doubling_exact(obs, n_values)):
            curve.add(n, c, CurveMethod.EXACT)
        return curve

    kernel = chain_kernel(chain, harris_bins)
    coeffs = kernel_h1_curve(kernel, obs.values(kernel.states), n_values)
    error = kernel.discretization_error
    if isinstance(chain, HarrisChain):
        # Richardson comparison with half as many cells.
        coarse = chain_kernel(chain, max(harris_bins // 2, 2))
        coarse_coeffs = kernel_h1_curve(coarse, obs.values(coarse.states), n_values)
        error = max(error, float(np.max(np.abs(np.subtract(coeffs, coarse_coeffs)), initial=0.0)))
    curve.discretization_error = error
    for n, c in zip(n_values, coeffs):
        curve.add(n, max(c, 0.0), CurveMethod.EXACT)
    return curve


def _mc_curve(chain, obs, n_values, trials, inner, seed) -> MixingCurve:
    """
    Nested Monte Carlo: ``trials`` stationary starts, ``inner`` continuations each.

    |mean of f(Y_n) over the inner continuations| estimates |K^n f(s)| for each
    start s; the coefficient is its average over starts.
    """
    if trials < MIN_MC_TRIALS:
        raise DomainError(f"Monte-Carlo mixing needs trials >= {MIN_MC_TRIALS}, got {trials}")
    rng = RngStream(seed, 0).generator()
    starts = chain.stationary_sample(rng, trials)
    states = np.repeat(np.asarray(starts), inner)
    targets = sorted(set(int(n) for n in n_values))
    results = {}
    current = 0
    for n in targets:
        while current < n:
            states = chain.step_many(states, rng)
            current += 1
        inner_means = obs.values(states).reshape(trials, inner).mean(axis=1)
        dev = np.abs(inner_means)
        results[n] = (float(dev.mean()), float(dev.std(ddof=1) / np.sqrt(trials)))
    curve = MixingCurve(chain=chain.name)
    for n in n_values:
        coeff, stderr = results[int(n)]
        curve.add(n, coeff, CurveMethod.MC, stderr)
    return curve


def mixing_curve(
    chain: ChainModel,
    obs: Optional[Observable],
    n_values: Sequence[int],
    method: str = "exact",
    trials: int = 1000,
    inner: int = DEFAULT_INNER_SAMPLES,
    seed: int = 0,
    harris_bins: int = DEFAULT_HARRIS_BINS,
) -> MixingCurve:
    """
    H1 coefficients of ``obs`` under ``chain`` at every n in ``n_values``.

    Args:
        chain: Built-in chain
        obs: Observable (defaults to the chain's canonical observable)
        n_values: Iteration counts, each >= 1
        method: "exact" (kernel iteration or closed form) or "mc"
        trials: Stationary starts for the Monte-Carlo path
        inner: Continuations per start for the Monte-Carlo path
        seed: Master seed for the Monte-Carlo path
        harris_bins: Cells of the Harris discretization

    Returns:
        MixingCurve with one entry per requested n
    """
    if obs is None:
        obs = chain.default_observable()
    if any(int(n) < 1 for n in n_values):
        raise DomainError("mixing coefficients are defined for n >= 1")
    method = CurveMethod(method)
    logger.info("mixing curve: chain=%s method=%s points=%d", chain.name, method.value, len(n_values))
    if method == CurveMethod.EXACT:
        return _exact_curve(chain, obs, list(n_values), harris_bins)
    return _mc_curve(chain, obs, list(n_values), trials, inner, seed)


def h1_coefficient(chain: ChainModel, obs: Optional[Observable], n: int, method: str = "exact", **kwargs) -> H1Estimate:
    """pi(|K^n f - pi f|) at a single n, with stderr (0 for exact) and discretization error."""
    if n < 1:
        raise DomainError(f"h1_coefficient requires n >= 1, got {n}")
    curve = mixing_curve(chain, obs, [n], method=method, **kwargs)
    entry = curve.entries[0]
    return H1Estimate(
        coeff=entry.coeff,
        stderr=entry.stderr,
        method=entry.method,
        discretization_error=curve.discretization_error,
    )


def _half_slopes(ns: np.ndarray, cs: np.ndarray):
    mid = ns.size // 2
    if mid < 3 or ns.size - mid < 3:
        return None
    early = loglog_fit(ns[:mid], cs[:mid]).slope
    late = loglog_fit(ns[mid:], cs[mid:]).slope
    return early, late


def rate_fit(curve: MixingCurve, n_min: int, n_max: int, weighted: bool = False) -> ScalingFit:
    """
    Log-log slope of the mixing curve over [n_min, n_max].

    Zero coefficients are excluded and flagged. The fit is flagged
    "faster than polynomial" when the late half of the range decays at
    least 1.5 times as steeply as the early half.
    """
    flags = []
    ns, cs, ses = [], [], []
    for entry in curve.entries:
        if not n_min <= entry.n <= n_max:
            continue
        if entry.coeff <= 0.0:
            flags.append(f"excluded_zero:{entry.n}")
            continue
        ns.append(entry.n)
        cs.append(entry.coeff)
        ses.append(entry.stderr)
    if len(ns) < 5:
        raise FitError(f"rate_fit needs >= 5 positive coefficients in [{n_min}, {n_max}], got {len(ns)}")

    order = np.argsort(ns)
    ns = np.asarray(ns, dtype=np.float64)[order]
    cs = np.asarray(cs)[order]
    ses = np.asarray(ses)[order]

    weights = None
    if weighted and np.all(ses > 0):
        weights = (cs / ses) ** 2

    halves = _half_slopes(ns, cs)
    if halves is not None:
        early, late = halves
        if late < -1.0 and late < 1.5 * min(early, -1e-12):
            flags.append("faster than polynomial")
    return loglog_fit(ns, cs, weights=weights, flags=flags)

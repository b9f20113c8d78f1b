"""Closed-form laws of the exemplar chains.

The renewal chain on {0, 1, 2, ...} jumps from 0 to n >= 1 with probability
1/(zeta(p+1) n^(p+1)) and descends deterministically from n > 0 to n - 1.
The Harris chain on [0, 1] holds at x with probability 1 - x and otherwise
refreshes from nu, whose CDF is x^(a+1) with a = p - 1.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy import special

from chains.errors import DomainError, TruncationWarning

logger = logging.getLogger(__name__)

DEFAULT_TRUNCATION_N = 10**6


def zeta(s: float, tol: float = 1e-12) -> float:
    """
    Riemann zeta function for real s > 1.

    The head sum runs to N - 1; the tail from N on is the integral
    N^(1-s)/(s-1) plus Euler-Maclaurin corrections, with N chosen so the
    first omitted correction is below ``tol``.

    Args:
        s: Exponent, must exceed 1
        tol: Absolute accuracy target

    Returns:
        sum over n >= 1 of n^(-s)
    """
    if not s > 1.0:
        raise DomainError(f"zeta(s) requires s > 1, got s={s}")
    if not tol > 0.0:
        raise DomainError(f"zeta tolerance must be positive, got tol={tol}")

    remainder_scale = s * (s + 1) * (s + 2) * (s + 3) * (s + 4) / 30240.0
    n_cut = int(math.ceil((remainder_scale / tol) ** (1.0 / (s + 5))))
    n_cut = max(n_cut, 10)

    head = math.fsum(np.arange(1, n_cut, dtype=np.float64) ** (-s))
    tail = (
        n_cut ** (1.0 - s) / (s - 1.0)
        + 0.5 * n_cut ** (-s)
        + s * n_cut ** (-s - 1.0) / 12.0
        - s * (s + 1) * (s + 2) * n_cut ** (-s - 3.0) / 720.0
    )
    return head + tail


@dataclass(frozen=True, eq=False)
class RenewalLaw:
    """
    Exact law of the renewal chain truncated at ``truncation_N``.

    Arrays are stored 0-based with the natural index: ``jump_pmf[n]`` is the
    probability of a jump of height n (``jump_pmf[0]`` is 0), ``pi_pmf[n]``
    the stationary mass of state n.
    """
    p: float
    truncation_N: int
    zeta_p: float
    zeta_p1: float
    d: float
    pi0: float
    jump_pmf: np.ndarray
    pi_pmf: np.ndarray
    mean_tau: float
    tail_tol: float      # jump mass beyond N
    pi_tail: float       # stationary mass beyond N

    @property
    def tail_tol_bound(self) -> float:
        """Analytic bound N^(-p)/(p zeta(p+1)) on ``tail_tol``."""
        return self.truncation_N ** (-self.p) / (self.p * self.zeta_p1)

    @property
    def kac_gap(self) -> float:
        return abs(self.mean_tau * self.pi0 - 1.0)

    @property
    def single_jump_kappa(self) -> float:
        """
        pi0^(p+1) / (p zeta(p+1)): kappa in P(max_k |S_k| >= x) ~ kappa n x^-p.

        One excursion of length x/pi0 drives the indicator sum down by x;
        renewals arrive at rate pi0 and P(tau >= m) ~ m^-p / (p zeta(p+1)).
        """
        return self.pi0 ** (self.p + 1.0) / (self.p * self.zeta_p1)

    @cached_property
    def jump_cdf(self) -> np.ndarray:
        # Truncated jump law renormalized over 1..N.
        cdf = np.cumsum(self.jump_pmf[1:])
        return cdf / cdf[-1]

    @cached_property
    def pi_cdf(self) -> np.ndarray:
        cdf = np.cumsum(self.pi_pmf)
        return cdf / cdf[-1]

    def sample_jumps(self, rng: np.random.Generator, size=None):
        """Draw jump heights J >= 1 from the truncated jump law."""
        u = rng.random(size)
        return np.searchsorted(self.jump_cdf, u, side='right') + 1

    def sample_stationary(self, rng: np.random.Generator, size=None):
        u = rng.random(size)
        return np.searchsorted(self.pi_cdf, u, side='right')

    def tau_survival(self, n: int) -> float:
        """P(tau > n) = sum over i >= n of jump_pmf[i] (untruncated tail included)."""
        if n <= 1:
            return 1.0
        if n > self.truncation_N:
            return float(special.zeta(self.p + 1.0, n)) / self.zeta_p1
        return float(self.jump_pmf[n:].sum()) + self.tail_tol

    def to_dict(self) -> dict:
        return {
            'p': self.p,
            'truncation_N': self.truncation_N,
            'zeta_p': self.zeta_p,
            'zeta_p1': self.zeta_p1,
            'd': self.d,
            'pi0': self.pi0,
            'mean_tau': self.mean_tau,
            'tail_tol': self.tail_tol,
            'pi_tail': self.pi_tail,
        }


def renewal_law(p: float, N: int = DEFAULT_TRUNCATION_N, mass_tol: Optional[float] = None) -> RenewalLaw:
    """
    Build the renewal chain law with jumps truncated at N.

    Args:
        p: Tail exponent, p > 1
        N: Largest representable jump (>= 2)
        mass_tol: If given, warn when the truncated jump mass exceeds it

    Returns:
        RenewalLaw with closed-form d, pi0 and E(tau) = 1 + zeta(p)/zeta(p+1)
    """
    if not p > 1.0:
        raise DomainError(f"renewal chain requires p > 1, got p={p}")
    if int(N) < 2:
        raise DomainError(f"truncation N must be >= 2, got N={N}")
    N = int(N)

    zeta_p = zeta(p, tol=1e-14)
    zeta_p1 = zeta(p + 1.0, tol=1e-14)
    d = 1.0 / (zeta_p + zeta_p1)
    pi0 = d * zeta_p1

    heights = np.arange(1, N + 1, dtype=np.float64)
    weights = heights ** (-(p + 1.0))

    jump_pmf = np.zeros(N + 1)
    jump_pmf[1:] = weights / zeta_p1

    # Hurwitz zeta gives the exact mass beyond N without cancellation.
    beyond = float(special.zeta(p + 1.0, N + 1))
    pi_pmf = np.empty(N + 1)
    pi_pmf[1:] = d * (np.cumsum(weights[::-1])[::-1] + beyond)
    pi_pmf[0] = pi0
    pi_pmf[1] = pi0

    tail_tol = beyond / zeta_p1
    pi_tail = d * (float(special.zeta(p, N + 1)) - N * beyond)
    mean_tau = 1.0 + zeta_p / zeta_p1

    if mass_tol is not None and tail_tol > mass_tol:
        warnings.warn(
            f"jump law truncated at N={N} loses mass {tail_tol:.3e} > {mass_tol:.3e}",
            TruncationWarning,
            stacklevel=2,
        )
    logger.debug("renewal law p=%s N=%d pi0=%.9f tail=%.3e", p, N, pi0, tail_tol)

    return RenewalLaw(
        p=float(p),
        truncation_N=N,
        zeta_p=zeta_p,
        zeta_p1=zeta_p1,
        d=d,
        pi0=pi0,
        jump_pmf=jump_pmf,
        pi_pmf=pi_pmf,
        mean_tau=mean_tau,
        tail_tol=tail_tol,
        pi_tail=max(pi_tail, 0.0),
    )


@dataclass(frozen=True)
class HarrisParams:
    """Parameters of the Harris chain K(x, .) = (1 - x) delta_x + x nu."""
    p: float
    gamma: float = 1.0
    a: float = field(init=False)
    c_a_gamma: float = field(init=False)

    def __post_init__(self):
        if not self.p > 1.0:
            raise DomainError(f"Harris chain requires p > 1, got p={self.p}")
        if not self.gamma > 0.0:
            raise DomainError(f"Harris observable requires gamma > 0, got gamma={self.gamma}")
        a = self.p - 1.0
        object.__setattr__(self, 'a', a)
        object.__setattr__(self, 'c_a_gamma', a / (a + self.gamma))

    @property
    def mean_tau(self) -> float:
        """E(tau) = p/(p-1), the Kac return time of the excursion structure."""
        return self.p / (self.p - 1.0)

    def to_dict(self) -> dict:
        return {'p': self.p, 'gamma': self.gamma, 'a': self.a, 'c_a_gamma': self.c_a_gamma}

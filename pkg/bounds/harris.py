"""Explicit constants and moment identities of the Harris chain."""

import math
from typing import Tuple

import mpmath
from scipy import integrate, special

from bounds.breakdown import BoundBreakdown
from bounds.martingale import fuk_nagaev_iid_bound
from chains.errors import DomainError
from chains.laws import HarrisParams


def harris_lower_constant(p: float, gamma: float) -> float:
    """
    C = (1/4) (c eta / 48)^p p Gamma(p), with c = a/(a + gamma), a = p - 1
    and eta = 1 - (c/2)^(1/gamma).
    """
    c = HarrisParams(p=p, gamma=gamma).c_a_gamma
    eta = 1.0 - (c / 2.0) ** (1.0 / gamma)
    return 0.25 * (c * eta / 48.0) ** p * p * math.gamma(p)


def harris_return_moment(a: float, k: int) -> float:
    """E_pi(T^k) = a * integral of (1-x)^k x^(a-1) over [0, 1], by quadrature."""
    if not a > 0:
        raise DomainError(f"return moment requires a > 0, got a={a}")
    if k < 0:
        raise DomainError(f"return moment requires k >= 0, got k={k}")
    # x^(a-1) is integrable but singular at 0 for a < 1; the algebraic weight handles it.
    value, _ = integrate.quad(lambda x: (1.0 - x) ** k, 0.0, 1.0, weight='alg', wvar=(a - 1.0, 0.0), limit=200)
    return a * value


def harris_return_moment_closed(a: float, k: int) -> float:
    """a B(a, k + 1)."""
    return a * float(special.beta(a, k + 1.0))


def harris_return_moment_bound(a: float, k: int) -> float:
    """a Gamma(a) k^-a, the quadrature bound on E_pi(T^k)."""
    if k < 1:
        raise DomainError(f"return moment bound requires k >= 1, got k={k}")
    return a * math.gamma(a) * k ** (-a)


def beta_gamma_gap(b: float, k: int, dps: int = 50) -> Tuple[float, float]:
    """
    Both sides of B(b + 1, k + 1) <= k^-(b+1) Gamma(b + 1) at ``dps`` digits.

    Returns:
        (beta_value, bound_value) as floats
    """
    if not b > -1 or k < 1:
        raise DomainError(f"beta_gamma_gap requires b > -1 and k >= 1, got b={b}, k={k}")
    with mpmath.workdps(dps):
        lhs = mpmath.beta(mpmath.mpf(b) + 1, mpmath.mpf(k) + 1)
        rhs = mpmath.power(k, -(mpmath.mpf(b) + 1)) * mpmath.gamma(mpmath.mpf(b) + 1)
        return float(lhs), float(rhs)


def harris_tau_moments(p: float) -> Tuple[float, float]:
    """(E tau, E tau^2) of the excursion length; E tau^2 is infinite for p <= 2."""
    if not p > 1:
        raise DomainError(f"Harris chain requires p > 1, got p={p}")
    second = p * p / ((p - 1.0) * (p - 2.0)) if p > 2 else math.inf
    return p / (p - 1.0), second


def harris_tau_tail_bound(p: float, ell: float) -> float:
    """P(tau >= ell) <= p Gamma(p) ell^-p (equals 2 ell^-2 at p = 2)."""
    if ell <= 0:
        raise DomainError(f"tail level must be > 0, got {ell}")
    return p * math.gamma(p) * ell ** (-p)


def harris_initial_hold_bound(p: float, n: float) -> float:
    """P(T_0 >= n/2) <= 2^a a n^-a Gamma(a) for the stationary start, a = p - 1."""
    a = p - 1.0
    if not a > 0:
        raise DomainError(f"Harris chain requires p > 1, got p={p}")
    return 2.0**a * a * n ** (-a) * math.gamma(a)


def harris_excursion_fn_bound(p: float, n: int) -> BoundBreakdown:
    """
    Independent Fuk-Nagaev bound on P(sum (tau_i - E tau) >= n/2).

    Uses u = n/(8(p-1)), v^2 = E(tau^2) n for p > 2 and 3 n log n for p = 2.
    """
    if p < 2.0:
        raise DomainError(f"excursion Fuk-Nagaev bound needs p >= 2, got p={p}")
    if p == 2.0 and n < 8:
        raise DomainError("the p = 2 variance level 3 n log n needs n >= 8")
    u = n / (8.0 * (p - 1.0))
    v2 = harris_tau_moments(p)[1] * n if p > 2 else 3.0 * n * math.log(n)
    tail = min(1.0, harris_tau_tail_bound(p, u))
    return fuk_nagaev_iid_bound(n, n / 2.0, u, tail, v2)


def harris_excursion_deviation_bound(p: float, n: int) -> BoundBreakdown:
    """Closed-form polynomial version of ``harris_excursion_fn_bound``."""
    if p < 2.0:
        raise DomainError(f"excursion deviation bound needs p >= 2, got p={p}")
    if p > 2.0:
        c_p = harris_tau_moments(p)[1]
        terms = [
            ("tail", p * math.gamma(p) * (8.0 * (p - 1.0)) ** p * n ** (1.0 - p)),
            ("exponential", (16.0 * (p - 1.0) * c_p) ** (2.0 * (p - 1.0)) * n ** (-2.0 * (p - 1.0))),
        ]
    else:
        terms = [
            ("tail", 2.0 * 8.0**2 / n),
            ("exponential", (3.0 * 16.0) ** 2 * math.log(n) ** 2 / n**2),
        ]
    return BoundBreakdown.from_terms("harris_excursion_deviation", {'p': p, 'n': n}, terms)

"""Martingale and weakly dependent deviation inequalities."""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from bounds.breakdown import BoundBreakdown, require_nonnegative, require_positive
from chains.errors import DomainError


@dataclass(frozen=True)
class FukConstants:
    p: float
    beta: float
    c_star: float
    reverse: bool = False

    def to_dict(self) -> dict:
        return {'p': self.p, 'beta': self.beta, 'c_star': self.c_star, 'reverse': self.reverse}


def fuk_constants(p: float, reverse: bool = False) -> FukConstants:
    """beta = p/(p+2); c* = (1-beta)^2/(2e^p), or /(8e^p) for reverse martingales."""
    if p < 2.0:
        raise DomainError(f"fuk_constants requires p >= 2, got p={p}")
    beta = p / (p + 2.0)
    denom = (8.0 if reverse else 2.0) * math.exp(p)
    return FukConstants(p=float(p), beta=beta, c_star=(1.0 - beta) ** 2 / denom, reverse=bool(reverse))


def fuk_bound(
    p: float,
    x: float,
    sum_tail_probs: float,
    sum_weak_caps: float,
    sum_var_caps: float,
    reverse: bool = False,
) -> BoundBreakdown:
    """
    Fuk's deviation inequality for (reverse) martingale differences.

    Args:
        p: Moment order, p >= 2
        x: Deviation level
        sum_tail_probs: sum_i P(|d_i| >= beta x)
        sum_weak_caps: sum_i ||E(|d_i|^p 1{|d_i| <= beta x} | F)||_inf
        sum_var_caps: sum_i ||E(d_i^2 | F)||_inf
        reverse: Use the reverse-martingale constants

    Returns:
        BoundBreakdown with terms tail_sum, weak_moment, exponential
    """
    op = "fuk"
    require_positive(op, x=x)
    require_nonnegative(op, sum_tail_probs=sum_tail_probs, sum_weak_caps=sum_weak_caps, sum_var_caps=sum_var_caps)
    const = fuk_constants(p, reverse)
    lead = 2.0 ** (p + 1.0) if reverse else 2.0
    exp_scale = 4.0 if reverse else 2.0

    flags = []
    if sum_var_caps == 0.0:
        exponential = 0.0
        flags.append("zero variance: exponential term set to 0")
    else:
        exponential = exp_scale * math.exp(-const.c_star * x * x / sum_var_caps)
    terms = [
        ("tail_sum", sum_tail_probs),
        ("weak_moment", lead / (const.beta**p * x**p) * sum_weak_caps),
        ("exponential", exponential),
    ]
    inputs = {
        'p': p, 'x': x, 'sum_tail_probs': sum_tail_probs, 'sum_weak_caps': sum_weak_caps,
        'sum_var_caps': sum_var_caps, 'reverse': bool(reverse),
    }
    return BoundBreakdown.from_terms(op, inputs, terms, flags=flags, extras=const.to_dict())


def default_weak_fuk_constant(p: float) -> float:
    """
    C_p traced through the reverse Fuk inequality at q = p + 1.

    C_p = max(bq^-p, 2^(q+1) bq^-q q bq^(q-p)/(q-p)) with bq = q/(q+2).
    """
    if p < 2.0:
        raise DomainError(f"weak Fuk constant requires p >= 2, got p={p}")
    q = p + 1.0
    bq = q / (q + 2.0)
    return max(bq ** (-p), 2.0 ** (q + 1.0) * bq ** (-q) * q * bq ** (q - p) / (q - p))


def weak_fuk_bound(
    p: float,
    x: float,
    M_list: Sequence[float],
    var_cap_sum: float,
    C_p: Optional[float] = None,
) -> BoundBreakdown:
    """(C_p/x^p) sum M_i^p + 4 exp(-x^2/(C_p var_cap_sum)) for conditional weak moments."""
    op = "weak_fuk"
    require_positive(op, x=x)
    require_nonnegative(op, var_cap_sum=var_cap_sum)
    if p < 2.0:
        raise DomainError(f"{op}: requires p >= 2, got p={p}")
    if C_p is None:
        C_p = default_weak_fuk_constant(p)
    if not C_p > 0.0:
        raise DomainError(f"{op}: C_p must be > 0, got {C_p}")
    M = np.asarray(M_list, dtype=np.float64)
    if np.any(M < 0):
        raise DomainError(f"{op}: weak moment caps must be >= 0")

    flags = []
    if var_cap_sum == 0.0:
        exponential = 0.0
        flags.append("zero variance: exponential term set to 0")
    else:
        exponential = 4.0 * math.exp(-x * x / (C_p * var_cap_sum))
    terms = [
        ("weak_moment", C_p * float(np.sum(M**p)) * x ** (-p)),
        ("exponential", exponential),
    ]
    inputs = {'p': p, 'x': x, 'k': int(M.size), 'var_cap_sum': var_cap_sum, 'C_p': C_p}
    return BoundBreakdown.from_terms(op, inputs, terms, flags=flags)


def rosenthal_delta(r: float) -> float:
    if not r > 2.0:
        raise DomainError(f"Rosenthal inequality requires r > 2, got r={r}")
    return min(1.0, 1.0 / (r - 2.0))


def rosenthal_delta_sum(r: float, cond_var_norms: Sequence[float]) -> float:
    """
    [sum_{k=1}^N k^(-1-2 delta/r) (sum_{i=2}^k a_i)^delta]^(r/(2 delta)).

    ``cond_var_norms[i - 2]`` is a_i = ||E(Z_i^2 | G_0) - E(Z_i^2)||_{r/2} for i = 2..N.
    """
    delta = rosenthal_delta(r)
    a = np.asarray(cond_var_norms, dtype=np.float64)
    if np.any(a < 0):
        raise DomainError("conditional variance norms must be >= 0")
    N = a.size + 1
    k = np.arange(1, N + 1, dtype=np.float64)
    inner = np.concatenate([[0.0], np.cumsum(a)])
    bracket = float(np.sum(k ** (-1.0 - 2.0 * delta / r) * inner**delta))
    return bracket ** (r / (2.0 * delta))


def rosenthal_bound(
    r: float,
    N: int,
    x: float,
    l1_coupling: float,
    r_moment: float,
    second_moment: float,
    delta_sum: float,
    delta_raised: bool = True,
    multiplier: float = 1.0,
    naive: bool = False,
) -> BoundBreakdown:
    """
    Rosenthal-type deviation bound for stationary weakly dependent sequences.

    Args:
        r: Moment order, r > 2
        N: Number of summands
        x: Deviation level
        l1_coupling: ||E(Z_2 | G_0)||_1
        r_moment: E|Z_1|^r
        second_moment: E Z_1^2
        delta_sum: The bracketed coupling sum, already raised to r/(2 delta)
            unless ``delta_raised`` is False; with ``naive`` it is
            ||E(Z_2^2 | G_0) - E Z_2^2||_{r/2}
        delta_raised: Whether ``delta_sum`` already carries the exponent
        multiplier: The implied constant (depends on r only)
        naive: Use the Burkholder variant N^(r/2)/x^r * delta_sum^(r/2)

    Returns:
        BoundBreakdown with four labeled terms; ``extras['delta']`` holds delta
    """
    op = "rosenthal"
    delta = rosenthal_delta(r)
    require_positive(op, x=x, N=N)
    require_nonnegative(
        op, l1_coupling=l1_coupling, r_moment=r_moment, second_moment=second_moment,
        delta_sum=delta_sum, multiplier=multiplier,
    )
    flags = []
    if naive:
        last = ("naive_coupling", multiplier * N ** (r / 2.0) / x**r * delta_sum ** (r / 2.0))
    else:
        raised = delta_sum
        if not delta_raised:
            raised = delta_sum ** (r / (2.0 * delta))
            flags.append("delta sum raised to r/(2 delta)")
        last = ("delta_coupling", multiplier * N / x**r * raised)
    terms = [
        ("coupling", multiplier * N / x * l1_coupling),
        ("r_moment", multiplier * N / x**r * r_moment),
        ("variance", multiplier * N ** (r / 2.0) / x**r * second_moment ** (r / 2.0)),
        last,
    ]
    inputs = {
        'r': r, 'N': N, 'x': x, 'l1_coupling': l1_coupling, 'r_moment': r_moment,
        'second_moment': second_moment, 'delta_sum': delta_sum, 'multiplier': multiplier,
    }
    return BoundBreakdown.from_terms(op, inputs, terms, flags=flags, extras={'delta': delta})


def freedman_terms(x: float, y: float, f_inf: float, n: int, p: float) -> BoundBreakdown:
    """
    The two exponential terms of Freedman's inequality in the block argument.

    The quadratic-variation probability is the caller's third term.
    """
    op = "freedman"
    require_positive(op, x=x, y=y, f_inf=f_inf, n=n, p=p)
    terms = [
        ("quadratic", 2.0 * math.exp(-9.0 * x * x / (16.0 * y))),
        ("linear", 2.0 * math.exp(-9.0 * x / (16.0 * f_inf * n ** (1.0 / p)))),
    ]
    return BoundBreakdown.from_terms(op, {'x': x, 'y': y, 'f_inf': f_inf, 'n': n, 'p': p}, terms)


def fuk_nagaev_iid_bound(n: int, y: float, u: float, tail_prob_u: float, v2: float) -> BoundBreakdown:
    """
    Fuk-Nagaev inequality for i.i.d. sums: P(sum (tau_i - E tau) >= y).

    n P(tau >= u) + exp(-(y/(2u)) log(1 + y u / v2)), for any v2 bounding
    sum E((tau_i ^ u)^2).
    """
    op = "fuk_nagaev_iid"
    require_positive(op, n=n, y=y, u=u, v2=v2)
    if not 0.0 <= tail_prob_u <= 1.0:
        raise DomainError(f"{op}: tail probability must lie in [0, 1], got {tail_prob_u}")
    terms = [
        ("tail", n * tail_prob_u),
        ("exponential", math.exp(-(y / (2.0 * u)) * math.log1p(y * u / v2))),
    ]
    inputs = {'n': n, 'y': y, 'u': u, 'tail_prob_u': tail_prob_u, 'v2': v2}
    return BoundBreakdown.from_terms(op, inputs, terms)

"""Deviation bounds for partial-sum maxima of polynomially mixing chains."""

import math
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from bounds.breakdown import BoundBreakdown, require_nonnegative, require_positive
from chains.errors import DomainError


class ModDevCase(Enum):
    P_GT_2 = "p_gt_2"
    P_EQ_2 = "p_eq_2"
    P_LT_2 = "p_lt_2"


def case_for(p: float) -> ModDevCase:
    if p > 2.0:
        return ModDevCase.P_GT_2
    if p == 2.0:
        return ModDevCase.P_EQ_2
    if p > 1.0:
        return ModDevCase.P_LT_2
    raise DomainError(f"polynomial mixing exponent must exceed 1, got p={p}")


def _exp_term(scale: float, exponent_num: float, exponent_den: float) -> float:
    """scale * exp(-exponent_num / exponent_den) with the zero-scale and zero-denominator limits."""
    if scale == 0.0 or exponent_den == 0.0:
        return 0.0
    return scale * math.exp(-exponent_num / exponent_den)


def moddev_bound(case, n: float, x: float, p: float, r: Optional[float] = None, kappa: float = 1.0) -> BoundBreakdown:
    """
    Shape of the moderate-deviation bound on P(max_k |S_k| >= x).

    Args:
        case: ModDevCase or its value ("p_gt_2", "p_eq_2", "p_lt_2")
        n: Number of summands
        x: Deviation level
        p: Mixing exponent (must match the case)
        r: Moment order in (2, 4), required when p = 2
        kappa: Unspecified constant in front of the polynomial rate

    Returns:
        BoundBreakdown with terms "polynomial" and, for p >= 2, a second term
    """
    case = ModDevCase(case)
    op = "moddev"
    require_positive(op, x=x, n=n)
    require_nonnegative(op, kappa=kappa)
    if case_for(p) != case:
        raise DomainError(f"{op}: p={p} does not match case {case.value}")
    inputs = {'case': case.value, 'n': n, 'x': x, 'p': p, 'kappa': kappa}

    polynomial = kappa * n * x ** (-p)
    if case == ModDevCase.P_GT_2:
        terms = [("polynomial", polynomial), ("exponential", _exp_term(kappa, x * x, kappa * n))]
    elif case == ModDevCase.P_EQ_2:
        if r is None or not 2.0 < r < 4.0:
            raise DomainError(f"{op}: case p_eq_2 needs r in (2, 4), got r={r}")
        inputs['r'] = r
        terms = [
            ("polynomial", polynomial),
            ("log_polynomial", kappa * (n * math.log(n)) ** (r / 2.0) * x ** (-r)),
        ]
    else:
        terms = [("polynomial", polynomial)]
    return BoundBreakdown.from_terms(op, inputs, terms)


def moddev_shape(p: float, r: float = 3.0):
    """(n, x) -> moddev_bound total at kappa = 1, for kappa fitting."""
    case = case_for(p)

    def shape(n, x):
        return moddev_bound(case, n, x, p, r=r if case == ModDevCase.P_EQ_2 else None, kappa=1.0).total

    return shape


def lower_shape(p: float):
    """(n, x) -> n x^-p, the shape of the matching lower bounds."""

    def shape(n, x):
        return n * x ** (-p)

    return shape


def rio_fn_bound(n: float, x: float, p: float, r: float, C: float = 1.0) -> BoundBreakdown:
    """Rio's Fuk-Nagaev type bound: C n/x^p + C n^(r/2)/x^r (+ C (n log n)^(r/2)/x^r when p = 2)."""
    op = "rio_fn"
    require_positive(op, x=x, n=n)
    require_nonnegative(op, C=C)
    if p < 2.0:
        raise DomainError(f"{op}: requires p >= 2, got p={p}")
    if r < 1.0:
        raise DomainError(f"{op}: requires r >= 1, got r={r}")
    terms = [
        ("heavy_tail", C * n * x ** (-p)),
        ("rosenthal", C * n ** (r / 2.0) * x ** (-r)),
    ]
    if p == 2.0:
        terms.append(("log_rosenthal", C * (n * math.log(n)) ** (r / 2.0) * x ** (-r)))
    return BoundBreakdown.from_terms(op, {'n': n, 'x': x, 'p': p, 'r': r, 'C': C}, terms)


def young_log_factor(L) -> float:
    """1 + log(sum L) - (1/2) log(sum L^2), homogeneous of degree 0 in L."""
    L = np.asarray(L, dtype=np.float64)
    s1 = float(L.sum())
    s2 = float(L @ L)
    if s1 <= 0.0 or s2 <= 0.0:
        raise DomainError("young log factor needs sum L > 0")
    return 1.0 + math.log(s1) - 0.5 * math.log(s2)


def young_bound(p: float, L_list: Sequence[float], x: float, kappa: float = 1.0) -> BoundBreakdown:
    """
    Concentration bound for separately Lipschitz functionals of the chain.

    p > 2: kappa sum L^p / x^p + kappa exp(-x^2/(kappa sum L^2));
    p = 2: the exponential term's variance carries the log factor;
    p < 2: kappa sum L^p / x^p only.
    """
    op = "young"
    require_positive(op, x=x)
    require_nonnegative(op, kappa=kappa)
    if not p > 1.0:
        raise DomainError(f"{op}: requires p > 1, got p={p}")
    L = np.asarray(L_list, dtype=np.float64)
    if L.size == 0 or np.any(L < 0) or not np.all(np.isfinite(L)):
        raise DomainError(f"{op}: Lipschitz constants must be finite and nonnegative")
    inputs = {'p': p, 'x': x, 'kappa': kappa, 'n': int(L.size), 'sum_L': float(L.sum())}

    polynomial = kappa * float(np.sum(L**p)) * x ** (-p)
    sum_sq = float(L @ L)
    flags = []
    extras = {}
    if p > 2.0:
        if sum_sq == 0.0:
            flags.append("zero variance: exponential term set to 0")
        terms = [("polynomial", polynomial), ("exponential", _exp_term(kappa, x * x, kappa * sum_sq))]
    elif p == 2.0:
        factor = young_log_factor(L)
        if factor <= 0.0:
            raise DomainError(f"{op}: log factor {factor} is not positive")
        variance = sum_sq * factor
        extras = {'log_factor': factor, 'variance_factor': variance}
        terms = [("polynomial", polynomial),
                 ("exponential", _exp_term(kappa, x * x, kappa * variance), extras)]
    else:
        terms = [("polynomial", polynomial)]
    return BoundBreakdown.from_terms(op, inputs, terms, flags=flags, extras=extras)


def default_c0(length: int) -> np.ndarray:
    """Summable default sequence c0_k = (k + 1)^-2."""
    return (np.arange(length, dtype=np.float64) + 1.0) ** -2


def maximal_sup_terms(L_list: Sequence[float], p: float) -> np.ndarray:
    """sup over h in 1..k+1 of (mean of L_{k-h+1..k})^p, for every k."""
    L = np.asarray(L_list, dtype=np.float64)
    prefix = np.concatenate([[0.0], np.cumsum(L)])
    out = np.empty(L.size)
    for k in range(L.size):
        h = np.arange(1, k + 2)
        means = (prefix[k + 1] - prefix[k + 1 - h]) / h
        out[k] = means.max() ** p
    return out


def maximal_Mk(L_list: Sequence[float], c0_list: Optional[Sequence[float]], C: float, k: int, p: float = 2.0) -> float:
    """
    M_k^p = C sum_{j<=k} L_j^p c0_{k-j} + C sup_h (h^-1 sum_{j=k-h+1}^{k} L_j)^p.

    The sup runs over h in {1, ..., k + 1}; windows never reach below index 0.
    """
    L = np.asarray(L_list, dtype=np.float64)
    if not 0 <= k < L.size:
        raise DomainError(f"maximal_Mk: k must lie in [0, {L.size}), got {k}")
    c0 = default_c0(k + 1) if c0_list is None else np.asarray(c0_list, dtype=np.float64)
    if c0.size < k + 1 or np.any(c0[: k + 1] < 0):
        raise DomainError(f"maximal_Mk: c0 needs {k + 1} nonnegative entries")
    conv = float(np.sum(L[: k + 1] ** p * c0[k::-1][: k + 1]))
    h = np.arange(1, k + 2)
    prefix = np.concatenate([[0.0], np.cumsum(L[: k + 1])])
    sup = float(((prefix[k + 1] - prefix[k + 1 - h]) / h).max() ** p)
    return C * conv + C * sup


def gamma_deviation_bound(n: int, x: float, f_inf: float, gamma_seq: Sequence[float]) -> BoundBreakdown:
    """
    Bound on P(max_k |S_k| >= 4x) from the H1 coefficients gamma(i).

    With M = ||f||_inf and q = [x/M]:
    (4 n M / x^2) sum_{i<q} gamma(i) + (2 n/(x q)) sum_{i=q+1}^{2q} gamma(i).
    The probability is 0 once x > n M / 2.
    """
    op = "gamma_deviation"
    require_positive(op, x=x, f_inf=f_inf, n=n)
    inputs = {'n': n, 'x': x, 'f_inf': f_inf}
    if x > n * f_inf / 2.0:
        return BoundBreakdown.from_terms(op, inputs, [("near", 0.0), ("far", 0.0)], regime="trivial: 4x > 2 ||f|| n")
    q = int(math.floor(x / f_inf))
    if q < 1:
        raise DomainError(f"{op}: requires x >= ||f||_inf so that q >= 1")
    gamma = np.asarray(gamma_seq, dtype=np.float64)
    if gamma.size < 2 * q + 1:
        raise DomainError(f"{op}: needs gamma(0..{2 * q}), got {gamma.size} values")
    inputs['q'] = q
    near = 4.0 * n * f_inf / (x * x) * float(gamma[:q].sum())
    far = 2.0 * n / (x * q) * float(gamma[q + 1: 2 * q + 1].sum())
    return BoundBreakdown.from_terms(op, inputs, [("near", near), ("far", far)])

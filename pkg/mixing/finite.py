"""Finite and discretized transition operators.

Every kernel is exposed as a ``scipy.sparse.linalg.LinearOperator`` acting on
functions (``matvec``: f -> Kf) and on measures (``rmatvec``: mu -> mu K).
The renewal chain is an explicit sparse matrix; the Harris chain is a
diagonal-plus-rank-one operator that never materializes its M x M matrix.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from chains.errors import DomainError, TruncationWarning
from chains.kernels import TableChain
from chains.laws import HarrisParams, RenewalLaw

logger = logging.getLogger(__name__)

DEFAULT_HARRIS_BINS = 4096


@dataclass(eq=False)
class FiniteKernel:
    states: np.ndarray
    operator: LinearOperator
    pi: np.ndarray
    discretization_error: float = 0.0
    explicit: Optional[Union[sparse.spmatrix, np.ndarray]] = None
    name: str = "finite"

    @property
    def size(self) -> int:
        return int(self.states.size)

    @property
    def matrix(self):
        """Explicit transition matrix when one exists, else the operator."""
        return self.explicit if self.explicit is not None else self.operator

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.operator.matvec(f)

    def apply_adjoint(self, mu: np.ndarray) -> np.ndarray:
        return self.operator.rmatvec(mu)

    def row_sums(self) -> np.ndarray:
        return self.apply(np.ones(self.size))

    def stationarity_residual(self) -> float:
        return float(np.max(np.abs(self.apply_adjoint(self.pi) - self.pi)))

    def expectation(self, f: np.ndarray) -> float:
        return float(self.pi @ f)


def renewal_kernel(law: RenewalLaw) -> FiniteKernel:
    """
    Renewal chain on {0, ..., N} with the jump law renormalized over 1..N.

    The stationary law of the truncated chain is exact for the truncated
    kernel; its L1 distance to the untruncated pi (leakage beyond N
    included) is reported as ``discretization_error``.
    """
    N = law.truncation_N
    q = law.jump_pmf[1:] / law.jump_pmf[1:].sum()

    # Row 0 holds the jump law; row n >= 1 has a single 1 at column n - 1.
    data = np.concatenate([q, np.ones(N)])
    indices = np.concatenate([np.arange(1, N + 1), np.arange(0, N)])
    indptr = np.concatenate([[0], N + np.arange(0, N + 1)])
    matrix = sparse.csr_matrix((data, indices, indptr), shape=(N + 1, N + 1))

    survival = np.cumsum(q[::-1])[::-1]
    pi = np.concatenate([[1.0], survival])
    pi /= pi.sum()

    leakage = float(np.abs(pi - law.pi_pmf).sum()) + law.pi_tail
    logger.debug("renewal kernel N=%d leakage=%.3e", N, leakage)
    return FiniteKernel(
        states=np.arange(N + 1),
        operator=aslinearoperator(matrix),
        pi=pi,
        discretization_error=leakage,
        explicit=matrix,
        name="renewal",
    )


def renewal_h1_floor(kernel: FiniteKernel, n: int) -> float:
    """
    pi{0} * pi(Y > n), a lower bound on the renewal H1 coefficient at n.

    A state above n descends for more than n steps, so K^n 1{0} vanishes
    there and the centered iterate equals -pi{0}.
    """
    if n < 0:
        raise DomainError(f"iteration count must be >= 0, got {n}")
    return float(kernel.pi[0] * kernel.pi[n + 1:].sum())


def harris_kernel(params: HarrisParams, bins: int = DEFAULT_HARRIS_BINS) -> FiniteKernel:
    """
    Midpoint discretization of the Harris kernel with ``bins`` cells.

    The holding atom (1 - x) delta_x stays on the diagonal; nu is replaced by
    its exact cell masses. The discrete stationary law is proportional to
    nu_i / x_i; ``discretization_error`` is its L1 distance to the cell masses
    of the exact pi (CDF x^a).
    """
    if bins < 2:
        raise DomainError(f"Harris discretization needs at least 2 bins, got {bins}")
    edges = np.linspace(0.0, 1.0, bins + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    nu = np.diff(edges ** (params.a + 1.0))
    hold = 1.0 - mids

    def matvec(f):
        f = np.ravel(f)
        return hold * f + mids * (nu @ f)

    def rmatvec(mu):
        mu = np.ravel(mu)
        return hold * mu + nu * (mids @ mu)

    operator = LinearOperator(shape=(bins, bins), matvec=matvec, rmatvec=rmatvec, dtype=np.float64)
    pi = nu / mids
    pi /= pi.sum()
    exact_pi = np.diff(edges ** params.a)
    return FiniteKernel(
        states=mids,
        operator=operator,
        pi=pi,
        discretization_error=float(np.abs(pi - exact_pi).sum()),
        name="harris",
    )


def table_kernel(chain: TableChain) -> FiniteKernel:
    """Exact kernel of a finite transition table; pi is solved for when absent."""
    matrix = sparse.csr_matrix(chain.matrix)
    if chain.pi is not None:
        pi = np.asarray(chain.pi, dtype=np.float64)
    else:
        size = chain.size
        system = np.vstack([chain.matrix.T - np.eye(size), np.ones((1, size))])
        rhs = np.zeros(size + 1)
        rhs[-1] = 1.0
        pi, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    kernel = FiniteKernel(
        states=np.arange(chain.size),
        operator=aslinearoperator(matrix),
        pi=pi,
        explicit=matrix,
        name="table",
    )
    residual = kernel.stationarity_residual()
    if residual > 1e-10:
        warnings.warn(f"table pi is not stationary (residual {residual:.3e})", TruncationWarning, stacklevel=2)
    return kernel


def exact_iterate(kernel: FiniteKernel, f, n: int) -> np.ndarray:
    """
    K^n f by repeated application of the kernel.

    Args:
        kernel: Finite or discretized kernel
        f: Function values over ``kernel.states``
        n: Number of steps, n >= 0

    Returns:
        Vector of (K^n f)(s) over the states
    """
    if n < 0:
        raise DomainError(f"iteration count must be >= 0, got {n}")
    values = np.array(f, dtype=np.float64)
    if values.shape != (kernel.size,):
        raise DomainError(f"f has shape {values.shape}, kernel has {kernel.size} states")
    for _ in range(int(n)):
        values = kernel.apply(values)
    return values


def doubling_iterate(f, n: int, x) -> np.ndarray:
    """
    Closed-form K^n f for the doubling chain: 2^-n sum over j < 2^n of f((x + j)/2^n).

    ``f`` must accept numpy arrays.
    """
    if n < 0:
        raise DomainError(f"iteration count must be >= 0, got {n}")
    if n > 24:
        raise DomainError(f"closed-form doubling iterate enumerates 2^n points; n={n} is too large")
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    scale = 2.0**n
    offsets = np.arange(2**n, dtype=np.float64)
    values = np.array([np.mean(f((xi + offsets) / scale)) for xi in x])
    return values

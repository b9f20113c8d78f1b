import math
from dataclasses import asdict, dataclass
from typing import List

from chains.errors import DomainError


@dataclass(frozen=True)
class BlockParams:
    """Block sizes of the martingale decomposition of a partial sum of length n."""
    n: int
    x: float
    p: float
    f_inf: float
    kappa: float
    t: int                # block length [n^(1/p)]
    u: int                # blocks per group [x/(2 ||f|| n^(1/p))]
    n_t: int              # number of length-t blocks
    n_u: int              # number of groups of u blocks
    y: float              # Freedman variance level for this p
    y_p_gt_2: float
    y_p_eq_2: float
    trivial_low: bool     # x < 2 ||f|| n^(1/p)
    trivial_high: bool    # x > ||f|| n / 4

    @property
    def trivial(self) -> bool:
        return self.trivial_low or self.trivial_high

    def violations(self) -> List[str]:
        """Broken non-trivial-regime invariants (empty when consistent)."""
        if self.trivial:
            return []
        problems = []
        if self.u < 1:
            problems.append(f"u = {self.u} < 1")
        if self.n_t < 4 * self.u:
            problems.append(f"n_t = {self.n_t} < 4u = {4 * self.u}")
        if 2.0 * self.f_inf * self.t * self.u > self.x * (1.0 + 1e-12):
            problems.append(f"2||f|| t u = {2.0 * self.f_inf * self.t * self.u} > x = {self.x}")
        return problems

    def to_dict(self) -> dict:
        return asdict(self)


def integer_root(n: int, p: float) -> int:
    """Largest t with t^p <= n."""
    t = int(math.floor(n ** (1.0 / p)))
    while (t + 1) ** p <= n:
        t += 1
    while t > 1 and t**p > n:
        t -= 1
    return max(t, 1)


def block_parameters(n: int, x: float, p: float, f_inf: float, kappa: float = 1.0) -> BlockParams:
    """
    Block sizes t, u, n_t, n_u, the Freedman level y and the trivial regimes.

    Below 2 ||f|| n^(1/p) the deviation bound holds trivially for large
    kappa; above ||f|| n / 4 the deviation probability is 0.
    """
    if n < 1:
        raise DomainError(f"block_parameters requires n >= 1, got {n}")
    if not x > 0 or not f_inf > 0:
        raise DomainError(f"block_parameters requires x > 0 and f_inf > 0, got x={x}, f_inf={f_inf}")
    if not p > 1:
        raise DomainError(f"block_parameters requires p > 1, got p={p}")

    root = n ** (1.0 / p)
    t = integer_root(n, p)
    u = int(math.floor(x / (2.0 * f_inf * root)))
    n_t = n // t
    n_u = n_t // u if u >= 1 else 0

    log_n = math.log(n) if n > 1 else 0.0
    y_gt = max(2.0 * kappa * n, 16.0 * x * root * f_inf)
    y_eq = max(2.0 * kappa * n * log_n, 16.0 * x * math.sqrt(n * log_n) * f_inf)

    return BlockParams(
        n=int(n),
        x=float(x),
        p=float(p),
        f_inf=float(f_inf),
        kappa=float(kappa),
        t=t,
        u=u,
        n_t=n_t,
        n_u=n_u,
        y=y_eq if p == 2.0 else y_gt,
        y_p_gt_2=y_gt,
        y_p_eq_2=y_eq,
        trivial_low=x < 2.0 * f_inf * root,
        trivial_high=x > f_inf * n / 4.0,
    )

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from chains.errors import DomainError, ObservableLookupError
from chains.laws import HarrisParams, RenewalLaw


class ObservableKind(Enum):
    RENEWAL_INDICATOR = "renewal_indicator"
    HARRIS_POWER = "harris_power"
    IDENTITY = "identity"
    CUSTOM_TABLE = "custom_table"


@dataclass(frozen=True)
class Observable:
    """
    A centered observable f - pi(f).

    ``centering`` is the mean that is subtracted. For the renewal indicator
    the raw function is 1{n=0} with mean pi{0}, and the centered value is
    taken with the sign pi{0} - 1{n=0}.
    """
    kind: ObservableKind
    centering: float
    sup_norm: float
    gamma: Optional[float] = None
    table: Optional[Tuple[float, ...]] = None

    @property
    def oscillation(self) -> float:
        """sup f - inf f, the Lipschitz constant under the discrete metric."""
        if self.kind == ObservableKind.RENEWAL_INDICATOR:
            return 1.0
        if self.kind == ObservableKind.CUSTOM_TABLE:
            return float(max(self.table) - min(self.table))
        return 1.0

    def values(self, states) -> np.ndarray:
        """Vectorized observable_value."""
        states = np.asarray(states)
        if self.kind == ObservableKind.RENEWAL_INDICATOR:
            return self.centering - (states == 0).astype(np.float64)
        if self.kind == ObservableKind.HARRIS_POWER:
            return np.power(states.astype(np.float64), self.gamma) - self.centering
        if self.kind == ObservableKind.IDENTITY:
            return states.astype(np.float64) - self.centering
        table = np.asarray(self.table, dtype=np.float64)
        idx = states.astype(np.int64)
        if np.any(idx < 0) or np.any(idx >= table.size) or np.any(idx != states):
            raise ObservableLookupError(
                f"state outside table of size {table.size}: {states[(idx < 0) | (idx >= table.size)][:5]}"
            )
        return table[idx] - self.centering

    def to_dict(self) -> dict:
        return {
            'kind': self.kind.value,
            'centering': self.centering,
            'sup_norm': self.sup_norm,
            'gamma': self.gamma,
        }


def renewal_indicator(law: RenewalLaw) -> Observable:
    pi0 = law.pi0
    return Observable(
        kind=ObservableKind.RENEWAL_INDICATOR,
        centering=pi0,
        sup_norm=max(pi0, 1.0 - pi0),
    )


def harris_power(params: HarrisParams) -> Observable:
    """Y^gamma - a/(a + gamma); pi(Y^gamma) = a/(a + gamma) when pi has density a x^(a-1)."""
    c = params.c_a_gamma
    return Observable(
        kind=ObservableKind.HARRIS_POWER,
        centering=c,
        sup_norm=max(c, 1.0 - c),
        gamma=params.gamma,
    )


def identity_observable() -> Observable:
    """x - 1/2, centered under the Lebesgue measure."""
    return Observable(kind=ObservableKind.IDENTITY, centering=0.5, sup_norm=0.5)


def table_observable(values, pi) -> Observable:
    """Observable on a finite state space {0, ..., len(values) - 1}."""
    values = np.asarray(values, dtype=np.float64)
    pi = np.asarray(pi, dtype=np.float64)
    if values.shape != pi.shape:
        raise DomainError(f"table has {values.size} values but pi has {pi.size} weights")
    centering = float(values @ pi)
    return Observable(
        kind=ObservableKind.CUSTOM_TABLE,
        centering=centering,
        sup_norm=float(np.max(np.abs(values - centering))),
        table=tuple(float(v) for v in values),
    )


def observable_value(obs: Observable, state) -> float:
    """Centered value of ``obs`` at a single state."""
    return float(obs.values(np.asarray([state]))[0])

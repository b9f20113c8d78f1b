import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

from chains.errors import DomainError


@dataclass(frozen=True)
class BoundTerm:
    label: str
    value: float
    factors: dict = field(default_factory=dict, hash=False)  # multiplicative pieces of the value

    def to_dict(self) -> dict:
        data = {'label': self.label, 'value': self.value}
        if self.factors:
            data['factors'] = dict(self.factors)
        return data


@dataclass(frozen=True)
class BoundBreakdown:
    """Right-hand side of an inequality as labeled additive terms."""
    op: str
    terms: Tuple[BoundTerm, ...]
    total: float
    inputs: dict = field(default_factory=dict, hash=False)
    regime: Optional[str] = None
    flags: Tuple[str, ...] = ()
    extras: dict = field(default_factory=dict, hash=False)  # named intermediate quantities

    @classmethod
    def from_terms(
        cls,
        op: str,
        inputs: dict,
        terms: Sequence[tuple],
        regime: Optional[str] = None,
        flags: Sequence[str] = (),
        extras: Optional[dict] = None,
    ) -> 'BoundBreakdown':
        built = []
        for label, value, *factors in terms:
            value = float(value)
            if not math.isfinite(value) or value < 0.0:
                raise DomainError(f"{op}: term '{label}' is not a finite nonnegative value ({value})")
            built.append(BoundTerm(label, value, dict(factors[0]) if factors else {}))
        return cls(
            op=op,
            terms=tuple(built),
            total=math.fsum(t.value for t in built),
            inputs=dict(inputs),
            regime=regime,
            flags=tuple(flags),
            extras=dict(extras or {}),
        )

    def term(self, label: str) -> float:
        for t in self.terms:
            if t.label == label:
                return t.value
        raise KeyError(label)

    def term_factors(self, label: str) -> dict:
        for t in self.terms:
            if t.label == label:
                return dict(t.factors)
        raise KeyError(label)

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(t.label for t in self.terms)

    def to_dict(self) -> dict:
        data = {
            'op': self.op,
            'inputs': self.inputs,
            'terms': [t.to_dict() for t in self.terms],
            'total': self.total,
            'regime': self.regime,
        }
        if self.flags:
            data['flags'] = list(self.flags)
        if self.extras:
            data['extras'] = self.extras
        return data

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)


def require_positive(op: str, **values) -> None:
    for name, value in values.items():
        if not value > 0:
            raise DomainError(f"{op}: {name} must be > 0, got {value}")


def require_nonnegative(op: str, **values) -> None:
    for name, value in values.items():
        if not value >= 0:
            raise DomainError(f"{op}: {name} must be >= 0, got {value}")

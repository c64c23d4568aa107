"""Value types and the elementary transformations every indicator is built from.

Arithmetic is plain binary64. Nothing here rounds; rounding to a presentation
precision happens only when reports are written.

The transformations accept bare floats or :class:`Measure` values. With bare
floats the caller vouches for the units; with measures the unit contract is
checked and the result comes back as a measure too.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Union

from .errors import DivisionByZeroBase, DomainError, PeriodError, UnitError


class UnitKind(enum.Enum):
    PERCENT = "percent"
    PERCENTAGE_POINT = "pp"
    CURRENCY_BILLION = "usd_bn"
    PHYSICAL_UNITS = "units"
    ENERGY_TWH = "twh"
    JOBS_MILLION = "jobs_mn"
    RATIO = "ratio"
    DIMENSIONLESS = "dimensionless"

    @classmethod
    def from_token(cls, token: str) -> "UnitKind":
        try:
            return cls(token.strip().lower())
        except ValueError:
            raise UnitError(f"unknown unit token {token!r}") from None


@dataclass(frozen=True)
class Unit:
    kind: UnitKind
    label: str = ""

    def __post_init__(self):
        if not self.label:
            object.__setattr__(self, "label", _DEFAULT_LABELS[self.kind])

    @classmethod
    def of(cls, token: str) -> "Unit":
        return cls(UnitKind.from_token(token))

    @property
    def token(self) -> str:
        return self.kind.value


_DEFAULT_LABELS = {
    UnitKind.PERCENT: "%",
    UnitKind.PERCENTAGE_POINT: "pp",
    UnitKind.CURRENCY_BILLION: "USD bn",
    UnitKind.PHYSICAL_UNITS: "units",
    UnitKind.ENERGY_TWH: "TWh",
    UnitKind.JOBS_MILLION: "million jobs",
    UnitKind.RATIO: "x",
    UnitKind.DIMENSIONLESS: "",
}

PERCENT = Unit(UnitKind.PERCENT)
PERCENTAGE_POINT = Unit(UnitKind.PERCENTAGE_POINT)
RATIO = Unit(UnitKind.RATIO)
DIMENSIONLESS = Unit(UnitKind.DIMENSIONLESS)


@dataclass(frozen=True, order=True)
class Period:
    start_year: int
    end_year: int | None = None

    def __post_init__(self):
        if self.end_year is None:
            object.__setattr__(self, "end_year", self.start_year)
        if self.start_year > self.end_year:
            raise PeriodError(f"period starts after it ends: {self.start_year} > {self.end_year}")

    @property
    def span_years(self) -> int:
        return self.end_year - self.start_year

    @classmethod
    def parse(cls, text: str) -> "Period":
        """Parse ``2024`` or ``2025-2030``."""
        text = text.strip()
        try:
            if "-" in text:
                a, b = text.split("-", 1)
                return cls(int(a), int(b))
            return cls(int(text))
        except ValueError:
            raise PeriodError(f"bad period {text!r}") from None

    def __str__(self) -> str:
        if self.start_year == self.end_year:
            return str(self.start_year)
        return f"{self.start_year}-{self.end_year}"


class EvidenceStatus(enum.Enum):
    REPORTED = "reported"
    PROJECTION = "projection"
    CALCULATED = "calculated"
    INTERPRETATION = "interpretation"


class Boundary(enum.Enum):
    """Interpretation boundary attached to every derived number."""

    OBSERVED_FACT = "ObservedFact"
    PROJECTION_BASED = "ProjectionBased"
    SCALE_COMPARISON = "ScaleComparison"


INGESTIBLE = frozenset({EvidenceStatus.REPORTED, EvidenceStatus.PROJECTION})


@dataclass(frozen=True)
class SourceValue:
    """A statistic as published by an institutional source."""

    id: str
    concept: str
    quantity: float
    unit: Unit
    period: Period
    source_family: str
    evidence_status: EvidenceStatus
    notes: str = ""
    over_100: bool = False

    def __post_init__(self):
        q = float(self.quantity)
        object.__setattr__(self, "quantity", q)
        if not math.isfinite(q):
            raise DomainError(f"{self.id}: quantity must be finite, got {q}")
        if self.evidence_status not in INGESTIBLE:
            raise DomainError(
                f"{self.id}: ingested values must be reported or projection, "
                f"not {self.evidence_status.value}"
            )
        if self.unit.kind is UnitKind.PERCENT and not self.over_100 and not 0.0 <= q <= 100.0:
            raise DomainError(f"{self.id}: percent value {q} outside [0, 100] without over-100 flag")

    def measure(self) -> "Measure":
        return Measure(self.quantity, self.unit)


@dataclass(frozen=True)
class DerivedIndicator:
    id: str
    formula_id: "FormulaId"
    inputs: tuple[str, ...]
    quantity: float
    unit: Unit
    interpretation_boundary: Boundary
    concept: str = ""
    params: dict = field(default_factory=dict, compare=False, hash=False)
    evidence_status: EvidenceStatus = field(default=EvidenceStatus.CALCULATED, init=False)

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if not math.isfinite(self.quantity):
            raise DomainError(f"{self.id}: derived quantity must be finite")


def boundary_for(statuses, scale_comparison: bool = False) -> Boundary:
    """Taint rule: one projection input makes the whole result projection-based."""
    statuses = list(statuses)
    if any(s is EvidenceStatus.PROJECTION for s in statuses):
        return Boundary.PROJECTION_BASED
    if scale_comparison:
        return Boundary.SCALE_COMPARISON
    return Boundary.OBSERVED_FACT


@dataclass(frozen=True)
class Measure:
    value: float
    unit: Unit


Number = Union[float, int, Measure]


def _split(*args: Number):
    values = []
    units = []
    for a in args:
        if isinstance(a, Measure):
            values.append(float(a.value))
            units.append(a.unit)
        else:
            values.append(float(a))
            units.append(None)
    for v in values:
        if not math.isfinite(v):
            raise DomainError(f"non-finite input {v}")
    return values, units


def _same_kind(units) -> Unit | None:
    known = [u for u in units if u is not None]
    if not known:
        return None
    if any(u.kind is not known[0].kind for u in known):
        raise UnitError(f"unit mismatch: {[u.token for u in known]}")
    return known[0]


def _wrap(value: float, units, unit: Unit):
    if any(u is not None for u in units):
        return Measure(value, unit)
    return value


def absolute_change(x0: Number, xt: Number):
    (a, b), units = _split(x0, xt)
    unit = _same_kind(units)
    return _wrap(b - a, units, unit)


def percentage_point_change(x0: Number, xt: Number):
    """Same arithmetic as :func:`absolute_change`, but only for percent inputs."""
    (a, b), units = _split(x0, xt)
    for u in units:
        if u is not None and u.kind is not UnitKind.PERCENT:
            raise UnitError(f"percentage-point change needs percent inputs, got {u.token}")
    return _wrap(b - a, units, PERCENTAGE_POINT)


def relative_change(x0: Number, xt: Number):
    (a, b), units = _split(x0, xt)
    _same_kind(units)
    if a == 0:
        raise DivisionByZeroBase("relative change from a zero base")
    # Evaluated as xt/x0 - 1 so it agrees bit-for-bit with growth_multiplier - 1.
    return _wrap(b / a - 1.0, units, DIMENSIONLESS)


def cagr(x0: Number, xt: Number, n: int):
    (a, b), units = _split(x0, xt)
    _same_kind(units)
    if isinstance(n, bool) or int(n) != n:
        raise PeriodError(f"CAGR needs a whole number of years, got {n!r}")
    n = int(n)
    if n < 1:
        raise PeriodError(f"CAGR needs n >= 1, got {n}")
    if a <= 0 or b <= 0:
        raise DomainError(f"CAGR needs positive endpoints, got {a} and {b}")
    return _wrap((b / a) ** (1.0 / n) - 1.0, units, DIMENSIONLESS)


def growth_multiplier(x0: Number, xt: Number):
    (a, b), units = _split(x0, xt)
    _same_kind(units)
    if a <= 0:
        raise DomainError(f"growth multiplier needs a positive base, got {a}")
    return _wrap(b / a, units, RATIO)


def scale_ratio(xi: Number, xref: Number):
    # Units may differ on purpose (e.g. sub-category vs. total); callers mark
    # such results as scale comparisons.
    (a, b), units = _split(xi, xref)
    if b <= 0:
        raise DomainError(f"scale ratio needs a positive reference, got {b}")
    return _wrap(a / b, units, RATIO)

"""Sector-level coordination-friction index.

Seven friction components are normalised per series, weighted, summed, and the
resulting index can be rank-correlated with an outcome series. There is no
published data for this index, so everything shipped with the package for it
is synthetic.
"""

from __future__ import annotations

import csv
import enum
import math
import statistics
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

from .core import DIMENSIONLESS, Period, Unit
from .errors import (
    AlignmentError,
    DegenerateVariance,
    DomainError,
    IncompleteObservation,
    IngestError,
    WeightError,
)


class ComponentKind(enum.Enum):
    LAT = "latency"
    DISP = "dispute or failed-match rate"
    ERR = "model-error cost"
    PROT = "protocol-failure pressure"
    AUDGAP = "audit-gap intensity"
    ENB = "energy or infrastructure bottleneck"
    OVR = "human-override burden"


COMPONENT_KINDS: tuple[ComponentKind, ...] = tuple(ComponentKind)

# Broader cost field the seven components are drawn from. Documentation only;
# none of these is computed.
COST_TAXONOMY = (
    "search",
    "bargain",
    "contract",
    "monitor",
    "latency",
    "model",
    "protocol",
    "energy",
    "audit",
    "override",
)

# Candidate sector indicators for auditable trust and human sovereignty. Each
# names the component it would feed; shipped as templates, not computed.
SOVEREIGNTY_TEMPLATES: dict[str, ComponentKind] = {
    "share of AI-assisted decisions with human review": ComponentKind.OVR,
    "override frequency": ComponentKind.OVR,
    "audit-log completeness": ComponentKind.AUDGAP,
    "appeal or contestability mechanism": ComponentKind.AUDGAP,
    "model documentation availability": ComponentKind.AUDGAP,
    "automated decision reversal rate": ComponentKind.ERR,
    "protocol failure incidents": ComponentKind.PROT,
    "API downtime or failure rate": ComponentKind.PROT,
    "liability allocation clarity": ComponentKind.AUDGAP,
}


class DegenerateRangeWarning(UserWarning):
    pass


class Normalization(enum.Enum):
    MIN_MAX = "MinMax"
    Z_SCORE = "ZScore"

    @classmethod
    def parse(cls, token: str) -> "Normalization":
        norm = token.replace("_", "").replace("-", "").lower()
        for n in cls:
            if n.value.lower() == norm:
                return n
        raise ValueError(f"unknown normalisation {token!r}")


class WeightScheme(enum.Enum):
    EQUAL = "Equal"
    EXPERT = "Expert"
    EMPIRICAL = "Empirical"


@dataclass(frozen=True)
class FrictionComponent:
    kind: ComponentKind
    raw_value: float
    unit: Unit = DIMENSIONLESS
    period: Period | None = None

    def __post_init__(self):
        v = float(self.raw_value)
        if not math.isfinite(v) or v < 0:
            raise DomainError(f"{self.kind.name}: raw value must be finite and >= 0, got {v}")
        object.__setattr__(self, "raw_value", v)


@dataclass(frozen=True)
class CfWeights:
    weights: Mapping[ComponentKind, float]
    scheme: WeightScheme = WeightScheme.EQUAL

    def __post_init__(self):
        w = dict(self.weights)
        missing = [k.name for k in COMPONENT_KINDS if k not in w]
        if missing:
            raise WeightError(f"missing weights for {missing}")
        if len(w) != len(COMPONENT_KINDS):
            raise WeightError("weights given for unknown components")
        for k, v in w.items():
            if not math.isfinite(v) or v < 0:
                raise WeightError(f"weight for {k.name} must be >= 0, got {v}")
        total = math.fsum(w.values())
        if abs(total - 1.0) > 1e-9:
            raise WeightError(f"weights sum to {total}, not 1")
        object.__setattr__(self, "weights", {k: float(w[k]) for k in COMPONENT_KINDS})

    @classmethod
    def equal(cls) -> "CfWeights":
        return cls({k: 1.0 / len(COMPONENT_KINDS) for k in COMPONENT_KINDS}, WeightScheme.EQUAL)

    @classmethod
    def from_mapping(cls, weights: Mapping[str, float] | None, scheme: str = "Equal") -> "CfWeights":
        scheme_ = WeightScheme(scheme)
        if weights is None:
            if scheme_ is not WeightScheme.EQUAL:
                raise WeightError(f"{scheme_.value} weighting needs explicit weights")
            return cls.equal()
        try:
            parsed = {ComponentKind[k.upper()]: float(v) for k, v in weights.items()}
        except KeyError as exc:
            raise WeightError(f"unknown component {exc.args[0]!r}") from None
        return cls(parsed, scheme_)

    def to_mapping(self) -> dict[str, float]:
        return {k.name: self.weights[k] for k in COMPONENT_KINDS}


@dataclass(frozen=True)
class Observation:
    period: Period
    components: Mapping[ComponentKind, FrictionComponent]

    def __post_init__(self):
        comps = dict(self.components)
        missing = [k.name for k in COMPONENT_KINDS if k not in comps]
        if missing:
            raise IncompleteObservation(f"{self.period}: missing components {missing}")
        object.__setattr__(self, "components", comps)


@dataclass(frozen=True)
class SectorSeries:
    sector_label: str
    observations: tuple[Observation, ...]
    outcomes: tuple[tuple[Period, float], ...] | None = None
    synthetic: bool = True

    def __post_init__(self):
        object.__setattr__(self, "observations", tuple(self.observations))
        periods = [o.period for o in self.observations]
        for a, b in zip(periods, periods[1:]):
            if not a < b:
                raise DomainError(f"{self.sector_label}: periods must be strictly increasing ({a} then {b})")
        if self.outcomes is not None:
            object.__setattr__(self, "outcomes", tuple(self.outcomes))


@dataclass(frozen=True)
class NormalizedSeries:
    sector_label: str
    scheme: Normalization
    rows: tuple[tuple[Period, dict[ComponentKind, float]], ...]
    degenerate: tuple[ComponentKind, ...] = field(default=())


def normalize(series: SectorSeries, scheme: Normalization = Normalization.MIN_MAX) -> NormalizedSeries:
    obs = series.observations
    if scheme is Normalization.MIN_MAX and len(obs) < 2:
        raise DomainError("min-max normalisation needs at least two observations")
    if scheme is Normalization.Z_SCORE and len(obs) < 2:
        raise DegenerateVariance("z-score normalisation needs at least two observations")
    columns: dict[ComponentKind, list[float]] = {}
    degenerate = []
    for kind in COMPONENT_KINDS:
        xs = [o.components[kind].raw_value for o in obs]
        if scheme is Normalization.MIN_MAX:
            lo, hi = min(xs), max(xs)
            if hi == lo:
                degenerate.append(kind)
                warnings.warn(
                    f"{series.sector_label}: {kind.name} is constant; mapped to 0",
                    DegenerateRangeWarning,
                    stacklevel=2,
                )
                columns[kind] = [0.0] * len(xs)
            else:
                columns[kind] = [(x - lo) / (hi - lo) for x in xs]
        else:
            mean = statistics.fmean(xs)
            sd = statistics.pstdev(xs, mean)
            if sd == 0:
                raise DegenerateVariance(f"{series.sector_label}: {kind.name} has zero variance")
            columns[kind] = [(x - mean) / sd for x in xs]
    rows = tuple((o.period, {k: columns[k][i] for k in COMPONENT_KINDS}) for i, o in enumerate(obs))
    return NormalizedSeries(series.sector_label, scheme, rows, tuple(degenerate))


def cf_index(components: Mapping[ComponentKind, float], w: CfWeights) -> float:
    """Weighted sum of the seven normalised components, matched by kind.

    Accumulates in exact rationals and rounds once, dividing by the (unit, up
    to 1e-9) weight total, so identical components give back exactly that
    component, [0, 1] inputs stay in [0, 1] and raising a component never
    lowers the result.
    """
    if not isinstance(w, CfWeights):
        raise WeightError("weights must be a CfWeights")
    missing = [k.name for k in COMPONENT_KINDS if k not in components]
    if missing:
        raise IncompleteObservation(f"missing components {missing}")
    num = sum(Fraction(w.weights[k]) * Fraction(float(components[k])) for k in COMPONENT_KINDS)
    return float(num / sum(Fraction(w.weights[k]) for k in COMPONENT_KINDS))


def index_series(
    series: SectorSeries,
    weights: CfWeights | None = None,
    scheme: Normalization = Normalization.MIN_MAX,
) -> list[tuple[Period, float]]:
    weights = weights or CfWeights.equal()
    norm = normalize(series, scheme)
    return [(p, cf_index(c, weights)) for p, c in norm.rows]


def midranks(xs: Sequence[float]) -> list[float]:
    order = sorted(range(len(xs)), key=lambda i: xs[i])
    ranks = [0.0] * len(xs)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and xs[order[j + 1]] == xs[order[i]]:
            j += 1
        r = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = r
        i = j + 1
    return ranks


def validate_against_outcomes(index: Sequence[float], outcomes: Sequence[float]) -> float:
    """Spearman rank correlation, ties given the mean of their ranks."""
    if len(index) != len(outcomes):
        raise AlignmentError(f"index has {len(index)} points, outcomes {len(outcomes)}")
    if len(index) < 3:
        raise AlignmentError("need at least three aligned points")
    rx, ry = midranks(index), midranks(outcomes)
    mx, my = statistics.fmean(rx), statistics.fmean(ry)
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(rx, ry))
    sxx = math.fsum((a - mx) ** 2 for a in rx)
    syy = math.fsum((b - my) ** 2 for b in ry)
    if sxx == 0 or syy == 0:
        raise DegenerateVariance("rank correlation undefined for a constant series")
    rho = sxy / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, rho))


SERIES_COLUMNS = ("sector", "period", *[k.name for k in COMPONENT_KINDS])


def read_sector_series(path: str | Path) -> list[SectorSeries]:
    """Read a tab-separated file, one row per sector and period.

    Columns: sector, period, LAT ... OVR, and an optional trailing outcome.
    """
    path = Path(path)
    try:
        fh = path.open(encoding="utf-8", newline="")
    except OSError as exc:
        raise IngestError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh, delimiter="\t")
        header = next(reader, None)
        if header is None:
            return []
        header = [h.strip() for h in header]
        has_outcome = header[-1:] == ["outcome"]
        expected = list(SERIES_COLUMNS) + (["outcome"] if has_outcome else [])
        if header != expected:
            raise IngestError(f"expected columns {expected}, got {header}", line=1)
        grouped: dict[str, list[tuple[Observation, float | None]]] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(expected):
                raise IngestError(f"expected {len(expected)} fields, got {len(row)}", line=lineno)
            sector = row[0].strip()
            try:
                period = Period.parse(row[1])
            except ValueError as exc:
                raise IngestError(str(exc), line=lineno, column=2) from None
            comps = {}
            for col, kind in enumerate(COMPONENT_KINDS, start=2):
                try:
                    comps[kind] = FrictionComponent(kind, float(row[col]), period=period)
                except ValueError as exc:
                    raise IngestError(str(exc), line=lineno, column=col + 1) from None
            outcome = None
            if has_outcome and row[-1].strip():
                try:
                    outcome = float(row[-1])
                except ValueError:
                    raise IngestError(f"bad outcome {row[-1]!r}", line=lineno, column=len(row)) from None
            grouped.setdefault(sector, []).append((Observation(period, comps), outcome))
    out = []
    for sector, rows in grouped.items():
        outcomes = None
        if has_outcome and all(o is not None for _, o in rows):
            outcomes = tuple((obs.period, o) for obs, o in rows)
        out.append(SectorSeries(sector, tuple(obs for obs, _ in rows), outcomes))
    return out

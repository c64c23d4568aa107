"""Action-capacity mapping and conservative hypothesis assessment.

Both are driven by configuration: mapping rules say which indicator concepts
feed which action-capacity variables, and hypothesis specs say which
indicators a claim needs. The engine never writes boundary text itself; it
only checks that it is there.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

import yaml

from .core import Boundary, DerivedIndicator, EvidenceStatus, SourceValue
from .errors import ConfigError, SpecError, UnmappedIndicator
from .ledger import AuditRecord, check_record


class ActionCapacityVariable(enum.Enum):
    H = "human judgement, responsibility and sovereign oversight"
    K = "conventional capital"
    M = "model/software-agent capacity"
    R = "robotic or cyber-physical capacity"
    P = "protocol quality"
    C = "compute capacity"
    En = "energy availability"
    T = "auditable trust"
    Omega = "uncertainty, shocks and institutional constraints"

    @classmethod
    def parse(cls, token: str) -> "ActionCapacityVariable":
        token = token.strip()
        for v in cls:
            if v.name.lower() == token.lower() or v.name.lower() == token.lower().removesuffix("_t"):
                return v
        raise ConfigError(f"unknown action-capacity variable {token!r}")


# Variables an empirical indicator can be mapped onto (conventional capital is not one).
MAPPING_TARGETS = tuple(v for v in ActionCapacityVariable if v is not ActionCapacityVariable.K)

# Central to the framework but not observable in global aggregate statistics.
FUTURE_MEASUREMENT = frozenset({ActionCapacityVariable.P, ActionCapacityVariable.T})

Indicator = Union[SourceValue, DerivedIndicator]


# -- mapping -----------------------------------------------------------------


@dataclass(frozen=True)
class MappingRule:
    name: str
    targets: frozenset[ActionCapacityVariable]
    boundary_statement: str
    pattern: str | None = None
    applies_to: str = "any"
    boundary: Boundary | None = None
    status: EvidenceStatus | None = None

    def __post_init__(self):
        if not self.targets:
            raise ConfigError(f"rule {self.name!r} has no target variables")
        if not self.boundary_statement.strip():
            raise ConfigError(f"rule {self.name!r} has no boundary statement")
        if self.applies_to not in ("any", "source", "derived"):
            raise ConfigError(f"rule {self.name!r}: applies_to must be any, source or derived")
        if self.pattern is None and self.boundary is None and self.status is None:
            raise ConfigError(f"rule {self.name!r} matches nothing")

    def matches(self, ind: Indicator) -> bool:
        derived = isinstance(ind, DerivedIndicator)
        if self.applies_to == "source" and derived:
            return False
        if self.applies_to == "derived" and not derived:
            return False
        if self.boundary is not None and (not derived or ind.interpretation_boundary is not self.boundary):
            return False
        if self.status is not None and (derived or ind.evidence_status is not self.status):
            return False
        if self.pattern is not None:
            return re.search(self.pattern, f"{ind.id} {ind.concept}", re.IGNORECASE) is not None
        return True


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[MappingRule, ...]
    future_measurement: frozenset[ActionCapacityVariable] = FUTURE_MEASUREMENT


@dataclass(frozen=True)
class MappingEntry:
    indicator_id: str
    targets: frozenset[ActionCapacityVariable]
    boundary_statement: str
    rules: tuple[str, ...]
    future_measurement: bool = False
    evidence_status: EvidenceStatus = field(default=EvidenceStatus.INTERPRETATION, init=False)

    def __post_init__(self):
        if not self.targets:
            raise ConfigError(f"{self.indicator_id}: mapping entry without targets")
        if not self.boundary_statement.strip():
            raise ConfigError(f"{self.indicator_id}: mapping entry without boundary statement")

    @property
    def multiple(self) -> bool:
        return len(self.rules) > 1


def map_indicator(indicator: Indicator, ruleset: RuleSet) -> MappingEntry:
    """Union of the targets of every matching rule; several matches are flagged, not resolved."""
    hits = [r for r in ruleset.rules if r.matches(indicator)]
    if not hits:
        raise UnmappedIndicator(indicator.id)
    targets = frozenset().union(*(r.targets for r in hits))
    statement = " ".join(dict.fromkeys(r.boundary_statement.strip() for r in hits))
    return MappingEntry(
        indicator_id=indicator.id,
        targets=targets,
        boundary_statement=statement,
        rules=tuple(r.name for r in hits),
        future_measurement=bool(targets & ruleset.future_measurement),
    )


@dataclass(frozen=True)
class MappingResult:
    entries: tuple[MappingEntry, ...]
    unmapped: tuple[str, ...]
    future_measurement: frozenset[ActionCapacityVariable]

    def covered(self) -> set[ActionCapacityVariable]:
        out: set[ActionCapacityVariable] = set()
        for e in self.entries:
            if not e.future_measurement:
                out |= e.targets
        return out

    def measured_in_dataset(self, var: ActionCapacityVariable) -> bool:
        return var not in self.future_measurement and var in self.covered()


def map_all(indicators: Iterable[Indicator], ruleset: RuleSet) -> MappingResult:
    entries, unmapped = [], []
    for ind in indicators:
        try:
            entries.append(map_indicator(ind, ruleset))
        except UnmappedIndicator:
            unmapped.append(ind.id)
    return MappingResult(tuple(entries), tuple(unmapped), ruleset.future_measurement)


# -- assessment --------------------------------------------------------------


class Verdict(enum.Enum):
    SUPPORTED = "Supported"
    SUPPORTED_UNDER_PROJECTION = "SupportedUnderProjection"
    SUPPORTED_WITH_CAUTION = "SupportedWithCaution"
    SUPPORTED_AS_CONCEPTUAL_PROPOSITION = "SupportedAsConceptualProposition"
    NOT_ESTABLISHED = "NotEstablished"

    @property
    def strength(self) -> int:
        return _STRENGTH[self]


_STRENGTH = {
    Verdict.SUPPORTED: 3,
    Verdict.SUPPORTED_UNDER_PROJECTION: 2,
    Verdict.SUPPORTED_WITH_CAUTION: 1,
    Verdict.SUPPORTED_AS_CONCEPTUAL_PROPOSITION: 1,
    Verdict.NOT_ESTABLISHED: 0,
}


class ClaimKind(enum.Enum):
    EMPIRICAL = "empirical"
    CONCEPTUAL = "conceptual"


class ProjectionSensitivity(enum.Enum):
    UNDER_PROJECTION = "under_projection"
    CAUTION = "caution"


@dataclass(frozen=True)
class HypothesisSpec:
    id: str
    kind: ClaimKind
    required: tuple[str, ...]
    boundary_statement: str = ""
    projection_sensitivity: ProjectionSensitivity = ProjectionSensitivity.CAUTION
    convergence: frozenset[ActionCapacityVariable] = frozenset()
    claim: str = ""

    def __post_init__(self):
        if not self.required:
            raise SpecError(f"{self.id}: hypothesis spec lists no required indicators")


@dataclass(frozen=True)
class HypothesisAssessment:
    id: str
    required_indicator_ids: tuple[str, ...]
    evidence_classes_present: frozenset[EvidenceStatus]
    boundary_statement: str
    verdict: Verdict
    reason: str = ""
    evidence_status: EvidenceStatus = field(default=EvidenceStatus.INTERPRETATION, init=False)


def _evidence_classes(ind: Indicator, record: AuditRecord | None) -> set[EvidenceStatus]:
    if isinstance(ind, SourceValue):
        return {ind.evidence_status}
    out = {EvidenceStatus.CALCULATED}
    if ind.interpretation_boundary is Boundary.PROJECTION_BASED:
        out.add(EvidenceStatus.PROJECTION)
    if record is not None:
        for i in record.inputs:
            try:
                out.add(EvidenceStatus(i.status))
            except ValueError:
                pass
    return out


def assess(
    h: HypothesisSpec,
    indicators: Mapping[str, Indicator],
    audit: Iterable[AuditRecord] = (),
    mapping: MappingResult | None = None,
) -> HypothesisAssessment:
    if not h.required:
        raise SpecError(f"{h.id}: no required indicators")
    records = {r.result_id: r for r in audit}
    present: set[EvidenceStatus] = set()

    def result(verdict: Verdict, reason: str) -> HypothesisAssessment:
        return HypothesisAssessment(h.id, h.required, frozenset(present), h.boundary_statement, verdict, reason)

    for rid in h.required:
        ind = indicators.get(rid)
        if ind is None:
            return result(Verdict.NOT_ESTABLISHED, f"required indicator {rid} is missing")
        rec = None
        if isinstance(ind, DerivedIndicator):
            rec = records.get(rid)
            if rec is None or not check_record(rec) or rec.declared != ind.quantity:
                return result(Verdict.NOT_ESTABLISHED, f"audit for {rid} is missing or fails")
        present |= _evidence_classes(ind, rec)

    if h.kind is ClaimKind.CONCEPTUAL:
        if not h.convergence:
            return result(Verdict.NOT_ESTABLISHED, "no convergence variables declared")
        covered = mapping.covered() if mapping is not None else set()
        missing = sorted(v.name for v in h.convergence - covered)
        if missing:
            return result(Verdict.NOT_ESTABLISHED, f"convergence not shown for {', '.join(missing)}")
        return result(Verdict.SUPPORTED_AS_CONCEPTUAL_PROPOSITION, "empirical convergence across declared variables")

    # A missing boundary caps support before projections are considered, so
    # downgrading evidence can never lift the verdict.
    if not h.boundary_statement.strip():
        return result(Verdict.SUPPORTED_WITH_CAUTION, "no boundary statement; support is qualified")
    if EvidenceStatus.PROJECTION in present:
        if h.projection_sensitivity is ProjectionSensitivity.UNDER_PROJECTION:
            return result(Verdict.SUPPORTED_UNDER_PROJECTION, "required evidence is projection-based")
        return result(Verdict.SUPPORTED_WITH_CAUTION, "required evidence is projection-based")
    return result(Verdict.SUPPORTED, "reported and calculated evidence aligned with stated boundary")


# -- configuration -----------------------------------------------------------


def _load_yaml(path: str | Path):
    try:
        with open(path, encoding="utf-8") as fh:
            return yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _vars(tokens: Sequence[str] | None) -> frozenset[ActionCapacityVariable]:
    return frozenset(ActionCapacityVariable.parse(t) for t in (tokens or ()))


def load_rules(path: str | Path) -> RuleSet:
    data = _load_yaml(path)
    rules = []
    for i, r in enumerate(data.get("rules") or []):
        try:
            rules.append(
                MappingRule(
                    name=str(r.get("name", f"rule{i + 1}")),
                    targets=_vars(r.get("targets")),
                    boundary_statement=str(r.get("boundary_statement", "")),
                    pattern=r.get("pattern"),
                    applies_to=r.get("applies_to", "any"),
                    boundary=Boundary(r["boundary"]) if r.get("boundary") else None,
                    status=EvidenceStatus(r["status"]) if r.get("status") else None,
                )
            )
        except (ValueError, AttributeError) as exc:
            raise ConfigError(f"{path}: rule {i + 1}: {exc}") from exc
    future = data.get("future_measurement")
    return RuleSet(tuple(rules), _vars(future) if future is not None else FUTURE_MEASUREMENT)


def load_hypotheses(path: str | Path) -> list[HypothesisSpec]:
    data = _load_yaml(path)
    specs = []
    for i, h in enumerate(data.get("hypotheses") or []):
        hid = str(h.get("id", f"#{i + 1}"))
        if not h.get("required"):
            raise SpecError(f"{path}: hypothesis {hid} lists no required indicators")
        try:
            specs.append(
                HypothesisSpec(
                    id=hid,
                    kind=ClaimKind(h.get("kind", "empirical")),
                    required=tuple(str(x) for x in h["required"]),
                    boundary_statement=str(h.get("boundary_statement", "")),
                    projection_sensitivity=ProjectionSensitivity(h.get("projection_sensitivity", "caution")),
                    convergence=_vars(h.get("convergence")),
                    claim=str(h.get("claim", "")),
                )
            )
        except ValueError as exc:
            raise ConfigError(f"{path}: hypothesis {hid}: {exc}") from exc
    return specs

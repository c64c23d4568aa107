"""Source vetting, evidence classification and the recomputation audit trail."""

from __future__ import annotations

import json
import math
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from . import __version__
from .core import (
    Boundary,
    DerivedIndicator,
    EvidenceStatus,
    Period,
    SourceValue,
    Unit,
    UnitKind,
)
from .errors import ClassificationError, DiagError, IoError, LineageError
from .formulas import FormulaId, evaluate

AUTHOR_CALCULATED = "author-calculated"


# -- vetting -----------------------------------------------------------------


@dataclass(frozen=True)
class CandidateSource:
    id: str
    concept: str
    quantity: float | None
    unit: Unit
    period: Period
    source_family: str
    status: EvidenceStatus
    notes: str = ""
    has_numeric_value: bool = True
    requires_unsupported_assumption: bool = False
    domain_relevant: bool = True
    over_100: bool = False
    line: int | None = None


@dataclass(frozen=True)
class VetResult:
    candidate_id: str
    accepted: SourceValue | None = None
    failed_step: int | None = None
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.accepted is not None


def vet_source(c: CandidateSource) -> VetResult:
    """Apply the source-vetting steps; rejection is a normal outcome, not an error."""
    if not c.has_numeric_value or c.quantity is None or not math.isfinite(c.quantity):
        return VetResult(c.id, failed_step=1, reason="no explicit numeric value")
    if not c.domain_relevant:
        return VetResult(c.id, failed_step=1, reason="not relevant to AI, robotics, compute-energy or labour")
    try:
        status = classify(ValueDescriptor.from_status(c.status))
    except ClassificationError as exc:
        return VetResult(c.id, failed_step=2, reason=str(exc))
    if status not in (EvidenceStatus.REPORTED, EvidenceStatus.PROJECTION):
        return VetResult(c.id, failed_step=2, reason=f"{status.value} values cannot be primary inputs")
    if c.requires_unsupported_assumption:
        return VetResult(c.id, failed_step=3, reason="requires unsupported assumption or undocumented conversion")
    if not c.source_family.strip():
        return VetResult(c.id, failed_step=4, reason="source family not recorded")
    try:
        value = SourceValue(
            id=c.id,
            concept=c.concept,
            quantity=c.quantity,
            unit=c.unit,
            period=c.period,
            source_family=c.source_family,
            evidence_status=status,
            notes=c.notes,
            over_100=c.over_100,
        )
    except DiagError as exc:
        return VetResult(c.id, failed_step=4, reason=str(exc))
    return VetResult(c.id, accepted=value)


# -- classification ----------------------------------------------------------


@dataclass(frozen=True)
class ValueDescriptor:
    """What is known about a value: scenario or realised, engine output, narrative."""

    scenario: bool | None = None
    engine_derived: bool = False
    narrative: bool = False

    @classmethod
    def from_status(cls, status: EvidenceStatus) -> "ValueDescriptor":
        if status is EvidenceStatus.REPORTED:
            return cls(scenario=False)
        if status is EvidenceStatus.PROJECTION:
            return cls(scenario=True)
        if status is EvidenceStatus.CALCULATED:
            return cls(engine_derived=True)
        return cls(narrative=True)


def classify(v: ValueDescriptor) -> EvidenceStatus:
    if v.engine_derived and v.narrative:
        raise ClassificationError("descriptor is both an engine output and a narrative artifact")
    if v.narrative:
        if v.scenario is not None:
            raise ClassificationError("narrative artifact cannot also carry a reporting period status")
        return EvidenceStatus.INTERPRETATION
    if v.engine_derived:
        return EvidenceStatus.CALCULATED
    if v.scenario is None:
        raise ClassificationError("descriptor does not say whether the value is realised or a scenario")
    return EvidenceStatus.PROJECTION if v.scenario else EvidenceStatus.REPORTED


# -- published-value checks ---------------------------------------------------

_REPORTED_RE = re.compile(r"^\s*(-?[\d,]*\.?\d+)\s*(%|x|pp)?\s*$", re.IGNORECASE)


@dataclass(frozen=True)
class ReportedValue:
    """A rounded figure as printed in a source table, e.g. ``26.95%`` or ``11.73x``."""

    text: str
    value: float
    tolerance: float

    @classmethod
    def parse(cls, text: str) -> "ReportedValue":
        m = _REPORTED_RE.match(text)
        if not m:
            raise ValueError(f"cannot read reported value {text!r}")
        digits, suffix = m.group(1).replace(",", ""), (m.group(2) or "").lower()
        decimals = len(digits.split(".")[1]) if "." in digits else 0
        value = float(digits)
        tol = 0.5 * 10.0 ** (-decimals)
        if suffix == "%":
            value /= 100.0
            tol /= 100.0
        return cls(text.strip(), value, tol)

    def matches(self, x: float) -> bool:
        # Small slack for the decimal->binary conversion of the bound itself.
        return abs(x - self.value) <= self.tolerance * (1 + 1e-9)


# -- audit records -----------------------------------------------------------


@dataclass(frozen=True)
class AuditInput:
    id: str
    value: float
    unit: str
    period: str
    status: str
    source: str = ""

    @classmethod
    def from_source(cls, sv: SourceValue) -> "AuditInput":
        return cls(sv.id, sv.quantity, sv.unit.token, str(sv.period), sv.evidence_status.value, sv.source_family)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "value": self.value,
            "unit": self.unit,
            "period": self.period,
            "status": self.status,
            "source": self.source,
        }


@dataclass(frozen=True)
class AuditRecord:
    result_id: str
    formula_id: str
    inputs: tuple[AuditInput, ...]
    recomputed: float
    declared: float
    match: bool
    boundary: Boundary
    params: dict = field(default_factory=dict, compare=False, hash=False)
    reported: str | None = None
    label: str = AUTHOR_CALCULATED
    supersedes: str | None = None
    engine_version: str = __version__

    def to_dict(self) -> dict:
        # Key order here is the on-disk field order; keep it stable.
        return {
            "result_id": self.result_id,
            "formula_id": self.formula_id,
            "equation": FormulaId.from_token(self.formula_id).spec.equation,
            "inputs": [i.to_dict() for i in self.inputs],
            "params": self.params,
            "recomputed": self.recomputed,
            "declared": self.declared,
            "match": self.match,
            "boundary": self.boundary.value,
            "label": self.label,
            "reported": self.reported,
            "supersedes": self.supersedes,
            "engine_version": self.engine_version,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, separators=(", ", ": "), allow_nan=False)

    @classmethod
    def from_dict(cls, d: Mapping) -> "AuditRecord":
        return cls(
            result_id=d["result_id"],
            formula_id=d["formula_id"],
            inputs=tuple(
                AuditInput(i["id"], float(i["value"]), i["unit"], i["period"], i["status"], i.get("source", ""))
                for i in d["inputs"]
            ),
            recomputed=float(d["recomputed"]),
            declared=float(d["declared"]),
            match=bool(d["match"]),
            boundary=Boundary(d["boundary"]),
            params=dict(d.get("params") or {}),
            reported=d.get("reported"),
            label=d.get("label", AUTHOR_CALCULATED),
            supersedes=d.get("supersedes"),
            engine_version=d.get("engine_version", ""),
        )


def _recompute(formula_id: str, inputs: Iterable[AuditInput], params: Mapping) -> float:
    inputs = list(inputs)
    return evaluate(
        FormulaId.from_token(formula_id),
        [i.value for i in inputs],
        [Unit(UnitKind.from_token(i.unit)) for i in inputs],
        dict(params),
    )


def _taint_ok(inputs: Iterable[AuditInput], boundary: Boundary) -> bool:
    if any(i.status == EvidenceStatus.PROJECTION.value for i in inputs):
        return boundary is Boundary.PROJECTION_BASED
    return True


def record_audit(
    d: DerivedIndicator,
    sources: Mapping[str, SourceValue | AuditInput],
    log: "AuditLog | None" = None,
    reported: str | None = None,
) -> AuditRecord:
    """Recompute ``d`` from its inputs and build (and optionally append) its audit record.

    ``d.quantity`` is the declared value and must equal the recomputation
    exactly. A ``reported`` presentation string like ``"26.95%"`` adds a check
    against the published rounding, within half a unit of its last digit.
    """
    snapshot = []
    for input_id in d.inputs:
        try:
            src = sources[input_id]
        except KeyError:
            raise LineageError(f"{d.id}: input {input_id!r} cannot be resolved") from None
        snapshot.append(AuditInput.from_source(src) if isinstance(src, SourceValue) else src)
    params = dict(d.params)
    recomputed = _recompute(d.formula_id.token, snapshot, params)
    match = recomputed == d.quantity and _taint_ok(snapshot, d.interpretation_boundary)
    if reported is not None:
        match = match and ReportedValue.parse(reported).matches(recomputed)
    rec = AuditRecord(
        result_id=d.id,
        formula_id=d.formula_id.token,
        inputs=tuple(snapshot),
        recomputed=recomputed,
        declared=d.quantity,
        match=match,
        boundary=d.interpretation_boundary,
        params=params,
        reported=reported,
    )
    if log is not None:
        log.append(rec)
    return rec


def check_record(rec: AuditRecord) -> bool:
    try:
        fresh = _recompute(rec.formula_id, rec.inputs, rec.params)
    except (DiagError, ValueError, KeyError, TypeError, ZeroDivisionError):
        return False
    ok = fresh == rec.recomputed == rec.declared and rec.match and _taint_ok(rec.inputs, rec.boundary)
    if ok and rec.reported is not None:
        ok = ReportedValue.parse(rec.reported).matches(fresh)
    return ok


# -- the log -----------------------------------------------------------------


class AuditLog:
    """Append-only sequence of audit records, optionally mirrored to a JSON-lines file.

    Records are never edited in place. A correction is a new record whose
    ``supersedes`` names the original.
    """

    def __init__(self, path: str | Path | None = None):
        self._records: list[AuditRecord] = []
        self._lock = threading.Lock()
        self.path = Path(path) if path is not None else None

    def append(self, rec: AuditRecord) -> None:
        with self._lock:
            self._records.append(rec)
            if self.path is not None:
                try:
                    with self.path.open("a", encoding="utf-8", newline="\n") as fh:
                        fh.write(rec.to_json() + "\n")
                except OSError as exc:
                    raise IoError(f"cannot append to {self.path}: {exc}") from exc

    def supersede(self, original_id: str, rec: AuditRecord) -> AuditRecord:
        if original_id not in self.ids():
            raise LineageError(f"no record {original_id!r} to supersede")
        new = AuditRecord(**{**rec.__dict__, "supersedes": original_id})
        self.append(new)
        return new

    @property
    def records(self) -> tuple[AuditRecord, ...]:
        return tuple(self._records)

    def ids(self) -> list[str]:
        return [r.result_id for r in self._records]

    def __iter__(self):
        return iter(self.records)

    def __len__(self) -> int:
        return len(self._records)

    def dumps(self) -> str:
        return "".join(r.to_json() + "\n" for r in self._records)

    @classmethod
    def load(cls, path: str | Path) -> "AuditLog":
        log = cls()
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot read audit log {path}: {exc}") from exc
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                log._records.append(AuditRecord.from_dict(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise LineageError(f"{path}:{lineno}: unreadable audit record ({exc})") from exc
        return log


@dataclass(frozen=True)
class VerifyReport:
    total: int
    passed: int
    failed: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.failed


def verify_audit_log(log: AuditLog | Iterable[AuditRecord]) -> VerifyReport:
    """Recompute every record. Superseded originals are judged by their latest correction."""
    records = list(log)
    latest: dict[str, AuditRecord] = {}
    for rec in records:
        latest[rec.supersedes or rec.result_id] = rec
    failed = []
    for rec in records:
        key = rec.supersedes or rec.result_id
        if latest[key] is not rec:
            continue
        if not check_record(rec):
            failed.append(rec.result_id)
    total = len(latest)
    return VerifyReport(total=total, passed=total - len(failed), failed=tuple(failed))

"""End-to-end runner: ingest, vet, compute, audit, map, assess, report."""

from __future__ import annotations

import csv
import io
import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import yaml

from .cfindex import COMPONENT_KINDS, CfWeights, Normalization, normalize, read_sector_series, cf_index, validate_against_outcomes
from .concentration import Scope, boundary_statement as scope_statement
from .core import (
    DIMENSIONLESS,
    Boundary,
    DerivedIndicator,
    EvidenceStatus,
    Period,
    SourceValue,
    Unit,
    boundary_for,
)
from .definitions import Definition, parse_indicator_defs
from .errors import (
    ConfigError,
    DiagError,
    DuplicateIdError,
    IngestError,
    IoError,
    PeriodError,
    SpecError,
    UnitError,
)
from .formulas import ALWAYS_SCALE, FormulaId, Show, check_units, evaluate, output_unit
from .framework import (
    MAPPING_TARGETS,
    ActionCapacityVariable,
    HypothesisAssessment,
    MappingResult,
    assess,
    load_hypotheses,
    load_rules,
    map_all,
)
from .ledger import AuditInput, AuditLog, CandidateSource, VerifyReport, VetResult, record_audit, vet_source, verify_audit_log

log = logging.getLogger(__name__)

DATASET_COLUMNS = (
    "id",
    "concept",
    "quantity",
    "unit",
    "period_start",
    "period_end",
    "source_family",
    "status",
    "notes",
)
OPTIONAL_COLUMNS = ("domain", "flags")
DOMAINS = {"ai", "robotics", "compute_energy", "labour", "other"}
FLAGS = {"over100", "unsupported_assumption", "no_numeric"}
STATUS_TOKENS = {s.value: s for s in EvidenceStatus}

REPORT_FILES = ("indicators.tsv", "concentration.tsv", "hypotheses.tsv", "mapping.tsv", "audit.log")
DEFAULT_PRECISION = {"percent": 2, "ratio": 2, "hhi": 4, "level": 2}

_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
_THOUSANDS = re.compile(r"^[+-]?\d{1,3}(,\d{3})+(\.\d+)?$")


def _data_path(name: str) -> Path:
    return Path(str(resources.files("diagledger") / "data" / name))


# -- ingestion ---------------------------------------------------------------


def _parse_quantity(text: str) -> float | None:
    t = text.strip()
    if _THOUSANDS.match(t):
        t = t.replace(",", "")
    if not _NUMBER.match(t):
        return None
    return float(t)


def parse_dataset(path: str | Path) -> list[CandidateSource]:
    """Read a tab-separated dataset into candidate sources.

    Required columns, in order: id, concept, quantity, unit, period_start,
    period_end, source_family, status, notes. Optional trailing columns:
    domain and flags (comma-separated: over100, unsupported_assumption,
    no_numeric).
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise IngestError(f"{path} is not UTF-8: {exc}") from exc
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    reader = csv.reader(io.StringIO(text), delimiter="\t", quoting=csv.QUOTE_NONE)
    header = next(reader, None)
    if header is None or not any(h.strip() for h in header):
        return []
    header = [h.strip() for h in header]
    n_req = len(DATASET_COLUMNS)
    if tuple(header[:n_req]) != DATASET_COLUMNS:
        for col, (got, want) in enumerate(zip(header, DATASET_COLUMNS), start=1):
            if got != want:
                raise IngestError(f"expected column {want!r}, found {got!r}", line=1, column=col)
        raise IngestError(f"missing columns {list(DATASET_COLUMNS[len(header):])}", line=1)
    extra = header[n_req:]
    for col, name in enumerate(extra, start=n_req + 1):
        if name not in OPTIONAL_COLUMNS or extra.count(name) > 1:
            raise IngestError(f"unexpected column {name!r}", line=1, column=col)

    out: list[CandidateSource] = []
    seen: dict[str, int] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise IngestError(f"expected {len(header)} fields, found {len(row)}", line=lineno)
        rec = dict(zip(header, (c.strip() for c in row)))

        rid = rec["id"]
        if not rid:
            raise IngestError("empty id", line=lineno, column=1)
        if rid in seen:
            raise DuplicateIdError(f"duplicate id {rid!r} (first on line {seen[rid]})", line=lineno, column=1)
        seen[rid] = lineno

        flags = set()
        if rec.get("flags"):
            flags = {f.strip() for f in rec["flags"].split(",") if f.strip()}
            unknown = flags - FLAGS
            if unknown:
                raise IngestError(f"unknown flag(s) {sorted(unknown)}", line=lineno, column=header.index("flags") + 1)

        quantity = _parse_quantity(rec["quantity"])
        if quantity is None and "no_numeric" not in flags:
            raise IngestError(f"non-numeric quantity {rec['quantity']!r}", line=lineno, column=3)
        try:
            unit = Unit.of(rec["unit"])
        except UnitError as exc:
            raise IngestError(str(exc), line=lineno, column=4) from None
        try:
            period = Period(int(rec["period_start"]), int(rec["period_end"] or rec["period_start"]))
        except (ValueError, PeriodError) as exc:
            raise IngestError(f"bad period: {exc}", line=lineno, column=5) from None
        status = STATUS_TOKENS.get(rec["status"].lower())
        if status is None:
            raise IngestError(f"unknown status {rec['status']!r}", line=lineno, column=8)
        domain = rec.get("domain", "") or ""
        if domain and domain not in DOMAINS:
            raise IngestError(f"unknown domain {domain!r}", line=lineno, column=header.index("domain") + 1)

        out.append(
            CandidateSource(
                id=rid,
                concept=rec["concept"],
                quantity=quantity,
                unit=unit,
                period=period,
                source_family=rec["source_family"],
                status=status,
                notes=rec["notes"],
                has_numeric_value=quantity is not None and "no_numeric" not in flags,
                requires_unsupported_assumption="unsupported_assumption" in flags,
                domain_relevant=domain != "other",
                over_100="over100" in flags,
                line=lineno,
            )
        )
    return out


# -- computation -------------------------------------------------------------


def compute_indicator(d: Definition, sources: Mapping[str, SourceValue]) -> DerivedIndicator:
    ins = [sources[i] for i in d.inputs]
    units = [s.unit for s in ins]
    check_units(d.formula, units)
    spec = d.formula.spec
    if spec.same_concept and not d.scale_comparison and len({s.concept for s in ins}) > 1:
        raise SpecError(
            f"{d.out_id}: inputs measure different concepts {[s.concept for s in ins]}; "
            "mark the definition compare=scale if that is intended"
        )
    params: dict = {}
    if d.formula is FormulaId.CAGR:
        span = ins[1].period.end_year - ins[0].period.end_year
        if d.n is not None:
            params["n"] = d.n
            params["n_source"] = "period" if d.n == span else "explicit"
            if d.n != span:
                params["span_years"] = span
                log.warning("%s: explicit n=%d overrides period span %d", d.out_id, d.n, span)
        else:
            if span < 1:
                raise PeriodError(f"{d.out_id}: inputs span {span} years; CAGR needs at least 1")
            params["n"] = span
            params["n_source"] = "period"
    if spec.needs_scope:
        params["scope"] = d.scope.value
        if d.group:
            params["group"] = d.group
    value = evaluate(d.formula, [s.quantity for s in ins], units, params)
    boundary = boundary_for(
        (s.evidence_status for s in ins),
        scale_comparison=d.scale_comparison or d.formula in ALWAYS_SCALE,
    )
    concepts = list(dict.fromkeys(s.concept for s in ins))
    concept = f"{spec.name} of {concepts[0]}"
    if len(concepts) > 1:
        concept += " relative to " + "; ".join(concepts[1:])
    return DerivedIndicator(
        id=d.out_id,
        formula_id=d.formula,
        inputs=d.inputs,
        quantity=value,
        unit=output_unit(d.formula, units),
        interpretation_boundary=boundary,
        concept=concept,
        params=params,
    )


# -- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class CfConfig:
    series: Path
    normalization: Normalization = Normalization.MIN_MAX
    weights: CfWeights = field(default_factory=CfWeights.equal)

    @classmethod
    def load(cls, path: str | Path) -> "CfConfig":
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read cfindex config {path}: {exc}") from exc
        if "series" not in data:
            raise ConfigError(f"{path}: cfindex config needs a 'series' path")
        series = Path(data["series"])
        if not series.is_absolute():
            series = path.parent / series
        w = data.get("weights") or {}
        try:
            weights = CfWeights.from_mapping(w.get("values"), w.get("scheme", "Equal"))
            norm = Normalization.parse(data.get("normalization", "MinMax"))
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls(series, norm, weights)


@dataclass
class PipelineConfig:
    dataset: Path
    defs: Path
    rules: Path
    hypotheses: Path
    out_dir: Path | None = None
    cfindex: Path | None = None
    precision: dict = field(default_factory=lambda: dict(DEFAULT_PRECISION))

    @classmethod
    def bundled(cls, out_dir: str | Path | None = None, with_cfindex: bool = False) -> "PipelineConfig":
        return cls(
            dataset=_data_path("reference_dataset.tsv"),
            defs=_data_path("reference_indicators.defs"),
            rules=_data_path("reference_rules.yaml"),
            hypotheses=_data_path("reference_hypotheses.yaml"),
            out_dir=Path(out_dir) if out_dir is not None else None,
            cfindex=_data_path("synthetic_cfindex.yaml") if with_cfindex else None,
        )

    def validate(self) -> None:
        for name in ("dataset", "defs", "rules", "hypotheses", "cfindex"):
            p = getattr(self, name)
            if p is None:
                continue
            p = Path(p)
            setattr(self, name, p)
            if not p.is_file():
                raise ConfigError(f"{name} file not found: {p}")
        unknown = set(self.precision) - set(DEFAULT_PRECISION)
        if unknown:
            raise ConfigError(f"unknown precision keys {sorted(unknown)}")


# -- bundle ------------------------------------------------------------------


@dataclass(frozen=True)
class CfRow:
    sector: str
    period: Period
    value: float
    audit_id: str
    outcome: float | None = None


@dataclass
class ReportBundle:
    config: PipelineConfig
    sources: dict[str, SourceValue]
    vetting: list[VetResult]
    definitions: list[Definition]
    indicators: list[DerivedIndicator]
    audit: AuditLog
    verification: VerifyReport
    mapping: MappingResult
    assessments: list[HypothesisAssessment]
    blocked: list[tuple[str, str]] = field(default_factory=list)
    compute_errors: list[tuple[str, str]] = field(default_factory=list)
    cf_rows: list[CfRow] = field(default_factory=list)
    cf_validation: dict[str, float] = field(default_factory=dict)
    cf_settings: dict = field(default_factory=dict)
    hypothesis_specs: list = field(default_factory=list)

    @property
    def rejected(self) -> list[VetResult]:
        return [v for v in self.vetting if not v.ok]

    @property
    def failed_ids(self) -> list[str]:
        return list(self.verification.failed) + [i for i, _ in self.compute_errors]

    @property
    def ok(self) -> bool:
        return not self.failed_ids

    def indicator(self, out_id: str) -> DerivedIndicator:
        for d in self.indicators:
            if d.id == out_id:
                return d
        raise KeyError(out_id)

    def unmeasured(self) -> list[ActionCapacityVariable]:
        return [v for v in MAPPING_TARGETS if not self.mapping.measured_in_dataset(v)]


def run_pipeline(config: PipelineConfig) -> ReportBundle:
    config.validate()
    candidates = parse_dataset(config.dataset)
    vetting = [vet_source(c) for c in candidates]
    sources = {v.accepted.id: v.accepted for v in vetting if v.ok}
    rejected = {v.candidate_id: v for v in vetting if not v.ok}
    for v in rejected.values():
        log.info("rejected %s at step %s: %s", v.candidate_id, v.failed_step, v.reason)

    definitions = parse_indicator_defs(config.defs, known_ids=[c.id for c in candidates])
    rules = load_rules(config.rules)
    hypotheses = load_hypotheses(config.hypotheses)

    audit = AuditLog()
    indicators: list[DerivedIndicator] = []
    blocked: list[tuple[str, str]] = []
    errors: list[tuple[str, str]] = []
    for d in definitions:
        bad = [i for i in d.inputs if i in rejected]
        if bad:
            blocked.append((d.out_id, f"inputs failed vetting: {', '.join(bad)}"))
            continue
        try:
            ind = compute_indicator(d, sources)
        except DiagError as exc:
            errors.append((d.out_id, str(exc)))
            log.error("%s: %s", d.out_id, exc)
            continue
        indicators.append(ind)
        record_audit(ind, sources, audit, reported=d.reported)

    cf_rows: list[CfRow] = []
    cf_validation: dict[str, float] = {}
    cf_settings: dict = {}
    if config.cfindex is not None:
        cf = CfConfig.load(config.cfindex)
        cf_settings = {
            "normalization": cf.normalization.value,
            "scheme": cf.weights.scheme.value,
            "weights": cf.weights.to_mapping(),
        }
        for series in read_sector_series(cf.series):
            norm = normalize(series, cf.normalization)
            sector_rows = []
            for (period, comps), obs_outcome in zip(
                norm.rows, series.outcomes or [None] * len(norm.rows)
            ):
                rid = f"cf:{series.sector_label}:{period}"
                inputs = {
                    f"{rid}:{k.name}": AuditInput(f"{rid}:{k.name}", comps[k], DIMENSIONLESS.token, str(period), EvidenceStatus.CALCULATED.value, "synthetic")
                    for k in COMPONENT_KINDS
                }
                ind = DerivedIndicator(
                    id=rid,
                    formula_id=FormulaId.CFINDEX,
                    inputs=tuple(inputs),
                    quantity=cf_index(comps, cf.weights),
                    unit=DIMENSIONLESS,
                    interpretation_boundary=Boundary.SCALE_COMPARISON,
                    concept=f"coordination-friction index, {series.sector_label} (synthetic)",
                    params={"weights": cf.weights.to_mapping(), "scheme": cf.weights.scheme.value, "normalization": cf.normalization.value},
                )
                record_audit(ind, inputs, audit)
                row = CfRow(series.sector_label, period, ind.quantity, rid, obs_outcome[1] if obs_outcome else None)
                sector_rows.append(row)
            cf_rows.extend(sector_rows)
            if series.outcomes is not None and len(sector_rows) >= 3:
                cf_validation[series.sector_label] = validate_against_outcomes(
                    [r.value for r in sector_rows], [r.outcome for r in sector_rows]
                )

    mappable = list(sources.values()) + indicators
    mapping = map_all(mappable, rules)
    available: dict = {**sources, **{d.id: d for d in indicators}}
    assessments = [assess(h, available, audit, mapping) for h in hypotheses]
    verification = verify_audit_log(audit)

    return ReportBundle(
        config=config,
        sources=sources,
        vetting=vetting,
        definitions=definitions,
        indicators=indicators,
        audit=audit,
        verification=verification,
        mapping=mapping,
        assessments=assessments,
        blocked=blocked,
        compute_errors=errors,
        cf_rows=cf_rows,
        cf_validation=cf_validation,
        cf_settings=cf_settings,
        hypothesis_specs=hypotheses,
    )


# -- presentation ------------------------------------------------------------


def present(value: float, show: Show, unit: Unit, precision: Mapping[str, int]) -> tuple[str, str]:
    """Round for display only. Returns (number text, unit label)."""
    if show is Show.PERCENT:
        return f"{value * 100:.{precision['percent']}f}", "%"
    if show is Show.RATIO:
        return f"{value:.{precision['ratio']}f}", "x"
    if show is Show.HHI:
        return f"{value:.{precision['hhi']}f}", ""
    return f"{value:.{precision['level']}f}", unit.label


INDICATOR_HEADER = ["id", "formula", "equation", "inputs", "value", "unit", "boundary", "label", "reported", "audit_id"]
CONCENTRATION_HEADER = ["id", "measure", "scope", "group", "members", "value", "value_0_100", "boundary", "boundary_statement", "audit_id"]
HYPOTHESIS_HEADER = ["id", "kind", "verdict", "required", "evidence_classes", "boundary_statement", "reason"]
MAPPING_HEADER = ["section", "id", "targets", "rules", "multiple_rules", "boundary_statement"]
CF_HEADER = ["sector", "period", "normalization", "weights", "cf_index", "audit_id"]


def indicator_rows(bundle: ReportBundle) -> list[list[str]]:
    defs = {d.out_id: d for d in bundle.definitions}
    rows = []
    for ind in bundle.indicators:
        d = defs[ind.id]
        value, unit = present(ind.quantity, d.presentation, ind.unit, bundle.config.precision)
        rows.append(
            [
                ind.id,
                ind.formula_id.token,
                ind.formula_id.spec.equation,
                ",".join(ind.inputs),
                value,
                unit,
                ind.interpretation_boundary.value,
                "author-calculated",
                d.reported or "",
                ind.id,
            ]
        )
    return rows


def concentration_rows(bundle: ReportBundle) -> list[list[str]]:
    defs = {d.out_id: d for d in bundle.definitions}
    p = bundle.config.precision
    rows = []
    for ind in bundle.indicators:
        if ind.formula_id not in (FormulaId.SHARE, FormulaId.HHI):
            continue
        d = defs[ind.id]
        scope = Scope(ind.params["scope"])
        value, _ = present(ind.quantity, d.presentation, ind.unit, p)
        on_100 = f"{ind.quantity * 100:.{p['percent']}f}" if ind.formula_id is FormulaId.HHI else ""
        members = ",".join(ind.inputs)
        rows.append(
            [
                ind.id,
                ind.formula_id.token,
                scope.value,
                d.group,
                members,
                value,
                on_100,
                ind.interpretation_boundary.value,
                scope_statement(scope, d.group or ind.id, ind.inputs),
                ind.id,
            ]
        )
    return rows


def hypothesis_rows(bundle: ReportBundle) -> list[list[str]]:
    kinds = {h.id: h.kind.value for h in bundle.hypothesis_specs}
    return [
        [
            a.id,
            kinds.get(a.id, ""),
            a.verdict.value,
            ",".join(a.required_indicator_ids),
            ",".join(sorted(s.value for s in a.evidence_classes_present)),
            " ".join(a.boundary_statement.split()),
            a.reason,
        ]
        for a in bundle.assessments
    ]


def _targets(vs) -> str:
    order = list(ActionCapacityVariable)
    return ",".join(v.name for v in sorted(vs, key=order.index))


def mapping_rows(bundle: ReportBundle) -> list[list[str]]:
    rows = []
    for e in bundle.mapping.entries:
        section = "future_measurement" if e.future_measurement else "mapped"
        rows.append(
            [section, e.indicator_id, _targets(e.targets), ",".join(e.rules), "yes" if e.multiple else "no", " ".join(e.boundary_statement.split())]
        )
    for rid in bundle.mapping.unmapped:
        rows.append(["unmapped", rid, "", "", "no", "no mapping rule matched"])
    # Coverage gaps are only meaningful once something was mapped.
    for v in bundle.unmeasured() if rows else ():
        reason = "not directly measured in the dataset; requires sector-level data"
        rows.append(["unmeasured_variable", v.name, v.name, "", "no", reason])
    return rows


def cf_rows_table(bundle: ReportBundle) -> list[list[str]]:
    s = bundle.cf_settings
    p = bundle.config.precision
    return [
        [r.sector, str(r.period), s.get("normalization", ""), s.get("scheme", ""), f"{r.value:.{p['hhi']}f}", r.audit_id]
        for r in bundle.cf_rows
    ]


def _tsv(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def render_reports(bundle: ReportBundle) -> dict[str, str]:
    out = {
        "indicators.tsv": _tsv(INDICATOR_HEADER, indicator_rows(bundle)),
        "concentration.tsv": _tsv(CONCENTRATION_HEADER, concentration_rows(bundle)),
        "hypotheses.tsv": _tsv(HYPOTHESIS_HEADER, hypothesis_rows(bundle)),
        "mapping.tsv": _tsv(MAPPING_HEADER, mapping_rows(bundle)),
        "audit.log": bundle.audit.dumps(),
    }
    if bundle.config.cfindex is not None:
        out["cfindex.tsv"] = _tsv(CF_HEADER, cf_rows_table(bundle))
    return out


def emit_reports(bundle: ReportBundle, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, body in render_reports(bundle).items():
            path = out_dir / name
            with path.open("w", encoding="utf-8", newline="\n") as fh:
                fh.write(body)
            written.append(path)
    except OSError as exc:
        raise IoError(f"cannot write reports to {out_dir}: {exc}") from exc
    return written

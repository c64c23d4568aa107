import json
import threading

import pytest

from diagledger.core import (
    PERCENT,
    Boundary,
    DerivedIndicator,
    EvidenceStatus,
    Period,
    SourceValue,
    Unit,
    cagr,
)
from diagledger.errors import ClassificationError, LineageError
from diagledger.formulas import FormulaId
from diagledger.ledger import (
    AuditLog,
    CandidateSource,
    ReportedValue,
    ValueDescriptor,
    check_record,
    classify,
    record_audit,
    verify_audit_log,
    vet_source,
)
from diagledger.metrics import RobotStockSnapshot, stock_flow_ratio

UNITS = Unit.of("units")
R, P = EvidenceStatus.REPORTED, EvidenceStatus.PROJECTION


def candidate(**kw):
    base = dict(
        id="robot_inst_2024",
        concept="Industrial robot installations",
        quantity=542076.0,
        unit=UNITS,
        period=Period(2024),
        source_family="IFR World Robotics",
        status=R,
    )
    base.update(kw)
    return CandidateSource(**base)


SOURCES = {
    "eu_ai_2021": SourceValue("eu_ai_2021", "EU enterprise AI use", 7.7, PERCENT, Period(2021), "Eurostat", R),
    "eu_ai_2025": SourceValue("eu_ai_2025", "EU enterprise AI use", 20.0, PERCENT, Period(2025), "Eurostat", R),
    "robot_stock_2024": SourceValue("robot_stock_2024", "stock", 4663698, UNITS, Period(2024), "IFR", R),
    "robot_inst_2024": SourceValue("robot_inst_2024", "installs", 542076, UNITS, Period(2024), "IFR", R),
}


def eu_cagr():
    q = cagr(7.7, 20.0, 4)
    return DerivedIndicator("eu_cagr", FormulaId.CAGR, ("eu_ai_2021", "eu_ai_2025"), q, Unit.of("dimensionless"),
                            Boundary.OBSERVED_FACT, params={"n": 4})


def robot_sfr(declared=None):
    q = stock_flow_ratio(RobotStockSnapshot(4663698, 542076)) if declared is None else declared
    return DerivedIndicator("robot_sfr", FormulaId.SFR, ("robot_stock_2024", "robot_inst_2024"), q,
                            Unit.of("ratio"), Boundary.OBSERVED_FACT)


# -- vetting -----------------------------------------------------------------


def test_vet_accepts_reported_installations():
    res = vet_source(candidate())
    assert res.ok
    assert res.accepted.evidence_status is R
    assert res.accepted.quantity == 542076.0


def test_vet_step1_no_numeric_value():
    res = vet_source(candidate(quantity=None, has_numeric_value=False))
    assert not res.ok and res.failed_step == 1


def test_vet_step1_irrelevant_domain():
    assert vet_source(candidate(domain_relevant=False)).failed_step == 1


def test_vet_step2_calculated_not_primary():
    assert vet_source(candidate(status=EvidenceStatus.CALCULATED)).failed_step == 2
    assert vet_source(candidate(status=EvidenceStatus.INTERPRETATION)).failed_step == 2


def test_vet_step3_unsupported_assumption():
    res = vet_source(candidate(requires_unsupported_assumption=True))
    assert res.failed_step == 3 and "assumption" in res.reason


def test_vet_step4_source_family_and_range():
    assert vet_source(candidate(source_family=" ")).failed_step == 4
    assert vet_source(candidate(unit=PERCENT, quantity=140.0)).failed_step == 4
    assert vet_source(candidate(unit=PERCENT, quantity=140.0, over_100=True)).ok


# -- classification ----------------------------------------------------------


def test_classify_examples():
    assert classify(ValueDescriptor(scenario=True)) is P  # 2030 projection, 945 TWh
    assert classify(ValueDescriptor(scenario=False)) is R  # 2024 use, 415 TWh
    assert classify(ValueDescriptor(engine_derived=True)) is EvidenceStatus.CALCULATED
    assert classify(ValueDescriptor(narrative=True)) is EvidenceStatus.INTERPRETATION


@pytest.mark.parametrize(
    "desc",
    [ValueDescriptor(), ValueDescriptor(engine_derived=True, narrative=True), ValueDescriptor(scenario=True, narrative=True)],
)
def test_classify_never_guesses(desc):
    with pytest.raises(ClassificationError):
        classify(desc)


@pytest.mark.parametrize("status", list(EvidenceStatus))
def test_classify_round_trips_status(status):
    assert classify(ValueDescriptor.from_status(status)) is status


# -- published values --------------------------------------------------------


@pytest.mark.parametrize(
    "text, value, tol",
    [("26.95%", 0.2695, 0.00005), ("11.73x", 11.73, 0.005), ("8.60", 8.6, 0.005), ("12.3pp", 12.3, 0.05),
     ("530", 530.0, 0.5), ("1,200", 1200.0, 0.5)],
)
def test_reported_value_parse(text, value, tol):
    rv = ReportedValue.parse(text)
    assert rv.value == pytest.approx(value) and rv.tolerance == pytest.approx(tol)


def test_reported_value_half_unit():
    rv = ReportedValue.parse("26.95%")
    assert rv.matches(0.26954) and rv.matches(0.26946)
    assert not rv.matches(0.2696)
    with pytest.raises(ValueError):
        ReportedValue.parse("about 27%")


# -- audit records -----------------------------------------------------------


def test_record_eu_cagr():
    rec = record_audit(eu_cagr(), SOURCES, reported="26.95%")
    assert rec.match and check_record(rec)
    assert [(i.value, i.unit, i.period) for i in rec.inputs] == [(7.7, "percent", "2021"), (20.0, "percent", "2025")]
    assert rec.to_dict()["equation"] == FormulaId.CAGR.spec.equation
    assert round(rec.recomputed, 5) == 0.26951
    assert rec.label == "author-calculated"


def test_record_robot_sfr():
    rec = record_audit(robot_sfr(), SOURCES, reported="8.60")
    assert rec.match and round(rec.recomputed, 2) == 8.60


def test_tampered_sfr_declared_value():
    # oracle: 4,663,698 / 542,076 = 8.6034..., so a declared 9.0 cannot match
    assert abs(4663698 / 542076 - 9.0) > 0.39
    rec = record_audit(robot_sfr(declared=9.0), SOURCES)
    assert not rec.match
    assert not check_record(rec)


def test_record_unresolved_input():
    with pytest.raises(LineageError):
        record_audit(eu_cagr(), {"eu_ai_2021": SOURCES["eu_ai_2021"]})


def test_record_projection_input_must_be_projection_based():
    proj = dict(SOURCES)
    proj["eu_ai_2025"] = SourceValue("eu_ai_2025", "x", 20.0, PERCENT, Period(2025), "f", P)
    rec = record_audit(eu_cagr(), proj)  # boundary wrongly ObservedFact
    assert not rec.match


def test_empty_log_verifies():
    rep = verify_audit_log(AuditLog())
    assert (rep.total, rep.passed, rep.failed) == (0, 0, ())
    assert rep.ok


def test_log_round_trip(tmp_path):
    path = tmp_path / "audit.log"
    log = AuditLog(path)
    record_audit(eu_cagr(), SOURCES, log, reported="26.95%")
    record_audit(robot_sfr(), SOURCES, log, reported="8.60")
    again = AuditLog.load(path)
    assert again.dumps() == log.dumps() == path.read_text()
    assert verify_audit_log(again).ok
    first = json.loads(path.read_text().splitlines()[0])
    assert list(first)[:4] == ["result_id", "formula_id", "equation", "inputs"]


def test_corrupted_quantity_is_named(tmp_path):
    log = AuditLog()
    record_audit(eu_cagr(), SOURCES, log)
    record_audit(robot_sfr(), SOURCES, log)
    lines = log.dumps().splitlines()
    d = json.loads(lines[1])
    d["inputs"][0]["value"] = 4663699
    lines[1] = json.dumps(d)
    path = tmp_path / "bad.log"
    path.write_text("\n".join(lines) + "\n")
    rep = verify_audit_log(AuditLog.load(path))
    assert rep.failed == ("robot_sfr",) and rep.passed == 1


def test_verify_is_idempotent():
    log = AuditLog()
    record_audit(eu_cagr(), SOURCES, log)
    record_audit(robot_sfr(declared=9.0), SOURCES, log)
    assert verify_audit_log(log) == verify_audit_log(log)


def test_supersede_appends_correction():
    log = AuditLog()
    bad = record_audit(robot_sfr(declared=9.0), SOURCES, log)
    assert not verify_audit_log(log).ok
    fixed = log.supersede("robot_sfr", record_audit(robot_sfr(), SOURCES))
    assert fixed.supersedes == "robot_sfr"
    assert log.records[0] is bad  # original untouched
    assert len(log) == 2
    assert verify_audit_log(log).ok
    with pytest.raises(LineageError):
        log.supersede("nothing", fixed)


def test_concurrent_appends(tmp_path):
    path = tmp_path / "audit.log"
    log = AuditLog(path)
    rec = record_audit(eu_cagr(), SOURCES)
    threads = [threading.Thread(target=lambda: [log.append(rec) for _ in range(50)]) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(AuditLog.load(path)) == 200

import pytest
from hypothesis import given, strategies as st

from diagledger.core import (
    PERCENT,
    Boundary,
    DerivedIndicator,
    EvidenceStatus,
    Period,
    SourceValue,
    Unit,
)
from diagledger.errors import ConfigError, SpecError, UnmappedIndicator
from diagledger.formulas import FormulaId
from diagledger.framework import (
    MAPPING_TARGETS,
    ActionCapacityVariable as V,
    ClaimKind,
    HypothesisSpec,
    MappingRule,
    ProjectionSensitivity,
    RuleSet,
    Verdict,
    assess,
    load_hypotheses,
    load_rules,
    map_all,
    map_indicator,
)
from diagledger.ledger import AuditLog, record_audit
from diagledger.pipeline import _data_path

R, P = EvidenceStatus.REPORTED, EvidenceStatus.PROJECTION
RULES = load_rules(_data_path("reference_rules.yaml"))


def sv(id, concept, q=1.0, unit="usd_bn", status=R, period=2024):
    return SourceValue(id, concept, q, Unit.of(unit), Period(period), "fam", status)


def test_nine_variables():
    assert [v.name for v in V] == ["H", "K", "M", "R", "P", "C", "En", "T", "Omega"]
    assert V.parse("omega") is V.Omega
    assert V.K not in MAPPING_TARGETS


@pytest.mark.parametrize(
    "ind, targets",
    [
        (sv("corp_ai_inv_2024", "Corporate AI investment", 252.3), {V.M}),
        (sv("dc_elec_2024", "Global data-centre electricity consumption", 415, "twh"), {V.C, V.En}),
        (sv("wef_new_roles", "New roles created (WEF projection)", 170, "jobs_mn", P), {V.H}),
    ],
)
def test_mapping_examples(ind, targets):
    entry = map_indicator(ind, RULES)
    assert entry.targets == frozenset(targets)
    assert entry.evidence_status is EvidenceStatus.INTERPRETATION
    assert entry.boundary_statement


def test_projection_derived_gains_omega():
    d = DerivedIndicator("wef_ndr", FormulaId.NDR, ("a", "b"), 1.8, Unit.of("ratio"), Boundary.PROJECTION_BASED,
                         concept="labour new-to-displaced ratio")
    entry = map_indicator(d, RULES)
    assert entry.targets == {V.H, V.Omega} and entry.multiple


def test_unmapped_is_listed_not_guessed():
    odd = sv("wheat", "Wheat harvest")
    with pytest.raises(UnmappedIndicator):
        map_indicator(odd, RULES)
    res = map_all([odd, sv("corp", "Corporate AI investment")], RULES)
    assert res.unmapped == ("wheat",)
    assert len(res.entries) + len(res.unmapped) == 2


def test_future_measurement_variables(reference_bundle):
    m = reference_bundle.mapping
    assert not m.measured_in_dataset(V.P) and not m.measured_in_dataset(V.T)
    assert m.measured_in_dataset(V.M) and m.measured_in_dataset(V.R)
    assert reference_bundle.unmeasured() == [V.P, V.T]


def test_rule_validation():
    with pytest.raises(ConfigError):
        MappingRule("r", frozenset(), "text", pattern="x")
    with pytest.raises(ConfigError):
        MappingRule("r", frozenset({V.M}), "  ", pattern="x")
    with pytest.raises(ConfigError):
        MappingRule("r", frozenset({V.M}), "text")


def test_spec_without_required_indicators(write):
    with pytest.raises(SpecError):
        HypothesisSpec("H", ClaimKind.EMPIRICAL, ())
    path = write("h.yaml", "hypotheses:\n  - id: H9\n    kind: empirical\n")
    with pytest.raises(SpecError):
        load_hypotheses(path)


# -- assessment --------------------------------------------------------------


def _spec(hid, sensitivity=ProjectionSensitivity.CAUTION, boundary="stated"):
    return HypothesisSpec(hid, ClaimKind.EMPIRICAL, ("a", "b"), boundary, sensitivity)


def _env(status_b, boundary_for_pair=None):
    a = SourceValue("a", "x", 10.0, PERCENT, Period(2021), "f", R)
    b = SourceValue("b", "x", 20.0, PERCENT, Period(2025), "f", status_b)
    return {"a": a, "b": b}


def test_supported_when_all_reported():
    assert assess(_spec("H1"), _env(R)).verdict is Verdict.SUPPORTED


def test_projection_sensitivity_flag():
    under = assess(_spec("H2", ProjectionSensitivity.UNDER_PROJECTION), _env(P))
    caution = assess(_spec("H4", ProjectionSensitivity.CAUTION), _env(P))
    assert under.verdict is Verdict.SUPPORTED_UNDER_PROJECTION
    assert caution.verdict is Verdict.SUPPORTED_WITH_CAUTION
    assert caution.evidence_status is EvidenceStatus.INTERPRETATION


def test_missing_boundary_qualifies_support():
    assert assess(_spec("H", boundary=""), _env(R)).verdict is Verdict.SUPPORTED_WITH_CAUTION


def test_missing_evidence_not_established(reference_bundle):
    h1 = next(h for h in reference_bundle.hypothesis_specs if h.id == "H1")
    available = {**reference_bundle.sources, **{d.id: d for d in reference_bundle.indicators}}
    assert assess(h1, available, reference_bundle.audit, reference_bundle.mapping).verdict is Verdict.SUPPORTED
    without_eu = {k: v for k, v in available.items() if not k.startswith("eu_")}
    assert assess(h1, without_eu, reference_bundle.audit, reference_bundle.mapping).verdict is Verdict.NOT_ESTABLISHED


def test_failing_audit_not_established():
    env = _env(R)
    d = DerivedIndicator("d", FormulaId.RC, ("a", "b"), 0.9, Unit.of("dimensionless"), Boundary.OBSERVED_FACT)
    env["d"] = d
    log = AuditLog()
    record_audit(d, env, log)
    spec = HypothesisSpec("H", ClaimKind.EMPIRICAL, ("d",), "stated")
    assert assess(spec, env, log).verdict is Verdict.NOT_ESTABLISHED
    good = DerivedIndicator("d", FormulaId.RC, ("a", "b"), 20.0 / 10.0 - 1.0, Unit.of("dimensionless"), Boundary.OBSERVED_FACT)
    env["d"] = good
    log = AuditLog()
    record_audit(good, env, log)
    assert assess(spec, env, log).verdict is Verdict.SUPPORTED


def test_conceptual_never_plain_supported(reference_bundle):
    p5 = next(a for a in reference_bundle.assessments if a.id == "P5")
    assert p5.verdict is Verdict.SUPPORTED_AS_CONCEPTUAL_PROPOSITION
    spec = next(h for h in reference_bundle.hypothesis_specs if h.id == "P5")
    bare = HypothesisSpec("P", ClaimKind.CONCEPTUAL, spec.required, "b", convergence=frozenset({V.P}))
    available = {**reference_bundle.sources, **{d.id: d for d in reference_bundle.indicators}}
    assert assess(bare, available, reference_bundle.audit, reference_bundle.mapping).verdict is Verdict.NOT_ESTABLISHED


@given(
    st.lists(st.booleans(), min_size=1, max_size=6),
    st.integers(min_value=0, max_value=5),
    st.sampled_from(list(ProjectionSensitivity)),
    st.booleans(),
)
def test_downgrade_never_strengthens(projected, which, sensitivity, has_boundary):
    ids = tuple(f"s{i}" for i in range(len(projected)))
    spec = HypothesisSpec("H", ClaimKind.EMPIRICAL, ids, "b" if has_boundary else "", sensitivity)

    def env(flags):
        return {i: SourceValue(i, "x", 1.0, PERCENT, Period(2024), "f", P if f else R) for i, f in zip(ids, flags)}

    before = assess(spec, env(projected)).verdict
    downgraded = list(projected)
    downgraded[which % len(ids)] = True
    after = assess(spec, env(downgraded)).verdict
    assert after.strength <= before.strength


def test_bundled_config_loads():
    assert [h.id for h in load_hypotheses(_data_path("reference_hypotheses.yaml"))] == ["H1", "H2", "H3", "H4", "P5"]
    assert isinstance(RULES, RuleSet) and len(RULES.rules) >= 6


def test_bad_config(write):
    with pytest.raises(ConfigError):
        load_rules(write("r.yaml", "rules:\n  - name: x\n    targets: [Q]\n    pattern: a\n    boundary_statement: b\n"))
    with pytest.raises(ConfigError):
        load_rules(write("r2.yaml", "rules: [\n"))

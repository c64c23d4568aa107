import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from diagledger.core import (
    PERCENT,
    Boundary,
    DerivedIndicator,
    EvidenceStatus,
    Measure,
    Period,
    SourceValue,
    Unit,
    absolute_change,
    boundary_for,
    cagr,
    growth_multiplier,
    percentage_point_change,
    relative_change,
    scale_ratio,
)
from diagledger.errors import DivisionByZeroBase, DomainError, PeriodError, UnitError
from diagledger.formulas import FormulaId

TWH = Unit.of("twh")
USD = Unit.of("usd_bn")

pos = st.floats(min_value=1e-3, max_value=1e6, allow_nan=False, allow_infinity=False)
real = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


def half_unit(published: float, decimals: int) -> float:
    return 0.5 * 10.0 ** -decimals


# -- published examples ------------------------------------------------------


@pytest.mark.parametrize(
    "x0, xt, expected, decimals",
    [(7.7, 20.0, 12.3, 1), (415, 945, 530, 0)],
)
def test_absolute_change_published(x0, xt, expected, decimals):
    assert abs(absolute_change(x0, xt) - expected) <= half_unit(expected, decimals)


def test_absolute_change_identity():
    assert absolute_change(42.0, 42.0) == 0.0


@pytest.mark.parametrize("x0, xt, expected", [(13.5, 20.0, 6.5), (14.2, 20.2, 6.0), (50, 50, 0.0)])
def test_percentage_point_change(x0, xt, expected):
    out = percentage_point_change(Measure(x0, PERCENT), Measure(xt, PERCENT))
    assert out.unit.token == "pp"
    assert abs(out.value - expected) <= 0.05


def test_percentage_point_change_rejects_non_percent():
    with pytest.raises(UnitError):
        percentage_point_change(Measure(415, TWH), Measure(945, TWH))


@pytest.mark.parametrize("x0, xt, pct", [(7.7, 20.0, 159.74), (78, 88, 12.82), (5.0, 5.0, 0.0)])
def test_relative_change(x0, xt, pct):
    assert abs(relative_change(x0, xt) * 100 - pct) <= 0.005


def test_relative_change_zero_base():
    with pytest.raises(DivisionByZeroBase):
        relative_change(0.0, 3.0)


@pytest.mark.parametrize(
    "x0, xt, n, pct",
    [(7.7, 20.0, 4, 26.95), (8.7, 20.2, 2, 52.38), (415, 945, 6, 14.70), (415, 1200, 11, 10.13)],
)
def test_cagr_published(x0, xt, n, pct):
    assert abs(cagr(x0, xt, n) * 100 - pct) <= 0.005


def test_cagr_flat():
    assert cagr(3.0, 3.0, 5) == 0.0


@pytest.mark.parametrize("x0, xt", [(0, 5), (-1, 5), (5, 0)])
def test_cagr_nonpositive(x0, xt):
    with pytest.raises(DomainError):
        cagr(x0, xt, 3)


@pytest.mark.parametrize("n", [0, -2, 1.5])
def test_cagr_bad_period(n):
    with pytest.raises(PeriodError):
        cagr(1.0, 2.0, n)


@pytest.mark.parametrize("x0, xt, expected", [(415, 945, 2.28), (415, 1200, 2.89), (9.0, 9.0, 1.0)])
def test_growth_multiplier(x0, xt, expected):
    assert abs(growth_multiplier(x0, xt) - expected) <= 0.005


def test_growth_multiplier_nonpositive_base():
    with pytest.raises(DomainError):
        growth_multiplier(0, 1)


@pytest.mark.parametrize(
    "xi, xref, expected, tol",
    [(33.9, 252.3, 0.1344, 5e-5), (109.1, 9.3, 11.73, 0.005), (109.1, 4.5, 24.24, 0.005)],
)
def test_scale_ratio(xi, xref, expected, tol):
    assert abs(scale_ratio(xi, xref) - expected) <= tol


def test_scale_ratio_nonpositive_reference():
    with pytest.raises(DomainError):
        scale_ratio(1.0, 0.0)


def test_unit_mismatch():
    with pytest.raises(UnitError):
        absolute_change(Measure(1, TWH), Measure(2, USD))
    with pytest.raises(UnitError):
        cagr(Measure(1, TWH), Measure(2, USD), 2)


def test_measure_keeps_unit():
    out = absolute_change(Measure(415, TWH), Measure(945, TWH))
    assert out == Measure(530.0, TWH)
    assert growth_multiplier(Measure(415, TWH), Measure(945, TWH)).unit.token == "ratio"


# -- types -------------------------------------------------------------------


def test_period_parse_and_span():
    p = Period.parse("2025-2030")
    assert (p.start_year, p.end_year, p.span_years) == (2025, 2030, 5)
    assert str(Period.parse("2024")) == "2024"
    with pytest.raises(PeriodError):
        Period(2030, 2025)


def _sv(q, unit=PERCENT, status=EvidenceStatus.REPORTED, **kw):
    return SourceValue("x", "c", q, unit, Period(2024), "fam", status, **kw)


def test_source_value_percent_stored_as_reported():
    assert _sv(20.0).quantity == 20.0


@pytest.mark.parametrize("bad", [float("nan"), float("inf")])
def test_source_value_rejects_non_finite(bad):
    with pytest.raises(DomainError):
        _sv(bad)


def test_source_value_percent_range():
    with pytest.raises(DomainError):
        _sv(159.74)
    assert _sv(159.74, over_100=True).quantity == 159.74


@pytest.mark.parametrize("status", [EvidenceStatus.CALCULATED, EvidenceStatus.INTERPRETATION])
def test_source_value_ingestible_status_only(status):
    with pytest.raises(DomainError):
        _sv(1.0, status=status)


def test_derived_indicator_is_calculated():
    d = DerivedIndicator("d", FormulaId.RC, ("a", "b"), 0.5, PERCENT, Boundary.OBSERVED_FACT)
    assert d.evidence_status is EvidenceStatus.CALCULATED


def test_boundary_for_taint():
    R, P = EvidenceStatus.REPORTED, EvidenceStatus.PROJECTION
    assert boundary_for([R, R]) is Boundary.OBSERVED_FACT
    assert boundary_for([R, P]) is Boundary.PROJECTION_BASED
    assert boundary_for([R], scale_comparison=True) is Boundary.SCALE_COMPARISON
    assert boundary_for([P], scale_comparison=True) is Boundary.PROJECTION_BASED


# -- properties --------------------------------------------------------------


ratio = st.floats(min_value=1e-3, max_value=1e3)


@given(pos, ratio, st.integers(min_value=1, max_value=40))
def test_cagr_consistent_with_multiplier(x0, r, n):
    # Ratios are bounded: when xt/x0 nears 0, 1 + cagr cancels catastrophically.
    xt = x0 * r
    assert math.isclose((1 + cagr(x0, xt, n)) ** n, growth_multiplier(x0, xt), rel_tol=1e-9)


@given(pos, real)
def test_relative_change_is_multiplier_minus_one(x0, xt):
    assert relative_change(x0, xt) == growth_multiplier(x0, xt) - 1


@given(real, real)
def test_changes_antisymmetric(a, b):
    assert absolute_change(a, b) == -absolute_change(b, a)
    assert percentage_point_change(a, b) == -percentage_point_change(b, a)


@given(pos, pos, pos, st.integers(min_value=1, max_value=30))
def test_cagr_increasing_in_target(x0, a, b, n):
    lo, hi = sorted((a, b))
    if Fraction(hi) / Fraction(lo) > Fraction(1) + Fraction(1, 10**6):
        assert cagr(x0, lo, n) < cagr(x0, hi, n)

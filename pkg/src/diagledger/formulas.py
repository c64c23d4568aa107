"""Registry of every formula the engine can evaluate and audit.

Each entry knows its equation label, its arity, which unit kinds it accepts,
how its output is presented, and how to evaluate it from plain input values.
Audit verification goes through :func:`evaluate` too, so a stored record can be
recomputed from nothing but its input snapshot and parameters.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Sequence

from . import core, metrics
from .concentration import Scope, ShareGroup, hhi, share_vector_from_percentages, shares
from .core import DIMENSIONLESS, PERCENTAGE_POINT, RATIO, Unit, UnitKind
from .errors import SpecError, UnitError


class Show(enum.Enum):
    PERCENT = "percent"
    RATIO = "ratio"
    HHI = "hhi"
    LEVEL = "level"


@dataclass(frozen=True)
class FormulaSpec:
    token: str
    equation: str
    name: str
    min_args: int
    max_args: int | None
    show: Show
    input_kind: UnitKind | None = None
    same_concept: bool = False
    needs_scope: bool = False


class FormulaId(enum.Enum):
    ABS = FormulaSpec("ABS", "3.5", "absolute change", 2, 2, Show.LEVEL, same_concept=True)
    PP = FormulaSpec("PP", "3.6", "percentage-point change", 2, 2, Show.LEVEL, UnitKind.PERCENT, same_concept=True)
    RC = FormulaSpec("RC", "3.7", "relative change", 2, 2, Show.PERCENT, same_concept=True)
    CAGR = FormulaSpec("CAGR", "3.8", "compound annual growth rate", 2, 2, Show.PERCENT, same_concept=True)
    GM = FormulaSpec("GM", "3.9", "growth multiplier", 2, 2, Show.RATIO, same_concept=True)
    SR = FormulaSpec("SR", "3.10", "scale ratio", 2, 2, Show.RATIO)
    SHARE = FormulaSpec("SHARE", "3.11", "share within group", 1, None, Show.PERCENT, needs_scope=True)
    HHI = FormulaSpec("HHI", "3.12", "Herfindahl-Hirschman index", 1, None, Show.HHI, needs_scope=True)
    SFR = FormulaSpec("SFR", "3.13", "robot stock-flow ratio", 2, 2, Show.RATIO, UnitKind.PHYSICAL_UNITS)
    AIS = FormulaSpec("AIS", "3.14", "installation share of stock", 2, 2, Show.PERCENT, UnitKind.PHYSICAL_UNITS)
    DCM = FormulaSpec("DCM", "3.15", "data-centre demand multiplier", 2, 2, Show.RATIO, UnitKind.ENERGY_TWH, same_concept=True)
    NDR = FormulaSpec("NDR", "3.16", "new-to-displaced ratio", 2, 2, Show.RATIO, UnitKind.JOBS_MILLION)
    DRN = FormulaSpec("DRN", "3.17", "displacement relative to new roles", 2, 2, Show.PERCENT, UnitKind.JOBS_MILLION)
    NLMC = FormulaSpec("NLMC", "3.18", "net labour-market change", 2, 2, Show.LEVEL, UnitKind.JOBS_MILLION)
    NGR = FormulaSpec("NGR", "3.19", "net gain relative to new roles", 2, 2, Show.PERCENT, UnitKind.JOBS_MILLION)
    CFINDEX = FormulaSpec("CFINDEX", "3.22", "coordination-friction index", 7, 7, Show.RATIO)

    @property
    def spec(self) -> FormulaSpec:
        return self.value

    @property
    def token(self) -> str:
        return self.value.token

    @classmethod
    def from_token(cls, token: str) -> "FormulaId":
        try:
            return cls[token.upper()]
        except KeyError:
            raise SpecError(f"unknown formula {token!r}") from None


LABOUR = {FormulaId.NDR, FormulaId.DRN, FormulaId.NLMC, FormulaId.NGR}
ALWAYS_SCALE = {FormulaId.AIS}


def output_unit(formula: FormulaId, input_units: Sequence[Unit]) -> Unit:
    if formula in (FormulaId.ABS,):
        return input_units[0]
    if formula is FormulaId.PP:
        return PERCENTAGE_POINT
    if formula is FormulaId.NLMC:
        return input_units[0]
    if formula.spec.show is Show.RATIO:
        return RATIO
    return DIMENSIONLESS


def check_units(formula: FormulaId, input_units: Sequence[Unit]) -> None:
    kind = formula.spec.input_kind
    if kind is not None:
        for u in input_units:
            if u.kind is not kind:
                raise UnitError(f"{formula.token} expects {kind.value} inputs, got {u.token}")
    if formula.spec.same_concept or formula in LABOUR or formula in (FormulaId.SFR, FormulaId.AIS):
        if len({u.kind for u in input_units}) > 1:
            raise UnitError(f"{formula.token} inputs disagree on unit: {[u.token for u in input_units]}")


def _labour(values) -> metrics.LabourProjection:
    return metrics.LabourProjection(values[0], values[1])


def _robots(values) -> metrics.RobotStockSnapshot:
    return metrics.RobotStockSnapshot(values[0], values[1])


def _cagr(values, params):
    if "n" not in params:
        raise SpecError("CAGR needs a year count n")
    return core.cagr(values[0], values[1], params["n"])


def _share(values, units, params):
    group = ShareGroup(
        group_label=params.get("group", ""),
        scope=Scope.parse(params["scope"]),
        members=tuple((f"m{i}", v) for i, v in enumerate(values)),
    )
    return shares(group).shares[0][1]


def _hhi(values, units, params):
    scope = Scope.parse(params["scope"])
    named = [(f"m{i}", v) for i, v in enumerate(values)]
    if all(u.kind is UnitKind.PERCENT for u in units):
        sv = share_vector_from_percentages(named, scope, residual_allowed=True)
    else:
        sv = shares(ShareGroup(params.get("group", ""), scope, tuple(named)))
    return hhi(sv).value


def _cfindex(values, params):
    from .cfindex import CfWeights, cf_index, COMPONENT_KINDS

    weights = CfWeights.from_mapping(params["weights"], params.get("scheme", "Equal"))
    return cf_index(dict(zip(COMPONENT_KINDS, values)), weights)


_EVAL: dict[FormulaId, Callable] = {
    FormulaId.ABS: lambda v, u, p: core.absolute_change(v[0], v[1]),
    FormulaId.PP: lambda v, u, p: core.percentage_point_change(v[0], v[1]),
    FormulaId.RC: lambda v, u, p: core.relative_change(v[0], v[1]),
    FormulaId.CAGR: lambda v, u, p: _cagr(v, p),
    FormulaId.GM: lambda v, u, p: core.growth_multiplier(v[0], v[1]),
    FormulaId.SR: lambda v, u, p: core.scale_ratio(v[0], v[1]),
    FormulaId.SHARE: _share,
    FormulaId.HHI: _hhi,
    FormulaId.SFR: lambda v, u, p: metrics.stock_flow_ratio(_robots(v)),
    FormulaId.AIS: lambda v, u, p: metrics.installation_share_of_stock(_robots(v)),
    FormulaId.DCM: lambda v, u, p: metrics.demand_multiplier(v[0], v[1]),
    FormulaId.NDR: lambda v, u, p: metrics.new_to_displaced_ratio(_labour(v)),
    FormulaId.DRN: lambda v, u, p: metrics.displacement_relative_to_new(_labour(v)),
    FormulaId.NLMC: lambda v, u, p: metrics.net_labour_change(_labour(v)),
    FormulaId.NGR: lambda v, u, p: metrics.net_gain_ratio(_labour(v)),
    FormulaId.CFINDEX: lambda v, u, p: _cfindex(v, p),
}


def evaluate(formula: FormulaId, values: Sequence[float], units: Sequence[Unit], params: dict | None = None) -> float:
    """Evaluate ``formula`` over bare input values (units checked separately)."""
    params = params or {}
    spec = formula.spec
    n = len(values)
    if n < spec.min_args or (spec.max_args is not None and n > spec.max_args):
        raise SpecError(f"{formula.token} got {n} inputs")
    if spec.needs_scope and "scope" not in params:
        raise SpecError(f"{formula.token} needs a declared scope")
    return float(_EVAL[formula]([float(v) for v in values], list(units), params))

"""Robotics stock-flow, compute-energy and labour-reallocation metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import EvidenceStatus, Number, Period, growth_multiplier
from .errors import DivisionByZeroBase, DomainError


def _nonneg(name: str, v: float) -> float:
    v = float(v)
    if not math.isfinite(v) or v < 0:
        raise DomainError(f"{name} must be finite and >= 0, got {v}")
    return v


@dataclass(frozen=True)
class RobotStockSnapshot:
    operational_stock: float
    annual_installations: float
    period: Period | None = None

    def __post_init__(self):
        object.__setattr__(self, "operational_stock", _nonneg("operational_stock", self.operational_stock))
        object.__setattr__(self, "annual_installations", _nonneg("annual_installations", self.annual_installations))


@dataclass(frozen=True)
class LabourProjection:
    new_roles: float
    displaced_roles: float
    period: Period | None = None
    evidence_status: EvidenceStatus = EvidenceStatus.PROJECTION

    def __post_init__(self):
        object.__setattr__(self, "new_roles", _nonneg("new_roles", self.new_roles))
        object.__setattr__(self, "displaced_roles", _nonneg("displaced_roles", self.displaced_roles))
        if self.evidence_status is not EvidenceStatus.PROJECTION:
            raise DomainError("labour reallocation figures are projections, not realised outcomes")


def stock_flow_ratio(s: RobotStockSnapshot) -> float:
    if s.annual_installations == 0:
        raise DivisionByZeroBase("stock-flow ratio with zero annual installations")
    return s.operational_stock / s.annual_installations


def installation_share_of_stock(s: RobotStockSnapshot) -> float:
    """Annual inflow relative to stock. A scale indicator, not a depreciation rate."""
    if s.operational_stock == 0:
        raise DivisionByZeroBase("installation share with zero operational stock")
    return s.annual_installations / s.operational_stock


def demand_multiplier(e0: Number, et: Number):
    return growth_multiplier(e0, et)


def new_to_displaced_ratio(p: LabourProjection) -> float:
    if p.displaced_roles == 0:
        raise DivisionByZeroBase("new-to-displaced ratio with zero displaced roles")
    return p.new_roles / p.displaced_roles


def displacement_relative_to_new(p: LabourProjection) -> float:
    if p.new_roles == 0:
        raise DivisionByZeroBase("displacement ratio with zero new roles")
    return p.displaced_roles / p.new_roles


def net_labour_change(p: LabourProjection) -> float:
    return p.new_roles - p.displaced_roles


def net_gain_ratio(p: LabourProjection) -> float:
    # 1 - d/n rather than (n - d)/n keeps DRN + NGR == 1 exact in binary64.
    return 1.0 - displacement_relative_to_new(p)

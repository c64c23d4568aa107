"""Shares within a declared group and the Herfindahl-Hirschman index."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DomainError, EmptyDenominator, MalformedShares

RAW_SUM_TOL = 1e-9
ROUNDED_SUM_TOL = 0.01


class Scope(enum.Enum):
    GLOBAL = "Global"
    REGIONAL = "Regional"
    SECTORAL = "Sectoral"
    REPORTED_COMPARISON = "ReportedComparison"

    @classmethod
    def parse(cls, token: str) -> "Scope":
        norm = token.replace("_", "").replace("-", "").lower()
        for s in cls:
            if s.value.lower() == norm:
                return s
        raise ValueError(f"unknown concentration scope {token!r}")


_SCOPE_TEXT = {
    Scope.GLOBAL: "global concentration across the full population",
    Scope.REGIONAL: "regional concentration within the reported regional breakdown",
    Scope.SECTORAL: "sectoral concentration within the stated sector",
    Scope.REPORTED_COMPARISON: "concentration within the reported comparison group only, not a global index",
}


@dataclass(frozen=True)
class ShareGroup:
    group_label: str
    scope: Scope
    members: tuple[tuple[str, float], ...]
    residual_member: tuple[str, float] | None = None

    def __post_init__(self):
        if not isinstance(self.scope, Scope):
            raise DomainError("a share group needs a declared scope before shares are computed")
        members = tuple((str(m), float(v)) for m, v in self.members)
        object.__setattr__(self, "members", members)
        for m, v in self.all_members():
            if not math.isfinite(v):
                raise DomainError(f"{m}: non-finite member value")
            if v < 0:
                raise DomainError(f"{m}: negative member value {v}")

    def all_members(self) -> list[tuple[str, float]]:
        out = list(self.members)
        if self.residual_member is not None:
            out.append((self.residual_member[0], float(self.residual_member[1])))
        return out


@dataclass(frozen=True)
class ShareVector:
    shares: tuple[tuple[str, float], ...]
    scope: Scope
    group_label: str = ""
    sum_tolerance: float = RAW_SUM_TOL

    def values(self) -> list[float]:
        return [s for _, s in self.shares]


@dataclass(frozen=True)
class HHIResult:
    value: float
    scope: Scope
    group_label: str
    members: tuple[str, ...]
    boundary_statement: str

    @property
    def on_100_scale(self) -> float:
        return self.value * 100.0


def boundary_statement(scope: Scope, group_label: str, members: Iterable[str]) -> str:
    members = ", ".join(members)
    return f"{group_label}: {_SCOPE_TEXT[scope]} ({members})"


def shares(group: ShareGroup) -> ShareVector:
    members = group.all_members()
    total = math.fsum(v for _, v in members)
    if total <= 0:
        raise EmptyDenominator(f"{group.group_label}: member values sum to zero")
    return ShareVector(
        shares=tuple((m, v / total) for m, v in members),
        scope=group.scope,
        group_label=group.group_label,
    )


def _check_shares(sv: ShareVector) -> None:
    vals = sv.values()
    if not vals:
        raise MalformedShares("empty share vector")
    for s in vals:
        if not (0.0 <= s <= 1.0) or not math.isfinite(s):
            raise MalformedShares(f"share {s} outside [0, 1]")
    total = math.fsum(vals)
    if abs(total - 1.0) > sv.sum_tolerance:
        raise MalformedShares(f"shares sum to {total}, not 1 within {sv.sum_tolerance}")


def hhi(sv: ShareVector) -> HHIResult:
    _check_shares(sv)
    value = sum(s * s for s in sv.values())
    names = tuple(m for m, _ in sv.shares)
    return HHIResult(
        value=value,
        scope=sv.scope,
        group_label=sv.group_label,
        members=names,
        boundary_statement=boundary_statement(sv.scope, sv.group_label, names),
    )


def share_vector_from_percentages(
    percents: Sequence[tuple[str, float]],
    scope: Scope,
    group_label: str = "",
    residual_allowed: bool = True,
) -> ShareVector:
    """Turn pre-rounded published percentages into decimal shares, without renormalising."""
    total = math.fsum(p for _, p in percents)
    tol = 100 * ROUNDED_SUM_TOL if residual_allowed else 100 * RAW_SUM_TOL
    if abs(total - 100.0) > tol:
        raise MalformedShares(f"percentages sum to {total}, expected 100 +/- {tol:g}")
    return ShareVector(
        shares=tuple((m, p / 100.0) for m, p in percents),
        scope=scope,
        group_label=group_label,
        sum_tolerance=ROUNDED_SUM_TOL if residual_allowed else RAW_SUM_TOL,
    )


def hhi_from_reported_percentages(
    percents: Sequence[float], residual_allowed: bool = True
) -> float:
    """HHI straight from published percentages such as ``[74, 16, 9, 1]``.

    The residual "other/rounding" entry, if any, is just another member.
    """
    named = [(f"m{i}", float(p)) for i, p in enumerate(percents)]
    sv = share_vector_from_percentages(named, Scope.REPORTED_COMPARISON, residual_allowed=residual_allowed)
    return hhi(sv).value

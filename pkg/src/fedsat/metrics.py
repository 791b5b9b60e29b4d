"""Figures of merit and threshold compliance.

Constellation coverage of a DCP is the union over satellites of the
instants at which some satellite accesses it. Revisit gaps are the
stretches of the horizon outside that union, including any leading or
trailing stretch.
"""
from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import asdict, dataclass, field

import numpy as np

from fedsat.access import (
    DCP_KINDS,
    AccessResult,
    AccessWindow,
    StorageTimeline,
    WindowKind,
    downlink_sufficiency,
    solve_access,
    window_mask,
)
from fedsat.scenario import AccessMode, Scenario, Thresholds, TimeGrid

SECONDS_PER_DAY = 86400.0


@dataclass(frozen=True)
class RevisitResult:
    gaps: list[float]
    max_revisit_s: float


@dataclass
class DcpMetrics:
    temporal_coverage_fraction: float
    max_revisit_s: float
    revisit_ok: bool


@dataclass
class SatelliteMetrics:
    ground_access_s_per_day: float
    engagement_fraction: float
    downlink_sufficient: bool
    storage_peak_bytes: float


@dataclass
class FederationMetrics:
    dcp_coverage_fraction: float
    dedicated_ground_stations: int
    # mean temporal coverage over DCPs; the alternative reading of "coverage"
    mean_temporal_coverage: float = 0.0


@dataclass
class FigureOfMeritReport:
    per_dcp: dict[str, DcpMetrics]
    per_satellite: dict[str, SatelliteMetrics]
    federation: FederationMetrics

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ComplianceResult:
    rule: str
    subject: str
    threshold: float
    observed: float
    unit: str
    direction: str  # ">=" or "<="
    passed: bool = field(default=False)

    @staticmethod
    def evaluate(rule, subject, threshold, observed, unit, direction) -> ComplianceResult:
        return ComplianceResult(rule, subject, threshold, observed, unit, direction,
                                meets(observed, threshold, direction))


def meets(observed: float, threshold: float, direction: str) -> bool:
    if direction == ">=":
        return observed >= threshold
    if direction == "<=":
        return observed <= threshold
    raise ValueError(f"unknown direction {direction!r}")


def _dcp_windows(windows: Iterable[AccessWindow], dcp_id: str) -> list[AccessWindow]:
    return [w for w in windows if w.target_id == dcp_id and w.kind in DCP_KINDS]


def _check_known(dcp_id, known_ids):
    if known_ids is not None and dcp_id not in set(known_ids):
        raise KeyError(f"unknown DCP id {dcp_id!r}")


def temporal_coverage(windows, dcp_id: str, grid: TimeGrid, known_ids=None) -> float:
    """Share of grid instants at which at least one satellite accesses the DCP."""
    _check_known(dcp_id, known_ids)
    n = grid.n_instants
    if n == 0:
        return 0.0
    return float(window_mask(_dcp_windows(windows, dcp_id), grid).sum()) / n


def _union_intervals(windows, grid: TimeGrid) -> list[tuple[float, float]]:
    spans = sorted(
        (max(w.start_s, grid.start_s), min(w.end_s, grid.end_s))
        for w in windows
    )
    merged: list[list[float]] = []
    for a, b in spans:
        if b <= a:
            continue
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [(a, b) for a, b in merged]


def revisit_times(windows, dcp_id: str, grid: TimeGrid, known_ids=None) -> RevisitResult:
    """Gaps in the union of the DCP's access windows and the largest one.

    A DCP with no access at all has an infinite maximum revisit.
    """
    _check_known(dcp_id, known_ids)
    mine = _dcp_windows(windows, dcp_id)
    intervals = _union_intervals(mine, grid)
    if not mine:
        return RevisitResult([grid.span_s], math.inf)
    gaps = []
    cursor = grid.start_s
    for a, b in intervals:
        if a > cursor:
            gaps.append(a - cursor)
        cursor = max(cursor, b)
    if grid.end_s > cursor:
        gaps.append(grid.end_s - cursor)
    if not intervals:
        # every window lies outside the horizon
        return RevisitResult(gaps, math.inf)
    return RevisitResult(gaps, max(gaps, default=0.0))


def ground_access_per_day(windows, satellite_id: str, grid: TimeGrid) -> float:
    """Ground-contact time per day: union of the satellite's ground windows over the horizon."""
    mine = [w for w in windows if w.satellite_id == satellite_id and w.kind is WindowKind.GROUND_CONTACT]
    total = sum(b - a for a, b in _union_intervals(mine, grid))
    days = grid.span_s / SECONDS_PER_DAY
    return total / days if days > 0 else 0.0


def compute_report(
    scenario: Scenario,
    windows: list[AccessWindow],
    storage: Mapping[str, StorageTimeline],
    grid: TimeGrid | None = None,
) -> FigureOfMeritReport:
    """Figures of merit over ``grid`` (the scenario grid unless a sub-range is given)."""
    grid = grid or scenario.grid
    known = [d.id for d in scenario.dcps]
    per_dcp = {}
    for dcp in scenario.dcps:
        rev = revisit_times(windows, dcp.id, grid, known)
        per_dcp[dcp.id] = DcpMetrics(
            temporal_coverage_fraction=temporal_coverage(windows, dcp.id, grid, known),
            max_revisit_s=rev.max_revisit_s,
            revisit_ok=rev.max_revisit_s <= dcp.required_revisit_s,
        )
    sufficient = downlink_sufficiency(scenario, windows, storage, grid)
    per_sat = {}
    for sat in scenario.satellites:
        timeline = storage.get(sat.id)
        per_sat[sat.id] = SatelliteMetrics(
            ground_access_s_per_day=ground_access_per_day(windows, sat.id, grid),
            engagement_fraction=sat.engagement_fraction,
            downlink_sufficient=sufficient[sat.id],
            storage_peak_bytes=timeline.peak_bytes if timeline is not None else 0.0,
        )
    n_dcp = len(per_dcp)
    federation = FederationMetrics(
        dcp_coverage_fraction=(sum(m.revisit_ok for m in per_dcp.values()) / n_dcp) if n_dcp else 1.0,
        dedicated_ground_stations=sum(1 for g in scenario.ground_stations if g.federated),
        mean_temporal_coverage=(
            float(np.mean([m.temporal_coverage_fraction for m in per_dcp.values()])) if n_dcp else 0.0
        ),
    )
    return FigureOfMeritReport(per_dcp, per_sat, federation)


def check_compliance(report: FigureOfMeritReport, thresholds: Thresholds, scenario: Scenario) -> list[ComplianceResult]:
    """One result per rule and subject, in a fixed rule order."""
    ev = ComplianceResult.evaluate
    out = [
        ev("min_dcp_coverage_fraction", "federation", thresholds.min_dcp_coverage_fraction,
           report.federation.dcp_coverage_fraction, "fraction", ">="),
    ]
    for sat in scenario.satellites:
        if not sat.dedicated:
            out.append(ev("min_engagement_fraction", sat.id, thresholds.min_engagement_fraction,
                          sat.engagement_fraction, "fraction", ">="))
    for sat in scenario.satellites:
        if sat.access_mode is AccessMode.STORE_AND_FORWARD:
            out.append(ev("min_storage_bytes", sat.id, thresholds.min_storage_bytes,
                          sat.storage_capacity_bytes, "B", ">="))
    for sat in scenario.satellites:
        out.append(ev("max_peak_power_w", sat.id, thresholds.max_peak_power_w, sat.peak_power_w, "W", "<="))
    for dcp in scenario.dcps:
        if dcp.id in report.per_dcp:
            out.append(ev("max_revisit_s", dcp.id, thresholds.max_revisit_s,
                          report.per_dcp[dcp.id].max_revisit_s, "s", "<="))
    for sat in scenario.satellites:
        if sat.id in report.per_satellite:
            out.append(ev("min_ground_access_s_per_day", sat.id, thresholds.min_ground_access_s_per_day,
                          report.per_satellite[sat.id].ground_access_s_per_day, "s/day", ">="))
    out.append(ev("min_dedicated_ground_stations", "federation", thresholds.min_dedicated_ground_stations,
                  report.federation.dedicated_ground_stations, "count", ">="))
    for sat in scenario.satellites:
        if sat.id in report.per_satellite:
            out.append(ev("downlink_sufficiency", sat.id, 1.0,
                          float(report.per_satellite[sat.id].downlink_sufficient), "bool", ">="))
    return out


@dataclass
class PipelineResult:
    access: AccessResult
    report: FigureOfMeritReport
    compliance: list[ComplianceResult]

    @property
    def windows(self) -> list[AccessWindow]:
        return self.access.windows

    @property
    def compliant(self) -> bool:
        return all(c.passed for c in self.compliance)


def run_pipeline(scenario: Scenario, geometry=None, grid: TimeGrid | None = None) -> PipelineResult:
    """access -> storage -> metrics -> compliance for one scenario."""
    access = solve_access(scenario, geometry)
    report = compute_report(scenario, access.windows, access.storage, grid)
    return PipelineResult(access, report, check_compliance(report, scenario.thresholds, scenario))

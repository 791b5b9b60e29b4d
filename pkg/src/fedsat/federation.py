"""Federation lifecycle decisions: admission, retirement, fault reconfiguration.

Every decision re-runs the full access/metrics pipeline on a modified
scenario and compares figures of merit. Searches are exhaustive; at the
intended scale (a handful of satellites, eight duty-cycle phases each) that
stays cheap, and orbit geometry is computed once and reused across the
candidate configurations of a search.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

from fedsat.access import visibility_masks
from fedsat.metrics import (
    ComplianceResult,
    FigureOfMeritReport,
    PipelineResult,
    run_pipeline,
)
from fedsat.scenario import Satellite, Scenario, TimeGrid

PHASE_DIVISIONS = 8


class FederationError(ValueError):
    pass


@dataclass
class QosDelta:
    per_dcp_coverage: dict[str, float]
    per_dcp_max_revisit_s: dict[str, float]
    federation_coverage: float


@dataclass
class AdmissionDecision:
    candidate_id: str
    accepted: bool
    failed_rules: list[ComplianceResult]
    qos_delta: QosDelta
    before: FigureOfMeritReport = field(repr=False)
    after: FigureOfMeritReport = field(repr=False)


@dataclass
class RetirementPlan:
    removed_id: str
    post_metrics: FigureOfMeritReport
    still_compliant: bool
    # (satellite id, federation coverage, total temporal coverage loss) per removal tried
    evaluated: list[tuple[str, float, float]] = field(default_factory=list)


@dataclass
class ReconfigurationResult:
    failed_id: str
    fault_time_s: float
    effective_from_s: float
    surviving_ids: list[str]
    phase_offsets_s: dict[str, float]
    objective: tuple[float, float]
    objective_before: tuple[float, float]
    compliant_before: bool
    compliant_after: bool
    search_cost: int
    report_after: FigureOfMeritReport = field(repr=False)
    compliance_after: list[ComplianceResult] = field(repr=False, default_factory=list)


def _delta(after: float, before: float) -> float:
    if math.isinf(after) and math.isinf(before):
        return 0.0
    return after - before


def qos_delta(before: FigureOfMeritReport, after: FigureOfMeritReport) -> QosDelta:
    return QosDelta(
        per_dcp_coverage={
            d: after.per_dcp[d].temporal_coverage_fraction - before.per_dcp[d].temporal_coverage_fraction
            for d in before.per_dcp
        },
        per_dcp_max_revisit_s={
            d: _delta(after.per_dcp[d].max_revisit_s, before.per_dcp[d].max_revisit_s) for d in before.per_dcp
        },
        federation_coverage=after.federation.dcp_coverage_fraction - before.federation.dcp_coverage_fraction,
    )


def candidate_offer_checks(candidate: Satellite, scenario: Scenario) -> list[ComplianceResult]:
    """Offered-value rules a candidate must meet on its own."""
    th = scenario.thresholds
    ev = ComplianceResult.evaluate
    checks = []
    if candidate.store_and_forward:
        checks.append(ev("min_storage_bytes", candidate.id, th.min_storage_bytes,
                         candidate.storage_capacity_bytes, "B", ">="))
    checks.append(ev("max_peak_power_w", candidate.id, th.max_peak_power_w, candidate.peak_power_w, "W", "<="))
    if not candidate.dedicated:
        checks.append(ev("min_engagement_fraction", candidate.id, th.min_engagement_fraction,
                         candidate.engagement_fraction, "fraction", ">="))
    return checks


def evaluate_candidate(scenario: Scenario, candidate: Satellite) -> AdmissionDecision:
    """Decide whether ``candidate`` may join the federation.

    Accepted iff the candidate's offered values meet the thresholds and the
    enlarged federation passes every compliance rule. ``failed_rules`` holds
    the failing offered-value checks followed by the failing post-admission
    rules.
    """
    if any(s.id == candidate.id for s in scenario.satellites):
        raise FederationError(f"satellite id {candidate.id!r} is already in the federation")
    problems = candidate.elements.violations()
    if problems:
        raise FederationError(f"candidate {candidate.id!r} has invalid elements: {', '.join(problems)}")
    before = run_pipeline(scenario)
    after = run_pipeline(scenario.with_satellites([*scenario.satellites, candidate]))
    local = [c for c in candidate_offer_checks(candidate, scenario) if not c.passed]
    post = [c for c in after.compliance if not c.passed and c not in local]
    failed = local + post
    return AdmissionDecision(
        candidate_id=candidate.id,
        accepted=not failed,
        failed_rules=failed,
        qos_delta=qos_delta(before.report, after.report),
        before=before.report,
        after=after.report,
    )


def total_temporal_coverage(report: FigureOfMeritReport) -> float:
    return sum(m.temporal_coverage_fraction for m in report.per_dcp.values())


def retire_minimal_impact(scenario: Scenario) -> RetirementPlan:
    """Remove the satellite whose absence hurts federation QoS least.

    Ranking: highest remaining federation DCP coverage fraction, then the
    smallest loss of summed temporal coverage, then the smallest id.
    """
    if len(scenario.satellites) < 2:
        raise FederationError("retirement needs at least two satellites")
    geometry = visibility_masks(scenario)
    baseline = total_temporal_coverage(run_pipeline(scenario, geometry).report)
    best_key, best = None, None
    evaluated = []
    for sat in scenario.satellites:
        reduced = scenario.with_satellites(s for s in scenario.satellites if s.id != sat.id)
        result = run_pipeline(reduced, geometry)
        coverage = result.report.federation.dcp_coverage_fraction
        loss = baseline - total_temporal_coverage(result.report)
        evaluated.append((sat.id, coverage, loss))
        key = (-coverage, loss, sat.id)
        if best_key is None or key < best_key:
            best_key, best = key, (sat.id, result)
    removed_id, result = best
    return RetirementPlan(removed_id, result.report, result.compliant, sorted(evaluated))


def next_planning_boundary(fault_time_s: float, planning_period_s: float) -> float:
    return math.ceil(fault_time_s / planning_period_s - 1e-12) * planning_period_s


def phase_offsets(planning_period_s: float) -> list[float]:
    return [k * planning_period_s / PHASE_DIVISIONS for k in range(PHASE_DIVISIONS)]


def objective(result: PipelineResult) -> tuple[float, float]:
    """(federation DCP coverage fraction, summed temporal coverage); larger is better."""
    return (result.report.federation.dcp_coverage_fraction, total_temporal_coverage(result.report))


def reconfigure_on_fault(scenario: Scenario, failed_id: str, fault_time_s: float) -> ReconfigurationResult:
    """Re-plan duty-cycle phases of the surviving hosted payloads after a fault.

    The failed satellite is dropped. The new plan takes effect at the first
    planning-period boundary at or after the fault and is scored on the
    remaining horizon from that boundary. Every combination of phase offsets
    (multiples of one eighth of the planning period) of the surviving
    non-dedicated satellites is evaluated; ties keep the earliest
    combination in enumeration order, which starts from offset 0.
    """
    ids = [s.id for s in scenario.satellites]
    if failed_id not in ids:
        raise FederationError(f"unknown satellite id {failed_id!r}")
    grid = scenario.grid
    grid.index_of(fault_time_s)
    period = scenario.thresholds.planning_period_s
    boundary = next_planning_boundary(fault_time_s, period)
    if boundary >= grid.end_s:
        # no boundary inside the horizon: phases cannot change, score from the fault
        boundary = fault_time_s
        searchable = False
    else:
        searchable = True
    k0 = math.ceil((boundary - grid.start_s) / grid.step_s - 1e-9)
    eval_grid = TimeGrid(end_s=grid.end_s, step_s=grid.step_s, start_s=grid.start_s + k0 * grid.step_s)

    # the unfaulted federation scored over the same stretch of horizon
    prior = run_pipeline(scenario, grid=eval_grid)

    survivors = [s for s in scenario.satellites if s.id != failed_id]
    reduced = scenario.with_satellites(survivors)
    geometry = visibility_masks(reduced)
    tunable = [s for s in survivors if not s.dedicated and searchable]
    choices = [phase_offsets(period)] * len(tunable)

    best = None
    cost = 0
    for combo in itertools.product(*choices):
        rephased = {s.id: replace(s, duty_phase_s=phase) for s, phase in zip(tunable, combo)}
        candidate = reduced.with_satellites(rephased.get(s.id, s) for s in survivors)
        result = run_pipeline(candidate, geometry, eval_grid)
        cost += 1
        score = objective(result)
        if best is None or score > best[0]:
            best = (score, combo, result)
    score, combo, result = best
    offsets = {s.id: s.duty_phase_s for s in survivors if not s.dedicated}
    offsets.update({s.id: phase for s, phase in zip(tunable, combo)})
    return ReconfigurationResult(
        failed_id=failed_id,
        fault_time_s=float(fault_time_s),
        effective_from_s=eval_grid.start_s,
        surviving_ids=[s.id for s in survivors],
        phase_offsets_s=offsets,
        objective=score,
        objective_before=objective(prior),
        compliant_before=prior.compliant,
        compliant_after=result.compliant and bool(survivors),
        search_cost=cost,
        report_after=result.report,
        compliance_after=result.compliance,
    )

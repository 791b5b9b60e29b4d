"""Command-line front end.

Exit codes: 0 when every compliance rule passes (or the decision is
positive), 1 when some rule fails, 2 on input or validation errors. Machine
output is JSON on stdout; human tables go to stderr when it is a terminal
(or always with ``--table``).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

from fedsat import reporting
from fedsat.federation import (
    FederationError,
    evaluate_candidate,
    reconfigure_on_fault,
    retire_minimal_impact,
)
from fedsat.metrics import run_pipeline
from fedsat.scenario import (
    Scenario,
    ScenarioError,
    ScenarioParseError,
    ScenarioValidationError,
    load_satellite,
    scenario_from_dict,
    validate_scenario,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_ERROR = 2


@dataclass
class RunReport:
    scenario_digest: str
    windows_csv_path: str
    metrics_json_path: str | None
    compliance_summary: dict[str, int]
    exit_code: int
    overrides: dict[str, object] = field(default_factory=dict)
    metrics_csv_paths: list[str] = field(default_factory=list)


class CliError(Exception):
    pass


def _read_scenario(path: str, args) -> tuple[Scenario, str]:
    """Load, override and validate a scenario; returns it with the sha256 of the file."""
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise ScenarioParseError(f"{p}: {exc.strerror or exc}") from None
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        where = f"line {exc.lineno} column {exc.colno}: {exc.msg}" if hasattr(exc, "lineno") else str(exc)
        raise ScenarioParseError(f"{p}: {where}") from None
    try:
        scenario = scenario_from_dict(doc)
    except ScenarioParseError as exc:
        raise ScenarioParseError(f"{p}: {exc}") from None
    scenario = _apply_overrides(scenario, args)
    problems = validate_scenario(scenario)
    if problems:
        raise ScenarioValidationError(problems)
    return scenario, hashlib.sha256(raw).hexdigest()


def _overrides(args) -> dict[str, object]:
    out = {}
    if getattr(args, "step_s", None) is not None:
        out["step_s"] = args.step_s
    if getattr(args, "horizon_s", None) is not None:
        out["horizon_s"] = args.horizon_s
    return out


def _apply_overrides(scenario: Scenario, args) -> Scenario:
    ov = _overrides(args)
    grid = scenario.grid
    if "step_s" in ov:
        grid = replace(grid, step_s=float(ov["step_s"]))
    if "horizon_s" in ov:
        grid = replace(grid, end_s=float(ov["horizon_s"]))
    return replace(scenario, grid=grid)


def _table(args, text: str) -> None:
    if getattr(args, "table", False) or sys.stderr.isatty():
        sys.stderr.write(text)


def _emit(obj) -> None:
    sys.stdout.write(reporting.dumps(obj))


def cmd_simulate(args) -> int:
    scenario, digest = _read_scenario(args.scenario, args)
    result = run_pipeline(scenario)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    windows_path = out_dir / "windows.csv"
    windows_path.write_text(reporting.windows_csv(result.windows), encoding="utf-8")
    passed = sum(c.passed for c in result.compliance)
    failed = len(result.compliance) - passed
    exit_code = EXIT_OK if failed == 0 else EXIT_FAIL
    overrides = _overrides(args)
    overrides["format"] = args.format

    metrics_json = None
    metrics_csv = []
    if args.format == "json":
        metrics_path = out_dir / "metrics.json"
        metrics_path.write_text(
            reporting.dumps({
                "scenario": scenario.name,
                "scenario_digest": digest,
                "overrides": overrides,
                "report": result.report,
                "compliance": result.compliance,
            }),
            encoding="utf-8",
        )
        metrics_json = str(metrics_path)
    else:
        for name, text in (
            ("per_dcp.csv", reporting.per_dcp_csv(result.report)),
            ("per_satellite.csv", reporting.per_satellite_csv(result.report)),
        ):
            (out_dir / name).write_text(text, encoding="utf-8")
            metrics_csv.append(str(out_dir / name))

    sys.stderr.write(reporting.compliance_table(result.compliance))
    _emit(RunReport(
        scenario_digest=digest,
        windows_csv_path=str(windows_path),
        metrics_json_path=metrics_json,
        compliance_summary={"pass": passed, "fail": failed},
        exit_code=exit_code,
        overrides=overrides,
        metrics_csv_paths=metrics_csv,
    ))
    return exit_code


def cmd_validate(args) -> int:
    p = Path(args.scenario)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ScenarioParseError(f"{p}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{p}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    scenario = _apply_overrides(scenario_from_dict(doc), args)
    problems = validate_scenario(scenario)
    _emit({"valid": not problems, "violations": [{"subject": v.subject, "rule": v.rule} for v in problems]})
    return EXIT_OK if not problems else EXIT_ERROR


def cmd_admit(args) -> int:
    scenario, _ = _read_scenario(args.scenario, args)
    candidate = load_satellite(args.candidate)
    decision = evaluate_candidate(scenario, candidate)
    _table(args, reporting.compliance_table(decision.failed_rules))
    _emit({
        "candidate_id": decision.candidate_id,
        "accepted": decision.accepted,
        "failed_rules": decision.failed_rules,
        "qos_delta": decision.qos_delta,
    })
    return EXIT_OK if decision.accepted else EXIT_FAIL


def cmd_retire(args) -> int:
    scenario, _ = _read_scenario(args.scenario, args)
    plan = retire_minimal_impact(scenario)
    _emit({
        "removed_id": plan.removed_id,
        "still_compliant": plan.still_compliant,
        "evaluated": [
            {"satellite_id": sid, "federation_coverage": cov, "temporal_coverage_loss": loss}
            for sid, cov, loss in plan.evaluated
        ],
        "post_metrics": plan.post_metrics,
    })
    return EXIT_OK if plan.still_compliant else EXIT_FAIL


def cmd_fault(args) -> int:
    scenario, _ = _read_scenario(args.scenario, args)
    result = reconfigure_on_fault(scenario, args.failed_id, args.fault_time_s)
    _table(args, reporting.compliance_table(result.compliance_after))
    _emit(result)
    return EXIT_OK if result.compliant_after else EXIT_FAIL


def cmd_compare(args) -> int:
    a, digest_a = _read_scenario(args.scenario_a, args)
    b, digest_b = _read_scenario(args.scenario_b, args)
    ra, rb = run_pipeline(a).report, run_pipeline(b).report
    rows = reporting.comparison_rows(ra, rb)
    _table(args, reporting.comparison_table(rows))
    _emit({
        "a": {"path": args.scenario_a, "digest": digest_a,
              "federation_coverage": ra.federation.dcp_coverage_fraction},
        "b": {"path": args.scenario_b, "digest": digest_b,
              "federation_coverage": rb.federation.dcp_coverage_fraction},
        "per_dcp": rows,
    })
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--step-s", type=float, default=None, help="override grid step (s)")
    common.add_argument("--horizon-s", type=float, default=None, help="override grid end (s)")
    common.add_argument("--table", action="store_true", help="always print human tables on stderr")

    parser = argparse.ArgumentParser(prog="fedsat", description="Federated satellite coverage and access simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run the full pipeline and write reports")
    p.add_argument("scenario")
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--format", choices=["json", "csv"], default="json", help="metrics output format")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", parents=[common], help="check a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("admit", parents=[common], help="evaluate a candidate satellite")
    p.add_argument("scenario")
    p.add_argument("candidate", help="JSON file holding one satellite")
    p.set_defaults(func=cmd_admit)

    p = sub.add_parser("retire", parents=[common], help="pick the least harmful satellite to retire")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_retire)

    p = sub.add_parser("fault", parents=[common], help="reconfigure after a satellite fault")
    p.add_argument("scenario")
    p.add_argument("failed_id")
    p.add_argument("fault_time_s", type=float)
    p.set_defaults(func=cmd_fault)

    p = sub.add_parser("compare", parents=[common], help="side-by-side per-DCP metrics of two scenarios")
    p.add_argument("scenario_a")
    p.add_argument("scenario_b")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioValidationError as exc:
        for v in exc.violations:
            print(f"error: {v.subject}: {v.rule}", file=sys.stderr)
        return EXIT_ERROR
    except (ScenarioError, FederationError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

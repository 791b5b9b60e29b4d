"""JSON and CSV emitters for windows, reports and decisions.

Output is fixed-format so repeated runs are byte-identical: floats are
rounded to a fixed number of decimals, infinities become the strings
``"inf"`` / ``"-inf"`` (JSON has no infinity literal), keys keep insertion
order.
"""
from __future__ import annotations

import csv
import dataclasses
import enum
import io
import json
import math

import numpy as np

from fedsat.access import AccessWindow
from fedsat.metrics import ComplianceResult, FigureOfMeritReport

FLOAT_DECIMALS = 6


def _num(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    r = round(float(x), FLOAT_DECIMALS)
    return 0.0 if r == 0 else r


def to_jsonable(obj):
    """Recursively convert dataclasses, enums, numpy values and tuples."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, allow_nan=False) + "\n"


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.{3}f}"


def windows_csv(windows: list[AccessWindow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["satellite_id", "target_id", "kind", "start_s", "end_s"])
    for w in windows:
        writer.writerow([w.satellite_id, w.target_id, w.kind.value, _fmt(w.start_s), _fmt(w.end_s)])
    return buf.getvalue()


def per_dcp_csv(report: FigureOfMeritReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["dcp_id", "temporal_coverage_fraction", "max_revisit_s", "revisit_ok"])
    for dcp_id, m in report.per_dcp.items():
        writer.writerow([dcp_id, f"{m.temporal_coverage_fraction:.6f}", _fmt(m.max_revisit_s), int(m.revisit_ok)])
    return buf.getvalue()


def per_satellite_csv(report: FigureOfMeritReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["satellite_id", "ground_access_s_per_day", "engagement_fraction", "downlink_sufficient", "storage_peak_bytes"]
    )
    for sat_id, m in report.per_satellite.items():
        writer.writerow([
            sat_id,
            _fmt(m.ground_access_s_per_day),
            f"{m.engagement_fraction:.6f}",
            int(m.downlink_sufficient),
            _fmt(m.storage_peak_bytes),
        ])
    return buf.getvalue()


def compliance_table(results: list[ComplianceResult]) -> str:
    lines = [f"{'rule':<30} {'subject':<16} {'observed':>16} {'':2} {'threshold':>16} {'unit':<8} result"]
    for c in results:
        lines.append(
            f"{c.rule:<30} {c.subject:<16} {_fmt(c.observed):>16} {c.direction:2} "
            f"{_fmt(c.threshold):>16} {c.unit:<8} {'PASS' if c.passed else 'FAIL'}"
        )
    return "\n".join(lines) + "\n"


def comparison_rows(a: FigureOfMeritReport, b: FigureOfMeritReport) -> list[dict]:
    rows = []
    for dcp_id in sorted(set(a.per_dcp) | set(b.per_dcp)):
        ma, mb = a.per_dcp.get(dcp_id), b.per_dcp.get(dcp_id)
        row = {"dcp_id": dcp_id}
        for label, m in (("a", ma), ("b", mb)):
            row[f"coverage_{label}"] = m.temporal_coverage_fraction if m else None
            row[f"max_revisit_s_{label}"] = m.max_revisit_s if m else None
        if ma and mb:
            row["coverage_delta"] = mb.temporal_coverage_fraction - ma.temporal_coverage_fraction
            if math.isinf(ma.max_revisit_s) and math.isinf(mb.max_revisit_s):
                row["max_revisit_delta_s"] = 0.0
            else:
                row["max_revisit_delta_s"] = mb.max_revisit_s - ma.max_revisit_s
        rows.append(row)
    return rows


def comparison_table(rows: list[dict]) -> str:
    header = (f"{'dcp_id':<14} {'cov_a':>8} {'cov_b':>8} {'d_cov':>8} "
              f"{'revisit_a_s':>12} {'revisit_b_s':>12} {'d_revisit_s':>12}")
    lines = [header]

    def cell(v, width, spec):
        if v is None:
            return f"{'-':>{width}}"
        if isinstance(v, float) and math.isinf(v):
            return f"{_fmt(v):>{width}}"
        return f"{v:>{width}{spec}}"

    for r in rows:
        lines.append(
            f"{r['dcp_id']:<14} {cell(r['coverage_a'], 8, '.4f')} {cell(r['coverage_b'], 8, '.4f')} "
            f"{cell(r.get('coverage_delta'), 8, '.4f')} {cell(r['max_revisit_s_a'], 12, '.1f')} "
            f"{cell(r['max_revisit_s_b'], 12, '.1f')} {cell(r.get('max_revisit_delta_s'), 12, '.1f')}"
        )
    return "\n".join(lines) + "\n"

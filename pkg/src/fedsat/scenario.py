"""Federation data model and scenario-file ingestion.

Scenario files are JSON. Angles are stored in degrees and converted to
radians on load; distances are km, data sizes bytes, rates bits/s and times
seconds. The accepted document structure is described by
``scenario.schema.json`` (shipped with the package and under ``docs/``).
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from fedsat.geometry import FieldOfView, GroundPoint
from fedsat.orbit import OrbitalElements

DEFAULT_DCP_MIN_ELEVATION_DEG = 0.0
DEFAULT_GROUND_MIN_ELEVATION_DEG = 5.0
DEFAULT_REQUIRED_REVISIT_S = 3600.0
DEFAULT_STEP_S = 10.0


class AccessMode(str, enum.Enum):
    BENT_PIPE = "bent_pipe"
    STORE_AND_FORWARD = "store_and_forward"


@dataclass(frozen=True)
class Satellite:
    id: str
    elements: OrbitalElements
    fov_dcp: FieldOfView
    fov_ground: FieldOfView
    access_mode: AccessMode
    downlink_rate_bps: float
    dcp_uplink_rate_bps: float
    storage_capacity_bytes: float = 0.0
    dedicated: bool = True
    engagement_fraction: float = 1.0
    peak_power_w: float = 0.0
    owner: str = ""
    # start of the engagement duty cycle within each planning period
    duty_phase_s: float = 0.0

    @property
    def store_and_forward(self) -> bool:
        return self.access_mode is AccessMode.STORE_AND_FORWARD


@dataclass(frozen=True)
class DataCollectionPlatform:
    id: str
    location: GroundPoint
    data_per_pass_bytes: float = 0.0
    required_revisit_s: float = DEFAULT_REQUIRED_REVISIT_S


@dataclass(frozen=True)
class GroundStation:
    id: str
    location: GroundPoint
    min_elevation_rad: float = math.radians(DEFAULT_GROUND_MIN_ELEVATION_DEG)
    federated: bool = True


@dataclass(frozen=True)
class TimeGrid:
    """Uniform instants ``start_s, start_s + step_s, ...`` up to ``end_s``."""

    end_s: float
    step_s: float = DEFAULT_STEP_S
    start_s: float = 0.0

    @property
    def n_instants(self) -> int:
        if self.end_s < self.start_s or self.step_s <= 0:
            return 0
        return int(math.floor((self.end_s - self.start_s) / self.step_s + 1e-9)) + 1

    @property
    def span_s(self) -> float:
        return self.end_s - self.start_s

    def times(self) -> np.ndarray:
        return self.start_s + self.step_s * np.arange(self.n_instants, dtype=float)

    def index_of(self, time_s: float) -> int:
        """Grid index of ``time_s``; raises ValueError when it is off-grid."""
        k = round((time_s - self.start_s) / self.step_s)
        if not 0 <= k < self.n_instants or abs(self.start_s + k * self.step_s - time_s) > 1e-6 * self.step_s:
            raise ValueError(f"time {time_s!r} s is not an instant of {self}")
        return int(k)

    def violations(self) -> list[str]:
        problems = []
        if not self.end_s > self.start_s:
            problems.append("grid_end_positive")
        if not self.step_s > 0:
            problems.append("grid_step_positive")
        return problems


@dataclass(frozen=True)
class Thresholds:
    min_dcp_coverage_fraction: float = 0.90
    min_engagement_fraction: float = 0.10
    min_storage_bytes: float = 2e9
    max_peak_power_w: float = 2.0
    max_revisit_s: float = 86400.0
    min_ground_access_s_per_day: float = 600.0
    min_dedicated_ground_stations: int = 1
    planning_period_s: float = 86400.0

    def violations(self) -> list[str]:
        problems = []
        for name in (
            "min_storage_bytes",
            "max_peak_power_w",
            "max_revisit_s",
            "min_ground_access_s_per_day",
            "min_dedicated_ground_stations",
            "planning_period_s",
        ):
            if not getattr(self, name) > 0:
                problems.append(f"{name}_positive")
        for name in ("min_dcp_coverage_fraction", "min_engagement_fraction"):
            if not 0.0 < getattr(self, name) <= 1.0:
                problems.append(f"{name}_range")
        return problems


@dataclass(frozen=True)
class Scenario:
    satellites: tuple[Satellite, ...]
    dcps: tuple[DataCollectionPlatform, ...]
    ground_stations: tuple[GroundStation, ...]
    grid: TimeGrid
    thresholds: Thresholds = field(default_factory=Thresholds)
    name: str = ""

    def satellite(self, sat_id: str) -> Satellite:
        for sat in self.satellites:
            if sat.id == sat_id:
                return sat
        raise KeyError(f"unknown satellite id {sat_id!r}")

    def with_satellites(self, satellites) -> Scenario:
        return replace(self, satellites=tuple(satellites))


@dataclass(frozen=True)
class Violation:
    subject: str
    rule: str

    def __str__(self) -> str:
        return f"{self.subject}: {self.rule}"


class ScenarioError(ValueError):
    """Base class for scenario loading problems."""


class ScenarioParseError(ScenarioError):
    pass


class ScenarioValidationError(ScenarioError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("invalid scenario: " + "; ".join(str(v) for v in violations))


def _duplicates(ids) -> set[str]:
    seen, dup = set(), set()
    for i in ids:
        (dup if i in seen else seen).add(i)
    return dup


def validate_scenario(s: Scenario) -> list[Violation]:
    """Every broken invariant of ``s`` as a (subject id, rule) pair."""
    out: list[Violation] = []
    for kind, items in (("satellite", s.satellites), ("dcp", s.dcps), ("ground_station", s.ground_stations)):
        for dup in sorted(_duplicates(item.id for item in items)):
            out.append(Violation(dup, f"{kind}_id_unique"))
    if not s.ground_stations:
        out.append(Violation("scenario", "at_least_one_ground_station"))

    for sat in s.satellites:
        rules = list(sat.elements.violations())
        rules += sat.fov_dcp.violations() + sat.fov_ground.violations()
        if sat.access_mode is AccessMode.BENT_PIPE and sat.storage_capacity_bytes != 0:
            rules.append("bent_pipe_zero_storage")
        if sat.storage_capacity_bytes < 0:
            rules.append("storage_nonnegative")
        if sat.dedicated and sat.engagement_fraction != 1.0:
            rules.append("dedicated_full_engagement")
        if not 0.0 <= sat.engagement_fraction <= 1.0:
            rules.append("engagement_fraction_range")
        if not (sat.downlink_rate_bps > 0 and sat.dcp_uplink_rate_bps > 0):
            rules.append("rates_positive")
        if not sat.peak_power_w >= 0:
            rules.append("peak_power_nonnegative")
        out.extend(Violation(sat.id, rule) for rule in rules)

    for dcp in s.dcps:
        rules = dcp.location.violations()
        if not dcp.data_per_pass_bytes >= 0:
            rules.append("data_per_pass_nonnegative")
        if not dcp.required_revisit_s > 0:
            rules.append("required_revisit_positive")
        out.extend(Violation(dcp.id, rule) for rule in rules)

    for gs in s.ground_stations:
        rules = gs.location.violations()
        if not 0.0 <= gs.min_elevation_rad < math.pi / 2:
            rules.append("station_min_elevation_range")
        out.extend(Violation(gs.id, rule) for rule in rules)

    out.extend(Violation("grid", rule) for rule in s.grid.violations())
    out.extend(Violation("thresholds", rule) for rule in s.thresholds.violations())
    return out


# -- file format -------------------------------------------------------------

def _schema() -> dict:
    text = resources.files("fedsat").joinpath("scenario.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def _fov_from_dict(d: dict | None, default_half_angle_deg: float, default_min_el_deg: float) -> FieldOfView:
    d = d or {}
    return FieldOfView(
        half_angle_rad=math.radians(d.get("half_angle_deg", default_half_angle_deg)),
        min_elevation_rad=math.radians(d.get("min_elevation_deg", default_min_el_deg)),
    )


def satellite_from_dict(d: dict) -> Satellite:
    el = d["elements"]
    elements = OrbitalElements(
        semi_major_axis_km=float(el["semi_major_axis_km"]),
        eccentricity=float(el.get("eccentricity", 0.0)),
        inclination_rad=math.radians(el.get("inclination_deg", 0.0)),
        raan_rad=math.radians(el.get("raan_deg", 0.0)),
        arg_perigee_rad=math.radians(el.get("arg_perigee_deg", 0.0)),
        mean_anomaly_epoch_rad=math.radians(el.get("mean_anomaly_deg", 0.0)),
        epoch=float(el.get("epoch_s", 0.0)),
    )
    return Satellite(
        id=str(d["id"]),
        elements=elements,
        fov_dcp=_fov_from_dict(d.get("fov_dcp"), 90.0, DEFAULT_DCP_MIN_ELEVATION_DEG),
        fov_ground=_fov_from_dict(d.get("fov_ground"), 90.0, DEFAULT_GROUND_MIN_ELEVATION_DEG),
        access_mode=AccessMode(d.get("access_mode", AccessMode.BENT_PIPE.value)),
        storage_capacity_bytes=float(d.get("storage_capacity_bytes", 0.0)),
        downlink_rate_bps=float(d["downlink_rate_bps"]),
        dcp_uplink_rate_bps=float(d["dcp_uplink_rate_bps"]),
        dedicated=bool(d.get("dedicated", True)),
        engagement_fraction=float(d.get("engagement_fraction", 1.0)),
        peak_power_w=float(d.get("peak_power_w", 0.0)),
        owner=str(d.get("owner", "")),
        duty_phase_s=float(d.get("duty_phase_s", 0.0)),
    )


def scenario_from_dict(doc: dict) -> Scenario:
    """Build a Scenario from a parsed document; structure is checked, invariants are not."""
    try:
        jsonschema.validate(doc, _schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioParseError(f"field {where}: {exc.message}") from None

    sats = tuple(satellite_from_dict(d) for d in doc["satellites"])
    dcps = tuple(
        DataCollectionPlatform(
            id=str(d["id"]),
            location=GroundPoint.from_degrees(d["lat_deg"], d["lon_deg"]),
            data_per_pass_bytes=float(d.get("data_per_pass_bytes", 0.0)),
            required_revisit_s=float(d.get("required_revisit_s", DEFAULT_REQUIRED_REVISIT_S)),
        )
        for d in doc["dcps"]
    )
    stations = tuple(
        GroundStation(
            id=str(d["id"]),
            location=GroundPoint.from_degrees(d["lat_deg"], d["lon_deg"]),
            min_elevation_rad=math.radians(d.get("min_elevation_deg", DEFAULT_GROUND_MIN_ELEVATION_DEG)),
            federated=bool(d.get("federated", True)),
        )
        for d in doc["ground_stations"]
    )
    g = doc["grid"]
    grid = TimeGrid(end_s=float(g["end_s"]), step_s=float(g.get("step_s", DEFAULT_STEP_S)))
    defaults = Thresholds()
    th = doc.get("thresholds", {})
    thresholds = Thresholds(
        **{
            name: type(getattr(defaults, name))(th.get(name, getattr(defaults, name)))
            for name in Thresholds.__dataclass_fields__
        }
    )
    return Scenario(sats, dcps, stations, grid, thresholds, name=str(doc.get("name", "")))


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    try:
        scenario = scenario_from_dict(doc)
    except ScenarioParseError as exc:
        raise ScenarioParseError(f"{source}: {exc}") from None
    problems = validate_scenario(scenario)
    if problems:
        raise ScenarioValidationError(problems)
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    """Read, parse and validate a scenario file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioParseError(f"{path}: {exc.strerror or exc}") from None
    return parse_scenario(text, source=str(path))


def _fov_to_dict(fov: FieldOfView) -> dict:
    return {
        "half_angle_deg": math.degrees(fov.half_angle_rad),
        "min_elevation_deg": math.degrees(fov.min_elevation_rad),
    }


def _point_to_dict(p: GroundPoint) -> dict:
    return {"lat_deg": math.degrees(p.lat_rad), "lon_deg": math.degrees(p.lon_rad)}


def satellite_to_dict(sat: Satellite) -> dict:
    el = sat.elements
    return {
        "id": sat.id,
        "owner": sat.owner,
        "elements": {
            "semi_major_axis_km": el.semi_major_axis_km,
            "eccentricity": el.eccentricity,
            "inclination_deg": math.degrees(el.inclination_rad),
            "raan_deg": math.degrees(el.raan_rad),
            "arg_perigee_deg": math.degrees(el.arg_perigee_rad),
            "mean_anomaly_deg": math.degrees(el.mean_anomaly_epoch_rad),
            "epoch_s": el.epoch,
        },
        "fov_dcp": _fov_to_dict(sat.fov_dcp),
        "fov_ground": _fov_to_dict(sat.fov_ground),
        "access_mode": sat.access_mode.value,
        "storage_capacity_bytes": sat.storage_capacity_bytes,
        "downlink_rate_bps": sat.downlink_rate_bps,
        "dcp_uplink_rate_bps": sat.dcp_uplink_rate_bps,
        "dedicated": sat.dedicated,
        "engagement_fraction": sat.engagement_fraction,
        "peak_power_w": sat.peak_power_w,
        "duty_phase_s": sat.duty_phase_s,
    }


def scenario_to_dict(s: Scenario) -> dict[str, Any]:
    doc: dict[str, Any] = {}
    if s.name:
        doc["name"] = s.name
    doc["satellites"] = [satellite_to_dict(sat) for sat in s.satellites]
    doc["dcps"] = [
        {"id": d.id, **_point_to_dict(d.location), "data_per_pass_bytes": d.data_per_pass_bytes,
         "required_revisit_s": d.required_revisit_s}
        for d in s.dcps
    ]
    doc["ground_stations"] = [
        {"id": g.id, **_point_to_dict(g.location), "min_elevation_deg": math.degrees(g.min_elevation_rad),
         "federated": g.federated}
        for g in s.ground_stations
    ]
    doc["grid"] = {"end_s": s.grid.end_s, "step_s": s.grid.step_s}
    doc["thresholds"] = {name: getattr(s.thresholds, name) for name in Thresholds.__dataclass_fields__}
    return doc


def dump_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2) + "\n"


def satellite_violations(sat: Satellite) -> list[Violation]:
    """Invariant violations of a lone satellite (e.g. an admission candidate)."""
    probe = Scenario((sat,), (), (), TimeGrid(end_s=1.0))
    return [v for v in validate_scenario(probe) if v.subject == sat.id]


def load_satellite(path: str | Path) -> Satellite:
    """Read a single satellite document (same structure as a ``satellites`` entry)."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ScenarioParseError(f"{path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    schema = _schema()
    sat_schema = {**schema["$defs"]["satellite"], "$defs": schema["$defs"]}
    try:
        jsonschema.validate(doc, sat_schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioParseError(f"{path}: field {where}: {exc.message}") from None
    sat = satellite_from_dict(doc)
    problems = satellite_violations(sat)
    if problems:
        raise ScenarioValidationError(problems)
    return sat

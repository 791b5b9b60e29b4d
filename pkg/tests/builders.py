"""Small constructors for in-memory test scenarios."""
import math
from pathlib import Path

from fedsat.geometry import FieldOfView, GroundPoint
from fedsat.orbit import OrbitalElements
from fedsat.scenario import (
    AccessMode,
    DataCollectionPlatform,
    GroundStation,
    Satellite,
    Scenario,
    Thresholds,
    TimeGrid,
)

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"
R_EARTH = 6378.137


def make_sat(
    sat_id="SAT-1",
    alt_km=700.0,
    inc_deg=98.0,
    raan_deg=0.0,
    ma_deg=0.0,
    ecc=0.0,
    mode=AccessMode.BENT_PIPE,
    storage=0.0,
    half_angle_deg=65.0,
    ground_half_angle_deg=65.0,
    dedicated=True,
    engagement=1.0,
    power=1.0,
    downlink_bps=1e6,
    uplink_bps=4.8e3,
    duty_phase_s=0.0,
    a_km=None,
):
    return Satellite(
        id=sat_id,
        elements=OrbitalElements(
            semi_major_axis_km=a_km if a_km is not None else R_EARTH + alt_km,
            eccentricity=ecc,
            inclination_rad=math.radians(inc_deg),
            raan_rad=math.radians(raan_deg),
            arg_perigee_rad=0.0,
            mean_anomaly_epoch_rad=math.radians(ma_deg),
        ),
        fov_dcp=FieldOfView(math.radians(half_angle_deg), 0.0),
        fov_ground=FieldOfView(math.radians(ground_half_angle_deg), math.radians(5.0)),
        access_mode=mode,
        storage_capacity_bytes=storage,
        downlink_rate_bps=downlink_bps,
        dcp_uplink_rate_bps=uplink_bps,
        dedicated=dedicated,
        engagement_fraction=engagement,
        peak_power_w=power,
        duty_phase_s=duty_phase_s,
    )


def make_dcp(dcp_id, lat, lon, data=1e5, revisit=3600.0):
    return DataCollectionPlatform(dcp_id, GroundPoint.from_degrees(lat, lon), data, revisit)


def make_gs(gs_id, lat, lon, min_el_deg=5.0, federated=True):
    return GroundStation(gs_id, GroundPoint.from_degrees(lat, lon), math.radians(min_el_deg), federated)


def make_scenario(sats, dcps, stations, end_s=86400.0, step_s=10.0, **thresholds):
    return Scenario(tuple(sats), tuple(dcps), tuple(stations), TimeGrid(end_s=end_s, step_s=step_s),
                    Thresholds(**thresholds))

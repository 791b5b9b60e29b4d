"""Satellite-to-ground visibility on a spherical Earth.

All predicates work from the spherical triangle formed by the Earth's
centre, the satellite and the ground target. With ``lam`` the central angle
between the sub-satellite point and the target and ``r`` the orbital radius:

* elevation at the target: ``atan2(cos lam - R/r, sin lam)``
* nadir angle at the satellite: ``atan2(R sin lam, r - R cos lam)``

Scalar functions use :mod:`math`; the ``*_array`` variants are their numpy
counterparts used by the access engine over whole time grids.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fedsat.orbit import EARTH, SatelliteState


@dataclass(frozen=True)
class GroundPoint:
    lat_rad: float
    lon_rad: float

    @classmethod
    def from_degrees(cls, lat_deg: float, lon_deg: float) -> GroundPoint:
        lon = math.radians(lon_deg)
        # keep lon in [-pi, pi)
        lon = (lon + math.pi) % (2.0 * math.pi) - math.pi
        return cls(math.radians(lat_deg), lon)

    def violations(self) -> list[str]:
        problems = []
        if not (math.isfinite(self.lat_rad) and -math.pi / 2 <= self.lat_rad <= math.pi / 2):
            problems.append("latitude_range")
        if not (math.isfinite(self.lon_rad) and -math.pi <= self.lon_rad < math.pi):
            problems.append("longitude_range")
        return problems


@dataclass(frozen=True)
class FieldOfView:
    """Nadir-pointing cone plus a minimum elevation seen from the target."""

    half_angle_rad: float
    min_elevation_rad: float = 0.0

    def violations(self) -> list[str]:
        problems = []
        if not 0.0 <= self.half_angle_rad <= math.pi / 2:
            problems.append("fov_half_angle_range")
        if not 0.0 <= self.min_elevation_rad < math.pi / 2:
            problems.append("fov_min_elevation_range")
        return problems


def central_angle(a: GroundPoint, b: GroundPoint) -> float:
    """Great-circle angle between two ground points (haversine form)."""
    return central_angle_array(a.lat_rad, a.lon_rad, b.lat_rad, b.lon_rad, xp=math)


def central_angle_array(lat1, lon1, lat2, lon2, xp=np):
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    h = xp.sin(dlat / 2) ** 2 + xp.cos(lat1) * xp.cos(lat2) * xp.sin(dlon / 2) ** 2
    if xp is math:
        h = min(1.0, max(0.0, h))
        return 2.0 * math.asin(math.sqrt(h))
    return 2.0 * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def _subsatellite_point(state: SatelliteState) -> GroundPoint:
    return GroundPoint(state.subsatellite_lat_rad, state.subsatellite_lon_rad)


def elevation_from_central_angle(central: float, radius_km: float, earth_radius_km: float = EARTH.radius_km) -> float:
    return math.atan2(math.cos(central) - earth_radius_km / radius_km, math.sin(central))


def nadir_from_central_angle(central: float, radius_km: float, earth_radius_km: float = EARTH.radius_km) -> float:
    return math.atan2(earth_radius_km * math.sin(central), radius_km - earth_radius_km * math.cos(central))


def elevation_angle(state: SatelliteState, target: GroundPoint) -> float:
    """Elevation of the satellite above the target's local horizon (rad)."""
    lam = central_angle(_subsatellite_point(state), target)
    return elevation_from_central_angle(lam, state.radius_km)


def nadir_angle(state: SatelliteState, target: GroundPoint) -> float:
    lam = central_angle(_subsatellite_point(state), target)
    return nadir_from_central_angle(lam, state.radius_km)


def in_fov(state: SatelliteState, target: GroundPoint, fov: FieldOfView) -> bool:
    lam = central_angle(_subsatellite_point(state), target)
    r = state.radius_km
    elevation = elevation_from_central_angle(lam, r)
    if elevation < 0.0 or elevation < fov.min_elevation_rad:
        return False
    return nadir_from_central_angle(lam, r) <= fov.half_angle_rad


def in_fov_array(
    lat_rad: np.ndarray,
    lon_rad: np.ndarray,
    radius_km: np.ndarray,
    target: GroundPoint,
    fov: FieldOfView,
    earth_radius_km: float = EARTH.radius_km,
) -> np.ndarray:
    """Vectorized :func:`in_fov` over arrays of sub-satellite points."""
    lam = central_angle_array(lat_rad, lon_rad, target.lat_rad, target.lon_rad)
    elevation = np.arctan2(np.cos(lam) - earth_radius_km / radius_km, np.sin(lam))
    nadir = np.arctan2(earth_radius_km * np.sin(lam), radius_km - earth_radius_km * np.cos(lam))
    return (elevation >= 0.0) & (elevation >= fov.min_elevation_rad) & (nadir <= fov.half_angle_rad)

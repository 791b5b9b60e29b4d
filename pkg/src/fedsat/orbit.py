"""Two-body Keplerian propagation on a spherical, rotating Earth.

Time is measured in seconds from scenario start. The inertial and
Earth-fixed frames are aligned at t = 0, so the Earth-fixed position is the
inertial one rotated by ``-omega_earth * t`` about the z axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from fedsat.scenario import TimeGrid

TWO_PI = 2.0 * math.pi
KEPLER_TOL = 1e-10
KEPLER_MAX_ITER = 50


@dataclass(frozen=True)
class EarthModel:
    radius_km: float = 6378.137
    mu_km3_s2: float = 398600.4418
    rotation_rate_rad_s: float = 7.2921159e-5


EARTH = EarthModel()


class KeplerConvergenceError(RuntimeError):
    """Newton iteration on Kepler's equation did not reach tolerance."""

    def __init__(self, mean_anomaly: float, eccentricity: float, residual: float):
        self.mean_anomaly = mean_anomaly
        self.eccentricity = eccentricity
        self.residual = residual
        super().__init__(
            f"Kepler solver did not converge for M={mean_anomaly!r}, "
            f"e={eccentricity!r}: residual {residual:.3e} rad"
        )


def normalize_angle(angle: float) -> float:
    """Wrap an angle into [0, 2*pi)."""
    wrapped = math.fmod(angle, TWO_PI)
    if wrapped < 0.0:
        wrapped += TWO_PI
    # fmod of a tiny negative number can round back up to exactly 2*pi
    return 0.0 if wrapped >= TWO_PI else wrapped


@dataclass(frozen=True)
class OrbitalElements:
    """Classical elements at ``epoch`` (seconds since scenario start).

    Angles are wrapped into [0, 2*pi) on construction. The remaining
    invariants are reported by :meth:`violations` rather than raised, so a
    scenario loader can collect every problem at once.
    """

    semi_major_axis_km: float
    eccentricity: float
    inclination_rad: float
    raan_rad: float
    arg_perigee_rad: float
    mean_anomaly_epoch_rad: float
    epoch: float = 0.0

    def __post_init__(self):
        for name in ("inclination_rad", "raan_rad", "arg_perigee_rad", "mean_anomaly_epoch_rad"):
            value = getattr(self, name)
            if math.isfinite(value):
                object.__setattr__(self, name, normalize_angle(value))

    def violations(self, earth: EarthModel = EARTH) -> list[str]:
        problems = []
        values = (
            self.semi_major_axis_km,
            self.eccentricity,
            self.inclination_rad,
            self.raan_rad,
            self.arg_perigee_rad,
            self.mean_anomaly_epoch_rad,
            self.epoch,
        )
        if not all(math.isfinite(v) for v in values):
            return ["elements_finite"]
        if not 0.0 <= self.eccentricity < 1.0:
            problems.append("eccentricity_range")
        elif self.perigee_radius_km <= earth.radius_km:
            problems.append("perigee_above_surface")
        if self.inclination_rad > math.pi:
            problems.append("inclination_range")
        return problems

    @property
    def perigee_radius_km(self) -> float:
        return self.semi_major_axis_km * (1.0 - self.eccentricity)

    def validate(self) -> None:
        problems = self.violations()
        if problems:
            raise ValueError(f"invalid orbital elements ({', '.join(problems)}): {self}")


@dataclass(frozen=True)
class SatelliteState:
    time_s: float
    position_ecef_km: np.ndarray = field(repr=False)
    subsatellite_lat_rad: float
    subsatellite_lon_rad: float
    altitude_km: float

    @property
    def radius_km(self) -> float:
        return EARTH.radius_km + self.altitude_km

    def __eq__(self, other):
        if not isinstance(other, SatelliteState):
            return NotImplemented
        return (
            self.time_s == other.time_s
            and np.array_equal(self.position_ecef_km, other.position_ecef_km)
            and self.subsatellite_lat_rad == other.subsatellite_lat_rad
            and self.subsatellite_lon_rad == other.subsatellite_lon_rad
            and self.altitude_km == other.altitude_km
        )

    __hash__ = None


def solve_kepler(mean_anomaly_rad: float, eccentricity: float) -> float:
    """Solve ``E - e sin E = M`` for the eccentric anomaly.

    Newton-Raphson from ``E0 = M`` on the mean anomaly reduced to
    [-pi, pi]; the root is kept inside the bracket ``[M - e, M + e]`` and a
    bisection step replaces any Newton step that would leave it. The result
    is shifted back to the revolution of the input.
    """
    if not 0.0 <= eccentricity < 1.0:
        raise ValueError(f"eccentricity must be in [0, 1), got {eccentricity!r}")
    if not math.isfinite(mean_anomaly_rad):
        raise ValueError(f"mean anomaly must be finite, got {mean_anomaly_rad!r}")
    e_arr = np.array([eccentricity], dtype=float)
    m_arr = np.array([mean_anomaly_rad], dtype=float)
    return float(_solve_kepler_array(m_arr, e_arr)[0])


def _solve_kepler_array(mean_anomaly: np.ndarray, eccentricity: np.ndarray) -> np.ndarray:
    # Each element iterates until its own convergence and is then frozen, so
    # a batch result is bit-identical to solving the element alone.
    m = np.asarray(mean_anomaly, dtype=float)
    e = np.broadcast_to(np.asarray(eccentricity, dtype=float), m.shape)
    m_red = np.remainder(m + math.pi, TWO_PI) - math.pi
    shift = m - m_red
    lo = m_red - e
    hi = m_red + e
    ecc = m_red.copy()
    residual = ecc - e * np.sin(ecc) - m_red
    active = np.abs(residual) >= KEPLER_TOL
    for _ in range(KEPLER_MAX_ITER):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        E = ecc[idx]
        ee = e[idx]
        f = residual[idx]
        lo_i = np.where(f < 0.0, E, lo[idx])
        hi_i = np.where(f > 0.0, E, hi[idx])
        step = E - f / (1.0 - ee * np.cos(E))
        outside = (step <= lo_i) | (step >= hi_i)
        step = np.where(outside, 0.5 * (lo_i + hi_i), step)
        lo[idx] = lo_i
        hi[idx] = hi_i
        ecc[idx] = step
        res = step - ee * np.sin(step) - m_red[idx]
        residual[idx] = res
        active[idx] = np.abs(res) >= KEPLER_TOL
    if active.any():
        i = int(np.nonzero(active)[0][0])
        raise KeplerConvergenceError(float(m[i]), float(e[i]), float(abs(residual[i])))
    return ecc + shift


def orbital_period(elements: OrbitalElements | float, earth: EarthModel = EARTH) -> float:
    """Keplerian period in seconds; accepts elements or a bare semi-major axis (km)."""
    a = getattr(elements, "semi_major_axis_km", elements)
    return TWO_PI * math.sqrt(a**3 / earth.mu_km3_s2)


def _perifocal_to_inertial(el: OrbitalElements) -> np.ndarray:
    cO, sO = math.cos(el.raan_rad), math.sin(el.raan_rad)
    cw, sw = math.cos(el.arg_perigee_rad), math.sin(el.arg_perigee_rad)
    ci, si = math.cos(el.inclination_rad), math.sin(el.inclination_rad)
    return np.array(
        [
            [cO * cw - sO * sw * ci, -cO * sw - sO * cw * ci, sO * si],
            [sO * cw + cO * sw * ci, -sO * sw + cO * cw * ci, -cO * si],
            [sw * si, cw * si, ci],
        ]
    )


def eccentric_anomaly_at(elements: OrbitalElements, times_s, earth: EarthModel = EARTH) -> np.ndarray:
    t = np.atleast_1d(np.asarray(times_s, dtype=float))
    n = TWO_PI / orbital_period(elements, earth)
    mean = elements.mean_anomaly_epoch_rad + n * (t - elements.epoch)
    return _solve_kepler_array(mean, np.full(t.shape, elements.eccentricity))


def inertial_positions(elements: OrbitalElements, times_s, earth: EarthModel = EARTH) -> np.ndarray:
    """Inertial position vectors (km), shape (n, 3)."""
    a, e = elements.semi_major_axis_km, elements.eccentricity
    E = eccentric_anomaly_at(elements, times_s, earth)
    cosE, sinE = np.cos(E), np.sin(E)
    x_pf = a * (cosE - e)
    y_pf = a * math.sqrt(1.0 - e * e) * sinE
    rot = _perifocal_to_inertial(elements)
    return np.outer(x_pf, rot[:, 0]) + np.outer(y_pf, rot[:, 1])


def propagate_states(elements: OrbitalElements, times_s, earth: EarthModel = EARTH) -> dict[str, np.ndarray]:
    """Array form of :func:`propagate_to`.

    Returns a dict with ``time_s``, ``position_ecef_km`` (n, 3), ``lat_rad``,
    ``lon_rad``, ``radius_km`` and ``altitude_km`` arrays.
    """
    elements.validate()
    t = np.atleast_1d(np.asarray(times_s, dtype=float))
    if t.size and (t < 0.0).any():
        raise ValueError("propagation times must be >= 0")
    eci = inertial_positions(elements, t, earth)
    theta = earth.rotation_rate_rad_s * t
    c, s = np.cos(theta), np.sin(theta)
    x = c * eci[:, 0] + s * eci[:, 1]
    y = -s * eci[:, 0] + c * eci[:, 1]
    z = eci[:, 2]
    ecef = np.column_stack([x, y, z])
    radius = np.sqrt(x * x + y * y + z * z)
    lat = np.arcsin(np.clip(z / radius, -1.0, 1.0))
    lon = np.arctan2(y, x)
    return {
        "time_s": t,
        "position_ecef_km": ecef,
        "lat_rad": lat,
        "lon_rad": lon,
        "radius_km": radius,
        "altitude_km": radius - earth.radius_km,
    }


def _states_from_arrays(arrays: dict[str, np.ndarray]) -> list[SatelliteState]:
    return [
        SatelliteState(
            time_s=float(arrays["time_s"][k]),
            position_ecef_km=arrays["position_ecef_km"][k].copy(),
            subsatellite_lat_rad=float(arrays["lat_rad"][k]),
            subsatellite_lon_rad=float(arrays["lon_rad"][k]),
            altitude_km=float(arrays["altitude_km"][k]),
        )
        for k in range(arrays["time_s"].shape[0])
    ]


def propagate_to(elements: OrbitalElements, time_s: float, earth: EarthModel = EARTH) -> SatelliteState:
    """Satellite state at ``time_s`` seconds after scenario start."""
    if time_s < 0:
        raise ValueError(f"time_s must be >= 0, got {time_s!r}")
    return _states_from_arrays(propagate_states(elements, [time_s], earth))[0]


def ground_track(elements: OrbitalElements, grid: TimeGrid, earth: EarthModel = EARTH) -> list[SatelliteState]:
    times = grid.times()
    if times.size == 0:
        return []
    return _states_from_arrays(propagate_states(elements, times, earth))

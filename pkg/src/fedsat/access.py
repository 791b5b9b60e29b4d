"""Access constraint engine over the scenario time grid.

A satellite/target pair is *satisfied* at an instant when every constraint
of the satellite's access regime holds there:

* bent-pipe satellite x DCP: DCP in the payload FOV, at least one ground
  station in view at the same instant, engagement duty cycle active;
* store-and-forward satellite x DCP: DCP in the payload FOV, duty cycle
  active, free storage at the start of the step;
* any satellite x ground station: station in view above its elevation mask.

Access windows are the maximal runs of satisfied instants. Instant ``t_k``
stands for the interval ``[t_k, t_k + step)``, so a window covering
instants ``i..j`` is ``[t_i, t_j + step)``.

Storage bookkeeping for store-and-forward satellites runs along the grid:
in each step every active DCP contact (in DCP id order) uploads
``min(pass data left, uplink_rate * step, free storage)``, then any ground
contact drains ``min(occupancy, downlink_rate * step)``. A DCP offers its
``data_per_pass_bytes`` afresh at the start of every window.
"""
from __future__ import annotations

import enum
import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from fedsat.geometry import FieldOfView, in_fov, in_fov_array
from fedsat.orbit import orbital_period, propagate_states, propagate_to
from fedsat.scenario import Satellite, Scenario, TimeGrid


class TargetKind(str, enum.Enum):
    DCP = "dcp"
    GROUND_STATION = "ground_station"


class WindowKind(str, enum.Enum):
    DCP_CONTACT = "dcp_contact"
    GROUND_CONTACT = "ground_contact"
    SIMULTANEOUS_CONTACT = "simultaneous_contact"


DCP_KINDS = (WindowKind.DCP_CONTACT, WindowKind.SIMULTANEOUS_CONTACT)


@dataclass(frozen=True)
class InstantSolution:
    time_s: float
    satellite_id: str
    target_id: str
    target_kind: TargetKind
    satisfied: bool


@dataclass(frozen=True, order=True)
class AccessWindow:
    satellite_id: str
    target_id: str
    start_s: float
    end_s: float
    kind: WindowKind

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass
class StorageTimeline:
    """Per-instant storage ledger of one store-and-forward satellite.

    ``occupancy_bytes[k]`` is the content after step ``k``; storage is empty
    before the first step.
    """

    satellite_id: str
    capacity_bytes: float
    occupancy_bytes: np.ndarray
    ingested_bytes: np.ndarray
    drained_bytes: np.ndarray
    collected_bytes_total: float = 0.0
    downlinked_bytes_total: float = 0.0
    dropped_bytes_total: float = 0.0
    # pass data left over when a window closed for reasons other than storage
    uncollected_bytes_total: float = 0.0

    @property
    def peak_bytes(self) -> float:
        return float(self.occupancy_bytes.max()) if self.occupancy_bytes.size else 0.0

    def free_before(self, k: int) -> float:
        """Free storage at the start of step ``k``."""
        return self.capacity_bytes - (float(self.occupancy_bytes[k - 1]) if k > 0 else 0.0)


@dataclass
class SatelliteGeometry:
    """Geometric visibility masks of one satellite over the grid."""

    dcp: dict[str, np.ndarray]
    ground: dict[str, np.ndarray]

    @property
    def any_ground(self) -> np.ndarray:
        masks = list(self.ground.values())
        if not masks:
            return np.zeros(0, dtype=bool)
        return np.logical_or.reduce(masks)


@dataclass
class AccessResult:
    windows: list[AccessWindow]
    storage: dict[str, StorageTimeline]
    satisfied: dict[tuple[str, str], np.ndarray] = field(repr=False)


def ground_fov(sat: Satellite, station) -> FieldOfView:
    return FieldOfView(
        sat.fov_ground.half_angle_rad,
        max(sat.fov_ground.min_elevation_rad, station.min_elevation_rad),
    )


def duty_cycle_active(sat: Satellite, times_s, planning_period_s: float) -> np.ndarray:
    """Hosted-payload availability: the first ``engagement_fraction`` of every
    planning period, shifted by ``duty_phase_s``. Dedicated satellites are
    always available."""
    t = np.atleast_1d(np.asarray(times_s, dtype=float))
    if sat.dedicated or sat.engagement_fraction >= 1.0:
        return np.ones(t.shape, dtype=bool)
    phase = np.remainder(t - sat.duty_phase_s, planning_period_s)
    return phase < sat.engagement_fraction * planning_period_s


def visibility_masks(scenario: Scenario) -> dict[str, SatelliteGeometry]:
    """Geometric in-FOV masks for every satellite/target pair."""
    times = scenario.grid.times()
    out = {}
    for sat in scenario.satellites:
        st = propagate_states(sat.elements, times)
        lat, lon, r = st["lat_rad"], st["lon_rad"], st["radius_km"]
        out[sat.id] = SatelliteGeometry(
            dcp={d.id: in_fov_array(lat, lon, r, d.location, sat.fov_dcp) for d in scenario.dcps},
            ground={g.id: in_fov_array(lat, lon, r, g.location, ground_fov(sat, g)) for g in scenario.ground_stations},
        )
    return out


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Inclusive index ranges of the True runs of ``mask``."""
    if mask.size == 0:
        return []
    padded = np.concatenate([[False], mask, [False]])
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    return [(int(a), int(b) - 1) for a, b in zip(edges[::2], edges[1::2])]


def windows_from_mask(mask, grid: TimeGrid, satellite_id: str, target_id: str, kind: WindowKind) -> list[AccessWindow]:
    times = grid.times()
    return [
        AccessWindow(satellite_id, target_id, float(times[i]), float(times[j] + grid.step_s), kind)
        for i, j in _runs(np.asarray(mask, dtype=bool))
    ]


def window_index_range(window: AccessWindow, grid: TimeGrid) -> tuple[int, int]:
    """Half-open grid index range ``[lo, hi)`` of instants inside ``window``."""
    lo = math.ceil((window.start_s - grid.start_s) / grid.step_s - 1e-9)
    hi = math.ceil((window.end_s - grid.start_s) / grid.step_s - 1e-9)
    return max(lo, 0), min(hi, grid.n_instants)


def window_mask(windows, grid: TimeGrid) -> np.ndarray:
    """Union of ``windows`` as a boolean mask over ``grid``."""
    mask = np.zeros(grid.n_instants, dtype=bool)
    for w in windows:
        lo, hi = window_index_range(w, grid)
        if hi > lo:
            mask[lo:hi] = True
    return mask


def _storage_ledger(
    sat: Satellite,
    scenario: Scenario,
    candidate: Mapping[str, np.ndarray],
    ground_any: np.ndarray,
    gate: bool,
) -> tuple[dict[str, np.ndarray], StorageTimeline]:
    """Sequential storage bookkeeping for one store-and-forward satellite.

    With ``gate`` set, a DCP contact is only satisfied while free storage at
    step start is positive; otherwise ``candidate`` is taken as the already
    satisfied set (replay of given windows).
    """
    n = scenario.grid.n_instants
    step = scenario.grid.step_s
    capacity = float(sat.storage_capacity_bytes)
    uplink = sat.dcp_uplink_rate_bps / 8.0 * step
    downlink = sat.downlink_rate_bps / 8.0 * step
    data = {d.id: float(d.data_per_pass_bytes) for d in scenario.dcps}
    dcp_ids = sorted(candidate)

    satisfied = {d: np.zeros(n, dtype=bool) for d in dcp_ids}
    occupancy = np.zeros(n)
    ingested = np.zeros(n)
    drained = np.zeros(n)
    remaining = dict.fromkeys(dcp_ids, 0.0)
    limited = dict.fromkeys(dcp_ids, False)
    open_ = dict.fromkeys(dcp_ids, False)
    dropped = uncollected = 0.0

    def close(d):
        nonlocal dropped, uncollected
        if limited[d]:
            dropped += remaining[d]
        else:
            uncollected += remaining[d]
        remaining[d] = 0.0
        limited[d] = False
        open_[d] = False

    occ = 0.0
    for k in range(n):
        free = capacity - occ
        for d in dcp_ids:
            on = bool(candidate[d][k]) and (free > 0.0 if gate else True)
            satisfied[d][k] = on
            if open_[d] and candidate[d][k] and not on:
                limited[d] = True  # closed by full storage
            if open_[d] and not on:
                close(d)
            elif on and not open_[d]:
                open_[d] = True
                remaining[d] = data[d]
        took = 0.0
        for d in dcp_ids:
            if not satisfied[d][k]:
                continue
            room = free - took
            want = min(remaining[d], uplink)
            amount = min(want, room)
            if room < want:
                limited[d] = True
            amount = max(amount, 0.0)
            remaining[d] -= amount
            took += amount
        occ += took
        out = min(occ, downlink) if ground_any.size and ground_any[k] else 0.0
        occ -= out
        occupancy[k] = occ
        ingested[k] = took
        drained[k] = out
    for d in dcp_ids:
        if open_[d]:
            close(d)

    timeline = StorageTimeline(
        satellite_id=sat.id,
        capacity_bytes=capacity,
        occupancy_bytes=occupancy,
        ingested_bytes=ingested,
        drained_bytes=drained,
        collected_bytes_total=float(ingested.sum()),
        downlinked_bytes_total=float(drained.sum()),
        dropped_bytes_total=dropped,
        uncollected_bytes_total=uncollected,
    )
    return satisfied, timeline


def solve_access(scenario: Scenario, geometry: Mapping[str, SatelliteGeometry] | None = None) -> AccessResult:
    """Satisfied masks, access windows and storage ledgers for every satellite.

    ``geometry`` may be passed in to reuse visibility masks across runs that
    differ only in duty-cycle settings.
    """
    if geometry is None:
        geometry = visibility_masks(scenario)
    grid = scenario.grid
    times = grid.times()
    period = scenario.thresholds.planning_period_s
    windows: list[AccessWindow] = []
    storage: dict[str, StorageTimeline] = {}
    satisfied: dict[tuple[str, str], np.ndarray] = {}

    for sat in scenario.satellites:
        geo = geometry[sat.id]
        duty = duty_cycle_active(sat, times, period)
        ground_any = geo.any_ground if geo.ground else np.zeros(times.size, dtype=bool)
        if sat.store_and_forward:
            candidate = {d: geo.dcp[d] & duty for d in geo.dcp}
            dcp_sat, storage[sat.id] = _storage_ledger(sat, scenario, candidate, ground_any, gate=True)
            dcp_kind = WindowKind.DCP_CONTACT
        else:
            dcp_sat = {d: geo.dcp[d] & duty & ground_any for d in geo.dcp}
            dcp_kind = WindowKind.SIMULTANEOUS_CONTACT
        for dcp_id, mask in dcp_sat.items():
            satisfied[(sat.id, dcp_id)] = mask
            windows += windows_from_mask(mask, grid, sat.id, dcp_id, dcp_kind)
        for gs_id, mask in geo.ground.items():
            satisfied[(sat.id, gs_id)] = mask
            windows += windows_from_mask(mask, grid, sat.id, gs_id, WindowKind.GROUND_CONTACT)

    windows.sort()
    return AccessResult(windows, storage, satisfied)


def access_windows(scenario: Scenario) -> list[AccessWindow]:
    """Maximal access windows ordered by (satellite id, target id, start)."""
    return solve_access(scenario).windows


def simulate_store_and_forward(scenario: Scenario, windows: list[AccessWindow]) -> dict[str, StorageTimeline]:
    """Replay the storage ledger of every store-and-forward satellite from its windows."""
    grid = scenario.grid
    by_sat: dict[str, list[AccessWindow]] = {}
    for w in windows:
        by_sat.setdefault(w.satellite_id, []).append(w)
    out = {}
    for sat in scenario.satellites:
        if not sat.store_and_forward:
            continue
        mine = by_sat.get(sat.id, [])
        candidate = {
            d.id: window_mask([w for w in mine if w.target_id == d.id and w.kind in DCP_KINDS], grid)
            for d in scenario.dcps
        }
        ground_any = window_mask([w for w in mine if w.kind is WindowKind.GROUND_CONTACT], grid)
        _, out[sat.id] = _storage_ledger(sat, scenario, candidate, ground_any, gate=False)
    return out


def instant_solutions(
    scenario: Scenario,
    t: float,
    free_storage: Mapping[str, float] | None = None,
) -> list[InstantSolution]:
    """Evaluate every satellite/target constraint at one grid instant.

    Geometry is recomputed pointwise. ``free_storage`` gives each
    store-and-forward satellite's free bytes at the start of the step; when
    omitted it is taken from a storage simulation over the grid.
    """
    k = scenario.grid.index_of(t)
    t = float(scenario.grid.times()[k])
    if free_storage is None:
        storage = solve_access(scenario).storage
        free_storage = {sid: tl.free_before(k) for sid, tl in storage.items()}
    period = scenario.thresholds.planning_period_s
    out = []
    for sat in scenario.satellites:
        state = propagate_to(sat.elements, t)
        ground_ok = {g.id: in_fov(state, g.location, ground_fov(sat, g)) for g in scenario.ground_stations}
        duty = bool(duty_cycle_active(sat, [t], period)[0])
        for dcp in scenario.dcps:
            ok = in_fov(state, dcp.location, sat.fov_dcp) and duty
            if sat.store_and_forward:
                ok = ok and free_storage.get(sat.id, 0.0) > 0.0
            else:
                ok = ok and any(ground_ok.values())
            out.append(InstantSolution(t, sat.id, dcp.id, TargetKind.DCP, ok))
        for gs in scenario.ground_stations:
            out.append(InstantSolution(t, sat.id, gs.id, TargetKind.GROUND_STATION, ground_ok[gs.id]))
    return out


def downlink_sufficiency(
    scenario: Scenario,
    windows: list[AccessWindow],
    storage: Mapping[str, StorageTimeline],
    grid: TimeGrid | None = None,
) -> dict[str, bool]:
    """Whether each satellite's ground contacts can drain what it collects.

    The horizon (or ``grid``, a sub-range of the scenario grid) is cut into
    consecutive chunks of one orbital period; in each complete chunk the
    downlink capacity of the ground-contact instants must cover the bytes
    ingested. A trailing partial chunk is not judged, except when the
    horizon is shorter than one period and it is the only chunk. Bent-pipe
    satellites relay in real time and always pass.
    """
    full = scenario.grid
    grid = grid or full
    times = full.times()
    in_range = (times >= grid.start_s - 1e-9) & (times <= grid.end_s + 1e-9)
    result = {}
    for sat in scenario.satellites:
        timeline = storage.get(sat.id)
        if not sat.store_and_forward or timeline is None:
            result[sat.id] = True
            continue
        contact = window_mask(
            [w for w in windows if w.satellite_id == sat.id and w.kind is WindowKind.GROUND_CONTACT], full
        )
        period = orbital_period(sat.elements)
        chunk = np.floor((times - grid.start_s) / period).astype(int)
        complete = int(math.floor(grid.span_s / period + 1e-9))
        capacity_per_instant = sat.downlink_rate_bps / 8.0 * full.step_s
        ok = True
        for c in np.unique(chunk[in_range]):
            if complete and c >= complete:
                continue
            sel = in_range & (chunk == c)
            collected = float(timeline.ingested_bytes[sel].sum())
            capacity = float(contact[sel].sum()) * capacity_per_instant
            if capacity < collected:
                ok = False
                break
        result[sat.id] = ok
    return result

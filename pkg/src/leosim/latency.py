"""Multi-hop routing and propagation latency over a satellite shell.

Messages travel gateway -> satellite -> ... -> gateway.  With inter-satellite
links the message hops directly between satellites; without them every
satellite must bounce through a relay gateway on the ground before the next
satellite can take over.  Routing is greedy: each hop picks the visible
candidate whose radial projection is closest to the destination along the
destination's sphere, and only strictly forward moves are admissible, so a
walk can never stall or cycle.  Only propagation delay is modeled; queueing,
processing, and capacity effects are out of scope.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import ConfigurationError
from .geometry import (
    EARTH_RADIUS_KM,
    SPEED_OF_LIGHT_KM_S,
    SurfacePoint,
    segment_clears_sphere,
)
from .pointprocess import ShellSpec, shell_directions, uniform_directions
from .rng import RngStream, as_generator


class HopKind(Enum):
    GATEWAY = "gateway"
    SATELLITE = "satellite"
    RELAY_GATEWAY = "relay_gateway"


class DeliveryStatus(Enum):
    DELIVERED = "delivered"
    UNREACHABLE = "unreachable"


@dataclass(frozen=True)
class InterSatellite:
    """Satellites forward to each other directly."""


@dataclass(frozen=True)
class GwRelay:
    """No inter-satellite links: each satellite bounces through a ground relay.

    The relay field comes from exactly one source: explicit positions, a
    Poisson density per km^2, or a fixed global count placed area-uniformly.
    With no source given, a global count of 200 relays is assumed.
    """

    relay_positions: "tuple[SurfacePoint, ...] | None" = None
    relay_density_per_km2: "float | None" = None
    relay_count: "int | None" = None

    def __post_init__(self) -> None:
        given = [
            self.relay_positions is not None,
            self.relay_density_per_km2 is not None,
            self.relay_count is not None,
        ]
        if sum(given) > 1:
            raise ConfigurationError("give at most one relay source")
        if sum(given) == 0:
            object.__setattr__(self, "relay_count", 200)
        if self.relay_positions is not None:
            if len(self.relay_positions) == 0:
                raise ConfigurationError("relay_positions must be nonempty")
            object.__setattr__(self, "relay_positions", tuple(self.relay_positions))
        if self.relay_density_per_km2 is not None and not self.relay_density_per_km2 > 0:
            raise ConfigurationError("relay_density_per_km2 must be positive")
        if self.relay_count is not None and self.relay_count < 1:
            raise ConfigurationError("relay_count must be at least 1")


RoutingMode = "InterSatellite | GwRelay"


@dataclass(frozen=True)
class PathTrace:
    """A routed walk: nodes visited, per-hop chord distances, outcome.

    For an unreachable walk the nodes cover the traversed prefix and the
    latency is the prefix's propagation time.
    """

    nodes: "tuple[SurfacePoint, ...]"
    kinds: "tuple[HopKind, ...]"
    hop_distances_km: "tuple[float, ...]"
    status: DeliveryStatus

    def __post_init__(self) -> None:
        if len(self.nodes) != len(self.kinds):
            raise ConfigurationError("one kind per node")
        if len(self.hop_distances_km) != max(len(self.nodes) - 1, 0):
            raise ConfigurationError("one distance per hop")
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "kinds", tuple(self.kinds))
        object.__setattr__(
            self, "hop_distances_km", tuple(float(d) for d in self.hop_distances_km)
        )

    @property
    def delivered(self) -> bool:
        return self.status is DeliveryStatus.DELIVERED

    @property
    def total_latency_ms(self) -> float:
        return 1000.0 * sum(self.hop_distances_km) / SPEED_OF_LIGHT_KM_S


@dataclass(frozen=True)
class LatencyEstimate:
    """Delivered-only mean latency plus how often routing failed."""

    mean_ms: float
    stderr_ms: float
    unreachable_frac: float
    trials: int
    delivered: int


def _angles_to(dirs: np.ndarray, dst_dir: np.ndarray) -> np.ndarray:
    return np.arccos(np.clip(dirs @ dst_dir, -1.0, 1.0))


def _next_idx(cur_xyz, cur_ang, cand_dirs, cand_xyz, dst_dir, r_block):
    """Index of the admissible candidate with minimal remaining angle, or None.

    Admissible means visible from the current node and strictly closer to the
    destination (equal-distance moves would allow stalls).
    """
    if len(cand_dirs) == 0:
        return None
    visible = segment_clears_sphere(cur_xyz, cand_xyz, r_block)
    ang = _angles_to(cand_dirs, dst_dir)
    ok = visible & (ang < cur_ang)
    if not np.any(ok):
        return None
    return int(np.argmin(np.where(ok, ang, np.inf)))


def _descent_idx(cur_xyz, cur_ang, cand_dirs, cand_xyz, dst_dir, r_block):
    """The satellite's pick of ground relay: nearest admissible one.

    Association semantics: among relays that are visible and strictly closer
    to the destination, the satellite drops to the nearest.  A most-forward
    pick would make a relay bounce exactly as cheap as a direct
    inter-satellite hop (two maximal slants equal one maximal chord), erasing
    the cost of losing inter-satellite links.
    """
    if len(cand_dirs) == 0:
        return None
    visible = segment_clears_sphere(cur_xyz, cand_xyz, r_block)
    ang = _angles_to(cand_dirs, dst_dir)
    ok = visible & (ang < cur_ang)
    if not np.any(ok):
        return None
    dist = np.linalg.norm(cand_xyz - cur_xyz, axis=1)
    return int(np.argmin(np.where(ok, dist, np.inf)))


def next_hop(
    current: SurfacePoint,
    destination: SurfacePoint,
    candidates: "Sequence[SurfacePoint]",
    r_block: float = EARTH_RADIUS_KM,
) -> "SurfacePoint | None":
    """Greedy step: the visible candidate closest to the destination.

    Remaining distance is measured on the destination's sphere between the
    candidate's radial projection and the destination, and a candidate only
    qualifies when it strictly improves on the current node.
    """
    if len(candidates) == 0:
        return None
    dirs = np.stack([c.direction for c in candidates])
    radii = np.array([c.radius_km for c in candidates])
    j = _next_idx(
        current.xyz_km,
        float(_angles_to(current.direction, destination.direction)),
        dirs,
        dirs * radii[:, None],
        destination.direction,
        r_block,
    )
    return None if j is None else candidates[j]


def _route_arrays(src_dir, dst_dir, r_gw, sat_dirs, r_sat, relay_dirs, relay_radii, r_block):
    """Walk the greedy route on raw arrays.

    Returns (delivered, path, dists) where path is a list of
    (HopKind, xyz) pairs including the source, and dists the hop chords.
    """
    src_xyz = src_dir * r_gw
    dst_xyz = dst_dir * r_gw
    sat_xyz = sat_dirs * r_sat
    relay_xyz = None if relay_dirs is None else relay_dirs * relay_radii[:, None]

    path = [(HopKind.GATEWAY, src_xyz)]
    dists: "list[float]" = []
    cur_xyz, cur_ang = src_xyz, float(_angles_to(src_dir, dst_dir))

    def move(kind, xyz, ang):
        nonlocal cur_xyz, cur_ang
        dists.append(float(np.linalg.norm(xyz - cur_xyz)))
        path.append((kind, xyz))
        cur_xyz, cur_ang = xyz, ang

    j = _next_idx(cur_xyz, cur_ang, sat_dirs, sat_xyz, dst_dir, r_block)
    if j is None:
        return False, path, dists
    move(HopKind.SATELLITE, sat_xyz[j], float(_angles_to(sat_dirs[j], dst_dir)))

    # per-bounce strict progress caps the walk at one visit per satellite
    cap = len(sat_dirs) + (0 if relay_dirs is None else len(relay_dirs)) + 2
    for _ in range(cap):
        if segment_clears_sphere(cur_xyz, dst_xyz, r_block):
            move(HopKind.GATEWAY, dst_xyz, 0.0)
            return True, path, dists
        if relay_dirs is None:
            j = _next_idx(cur_xyz, cur_ang, sat_dirs, sat_xyz, dst_dir, r_block)
            if j is None:
                return False, path, dists
            move(HopKind.SATELLITE, sat_xyz[j], float(_angles_to(sat_dirs[j], dst_dir)))
        else:
            # the bounce: drop to the associated (nearest forward) relay,
            # which then hands off to the most forward satellite it can see
            g = _descent_idx(cur_xyz, cur_ang, relay_dirs, relay_xyz, dst_dir, r_block)
            if g is None:
                return False, path, dists
            move(HopKind.RELAY_GATEWAY, relay_xyz[g], float(_angles_to(relay_dirs[g], dst_dir)))
            j = _next_idx(cur_xyz, cur_ang, sat_dirs, sat_xyz, dst_dir, r_block)
            if j is None:
                return False, path, dists
            move(HopKind.SATELLITE, sat_xyz[j], float(_angles_to(sat_dirs[j], dst_dir)))
    return False, path, dists


def route(
    src_gw: SurfacePoint,
    dst_gw: SurfacePoint,
    satellites: "Sequence[SurfacePoint]",
    mode,
    r_block: float = EARTH_RADIUS_KM,
) -> PathTrace:
    """Route a message between two gateways; Unreachable is a value, not an error."""
    if np.linalg.norm(src_gw.xyz_km - dst_gw.xyz_km) == 0.0:
        raise ConfigurationError("source and destination gateways coincide")
    if len(satellites) > 0:
        sat_dirs = np.stack([s.direction for s in satellites])
        radii = np.array([s.radius_km for s in satellites])
        r_sat = float(radii[0])
        if np.any(np.abs(radii - r_sat) > 1e-9 * r_sat):
            raise ConfigurationError("satellites must share one shell radius")
    else:
        sat_dirs, r_sat = np.zeros((0, 3)), 1.0

    relay_dirs = relay_radii = None
    if isinstance(mode, GwRelay):
        if mode.relay_positions is None:
            raise ConfigurationError(
                "route needs concrete relay positions; sample the relay field first"
            )
        relay_dirs = np.stack([p.direction for p in mode.relay_positions])
        relay_radii = np.array([p.radius_km for p in mode.relay_positions])
    elif not isinstance(mode, InterSatellite):
        raise ConfigurationError("mode must be InterSatellite or GwRelay")

    delivered, path, dists = _route_arrays(
        src_gw.direction, dst_gw.direction, src_gw.radius_km,
        sat_dirs, r_sat, relay_dirs, relay_radii, r_block,
    )
    status = DeliveryStatus.DELIVERED if delivered else DeliveryStatus.UNREACHABLE
    nodes = tuple(SurfacePoint.from_vector(xyz.copy()) for _, xyz in path)
    kinds = tuple(kind for kind, _ in path)
    return PathTrace(nodes=nodes, kinds=kinds, hop_distances_km=tuple(dists), status=status)


def _relay_dirs_for_trial(mode: GwRelay, gen: np.random.Generator, r_earth_km: float):
    if mode.relay_positions is not None:
        dirs = np.stack([p.direction for p in mode.relay_positions])
        radii = np.array([p.radius_km for p in mode.relay_positions])
        return dirs, radii
    if mode.relay_count is not None:
        n = mode.relay_count
    else:
        mean = mode.relay_density_per_km2 * 4.0 * np.pi * r_earth_km**2
        n = int(gen.poisson(mean))
    dirs = uniform_directions(gen, n)
    return dirs, np.full(n, r_earth_km)


def average_latency(
    shell: ShellSpec,
    mode,
    trials: int,
    rng,
    r_earth_km: float = EARTH_RADIUS_KM,
) -> LatencyEstimate:
    """Mean delivered latency between antipodal gateways, fresh draws per trial.

    One gateway sits at each pole; the constellation (and relay field, when
    the mode needs one) is redrawn every trial.  Unreachable trials never
    enter the mean: they are reported as a separate fraction so latency and
    reachability effects stay distinguishable.
    """
    if trials < 1:
        raise ConfigurationError("trials must be at least 1")
    if not isinstance(mode, (InterSatellite, GwRelay)):
        raise ConfigurationError("mode must be InterSatellite or GwRelay")
    src_dir = np.array([0.0, 0.0, 1.0])
    dst_dir = np.array([0.0, 0.0, -1.0])
    r_sat = r_earth_km + shell.altitude_km

    latencies: "list[float]" = []
    for t in range(trials):
        gen = rng.substream(t).generator() if isinstance(rng, RngStream) else as_generator(rng)
        # satellites first, then relays: both modes see identical constellations
        sat_dirs = shell_directions(shell, gen)
        relay_dirs = relay_radii = None
        if isinstance(mode, GwRelay):
            relay_dirs, relay_radii = _relay_dirs_for_trial(mode, gen, r_earth_km)
        delivered, _, dists = _route_arrays(
            src_dir, dst_dir, r_earth_km, sat_dirs, r_sat, relay_dirs, relay_radii, r_earth_km
        )
        if delivered:
            latencies.append(1000.0 * sum(dists) / SPEED_OF_LIGHT_KM_S)

    k = len(latencies)
    if k == 0:
        return LatencyEstimate(float("nan"), float("nan"), 1.0, trials, 0)
    arr = np.asarray(latencies)
    stderr = float(arr.std(ddof=1) / np.sqrt(k)) if k > 1 else 0.0
    return LatencyEstimate(
        mean_ms=float(arr.mean()),
        stderr_ms=stderr,
        unreachable_frac=1.0 - k / trials,
        trials=trials,
        delivered=k,
    )


TRACE_CSV_HEADER = ("node_kind", "latitude_deg", "longitude_deg", "radius_km", "hop_km")


def trace_rows(trace: PathTrace) -> "list[tuple]":
    """One row per node; the source row carries a zero incoming hop."""
    hops = (0.0,) + trace.hop_distances_km
    return [
        (kind.value, node.latitude_deg, node.longitude_deg, node.radius_km, hop)
        for kind, node, hop in zip(trace.kinds, trace.nodes, hops)
    ]


def write_trace_csv(trace: PathTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_CSV_HEADER)
        writer.writerows(trace_rows(trace))

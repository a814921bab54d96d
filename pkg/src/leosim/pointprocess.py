"""Seeded samplers for satellite point processes on spheres and ground fields.

Three constellation models share one sphere: a binomial process (fixed
count, area-uniform), a Poisson process (random count), and a
nonhomogeneous process with a configurable latitude weight.  Ground
nodes (gateways, base stations) live on a planar field dense enough
that only the nearest-node distance law is ever materialized.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DomainError
from .geometry import EARTH_RADIUS_KM, SurfacePoint
from .rng import RngStream, as_generator

_LAT_GRID = np.linspace(-np.pi / 2, np.pi / 2, 20001)


@dataclass(frozen=True)
class Bpp:
    """Binomial point process: exactly ``count`` area-uniform points."""

    count: int

    def __post_init__(self) -> None:
        if self.count < 0:
            raise ConfigurationError("count must be >= 0")


@dataclass(frozen=True)
class Ppp:
    """Poisson point process, intensity given as per-km² density or total mean count."""

    density_per_km2: float | None = None
    mean_count: float | None = None

    def __post_init__(self) -> None:
        if (self.density_per_km2 is None) == (self.mean_count is None):
            raise ConfigurationError("give exactly one of density_per_km2 or mean_count")
        v = self.density_per_km2 if self.density_per_km2 is not None else self.mean_count
        if v < 0:
            raise ConfigurationError("intensity must be >= 0")


@dataclass(frozen=True)
class Nppp:
    """Fixed-count process with latitude weight ``latitude_density``.

    The sampled latitude marginal is proportional to
    latitude_density(lat) * cos(lat); the weight must be bounded on its
    support.  ``density_bound`` overrides the grid-estimated supremum for
    weights too spiky to bound numerically.
    """

    count: int
    latitude_density: Callable[[np.ndarray], np.ndarray]
    density_bound: float | None = None

    def __post_init__(self) -> None:
        if self.count < 0:
            raise ConfigurationError("count must be >= 0")


@dataclass(frozen=True)
class ShellSpec:
    """One satellite tier: point-process kind, altitude and transmit power."""

    kind: "Bpp | Ppp | Nppp"
    altitude_km: float
    tx_power_dbw: float
    tier_id: int = 0

    def __post_init__(self) -> None:
        if not self.altitude_km > 0:
            raise ConfigurationError("altitude must be positive")

    @property
    def shell_radius_km(self) -> float:
        return EARTH_RADIUS_KM + self.altitude_km


class NodeKind(Enum):
    GATEWAY = "gateway"
    BASE_STATION = "base_station"
    USER = "user"


@dataclass(frozen=True)
class GroundField:
    """Planar field of ground nodes with a homogeneous density."""

    density_per_km2: float
    node_kind: NodeKind = NodeKind.GATEWAY

    def __post_init__(self) -> None:
        if self.density_per_km2 < 0:
            raise ConfigurationError("density must be >= 0")


def uniform_directions(rng: "RngStream | np.random.Generator", n: int) -> np.ndarray:
    """n area-uniform unit vectors, shape (n, 3).

    Azimuth uniform on [0, 2pi), cosine of polar angle uniform on [-1, 1].
    """
    gen = as_generator(rng)
    z = gen.uniform(-1.0, 1.0, n)
    az = gen.uniform(0.0, 2.0 * np.pi, n)
    s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.stack([s * np.cos(az), s * np.sin(az), z], axis=1)


def sample_uniform_sphere(rng: "RngStream | np.random.Generator", radius: float) -> SurfacePoint:
    """One area-uniform point on the sphere of the given radius."""
    if not radius > 0:
        raise DomainError("radius must be positive")
    return SurfacePoint(uniform_directions(rng, 1)[0], radius)


def _points(directions: np.ndarray, radius: float) -> list[SurfacePoint]:
    return [SurfacePoint(d, radius) for d in directions]


def sample_bpp(
    spec: ShellSpec, rng: "RngStream | np.random.Generator", angle_uniform: bool = False
) -> list[SurfacePoint]:
    """Fixed-count constellation draw.

    ``angle_uniform=True`` switches to literal uniform-in-polar-angle
    sampling (pole-concentrated, for comparison only); the default is
    area-uniform.
    """
    if not isinstance(spec.kind, Bpp):
        raise ConfigurationError("sample_bpp requires a Bpp shell")
    gen = as_generator(rng)
    n = spec.kind.count
    if angle_uniform:
        theta = gen.uniform(0.0, np.pi, n)
        az = gen.uniform(0.0, 2.0 * np.pi, n)
        dirs = np.stack(
            [np.sin(theta) * np.cos(az), np.sin(theta) * np.sin(az), np.cos(theta)], axis=1
        )
    else:
        dirs = uniform_directions(gen, n)
    return _points(dirs, spec.shell_radius_km)


def ppp_mean_count(spec: ShellSpec) -> float:
    """Expected satellite count of a Poisson shell."""
    if not isinstance(spec.kind, Ppp):
        raise ConfigurationError("not a Ppp shell")
    if spec.kind.mean_count is not None:
        return float(spec.kind.mean_count)
    r = spec.shell_radius_km
    return float(spec.kind.density_per_km2 * 4.0 * np.pi * r * r)


def sample_ppp(spec: ShellSpec, rng: "RngStream | np.random.Generator") -> list[SurfacePoint]:
    """Poisson constellation draw: Poisson count, area-uniform locations."""
    gen = as_generator(rng)
    mean = ppp_mean_count(spec)
    n = int(gen.poisson(mean))
    return _points(uniform_directions(gen, n), spec.shell_radius_km)


def _weight_bound(kind: Nppp) -> float:
    explicit = kind.density_bound
    if explicit is None:
        # weights built by this module carry their exact supremum
        explicit = getattr(kind.latitude_density, "bound", None)
    if explicit is not None:
        if not explicit > 0:
            raise ConfigurationError("density_bound must be positive")
        return float(explicit)
    w = np.asarray(kind.latitude_density(_LAT_GRID), dtype=float)
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ConfigurationError("latitude_density must be finite and nonnegative")
    peak = float(w.max())
    if peak == 0.0:
        raise ConfigurationError("latitude_density integrates to zero")
    # grid max with headroom; smooth weights vary negligibly between grid nodes
    return peak * 1.01


def _nppp_directions(kind: Nppp, gen: np.random.Generator) -> np.ndarray:
    bound = _weight_bound(kind)
    need = kind.count
    out = np.empty((need, 3))
    got = 0
    batch = max(4 * need, 1024)
    while got < need:
        cand = uniform_directions(gen, batch)
        lat = np.arcsin(np.clip(cand[:, 2], -1.0, 1.0))
        w = np.asarray(kind.latitude_density(lat), dtype=float)
        if np.any(w < 0) or np.any(w > bound * (1 + 1e-9)):
            raise ConfigurationError("latitude_density exceeds its stated bound")
        keep = cand[gen.uniform(0.0, bound, batch) < w]
        take = min(need - got, len(keep))
        out[got : got + take] = keep[:take]
        got += take
    return out


def sample_nppp(spec: ShellSpec, rng: "RngStream | np.random.Generator") -> list[SurfacePoint]:
    """Fixed-count nonuniform draw by rejection against the area-uniform envelope."""
    if not isinstance(spec.kind, Nppp):
        raise ConfigurationError("sample_nppp requires an Nppp shell")
    return _points(_nppp_directions(spec.kind, as_generator(rng)), spec.shell_radius_km)


def shell_directions(spec: ShellSpec, rng: "RngStream | np.random.Generator") -> np.ndarray:
    """One constellation draw as a raw (n, 3) array of unit directions.

    Same sampling laws as the SurfacePoint-returning functions, without the
    per-point object overhead; the Monte Carlo engines run on this form.
    """
    gen = as_generator(rng)
    if isinstance(spec.kind, Bpp):
        return uniform_directions(gen, spec.kind.count)
    if isinstance(spec.kind, Ppp):
        return uniform_directions(gen, int(gen.poisson(ppp_mean_count(spec))))
    return _nppp_directions(spec.kind, gen)


def sample_shell(spec: ShellSpec, rng: "RngStream | np.random.Generator") -> list[SurfacePoint]:
    """Dispatch on the shell's point-process kind."""
    if isinstance(spec.kind, Bpp):
        return sample_bpp(spec, rng)
    if isinstance(spec.kind, Ppp):
        return sample_ppp(spec, rng)
    return sample_nppp(spec, rng)


def inclined_orbit_density(
    inclination_rad: float, softening_rad: float = np.deg2rad(0.25)
) -> Callable[[np.ndarray], np.ndarray]:
    """Latitude weight of a circular orbit at the given inclination.

    cos(lat) / sqrt(sin²(i) − sin²(lat)) on |lat| < i, zero outside.  The
    raw occupancy diverges at the inclination latitude; ``softening_rad``
    adds sin²(softening) under the root so the weight stays bounded, as
    rejection sampling requires.
    """
    if not 0 < inclination_rad <= np.pi / 2:
        raise ConfigurationError("inclination must lie in (0, pi/2]")
    if not softening_rad > 0:
        raise ConfigurationError("softening must be positive")
    sin2_i = np.sin(inclination_rad) ** 2
    soft2 = np.sin(softening_rad) ** 2

    def density(lat: np.ndarray) -> np.ndarray:
        lat = np.asarray(lat, dtype=float)
        s2 = np.sin(lat) ** 2
        inside = np.abs(lat) < inclination_rad
        val = np.where(inside, np.cos(lat) / np.sqrt(np.maximum(sin2_i - s2, 0.0) + soft2), 0.0)
        return val

    # the squared weight is monotone in sin²(lat), so its supremum sits at an
    # endpoint: either the equator or the inclination boundary
    at_zero = 1.0 / np.sqrt(sin2_i + soft2)
    at_edge = np.cos(inclination_rad) / np.sqrt(soft2)
    density.bound = float(max(at_zero, at_edge))
    return density


def sample_nearest_ground_distance(
    field: GroundField, rng: "RngStream | np.random.Generator"
) -> float:
    """Distance (km) from a point to the nearest node of the planar field."""
    return float(sample_nearest_ground_distances(field, rng, 1)[0])


def sample_nearest_ground_distances(
    field: GroundField, rng: "RngStream | np.random.Generator", n: int
) -> np.ndarray:
    """Vector form of the nearest-node distance law: sqrt(-ln U / (pi * density))."""
    if field.density_per_km2 == 0:
        raise ConfigurationError("no nearest node exists at zero density")
    gen = as_generator(rng)
    u = 1.0 - gen.random(n)  # in (0, 1], keeps the log finite
    return np.sqrt(-np.log(u) / (np.pi * field.density_per_km2))

"""Exact geometry on concentric spheres.

Slant ranges, zenith angles, spherical caps and earth-blockage visibility
for ground points and satellites.  All lengths are kilometres and all
angles radians; every function accepts scalars or numpy arrays and is
pure.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

EARTH_RADIUS_KM = 6371.0
SPEED_OF_LIGHT_KM_S = 299792.458

# Tolerated floating-point overshoot at domain boundaries (exact nadir,
# horizon, antipode) before an input is treated as out of domain.
_BOUNDARY_GUARD = 1e-12


def _guarded_arccos(x: np.ndarray, what: str) -> np.ndarray:
    if np.any(np.abs(x) > 1.0 + _BOUNDARY_GUARD):
        raise DomainError(f"{what}: cosine argument outside [-1, 1]")
    return np.arccos(np.clip(x, -1.0, 1.0))


def _ret(value: np.ndarray, template) -> "float | np.ndarray":
    """Return a python float for scalar inputs, an array otherwise."""
    if np.ndim(template) == 0:
        return float(value)
    return value


@dataclass(frozen=True)
class SurfacePoint:
    """A location on a sphere: unit direction from the center plus radius."""

    direction: np.ndarray
    radius_km: float

    def __post_init__(self) -> None:
        d = np.asarray(self.direction, dtype=float).reshape(3)
        if not np.all(np.isfinite(d)):
            raise DomainError("direction components must be finite")
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise DomainError("direction must be a unit vector (|v| = 1 within 1e-12)")
        if not (np.isfinite(self.radius_km) and self.radius_km > 0):
            raise DomainError("radius must be positive and finite")
        d.setflags(write=False)
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "radius_km", float(self.radius_km))

    @classmethod
    def from_vector(cls, xyz, radius_km: float | None = None) -> "SurfacePoint":
        """Build from any nonzero 3-vector; radius defaults to its norm."""
        v = np.asarray(xyz, dtype=float).reshape(3)
        n = np.linalg.norm(v)
        if n == 0.0 or not np.isfinite(n):
            raise DomainError("cannot normalize a zero or non-finite vector")
        return cls(v / n, float(n if radius_km is None else radius_km))

    @classmethod
    def from_latlon(cls, lat_deg: float, lon_deg: float, radius_km: float) -> "SurfacePoint":
        lat, lon = np.deg2rad(lat_deg), np.deg2rad(lon_deg)
        d = np.array([np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)])
        return cls(d, radius_km)

    @property
    def xyz_km(self) -> np.ndarray:
        return self.direction * self.radius_km

    @property
    def latitude_deg(self) -> float:
        return float(np.rad2deg(np.arcsin(np.clip(self.direction[2], -1.0, 1.0))))

    @property
    def longitude_deg(self) -> float:
        return float(np.rad2deg(np.arctan2(self.direction[1], self.direction[0])))


@dataclass(frozen=True)
class SphericalCap:
    """Cap of polar angle ``polar_angle`` around ``apex`` on a sphere."""

    apex: np.ndarray
    polar_angle: float
    sphere_radius: float

    def __post_init__(self) -> None:
        a = np.asarray(self.apex, dtype=float).reshape(3)
        if abs(np.linalg.norm(a) - 1.0) > 1e-12:
            raise DomainError("cap apex must be a unit vector")
        if not 0.0 <= self.polar_angle <= np.pi:
            raise DomainError("polar_angle must lie in [0, pi]")
        if self.sphere_radius <= 0:
            raise DomainError("sphere_radius must be positive")
        a.setflags(write=False)
        object.__setattr__(self, "apex", a)

    def area(self) -> float:
        return float(cap_area(self.sphere_radius, self.polar_angle))

    def contains(self, direction) -> "bool | np.ndarray":
        """Whether a unit direction (or an (n, 3) array of them) lies in the cap."""
        d = np.asarray(direction, dtype=float)
        inside = d @ self.apex >= np.cos(self.polar_angle)
        return bool(inside) if d.ndim == 1 else inside


def cap_area(sphere_radius, polar_angle) -> "float | np.ndarray":
    """Area of a spherical cap: 2*pi*r^2*(1 - cos(theta))."""
    r = np.asarray(sphere_radius, dtype=float)
    t = np.asarray(polar_angle, dtype=float)
    if np.any(r <= 0):
        raise DomainError("sphere_radius must be positive")
    if np.any((t < 0) | (t > np.pi)):
        raise DomainError("polar_angle must lie in [0, pi]")
    return _ret(2.0 * np.pi * r * r * (1.0 - np.cos(t)), np.broadcast(r, t).shape or polar_angle)


def slant_limits(r_earth: float, r_shell: float) -> tuple[float, float]:
    """Achievable slant-range interval [r_shell - r_earth, r_shell + r_earth]."""
    if not r_shell > r_earth > 0:
        raise DomainError("need r_shell > r_earth > 0")
    return r_shell - r_earth, r_shell + r_earth


def polar_angle_from_slant(r_earth: float, r_shell: float, slant) -> "float | np.ndarray":
    """Polar angle (at the sphere center) subtended by a ground-satellite slant range.

    Law of cosines in the center/ground/satellite triangle:
    cos(theta) = (r_E^2 + r_S^2 - d^2) / (2 r_E r_S).
    """
    lo, hi = slant_limits(r_earth, r_shell)
    d = np.asarray(slant, dtype=float)
    if np.any((d < lo * (1 - 1e-12)) | (d > hi * (1 + 1e-12))):
        raise DomainError(f"slant outside achievable interval [{lo}, {hi}]")
    cos_t = (r_earth**2 + r_shell**2 - d * d) / (2.0 * r_earth * r_shell)
    return _ret(_guarded_arccos(cos_t, "polar_angle_from_slant"), slant)


def slant_from_polar(r_earth: float, r_shell: float, polar_angle) -> "float | np.ndarray":
    """Inverse of :func:`polar_angle_from_slant`."""
    if not r_shell > r_earth > 0:
        raise DomainError("need r_shell > r_earth > 0")
    t = np.asarray(polar_angle, dtype=float)
    if np.any((t < 0) | (t > np.pi)):
        raise DomainError("polar_angle must lie in [0, pi]")
    d2 = r_earth**2 + r_shell**2 - 2.0 * r_earth * r_shell * np.cos(t)
    return _ret(np.sqrt(d2), polar_angle)


def zenith_angle(r_earth: float, r_shell: float, slant) -> "float | np.ndarray":
    """Angle at the ground point between local zenith and the satellite direction.

    Exactly pi/2 at the horizon slant sqrt(r_S^2 - r_E^2).
    """
    lo, hi = slant_limits(r_earth, r_shell)
    d = np.asarray(slant, dtype=float)
    if np.any((d <= 0) | (d < lo * (1 - 1e-12)) | (d > hi * (1 + 1e-12))):
        raise DomainError(f"slant outside achievable interval [{lo}, {hi}]")
    cos_z = (r_shell**2 - r_earth**2 - d * d) / (2.0 * r_earth * d)
    return _ret(_guarded_arccos(cos_z, "zenith_angle"), slant)


def slant_from_zenith(r_earth: float, r_shell: float, zenith) -> "float | np.ndarray":
    """Slant range of the shell point seen at a given zenith angle (inverse of zenith_angle)."""
    if not r_shell > r_earth > 0:
        raise DomainError("need r_shell > r_earth > 0")
    z = np.asarray(zenith, dtype=float)
    if np.any((z < 0) | (z > np.pi)):
        raise DomainError("zenith must lie in [0, pi]")
    c = np.cos(z)
    disc = r_earth**2 * c * c + r_shell**2 - r_earth**2
    d = -r_earth * c + np.sqrt(disc)
    return _ret(d, zenith)


def max_slant_range(r_earth: float, r_shell: float) -> float:
    """Slant range to a satellite exactly on the horizon: sqrt(r_S^2 - r_E^2)."""
    if not r_shell > r_earth > 0:
        raise DomainError("need r_shell > r_earth > 0")
    return float(np.sqrt(r_shell**2 - r_earth**2))


def segment_clears_sphere(a_xyz, b_xyz, blocking_radius: float) -> "bool | np.ndarray":
    """Whether the closed segment a-b keeps distance >= blocking_radius from the origin.

    ``a_xyz`` is a single (3,) point; ``b_xyz`` may be (3,) or (n, 3).
    Endpoints exactly on the blocking sphere count as clearing (tangency is
    allowed, passing strictly inside is not); a relative guard absorbs
    floating-point noise at that boundary.
    """
    a = np.asarray(a_xyz, dtype=float).reshape(3)
    b = np.asarray(b_xyz, dtype=float)
    single = b.ndim == 1
    b2 = b.reshape(-1, 3)
    u = b2 - a
    uu = np.einsum("ij,ij->i", u, u)
    au = u @ a
    with np.errstate(invalid="ignore"):
        t = np.where(uu > 0, -au / np.where(uu > 0, uu, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[:, None] * u
    dist2 = np.einsum("ij,ij->i", closest, closest)
    ok = dist2 >= blocking_radius**2 * (1.0 - _BOUNDARY_GUARD)
    return bool(ok[0]) if single else ok


def is_visible(a: SurfacePoint, b: SurfacePoint, blocking_radius: float = EARTH_RADIUS_KM) -> bool:
    """Line-of-sight test: true iff the segment a-b does not pass inside the blocking sphere."""
    if a.radius_km < blocking_radius * (1.0 - _BOUNDARY_GUARD) or b.radius_km < blocking_radius * (
        1.0 - _BOUNDARY_GUARD
    ):
        raise DomainError("both endpoints must lie on or outside the blocking sphere")
    return bool(segment_clears_sphere(a.xyz_km, b.xyz_km, blocking_radius))


def great_circle_distance(a, b, radius: float) -> "float | np.ndarray":
    """Great-circle distance between unit directions, radius * atan2(|a x b|, a.b).

    ``a`` is a single unit 3-vector; ``b`` may be (3,) or (n, 3).
    """
    av = np.asarray(a, dtype=float).reshape(3)
    bv = np.asarray(b, dtype=float)
    single = bv.ndim == 1
    b2 = bv.reshape(-1, 3)
    cross = np.cross(np.broadcast_to(av, b2.shape), b2)
    sin_term = np.linalg.norm(cross, axis=1)
    cos_term = b2 @ av
    ang = np.arctan2(sin_term, cos_term)
    out = radius * ang
    return float(out[0]) if single else out

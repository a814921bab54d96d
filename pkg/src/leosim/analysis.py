"""Closed-form distance, availability and association laws on spherical shells.

These are the analytic counterparts of the Monte Carlo engines: void
probabilities of spherical caps give the contact-distance and
nearest-neighbor CCDFs, and the same cap at the horizon gives satellite
availability.  Association across tiers is a Monte Carlo estimate of a
mean-power argmax.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSpec, mean_power_db
from .errors import ConfigurationError, DomainError
from .geometry import cap_area, max_slant_range, polar_angle_from_slant, slant_from_zenith
from .pointprocess import Bpp, Nppp, Ppp, ShellSpec, ppp_mean_count, shell_directions
from .rng import RngStream, as_generator


@dataclass(frozen=True)
class DistanceLaw:
    """Contact-distance law of one shell seen from a ground point."""

    shell: ShellSpec
    r_earth_km: float

    def __post_init__(self) -> None:
        if not self.r_earth_km > 0:
            raise ConfigurationError("r_earth must be positive")

    @property
    def shell_radius_km(self) -> float:
        return self.shell.shell_radius_km


def _cap_fraction(law: DistanceLaw, d0) -> np.ndarray:
    theta = polar_angle_from_slant(law.r_earth_km, law.shell_radius_km, d0)
    return (1.0 - np.cos(theta)) / 2.0


def contact_distance_ccdf(law: DistanceLaw, d0) -> "float | np.ndarray":
    """P(nearest satellite farther than d0): the void probability of the d0-cap."""
    kind = law.shell.kind
    frac = _cap_fraction(law, d0)
    if isinstance(kind, Bpp):
        out = np.power(1.0 - frac, kind.count)
    elif isinstance(kind, Ppp):
        out = np.exp(-ppp_mean_count(law.shell) * frac)
    else:
        raise ConfigurationError(
            "no closed contact law for a latitude-weighted shell; estimate by Monte Carlo"
        )
    return float(out) if np.ndim(d0) == 0 else out


def contact_angle_ccdf(law: DistanceLaw, zenith) -> "float | np.ndarray":
    """Contact law in zenith-angle coordinates, via the slant-zenith bijection."""
    z = np.asarray(zenith, dtype=float)
    if np.any((z < 0) | (z > np.pi / 2)):
        raise DomainError("zenith must lie in [0, pi/2]")
    d0 = slant_from_zenith(law.r_earth_km, law.shell_radius_km, z)
    out = contact_distance_ccdf(law, d0)
    return float(out) if np.ndim(zenith) == 0 else out


def nearest_neighbor_ccdf(shell: ShellSpec, d) -> "float | np.ndarray":
    """P(nearest other satellite farther than chord distance d), reference point in the process."""
    if not isinstance(shell.kind, Bpp):
        raise ConfigurationError("nearest-neighbor law is defined for fixed-count shells")
    n = shell.kind.count
    if n < 2:
        raise ConfigurationError("need at least 2 satellites")
    r_s = shell.shell_radius_km
    dd = np.asarray(d, dtype=float)
    if np.any((dd < 0) | (dd > 2.0 * r_s * (1 + 1e-12))):
        raise DomainError("chord distance must lie in [0, 2*r_shell]")
    theta = 2.0 * np.arcsin(np.clip(dd / (2.0 * r_s), 0.0, 1.0))
    out = np.power(1.0 - (1.0 - np.cos(theta)) / 2.0, n - 1)
    return float(out) if np.ndim(d) == 0 else out


def availability_probability(shell: ShellSpec, r_earth_km: float) -> float:
    """P(at least one satellite above the horizon of a ground point)."""
    law = DistanceLaw(shell, r_earth_km)
    kind = shell.kind
    if isinstance(kind, Bpp) and kind.count == 0:
        return 0.0
    horizon = max_slant_range(r_earth_km, law.shell_radius_km)
    return float(1.0 - contact_distance_ccdf(law, horizon))


@dataclass(frozen=True)
class Tier:
    """One candidate shell in the association competition."""

    shell: ShellSpec
    channel: ChannelSpec
    tx_power_dbw: float | None = None  # default: the shell's own power

    @property
    def power_dbw(self) -> float:
        return self.shell.tx_power_dbw if self.tx_power_dbw is None else self.tx_power_dbw


def association_probability(
    tiers: list[Tier],
    trials: int,
    rng: "RngStream | np.random.Generator",
    r_earth_km: float = 6371.0,
    max_zenith: float | None = None,
) -> list[float]:
    """Frequency with which each tier's nearest satellite wins on mean received power.

    The competition ranks the deterministic mean power (no small-scale
    draw) of each tier's nearest satellite, in the dB domain; ties go to
    the lowest tier_id.  ``max_zenith`` optionally restricts candidates
    to zenith angles at or below it (horizon = pi/2); trials where no
    tier has a candidate in the region score nowhere, so the outputs
    then sum to the joint availability rather than 1.
    """
    if not tiers:
        raise ConfigurationError("need at least one tier")
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    order = sorted(range(len(tiers)), key=lambda i: (tiers[i].shell.tier_id, i))
    gen = as_generator(rng)
    user = np.array([0.0, 0.0, 1.0])

    cos_limit = np.full(len(tiers), -1.0)
    if max_zenith is not None:
        for j, t in enumerate(tiers):
            r_s = t.shell.shell_radius_km
            d_lim = slant_from_zenith(r_earth_km, r_s, float(max_zenith))
            cos_limit[j] = np.cos(polar_angle_from_slant(r_earth_km, r_s, d_lim))

    power = np.full((len(tiers), trials), -np.inf)
    for row, j in enumerate(order):
        tier = tiers[j]
        r_s = tier.shell.shell_radius_km
        kind = tier.shell.kind
        if isinstance(kind, Bpp) and kind.count > 0:
            # rotation-invariant shell: only the polar cosines matter
            cos_t = gen.uniform(-1.0, 1.0, (trials, kind.count))
            cos_t = np.where(cos_t >= cos_limit[j], cos_t, -np.inf)
            best = cos_t.max(axis=1)
        else:
            best = np.empty(trials)
            for t in range(trials):
                dirs = shell_directions(tier.shell, gen)
                if len(dirs) == 0:
                    best[t] = -np.inf
                    continue
                cos_t = dirs @ user
                cos_t = np.where(cos_t >= cos_limit[j], cos_t, -np.inf)
                best[t] = cos_t.max()
        has = np.isfinite(best)
        d = np.sqrt(
            r_earth_km**2 + r_s**2 - 2.0 * r_earth_km * r_s * np.clip(best, -1.0, 1.0)
        )
        power[row, has] = mean_power_db(tier.channel, tier.power_dbw, d[has])

    winner = np.argmax(power, axis=0)  # first max = lowest tier_id after ordering
    scored = np.isfinite(power.max(axis=0))
    counts = np.bincount(winner[scored], minlength=len(tiers))
    out = [0.0] * len(tiers)
    for row, j in enumerate(order):
        out[j] = counts[row] / trials
    return out

"""Named oracle checks behind the ``validate`` experiment.

Each check pits a Monte Carlo estimate against an independent closed
form (or an exact structural identity) at tolerances several standard
errors wide, so a failure means a real defect rather than sampling luck.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ..analysis import DistanceLaw, availability_probability, contact_distance_ccdf
from ..channel import (
    ChannelSpec,
    Isotropic,
    LargeScaleModel,
    Rayleigh,
    ShadowedRician,
    db_to_linear,
    sample_small_scale,
    sr_pdf,
)
from ..coverage import GwLinkConfig, SinrConfig, interference_laplace, link_coverage
from ..geometry import (
    EARTH_RADIUS_KM,
    is_visible,
    max_slant_range,
    slant_from_polar,
    polar_angle_from_slant,
    zenith_angle,
    SurfacePoint,
)
from ..pointprocess import Bpp, GroundField, ShellSpec
from ..rng import RngStream

_SR = ShadowedRician(b=0.158, m=19.4, omega=1.29)


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str


def _ks_statistic(samples: np.ndarray, cdf_values: np.ndarray) -> float:
    n = len(samples)
    ranks = np.arange(1, n + 1)
    return float(max(np.max(ranks / n - cdf_values), np.max(cdf_values - (ranks - 1) / n)))


def _slants_from_cosines(cos_t: np.ndarray, r_e: float, r_s: float) -> np.ndarray:
    return np.sqrt(r_e * r_e + r_s * r_s - 2.0 * r_e * r_s * cos_t)


def _check_contact_distance(seed: int) -> CheckResult:
    shell = ShellSpec(kind=Bpp(count=30), altitude_km=1000.0, tx_power_dbw=15.0)
    law = DistanceLaw(shell, EARTH_RADIUS_KM)
    gen = RngStream(seed, (100,)).generator()
    cos_t = gen.uniform(-1.0, 1.0, (20_000, 30))
    nearest = np.sort(_slants_from_cosines(cos_t, EARTH_RADIUS_KM, shell.shell_radius_km).min(axis=1))
    ks = _ks_statistic(nearest, 1.0 - np.asarray(contact_distance_ccdf(law, nearest)))
    return CheckResult("contact_distance_law", ks < 0.02, f"ks={ks:.4f} (limit 0.02)")


def _check_availability(seed: int) -> CheckResult:
    shell = ShellSpec(kind=Bpp(count=10), altitude_km=500.0, tx_power_dbw=15.0)
    closed = availability_probability(shell, EARTH_RADIUS_KM)
    gen = RngStream(seed, (101,)).generator()
    cos_t = gen.uniform(-1.0, 1.0, (40_000, 10))
    mc = float(np.mean(np.any(cos_t > EARTH_RADIUS_KM / shell.shell_radius_km, axis=1)))
    diff = abs(mc - closed)
    return CheckResult("availability_closed_form", diff < 0.012, f"|mc-closed|={diff:.4f} (limit 0.012)")


def _check_sr_moments(seed: int) -> CheckResult:
    gen = RngStream(seed, (102,)).generator()
    draws = np.asarray(sample_small_scale(_SR, gen, size=100_000))
    target = 2.0 * _SR.b + _SR.omega
    rel = abs(float(draws.mean()) - target) / target
    integral, _ = integrate.quad(
        sr_pdf, 0.0, np.inf, args=(_SR.b, _SR.m, _SR.omega), limit=200
    )
    pdf_err = abs(integral - 1.0)
    ok = rel < 0.01 and pdf_err < 1e-6
    return CheckResult(
        "shadowed_rician_moments",
        ok,
        f"mean rel err={rel:.4f} (limit 0.01), pdf integral err={pdf_err:.2e} (limit 1e-06)",
    )


def _check_rayleigh_noise_limited(seed: int) -> CheckResult:
    channel = ChannelSpec(
        antenna=Isotropic(),
        large_scale=LargeScaleModel(),
        small_scale=Rayleigh(),
        path_loss_exponent=2.0,
    )
    gw = GwLinkConfig(
        channel=channel,
        field=GroundField(3.0),
        tx_power_dbw=15.0,
        noise_power_dbw=-110.0,
        threshold_db=-10.0,
        distance_sampler=lambda gen, n: np.full(n, 1000.0),
    )
    est = link_coverage(gw, 20_000, RngStream(seed, (103,)))
    snr = db_to_linear(15.0) / (1000.0 * 1000.0) ** 2 / db_to_linear(-110.0)
    expected = float(np.exp(-db_to_linear(-10.0) / snr))
    diff = abs(est.value - expected)
    return CheckResult(
        "rayleigh_noise_limited_oracle", diff < 0.01, f"|mc-exp|={diff:.4f} (limit 0.01)"
    )


def _laplace_config(n: int) -> SinrConfig:
    return SinrConfig(
        shells=(ShellSpec(kind=Bpp(count=n), altitude_km=1000.0, tx_power_dbw=15.0),),
        channel=ChannelSpec(
            antenna=Isotropic(),
            large_scale=LargeScaleModel(),
            small_scale=_SR,
            path_loss_exponent=2.0,
        ),
        noise_power_dbw=-104.0,
        threshold_db=-10.0,
    )


def _check_laplace(seed: int) -> CheckResult:
    s_grid = np.array([0.0, 1e10, 1e11, 1e12])
    values = np.asarray(
        interference_laplace(_laplace_config(20), s_grid, 2000, RngStream(seed, (104,)))
    )
    empty = np.asarray(
        interference_laplace(_laplace_config(0), s_grid, 200, RngStream(seed, (105,)))
    )
    ok = values[0] == 1.0 and bool(np.all(np.diff(values) <= 0.0)) and bool(np.all(empty == 1.0))
    return CheckResult(
        "interference_laplace",
        ok,
        f"L(0)={values[0]:.6f}, monotone={bool(np.all(np.diff(values) <= 0.0))}, empty identically 1={bool(np.all(empty == 1.0))}",
    )


def _check_geometry(seed: int) -> CheckResult:
    gen = RngStream(seed, (106,)).generator()
    r_e, r_s = EARTH_RADIUS_KM, EARTH_RADIUS_KM + 1000.0
    polar = gen.uniform(1e-6, np.pi - 1e-6, 1000)
    slant = slant_from_polar(r_e, r_s, polar)
    back = polar_angle_from_slant(r_e, r_s, slant)
    round_trip = float(np.max(np.abs(back - polar) / polar))
    zen = zenith_angle(r_e, r_s, slant)
    agree = bool(np.all((zen <= np.pi / 2) == (slant <= max_slant_range(r_e, r_s))))
    up = SurfacePoint(np.array([0.0, 0.0, 1.0]), r_e)
    sample = gen.choice(len(polar), 200, replace=False)
    vis_agree = all(
        is_visible(up, SurfacePoint.from_latlon(90.0 - np.degrees(polar[i]), 0.0, r_s))
        == (zen[i] <= np.pi / 2)
        for i in sample
    )
    ok = round_trip < 1e-9 and agree and vis_agree
    return CheckResult(
        "geometry_identities",
        ok,
        f"round-trip rel err={round_trip:.2e} (limit 1e-09), zenith/slant agree={agree}, visibility agree={vis_agree}",
    )


_CHECKS = (
    _check_contact_distance,
    _check_availability,
    _check_sr_moments,
    _check_rayleigh_noise_limited,
    _check_laplace,
    _check_geometry,
)


def run_validation(master_seed: int = 0) -> tuple[CheckResult, ...]:
    """Run every named check; deterministic in the master seed."""
    return tuple(check(master_seed) for check in _CHECKS)

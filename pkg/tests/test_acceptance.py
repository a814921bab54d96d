"""Acceptance gate: ten criteria, one printed verdict line each.

Every tolerance here is pinned; the Monte Carlo checks run on fixed
seeds so a failure is a defect, not sampling noise.  The three figure
reproductions run the shipped presets end to end and check the stated
landmarks: a coverage peak near N = 30 that ignores gateway density, a
peak that moves down with altitude, and a 15-45% latency premium for
gateway relaying with overlapping large-constellation curves.
"""

import time
from dataclasses import replace

import numpy as np
import pytest
from scipy import integrate

from leosim.analysis import DistanceLaw, availability_probability, contact_distance_ccdf
from leosim.channel import (
    ChannelSpec,
    Isotropic,
    LargeScaleModel,
    Rayleigh,
    ShadowedRician,
    db_to_linear,
    sample_small_scale,
    sr_pdf,
)
from leosim.coverage import GwLinkConfig, SinrConfig, interference_laplace, link_coverage
from leosim.experiments import calibrate_noise, parse_config, preset_text, run
from leosim.geometry import (
    EARTH_RADIUS_KM,
    SurfacePoint,
    is_visible,
    max_slant_range,
    polar_angle_from_slant,
    slant_from_polar,
    slant_limits,
    zenith_angle,
)
from leosim.latency import GwRelay, InterSatellite, route
from leosim.pointprocess import Bpp, GroundField, ShellSpec, uniform_directions
from leosim.rng import RngStream

SEED = 7
SR = ShadowedRician(b=0.158, m=19.4, omega=1.29)


def _verdict(num: int, name: str, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'} criterion {num} ({name}): {detail}")
    assert ok, f"criterion {num} ({name}): {detail}"


def _ks(sorted_samples: np.ndarray, cdf_values: np.ndarray) -> float:
    n = len(sorted_samples)
    ranks = np.arange(1, n + 1)
    return float(max(np.max(ranks / n - cdf_values), np.max(cdf_values - (ranks - 1) / n)))


def _nearest_slants(gen, trials: int, n: int, r_s: float) -> np.ndarray:
    cos_t = gen.uniform(-1.0, 1.0, (trials, n))
    r_e = EARTH_RADIUS_KM
    return np.sqrt(r_e * r_e + r_s * r_s - 2.0 * r_e * r_s * cos_t).min(axis=1)


def _unimodal_with_slack(values, slack: float) -> bool:
    peak = int(np.argmax(values))
    rising = all(values[i + 1] >= values[i] - slack for i in range(peak))
    falling = all(values[i + 1] <= values[i] + slack for i in range(peak, len(values) - 1))
    return rising and falling


def test_criterion_01_contact_distance_law():
    t0 = time.perf_counter()
    shell = ShellSpec(kind=Bpp(count=30), altitude_km=1000.0, tx_power_dbw=15.0)
    gen = RngStream(SEED, (1,)).generator()
    slants = np.sort(_nearest_slants(gen, 100_000, 30, shell.shell_radius_km))
    law = DistanceLaw(shell, EARTH_RADIUS_KM)
    ks = _ks(slants, 1.0 - np.asarray(contact_distance_ccdf(law, slants)))
    dt = time.perf_counter() - t0
    _verdict(
        1, "contact-distance law", ks < 0.01 and dt < 10.0, f"KS={ks:.4f} (<0.01), {dt:.1f}s (<10s)"
    )


def test_criterion_02_availability():
    gen = RngStream(SEED, (2,)).generator()
    worst = 0.0
    for n in (10, 30, 100):
        for alt in (500.0, 1000.0, 1500.0):
            shell = ShellSpec(kind=Bpp(count=n), altitude_km=alt, tx_power_dbw=15.0)
            closed = availability_probability(shell, EARTH_RADIUS_KM)
            cos_t = gen.uniform(-1.0, 1.0, (100_000, n))
            mc = float(np.mean(np.any(cos_t > EARTH_RADIUS_KM / shell.shell_radius_km, axis=1)))
            worst = max(worst, abs(mc - closed))
    _verdict(2, "availability closed form", worst <= 0.005, f"max |mc-closed|={worst:.4f} (<=0.005)")


def test_criterion_03_shadowed_rician():
    gen = RngStream(SEED, (3,)).generator()
    draws = np.sort(np.asarray(sample_small_scale(SR, gen, size=100_000)))
    target = 2.0 * SR.b + SR.omega
    mean_rel = abs(float(draws.mean()) - target) / target
    integral, _ = integrate.quad(sr_pdf, 0.0, np.inf, args=(SR.b, SR.m, SR.omega), limit=200)
    pdf_err = abs(integral - 1.0)
    w = np.linspace(0.0, 40.0, 80_001)
    cdf = integrate.cumulative_trapezoid(sr_pdf(w, SR.b, SR.m, SR.omega), w, initial=0.0)
    ks = _ks(draws, np.interp(draws, w, cdf))
    ok = mean_rel < 0.01 and pdf_err < 1e-6 and ks < 0.01
    _verdict(
        3,
        "shadowed-Rician sampler",
        ok,
        f"mean rel={mean_rel:.4f} (<0.01), pdf integral err={pdf_err:.1e} (<1e-6), KS={ks:.4f} (<0.01)",
    )


def test_criterion_04_rayleigh_noise_limited():
    channel = ChannelSpec(
        antenna=Isotropic(),
        large_scale=LargeScaleModel(),
        small_scale=Rayleigh(),
        path_loss_exponent=2.0,
    )
    # received power at the pinned 1000 km grazing link is -105 dBW
    combos = ((-10.0, -110.0), (0.0, -115.0), (3.0, -105.0))
    worst = 0.0
    for i, (threshold_db, noise_dbw) in enumerate(combos):
        gw = GwLinkConfig(
            channel=channel,
            field=GroundField(3.0),
            tx_power_dbw=15.0,
            noise_power_dbw=noise_dbw,
            threshold_db=threshold_db,
            distance_sampler=lambda gen, n: np.full(n, 1000.0),
        )
        est = link_coverage(gw, 100_000, RngStream(SEED, (4, i)))
        snr = db_to_linear(-105.0 - noise_dbw)
        expected = float(np.exp(-db_to_linear(threshold_db) / snr))
        worst = max(worst, abs(est.value - expected))
    _verdict(4, "Rayleigh noise-limited oracle", worst <= 0.01, f"max |mc-exp|={worst:.4f} (<=0.01)")


def test_criterion_05_coverage_peak_vs_density(tmp_path):
    t0 = time.perf_counter()
    cfg = parse_config(preset_text("fig4"))
    calibrated = calibrate_noise(30, replace(cfg, trials=10_000))
    res = run(replace(cfg, noise_dbw=calibrated, output_dir=str(tmp_path)))
    curves: dict[float, list[tuple[int, float, float]]] = {}
    for n, dens, value, stderr, _ in res.rows:
        curves.setdefault(dens, []).append((n, value, stderr))
    peaks = {}
    unimodal = True
    for dens, pts in curves.items():
        pts.sort()
        values = [v for _, v, _ in pts]
        slack = 4.0 * max(se for _, _, se in pts)
        unimodal &= _unimodal_with_slack(values, slack)
        peaks[dens] = int(np.argmax(values))
    grid = cfg.n_sats
    peak_ns = {dens: grid[i] for dens, i in peaks.items()}
    in_window = all(15 <= pn <= 50 for pn in peak_ns.values())
    shift = abs(peaks[1.0] - peaks[10.0])
    dt = time.perf_counter() - t0
    ok = unimodal and in_window and shift <= 1 and dt < 300.0
    _verdict(
        5,
        "coverage peak near 30, density independent",
        ok,
        f"noise={calibrated:.1f} dBW, peaks={peak_ns} (in [15,50]), unimodal={unimodal}, "
        f"density 1->10 shift={shift} steps (<=1), {dt:.0f}s (<300s)",
    )


def test_criterion_06_peak_moves_down_with_altitude(tmp_path):
    t0 = time.perf_counter()
    cfg = parse_config(preset_text("fig5"))
    res = run(replace(cfg, output_dir=str(tmp_path)))
    curves: dict[float, dict[int, float]] = {}
    for n, alt, value, _, _ in res.rows:
        curves.setdefault(alt, {})[n] = value
    grid = sorted(next(iter(curves.values())))
    peak_at = {alt: max(by_n, key=by_n.get) for alt, by_n in curves.items()}
    at30 = [curves[alt][30] for alt in (500.0, 1000.0, 1500.0)]
    strictly_down = at30[0] > at30[1] > at30[2]
    dt = time.perf_counter() - t0
    ok = peak_at[500.0] > peak_at[1500.0] and strictly_down and dt < 300.0
    _verdict(
        6,
        "optimal constellation size shrinks with altitude",
        ok,
        f"peak N: 500km={peak_at[500.0]} > 1500km={peak_at[1500.0]}, "
        f"coverage@N=30 {at30[0]:.3f} > {at30[1]:.3f} > {at30[2]:.3f}, {dt:.0f}s (<300s)",
    )
    assert grid[0] == 5  # sweep really covers the small-N side


def test_criterion_07_latency_trends(tmp_path):
    t0 = time.perf_counter()
    cfg = parse_config(preset_text("fig3"))
    res = run(replace(cfg, output_dir=str(tmp_path)))
    mean = {(alt, n, mode): m for alt, n, mode, m, _, _, _ in res.rows}
    alts, sizes = cfg.altitude_km, cfg.n_sats
    strict = all(
        mean[(a, n, "inter_satellite")] < mean[(a, n, "gw_relay")] for a in alts for n in sizes
    )
    isl300 = sum(mean[(a, 300, "inter_satellite")] for a in alts)
    gw300 = sum(mean[(a, 300, "gw_relay")] for a in alts)
    gw1000 = sum(mean[(a, 1000, "gw_relay")] for a in alts)
    gap = gw300 / isl300 - 1.0
    overlap = abs(gw300 - gw1000) / gw1000

    # chord bound, checked trace by trace on fresh antipodal routes
    src = SurfacePoint(np.array([0.0, 0.0, 1.0]), EARTH_RADIUS_KM)
    dst = SurfacePoint(np.array([0.0, 0.0, -1.0]), EARTH_RADIUS_KM)
    delivered, bound_ok = 0, True
    for trial in range(10):
        gen = RngStream(SEED, (7, trial)).generator()
        for n, alt in ((100, 500.0), (1000, 1500.0)):
            sats = [
                SurfacePoint.from_vector(d * (EARTH_RADIUS_KM + alt))
                for d in uniform_directions(gen, n)
            ]
            relays = tuple(
                SurfacePoint.from_vector(d * EARTH_RADIUS_KM) for d in uniform_directions(gen, 200)
            )
            for mode in (InterSatellite(), GwRelay(relay_positions=relays)):
                trace = route(src, dst, sats, mode)
                if trace.delivered:
                    delivered += 1
                    bound_ok &= trace.total_latency_ms >= 42.50
    dt = time.perf_counter() - t0
    ok = (
        strict
        and 0.15 <= gap <= 0.45
        and overlap < 0.05
        and bound_ok
        and delivered >= 20
        and dt < 300.0
    )
    _verdict(
        7,
        "relaying premium and large-N overlap",
        ok,
        f"direct<relayed everywhere={strict}, gap@300={gap*100:.1f}% (in [15,45]), "
        f"overlap 300 vs 1000={overlap*100:.2f}% (<5%), chord bound on {delivered} traces={bound_ok}, "
        f"{dt:.0f}s (<300s)",
    )


def test_criterion_08_determinism(tmp_path):
    outcomes = []
    for name, trials in (("fig3", 100), ("fig4", 200), ("fig5", 200)):
        cfg = replace(parse_config(preset_text(name)), trials=trials)
        files = []
        for tag, workers in (("a", 1), ("b", 1), ("c", 4)):
            res = run(replace(cfg, output_dir=str(tmp_path / f"{name}_{tag}")), workers=workers)
            files.append(open(res.csv_path, "rb").read())
        outcomes.append(files[0] == files[1] == files[2])
    ok = all(outcomes)
    _verdict(
        8,
        "byte-identical reruns across worker counts",
        ok,
        f"fig3/fig4/fig5 identical={outcomes}",
    )


def test_criterion_09_interference_laplace():
    def config(n: int) -> SinrConfig:
        return SinrConfig(
            shells=(ShellSpec(kind=Bpp(count=n), altitude_km=1000.0, tx_power_dbw=15.0),),
            channel=ChannelSpec(
                antenna=Isotropic(),
                large_scale=LargeScaleModel(),
                small_scale=SR,
                path_loss_exponent=2.0,
            ),
            noise_power_dbw=-104.0,
            threshold_db=-10.0,
        )

    s_grid = np.array([0.0, 1e9, 1e10, 1e11, 1e12])
    values = np.asarray(interference_laplace(config(20), s_grid, 5000, RngStream(SEED, (9,))))
    empty = np.asarray(interference_laplace(config(0), s_grid, 500, RngStream(SEED, (9, 1))))
    at_zero = values[0] == 1.0
    monotone = bool(np.all(np.diff(values) <= 0.0))
    empty_one = bool(np.all(empty == 1.0))
    ok = at_zero and monotone and empty_one
    _verdict(
        9,
        "interference Laplace transform",
        ok,
        f"L(0)==1: {at_zero}, nonincreasing: {monotone}, zero-constellation==1: {empty_one}",
    )


def test_criterion_10_geometry_suite():
    gen = RngStream(SEED, (10,)).generator()
    r_e, r_s = EARTH_RADIUS_KM, EARTH_RADIUS_KM + 1000.0
    lo, hi = slant_limits(r_e, r_s)
    slants = gen.uniform(lo, hi, 10_000)
    polar = polar_angle_from_slant(r_e, r_s, slants)
    round_trip = float(np.max(np.abs(slant_from_polar(r_e, r_s, polar) - slants) / slants))

    polar_cases = gen.uniform(1e-6, np.pi - 1e-6, 10_000)
    slant_cases = slant_from_polar(r_e, r_s, polar_cases)
    zen = zenith_angle(r_e, r_s, slant_cases)
    horizon = zen <= np.pi / 2
    by_slant = slant_cases <= max_slant_range(r_e, r_s)
    up = SurfacePoint(np.array([0.0, 0.0, 1.0]), r_e)
    by_segment = np.array(
        [
            is_visible(up, SurfacePoint.from_latlon(90.0 - np.degrees(p), 0.0, r_s))
            for p in polar_cases
        ]
    )
    agree = bool(np.all(horizon == by_slant) and np.all(horizon == by_segment))
    ok = round_trip < 1e-9 and agree
    _verdict(
        10,
        "geometry identities",
        ok,
        f"slant<->polar round-trip rel err={round_trip:.1e} (<1e-9), "
        f"visibility == (zenith<=pi/2) == (slant<=max) on 10000 cases: {agree}",
    )

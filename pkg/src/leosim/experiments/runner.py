"""Grid dispatch, CSV artifacts and noise calibration for the presets.

Every grid point owns a deterministic substream derived from
``(master_seed, family, grid indices)``, so results do not depend on the
worker count and a rerun with the same seed is byte-identical.  A single
writer emits rows in grid order after all points return.
"""
from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from importlib.metadata import PackageNotFoundError, version

import numpy as np

from ..channel import (
    ChannelSpec,
    Isotropic,
    LargeScaleModel,
    NonFading,
    Rayleigh,
    ShadowedRician,
)
from ..coverage import (
    Direct,
    GwLinkConfig,
    NlosConstant,
    NlosFaded,
    NlosZero,
    SinrConfig,
    SystemType,
    coverage_probability,
    link_coverage,
)
from ..errors import CalibrationError, ConfigurationError
from ..latency import GwRelay, InterSatellite, average_latency
from ..pointprocess import Bpp, GroundField, Ppp, ShellSpec
from ..rng import RngStream
from .config import ExperimentConfig, canonical_text
from .validation import run_validation

FIG3_CSV_HEADER = (
    "altitude_km",
    "n_sats",
    "mode",
    "mean_latency_ms",
    "stderr_ms",
    "unreachable_frac",
    "trials",
)
FIG4_CSV_HEADER = ("n_sats", "gw_density_per_km2", "coverage", "stderr", "trials")
FIG5_CSV_HEADER = ("n_sats", "altitude_km", "coverage", "stderr", "trials")
VALIDATE_HEADER = ("check", "status", "detail")


@dataclass(frozen=True)
class ExperimentResult:
    experiment: str
    header: tuple[str, ...]
    rows: tuple[tuple, ...]
    config_echo: str
    master_seed: int
    code_version: str
    wall_time_s: float
    csv_path: str | None
    summary_path: str | None
    ok: bool = True


def _code_version() -> str:
    try:
        return version("leosim")
    except PackageNotFoundError:
        return "0+unknown"


def _small_scale(cfg: ExperimentConfig):
    if cfg.fading == "sr":
        return ShadowedRician(b=cfg.sr_b, m=cfg.sr_m, omega=cfg.sr_omega)
    if cfg.fading == "rayleigh":
        return Rayleigh()
    return NonFading()


def _channel(cfg: ExperimentConfig) -> ChannelSpec:
    return ChannelSpec(
        antenna=Isotropic(),
        large_scale=LargeScaleModel(),
        small_scale=_small_scale(cfg),
        path_loss_exponent=cfg.alpha,
    )


def _shell(cfg: ExperimentConfig, n: int, altitude_km: float) -> ShellSpec:
    kind = Bpp(count=n) if cfg.shell_kind == "bpp" else Ppp(mean_count=float(n))
    # any LoS large-scale gain is folded into the transmit EIRP
    return ShellSpec(kind=kind, altitude_km=altitude_km, tx_power_dbw=cfg.tx_power_dbw + cfg.los_gain_db)


def _nlos(cfg: ExperimentConfig):
    if cfg.nlos == "zero":
        return NlosZero()
    if cfg.nlos == "constant":
        return NlosConstant(cfg.nlos_constant_dbw)
    return NlosFaded()


def _sinr_config(cfg: ExperimentConfig, n: int, altitude_km: float) -> SinrConfig:
    return SinrConfig(
        shells=(_shell(cfg, n, altitude_km),),
        channel=_channel(cfg),
        noise_power_dbw=cfg.noise_dbw if cfg.noise_dbw is not None else 0.0,
        threshold_db=cfg.threshold_db,
        system_type=SystemType(cfg.system),
        nlos_interference=_nlos(cfg),
    )


def _gw_link(cfg: ExperimentConfig, density: float) -> GwLinkConfig:
    return GwLinkConfig(
        channel=_channel(cfg),
        field=GroundField(density),
        threshold_db=cfg.threshold_db,
    )


# task functions live at module level so the worker pool can pickle them


def _sat_point(args) -> tuple[float, float]:
    cfg, i_alt, i_n = args
    stream = RngStream(cfg.master_seed, (0, i_alt, i_n))
    est = coverage_probability(
        _sinr_config(cfg, cfg.n_sats[i_n], cfg.altitude_km[i_alt]), Direct(), cfg.trials, stream
    )
    return est.value, est.stderr


def _gw_point(args) -> tuple[float, float]:
    cfg, j = args
    stream = RngStream(cfg.master_seed, (1, j))
    est = link_coverage(_gw_link(cfg, cfg.gw_density_per_km2[j]), cfg.trials, stream)
    return est.value, est.stderr


def _latency_point(args) -> list[tuple]:
    cfg, i_alt, i_n = args
    shell = _shell(cfg, cfg.n_sats[i_n], cfg.altitude_km[i_alt])
    # one stream for both modes: satellites are drawn first inside each
    # trial, so the two routing modes see identical constellations
    stream = RngStream(cfg.master_seed, (0, i_alt, i_n))
    out = []
    for label, mode in (
        ("inter_satellite", InterSatellite()),
        ("gw_relay", GwRelay(relay_count=cfg.relay_gw_count)),
    ):
        est = average_latency(shell, mode, cfg.trials, stream, r_earth_km=cfg.earth_radius_km)
        out.append((label, est.mean_ms, est.stderr_ms, est.unreachable_frac, est.trials))
    return out


def _map(fn, tasks: list, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


def _product_rows(cfg: ExperimentConfig, sat, gw, inner: str) -> list[tuple]:
    """Coverage rows as the satellite-link x ground-link product."""
    rows = []
    for i_n, n in enumerate(cfg.n_sats):
        if inner == "density":
            pairs = [(j, cfg.gw_density_per_km2[j]) for j in range(len(cfg.gw_density_per_km2))]
        else:
            pairs = [(j, cfg.altitude_km[j]) for j in range(len(cfg.altitude_km))]
        for j, col in pairs:
            sv, sse = sat[(j, i_n)] if inner == "altitude" else sat[(0, i_n)]
            gv, gse = gw[j] if inner == "density" else gw[0]
            value = sv * gv
            se = float(np.hypot(sse * gv, gse * sv))
            rows.append((n, col, value, se, cfg.trials))
    return rows


def _run_fig3(cfg: ExperimentConfig, workers: int):
    tasks = [
        (cfg, i_alt, i_n)
        for i_alt in range(len(cfg.altitude_km))
        for i_n in range(len(cfg.n_sats))
    ]
    results = _map(_latency_point, tasks, workers)
    rows = []
    for (_, i_alt, i_n), modes in zip(tasks, results):
        for label, mean_ms, se_ms, unreach, trials in modes:
            rows.append(
                (cfg.altitude_km[i_alt], cfg.n_sats[i_n], label, mean_ms, se_ms, unreach, trials)
            )
    worst = max(row[5] for row in rows)
    return FIG3_CSV_HEADER, rows, [f"max_unreachable_frac: {worst:.9g}"]


def _run_coverage_product(cfg: ExperimentConfig, workers: int, inner: str):
    if inner == "density":
        sat_tasks = [(cfg, 0, i_n) for i_n in range(len(cfg.n_sats))]
        gw_tasks = [(cfg, j) for j in range(len(cfg.gw_density_per_km2))]
    else:
        sat_tasks = [
            (cfg, i_alt, i_n)
            for i_alt in range(len(cfg.altitude_km))
            for i_n in range(len(cfg.n_sats))
        ]
        gw_tasks = [(cfg, 0)]
    sat = {
        (task[1], task[2]): value for task, value in zip(sat_tasks, _map(_sat_point, sat_tasks, workers))
    }
    gw = {task[1]: value for task, value in zip(gw_tasks, _map(_gw_point, gw_tasks, workers))}
    rows = _product_rows(cfg, sat, gw, inner)
    header = FIG4_CSV_HEADER if inner == "density" else FIG5_CSV_HEADER
    worst = max(row[3] for row in rows)
    return header, rows, [f"max_stderr: {worst:.9g}"]


def _run_validate(cfg: ExperimentConfig):
    checks = run_validation(cfg.master_seed)
    rows = [(c.name, "ok" if c.ok else "FAIL", c.detail) for c in checks]
    passed = sum(c.ok for c in checks)
    return VALIDATE_HEADER, rows, [f"checks_passed: {passed}/{len(checks)}"], passed == len(checks)


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".9g")
    return str(value)


def _write_csv(path: str, header: tuple[str, ...], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def run(config: ExperimentConfig, workers: int | None = None) -> ExperimentResult:
    """Run one experiment end to end: compute the grid, write CSV and summary."""
    workers = workers if workers is not None else (os.cpu_count() or 1)
    t0 = time.perf_counter()
    ok = True
    if config.experiment == "fig3":
        header, rows, extra = _run_fig3(config, workers)
    elif config.experiment == "fig4":
        header, rows, extra = _run_coverage_product(config, workers, "density")
    elif config.experiment in ("fig5", "custom"):
        header, rows, extra = _run_coverage_product(config, workers, "altitude")
    elif config.experiment == "validate":
        header, rows, extra, ok = _run_validate(config)
    else:  # unreachable: config validation rejects unknown names
        raise ConfigurationError(f"unknown experiment {config.experiment!r}")

    os.makedirs(config.output_dir, exist_ok=True)
    csv_path = None
    if config.experiment != "validate":
        csv_path = os.path.join(config.output_dir, f"{config.experiment}.csv")
        _write_csv(csv_path, header, rows)
    wall = time.perf_counter() - t0
    echo = canonical_text(config)
    summary_path = os.path.join(config.output_dir, f"{config.experiment}_summary.txt")
    lines = [
        f"experiment: {config.experiment}",
        f"status: {'ok' if ok else 'FAIL'}",
        f"code_version: {_code_version()}",
        f"master_seed: {config.master_seed}",
        f"wall_time_s: {wall:.3f}",
        f"rows: {len(rows)}",
        f"csv: {os.path.basename(csv_path) if csv_path else '-'}",
        *extra,
    ]
    if config.experiment == "validate":
        lines += [f"{name}: {status} {detail}" for name, status, detail in rows]
    body = "\n".join(lines) + "\n[config]\n" + echo
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write(body)
    return ExperimentResult(
        experiment=config.experiment,
        header=header,
        rows=tuple(tuple(r) for r in rows),
        config_echo=echo,
        master_seed=config.master_seed,
        code_version=_code_version(),
        wall_time_s=wall,
        csv_path=csv_path,
        summary_path=summary_path,
        ok=ok,
    )


def _peak_index(cfg: ExperimentConfig, workers: int, beyond: int) -> int:
    tasks = [(cfg, 0, i_n) for i_n in range(len(cfg.n_sats))]
    values = [v for v, _ in _map(_sat_point, tasks, workers)]
    if max(values) <= 0.0:
        return beyond  # noise so high nothing is covered: peak lies past the grid top
    return int(np.argmax(values))


def calibrate_noise(
    target_peak_n: int, config: ExperimentConfig, workers: int | None = None
) -> float:
    """Bisect noise_dbw until the coverage-vs-N argmax hits the target.

    The coverage peak moves monotonically with noise: quiet receivers are
    interference-limited and peak at small constellations, loud ones are
    availability-limited and peak at the grid top.  The search window is
    the configured noise_dbw plus/minus 60 dB; the match tolerance is one
    grid step on either side.
    """
    workers = workers if workers is not None else (os.cpu_count() or 1)
    grid = config.n_sats
    if target_peak_n not in grid:
        raise ConfigurationError("target peak must be one of the shell.n_sats grid values")
    ti = grid.index(target_peak_n)
    if ti in (0, len(grid) - 1):
        raise ConfigurationError("target peak must lie in the grid interior")
    if config.noise_dbw is None:
        raise ConfigurationError("calibration needs noise_dbw as the search anchor")
    beyond = len(grid) + 1

    def peak(noise_dbw: float) -> int:
        return _peak_index(replace(config, noise_dbw=noise_dbw), workers, beyond)

    lo, hi = config.noise_dbw - 60.0, config.noise_dbw + 60.0
    i_lo, i_hi = peak(lo), peak(hi)
    if abs(i_lo - ti) <= 1:
        return lo
    if abs(i_hi - ti) <= 1:
        return hi
    if i_lo > ti or i_hi < ti:
        raise CalibrationError(
            f"no noise level in [{lo:.1f}, {hi:.1f}] dBW puts the coverage peak at N = {target_peak_n}"
        )
    while hi - lo > 0.25:
        mid = 0.5 * (lo + hi)
        idx = peak(mid)
        if abs(idx - ti) <= 1:
            return mid
        if idx < ti:
            lo = mid
        else:
            hi = mid
    raise CalibrationError("bisection interval collapsed before reaching the target peak")

"""FastAPI application wrapping the core library.

Domain errors surface as 422 with a plain-text detail; I/O failures
while writing artifacts surface as 500 with kind "io" so thin clients
can map them to distinct exit codes.
"""
from __future__ import annotations

from dataclasses import replace

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..analysis import DistanceLaw, availability_probability, contact_distance_ccdf
from ..channel import sr_pdf
from ..errors import CalibrationError, ConfigurationError, DomainError
from ..experiments import calibrate_noise, parse_config, run, run_validation
from ..experiments.runner import _code_version, _sat_point, _shell
from ..geometry import EARTH_RADIUS_KM
from ..latency import GwRelay, InterSatellite, average_latency
from ..pointprocess import Bpp, Ppp, ShellSpec
from ..rng import RngStream
from .models import (
    AvailabilityRequest,
    AvailabilityResponse,
    CalibrateRequest,
    CalibrateResponse,
    CheckItem,
    ContactDistanceRequest,
    ContactDistanceResponse,
    DirectCoverageRequest,
    DirectCoverageResponse,
    HealthResponse,
    LatencyRequest,
    LatencyResponse,
    RunRequest,
    RunResponse,
    SrPdfRequest,
    SrPdfResponse,
    ValidateRequest,
    ValidateResponse,
)


def _apply_overrides(cfg, req) -> object:
    fields = {}
    if req.master_seed is not None:
        fields["master_seed"] = req.master_seed
    if getattr(req, "trials", None) is not None:
        fields["trials"] = req.trials
    if getattr(req, "output_dir", None) is not None:
        fields["output_dir"] = req.output_dir
    return replace(cfg, **fields) if fields else cfg


def _analysis_shell(kind: str, n_sats: int, altitude_km: float) -> ShellSpec:
    process = Bpp(count=n_sats) if kind == "bpp" else Ppp(mean_count=float(n_sats))
    return ShellSpec(kind=process, altitude_km=altitude_km, tx_power_dbw=15.0)


def create_app() -> FastAPI:
    app = FastAPI(title="leosim", version=_code_version())

    @app.exception_handler(ConfigurationError)
    @app.exception_handler(DomainError)
    async def _domain_error(request: Request, exc: Exception) -> JSONResponse:
        return JSONResponse(status_code=422, content={"detail": str(exc), "kind": "config"})

    @app.exception_handler(CalibrationError)
    async def _calibration_error(request: Request, exc: Exception) -> JSONResponse:
        return JSONResponse(status_code=422, content={"detail": str(exc), "kind": "calibration"})

    @app.exception_handler(OSError)
    async def _io_error(request: Request, exc: Exception) -> JSONResponse:
        return JSONResponse(status_code=500, content={"detail": str(exc), "kind": "io"})

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=_code_version())

    @app.post("/experiments/run", response_model=RunResponse)
    def experiments_run(req: RunRequest) -> RunResponse:
        cfg = _apply_overrides(parse_config(req.config_text), req)
        if req.expect_experiment is not None and cfg.experiment != req.expect_experiment:
            raise ConfigurationError(
                f"config declares experiment = {cfg.experiment}; run 'sim {cfg.experiment}'"
            )
        result = run(cfg, workers=req.workers)
        return RunResponse(
            experiment=result.experiment,
            ok=result.ok,
            header=list(result.header),
            rows=[list(row) for row in result.rows],
            csv_path=result.csv_path,
            summary_path=result.summary_path,
            wall_time_s=result.wall_time_s,
            config_echo=result.config_echo,
        )

    @app.post("/experiments/calibrate-noise", response_model=CalibrateResponse)
    def experiments_calibrate(req: CalibrateRequest) -> CalibrateResponse:
        cfg = _apply_overrides(parse_config(req.config_text), req)
        return CalibrateResponse(noise_dbw=calibrate_noise(req.target_peak_n, cfg, workers=req.workers))

    @app.post("/validate", response_model=ValidateResponse)
    def validate(req: ValidateRequest) -> ValidateResponse:
        checks = run_validation(req.master_seed)
        return ValidateResponse(
            ok=all(c.ok for c in checks),
            checks=[CheckItem(name=c.name, ok=c.ok, detail=c.detail) for c in checks],
        )

    @app.post("/analysis/contact-distance", response_model=ContactDistanceResponse)
    def contact_distance(req: ContactDistanceRequest) -> ContactDistanceResponse:
        law = DistanceLaw(_analysis_shell(req.kind, req.n_sats, req.altitude_km), EARTH_RADIUS_KM)
        values = contact_distance_ccdf(law, np.asarray(req.distances_km, dtype=float))
        return ContactDistanceResponse(ccdf=np.atleast_1d(values).tolist())

    @app.post("/analysis/availability", response_model=AvailabilityResponse)
    def availability(req: AvailabilityRequest) -> AvailabilityResponse:
        shell = _analysis_shell(req.kind, req.n_sats, req.altitude_km)
        return AvailabilityResponse(availability=availability_probability(shell, EARTH_RADIUS_KM))

    @app.post("/channel/sr-pdf", response_model=SrPdfResponse)
    def channel_sr_pdf(req: SrPdfRequest) -> SrPdfResponse:
        values = sr_pdf(np.asarray(req.w, dtype=float), req.b, req.m, req.omega)
        return SrPdfResponse(pdf=np.atleast_1d(values).tolist())

    @app.post("/coverage/direct", response_model=DirectCoverageResponse)
    def coverage_direct(req: DirectCoverageRequest) -> DirectCoverageResponse:
        # reuse the experiment plumbing so defaults stay in one place
        cfg = parse_config(
            "experiment = custom\n"
            f"trials = {req.trials}\n"
            f"master_seed = {req.master_seed}\n"
            f"shell.n_sats = {req.n_sats}\n"
            f"shell.altitude_km = {req.altitude_km!r}\n"
            f"shell.tx_power_dbw = {req.tx_power_dbw!r}\n"
            f"threshold_db = {req.threshold_db!r}\n"
            f"channel.alpha = {req.alpha!r}\n"
            f"channel.fading = {req.fading}\n"
            + (f"noise_dbw = {req.noise_dbw!r}\n" if req.noise_dbw is not None else "")
            + f"channel.nlos = {req.nlos}\n"
            + (
                f"channel.nlos_constant_dbw = {req.nlos_constant_dbw!r}\n"
                if req.nlos_constant_dbw is not None
                else ""
            )
            + f"system = {req.system}\n"
        )
        value, stderr = _sat_point((cfg, 0, 0))
        return DirectCoverageResponse(coverage=value, stderr=stderr, trials=req.trials)

    @app.post("/latency/average", response_model=LatencyResponse)
    def latency_average(req: LatencyRequest) -> LatencyResponse:
        shell = ShellSpec(kind=Bpp(count=req.n_sats), altitude_km=req.altitude_km, tx_power_dbw=15.0)
        mode = (
            InterSatellite()
            if req.mode == "inter_satellite"
            else GwRelay(relay_count=req.relay_gw_count)
        )
        est = average_latency(shell, mode, req.trials, RngStream(req.master_seed))
        return LatencyResponse(
            mean_ms=None if est.delivered == 0 else est.mean_ms,
            stderr_ms=None if est.delivered == 0 else est.stderr_ms,
            unreachable_frac=est.unreachable_frac,
            delivered=est.delivered,
            trials=est.trials,
        )

    return app

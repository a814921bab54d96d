"""Request and response bodies for the HTTP service."""
from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: Literal["ok"]
    version: str


class RunRequest(BaseModel):
    """An experiment config in the flat text format, plus optional overrides."""

    config_text: str
    master_seed: int | None = None
    trials: int | None = Field(default=None, ge=1)
    output_dir: str | None = None
    workers: int | None = Field(default=None, ge=1)
    expect_experiment: str | None = None


class RunResponse(BaseModel):
    experiment: str
    ok: bool
    header: list[str]
    rows: list[list[Any]]
    csv_path: str | None
    summary_path: str | None
    wall_time_s: float
    config_echo: str


class CalibrateRequest(BaseModel):
    config_text: str
    target_peak_n: int
    master_seed: int | None = None
    trials: int | None = Field(default=None, ge=1)
    workers: int | None = Field(default=None, ge=1)


class CalibrateResponse(BaseModel):
    noise_dbw: float


class CheckItem(BaseModel):
    name: str
    ok: bool
    detail: str


class ValidateRequest(BaseModel):
    master_seed: int = 0


class ValidateResponse(BaseModel):
    ok: bool
    checks: list[CheckItem]


class ContactDistanceRequest(BaseModel):
    n_sats: int = Field(ge=0)
    altitude_km: float = Field(gt=0)
    distances_km: list[float]
    kind: Literal["bpp", "ppp"] = "bpp"


class ContactDistanceResponse(BaseModel):
    ccdf: list[float]


class AvailabilityRequest(BaseModel):
    n_sats: int = Field(ge=0)
    altitude_km: float = Field(gt=0)
    kind: Literal["bpp", "ppp"] = "bpp"


class AvailabilityResponse(BaseModel):
    availability: float


class SrPdfRequest(BaseModel):
    b: float = Field(gt=0)
    m: float = Field(gt=0)
    omega: float = Field(ge=0)
    w: list[float]


class SrPdfResponse(BaseModel):
    pdf: list[float]


class DirectCoverageRequest(BaseModel):
    """Satellite-link coverage at one grid point of the generic SINR model."""

    n_sats: int = Field(ge=1)
    altitude_km: float = Field(gt=0)
    trials: int = Field(ge=1)
    master_seed: int = 0
    noise_dbw: float | None = None
    threshold_db: float = -10.0
    tx_power_dbw: float = 15.0
    alpha: float = 2.0
    fading: Literal["sr", "rayleigh", "none"] = "sr"
    system: Literal["ideal", "noise_limited", "interference_limited", "generic"] = "generic"
    nlos: Literal["zero", "constant", "faded"] = "zero"
    nlos_constant_dbw: float | None = None


class DirectCoverageResponse(BaseModel):
    coverage: float
    stderr: float
    trials: int


class LatencyRequest(BaseModel):
    n_sats: int = Field(ge=0)
    altitude_km: float = Field(gt=0)
    mode: Literal["inter_satellite", "gw_relay"]
    trials: int = Field(ge=1)
    master_seed: int = 0
    relay_gw_count: int = Field(default=200, ge=1)


class LatencyResponse(BaseModel):
    mean_ms: float | None
    stderr_ms: float | None
    unreachable_frac: float
    delivered: int
    trials: int

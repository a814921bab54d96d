"""Config-driven experiment presets, noise calibration and the check suite."""

from .config import ExperimentConfig, canonical_text, load_config, parse_config, preset_text
from .runner import (
    FIG3_CSV_HEADER,
    FIG4_CSV_HEADER,
    FIG5_CSV_HEADER,
    ExperimentResult,
    calibrate_noise,
    run,
)
from .validation import CheckResult, run_validation

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "CheckResult",
    "FIG3_CSV_HEADER",
    "FIG4_CSV_HEADER",
    "FIG5_CSV_HEADER",
    "calibrate_noise",
    "canonical_text",
    "load_config",
    "parse_config",
    "preset_text",
    "run",
    "run_validation",
]

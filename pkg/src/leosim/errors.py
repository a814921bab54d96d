"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(ValueError):
    """A model or experiment configuration is inconsistent or incomplete."""


class CalibrationError(RuntimeError):
    """Noise calibration could not bracket the requested coverage peak."""

"""Flat key=value experiment configs.

The format is deliberately rigid: one ``key = value`` pair per line,
``#`` starts a full-line comment, grids are explicit comma lists, and
unknown keys are hard errors so a preset cannot silently drift when a
knob is renamed.  ``canonical_text`` emits a form that re-parses to an
equal config, which is what run summaries embed.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from importlib import resources

from ..errors import ConfigurationError

EXPERIMENTS = ("fig3", "fig4", "fig5", "custom", "validate")
FIGURE_PRESETS = ("fig3", "fig4", "fig5")
SHELL_KINDS = ("bpp", "ppp")
FADING_KINDS = ("sr", "rayleigh", "none")
NLOS_KINDS = ("zero", "constant", "faded")
SYSTEM_KINDS = ("ideal", "noise_limited", "interference_limited", "generic")

# engine constant; coverage experiments cannot rescale the planet
_STANDARD_EARTH_KM = 6371.0


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment run, fully determined together with master_seed."""

    experiment: str
    trials: int
    master_seed: int = 0
    earth_radius_km: float = 6371.0
    output_dir: str = "out"
    threshold_db: float = -10.0
    noise_dbw: float | None = None
    relay_gw_count: int = 200
    shell_kind: str = "bpp"
    n_sats: tuple[int, ...] = ()
    altitude_km: tuple[float, ...] = ()
    tx_power_dbw: float = 15.0
    gw_density_per_km2: tuple[float, ...] = (3.0,)
    alpha: float = 2.0
    fading: str = "sr"
    sr_b: float = 0.158
    sr_m: float = 19.4
    sr_omega: float = 1.29
    los_gain_db: float = 0.0
    nlos: str = "zero"
    nlos_constant_dbw: float | None = None
    system: str = "generic"

    def __post_init__(self) -> None:
        object.__setattr__(self, "n_sats", tuple(int(n) for n in self.n_sats))
        object.__setattr__(self, "altitude_km", tuple(float(a) for a in self.altitude_km))
        object.__setattr__(
            self, "gw_density_per_km2", tuple(float(d) for d in self.gw_density_per_km2)
        )
        self._check()

    def _check(self) -> None:
        def need(cond: bool, msg: str) -> None:
            if not cond:
                raise ConfigurationError(msg)

        need(self.experiment in EXPERIMENTS, f"unknown experiment {self.experiment!r}")
        need(self.shell_kind in SHELL_KINDS, f"unknown shell.kind {self.shell_kind!r}")
        need(self.fading in FADING_KINDS, f"unknown channel.fading {self.fading!r}")
        need(self.nlos in NLOS_KINDS, f"unknown channel.nlos {self.nlos!r}")
        need(self.system in SYSTEM_KINDS, f"unknown system {self.system!r}")
        need(self.trials >= 1, "trials must be >= 1")
        need(self.earth_radius_km > 0, "earth_radius_km must be positive")
        need(all(n > 0 for n in self.n_sats), "shell.n_sats entries must be positive")
        need(all(a > 0 for a in self.altitude_km), "shell.altitude_km entries must be positive")
        need(
            all(d > 0 for d in self.gw_density_per_km2),
            "gw.density_per_km2 entries must be positive",
        )
        need(self.relay_gw_count >= 1, "relay_gw_count must be >= 1")
        if self.nlos == "constant":
            need(self.nlos_constant_dbw is not None, "channel.nlos = constant needs channel.nlos_constant_dbw")
        if self.experiment in FIGURE_PRESETS:
            need(self.trials >= 100, "figure presets need trials >= 100")
        if self.experiment == "validate":
            return
        need(bool(self.n_sats), "shell.n_sats must be a nonempty grid")
        need(bool(self.altitude_km), "shell.altitude_km must be a nonempty grid")
        if self.experiment == "fig3":
            return
        # the coverage experiments
        need(
            self.earth_radius_km == _STANDARD_EARTH_KM,
            "coverage experiments use the standard 6371 km radius",
        )
        if self.experiment in ("fig4", "fig5") or self.system in ("noise_limited", "generic"):
            need(self.noise_dbw is not None, f"{self.experiment} needs noise_dbw")
        if self.experiment == "fig4":
            need(len(self.altitude_km) == 1, "fig4 sweeps n_sats at a single altitude")
        if self.experiment == "fig5":
            need(len(self.gw_density_per_km2) == 1, "fig5 fixes one gateway density")


# dotted key -> (field name, parser); parsers raise ValueError on bad input
def _int(s: str) -> int:
    return int(s, 10)


def _float(s: str) -> float:
    return float(s)


def _str(s: str) -> str:
    return s


def _int_list(s: str) -> tuple[int, ...]:
    return tuple(int(p.strip(), 10) for p in s.split(","))


def _float_list(s: str) -> tuple[float, ...]:
    return tuple(float(p.strip()) for p in s.split(","))


_KEYS = {
    "experiment": ("experiment", _str),
    "trials": ("trials", _int),
    "master_seed": ("master_seed", _int),
    "earth_radius_km": ("earth_radius_km", _float),
    "output_dir": ("output_dir", _str),
    "threshold_db": ("threshold_db", _float),
    "noise_dbw": ("noise_dbw", _float),
    "relay_gw_count": ("relay_gw_count", _int),
    "shell.kind": ("shell_kind", _str),
    "shell.n_sats": ("n_sats", _int_list),
    "shell.altitude_km": ("altitude_km", _float_list),
    "shell.tx_power_dbw": ("tx_power_dbw", _float),
    "gw.density_per_km2": ("gw_density_per_km2", _float_list),
    "channel.alpha": ("alpha", _float),
    "channel.fading": ("fading", _str),
    "channel.sr_b": ("sr_b", _float),
    "channel.sr_m": ("sr_m", _float),
    "channel.sr_omega": ("sr_omega", _float),
    "channel.los_gain_db": ("los_gain_db", _float),
    "channel.nlos": ("nlos", _str),
    "channel.nlos_constant_dbw": ("nlos_constant_dbw", _float),
    "system": ("system", _str),
}

_FIELD_TO_KEY = {field: key for key, (field, _) in _KEYS.items()}


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat format; unknown or repeated keys are errors."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or not key:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if key not in _KEYS:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        field_name, parse = _KEYS[key]
        if field_name in values:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[field_name] = parse(val)
        except ValueError as exc:
            raise ConfigurationError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    if "experiment" not in values:
        raise ConfigurationError("missing required key 'experiment'")
    if "trials" not in values:
        raise ConfigurationError("missing required key 'trials'")
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _render(value) -> str:
    if isinstance(value, tuple):
        return ",".join(_render(v) for v in value)
    if isinstance(value, float):
        return repr(value)  # repr round-trips exactly
    return str(value)


def canonical_text(config: ExperimentConfig) -> str:
    """Emit every set field in declaration order; parses back to an equal config."""
    lines = []
    for f in fields(ExperimentConfig):
        value = getattr(config, f.name)
        if value is None:
            continue
        lines.append(f"{_FIELD_TO_KEY[f.name]} = {_render(value)}")
    return "\n".join(lines) + "\n"


def preset_text(name: str) -> str:
    """The packaged config for a figure preset, as flat text."""
    if name not in FIGURE_PRESETS:
        raise ConfigurationError(f"no packaged preset for {name!r}; pass --config")
    return (
        resources.files("leosim.experiments").joinpath(f"presets/{name}.cfg").read_text("utf-8")
    )

"""Monte Carlo SINR engine: coverage probability, achievable rate, interference.

The direct-link engine is vectorized over trials in fixed chunks of
1024, each chunk drawing from its own substream, so results are
reproducible bit-for-bit regardless of how chunks are scheduled.  A
granular single-realization API (realize / sinr) exposes the same
semantics one draw at a time for inspection and testing.

Relayed scenarios multiply independently estimated per-link coverage
probabilities; the ground link never materializes the gateway field,
it samples the nearest-gateway distance law directly.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .channel import (
    ChannelSpec,
    antenna_gain,
    db_to_linear,
    deterministic_large_scale_db,
    mean_power_db,
    sample_large_scale_array,
    sample_small_scale,
)
from .errors import ConfigurationError
from .geometry import EARTH_RADIUS_KM, SurfacePoint
from .pointprocess import (
    Bpp,
    GroundField,
    Ppp,
    ShellSpec,
    _nppp_directions,
    ppp_mean_count,
    sample_nearest_ground_distances,
    shell_directions,
)
from .rng import RngStream, as_generator

_CHUNK = 1024


class SystemType(Enum):
    IDEAL = "ideal"
    NOISE_LIMITED = "noise_limited"
    INTERFERENCE_LIMITED = "interference_limited"
    GENERIC = "generic"


@dataclass(frozen=True)
class NlosZero:
    """Below-horizon satellites contribute no interference."""


@dataclass(frozen=True)
class NlosConstant:
    """Each below-horizon satellite contributes a fixed received power."""

    power_dbw: float


@dataclass(frozen=True)
class NlosFaded:
    """Below-horizon satellites interfere through the full faded channel."""


NlosInterference = NlosZero | NlosConstant | NlosFaded


@dataclass(frozen=True)
class SinrConfig:
    """Satellite-link SINR model: shells, channel, noise, threshold, system type."""

    shells: tuple[ShellSpec, ...]
    channel: ChannelSpec
    noise_power_dbw: float
    threshold_db: float
    bands: int = 1
    system_type: SystemType = SystemType.GENERIC
    nlos_interference: NlosInterference = NlosZero()

    def __post_init__(self) -> None:
        if isinstance(self.shells, ShellSpec):
            object.__setattr__(self, "shells", (self.shells,))
        else:
            object.__setattr__(self, "shells", tuple(self.shells))
        if not self.shells:
            raise ConfigurationError("need at least one shell")
        if self.bands < 1:
            raise ConfigurationError("bands must be >= 1")
        if not np.isfinite(self.threshold_db):
            raise ConfigurationError("threshold must be finite")

    def ordered_shells(self) -> list[ShellSpec]:
        # stable tier order so argmax tie-breaking lands on the lowest tier_id
        return sorted(self.shells, key=lambda s: s.tier_id)


@dataclass(frozen=True)
class Direct:
    """Satellite to user, single link."""


@dataclass(frozen=True)
class GwRelayed:
    """Satellite link relayed at a gateway; coverage is the link product."""

    gw_link: "GwLinkConfig"


@dataclass(frozen=True)
class Hybrid:
    """Terrestrial/satellite combination; outage on either link is outage."""

    gw_link: "GwLinkConfig"


LinkScenario = Direct | GwRelayed | Hybrid


@dataclass(frozen=True)
class GwLinkConfig:
    """Ground link from the nearest gateway, treated as noise-limited.

    ``distance_sampler`` overrides the nearest-gateway distance law; it
    receives (generator, n) and returns n distances in km.  The link
    geometry is grazing (zenith pi/2), which the default step LoS model
    still counts as line of sight.
    """

    channel: ChannelSpec
    field: GroundField = GroundField(3.0)
    tx_power_dbw: float = 15.0
    noise_power_dbw: float = -30.0
    threshold_db: float = -10.0
    zenith_rad: float = np.pi / 2
    distance_sampler: Callable[[np.random.Generator, int], np.ndarray] | None = None

    def sample_distances(self, gen: np.random.Generator, n: int) -> np.ndarray:
        if self.distance_sampler is not None:
            return np.asarray(self.distance_sampler(gen, n), dtype=float)
        return sample_nearest_ground_distances(self.field, gen, n)


@dataclass(frozen=True)
class CoverageEstimate:
    value: float
    stderr: float
    trials: int


@dataclass(frozen=True)
class RateEstimate:
    value: float
    stderr: float
    trials: int


@dataclass
class NetworkRealization:
    """One Monte Carlo draw of the whole visible sky, with fading attached."""

    user: SurfacePoint
    directions: np.ndarray  # (n, 3) unit vectors, concatenated over shells
    shell_radius_km: np.ndarray
    tx_power_dbw: np.ndarray
    tier_id: np.ndarray
    distance_km: np.ndarray
    zenith_rad: np.ndarray
    visible: np.ndarray
    large_scale_db: np.ndarray
    los: np.ndarray
    small_scale: np.ndarray
    serving_index: int | None
    nearest_gw_km: float | None = None

    @property
    def interferer_indices(self) -> np.ndarray:
        idx = np.flatnonzero(self.visible)
        if self.serving_index is not None:
            idx = idx[idx != self.serving_index]
        return idx


def _chunks(trials: int):
    for c in range((trials + _CHUNK - 1) // _CHUNK):
        yield c, min(_CHUNK, trials - c * _CHUNK)


def _gains(channel: ChannelSpec) -> tuple[float, float]:
    main = antenna_gain(channel.antenna, 0.0)
    side = antenna_gain(channel.antenna, np.pi)
    return main, side


def _shell_cosines(shell: ShellSpec, m: int, gen: np.random.Generator, user_dir: np.ndarray):
    """(m, n) polar cosines toward the user plus an existence mask."""
    kind = shell.kind
    if isinstance(kind, Bpp):
        if kind.count == 0:
            return np.empty((m, 0)), np.empty((m, 0), dtype=bool)
        cos_t = gen.uniform(-1.0, 1.0, (m, kind.count))
        return cos_t, np.ones_like(cos_t, dtype=bool)
    if isinstance(kind, Ppp):
        counts = gen.poisson(ppp_mean_count(shell), m)
        width = int(counts.max()) if m else 0
        if width == 0:
            return np.empty((m, 0)), np.empty((m, 0), dtype=bool)
        cos_t = gen.uniform(-1.0, 1.0, (m, width))
        exists = np.arange(width)[None, :] < counts[:, None]
        return cos_t, exists
    # latitude-weighted shells need real directions relative to the user
    cos_t = np.empty((m, kind.count))
    for t in range(m):
        cos_t[t] = _nppp_directions(kind, gen) @ user_dir
    return cos_t, np.ones_like(cos_t, dtype=bool)


def _direct_chunk(
    config: SinrConfig, user: SurfacePoint, m: int, gen: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One chunk of the direct-link engine: (sinr, interference_w, has_server)."""
    r_u = user.radius_km
    main_db, side_db = _gains(config.channel)
    alpha = config.channel.path_loss_exponent
    ls_model = config.channel.large_scale

    cos_parts, exists_parts, dist_parts, vis_parts = [], [], [], []
    tx_parts, rs_parts = [], []
    for shell in config.ordered_shells():
        cos_t, exists = _shell_cosines(shell, m, gen, user.direction)
        r_s = shell.shell_radius_km
        dist = np.sqrt(r_u * r_u + r_s * r_s - 2.0 * r_u * r_s * cos_t)
        vis = exists & (cos_t >= r_u / r_s)
        cos_parts.append(cos_t)
        exists_parts.append(exists)
        dist_parts.append(dist)
        vis_parts.append(vis)
        n_cols = cos_t.shape[1]
        tx_parts.append(np.full(n_cols, shell.tx_power_dbw))
        rs_parts.append(np.full(n_cols, r_s))

    exists = np.concatenate(exists_parts, axis=1)
    dist = np.concatenate(dist_parts, axis=1)
    visible = np.concatenate(vis_parts, axis=1)
    tx = np.concatenate(tx_parts)
    r_s = np.concatenate(rs_parts)
    n_cols = dist.shape[1]

    if n_cols == 0:
        zero = np.zeros(m)
        return zero, zero.copy(), np.zeros(m, dtype=bool)

    dist_m = dist * 1000.0
    with np.errstate(invalid="ignore"):
        cos_zen = (r_s[None, :] ** 2 - r_u * r_u - dist * dist) / (2.0 * r_u * dist)
    zenith = np.arccos(np.clip(cos_zen, -1.0, 1.0))

    # fading draws happen for every satellite regardless of system type, so
    # per-draw comparisons across system types share identical randomness
    ls_gain, _ = sample_large_scale_array(ls_model, zenith.reshape(-1), gen)
    ls_gain = ls_gain.reshape(m, n_cols)
    g = sample_small_scale(config.channel.small_scale, gen, size=m * n_cols)
    g = np.asarray(g).reshape(m, n_cols)

    det_los = deterministic_large_scale_db(ls_model, los=True)
    mean_db = tx[None, :] + main_db + det_los - 10.0 * alpha * np.log10(dist_m)
    mean_db = np.where(visible, mean_db, -np.inf)
    has_server = visible.any(axis=1)
    serv = np.argmax(mean_db, axis=1)

    rows = np.arange(m)
    p_main = db_to_linear(tx[None, :] + main_db + ls_gain) * np.power(dist_m, -alpha) * g
    p_side = db_to_linear(tx[None, :] + side_db + ls_gain) * np.power(dist_m, -alpha) * g

    signal = np.where(has_server, p_main[rows, serv], 0.0)
    i_los = np.sum(np.where(visible, p_side, 0.0), axis=1)
    i_los = i_los - np.where(has_server, p_side[rows, serv], 0.0)
    i_los = np.maximum(i_los, 0.0)  # clip float cancellation noise

    below = exists & ~visible
    nlos = config.nlos_interference
    if isinstance(nlos, NlosZero):
        i_nlos = np.zeros(m)
    elif isinstance(nlos, NlosConstant):
        i_nlos = below.sum(axis=1) * db_to_linear(nlos.power_dbw)
    else:
        i_nlos = np.sum(np.where(below, p_side, 0.0), axis=1)

    noise_w = db_to_linear(config.noise_power_dbw)
    kind = config.system_type
    if kind is SystemType.IDEAL:
        sinr = np.where(has_server, np.inf, 0.0)
    else:
        if kind is SystemType.NOISE_LIMITED:
            denom = noise_w + i_nlos
        elif kind is SystemType.INTERFERENCE_LIMITED:
            denom = i_los + i_nlos
        else:
            denom = noise_w + i_los + i_nlos
        with np.errstate(divide="ignore", invalid="ignore"):
            sinr = np.where(denom > 0.0, signal / np.where(denom > 0, denom, 1.0), np.inf)
        sinr = np.where(has_server, sinr, 0.0)
    return sinr, i_los + i_nlos, has_server


def _default_user() -> SurfacePoint:
    return SurfacePoint(np.array([0.0, 0.0, 1.0]), EARTH_RADIUS_KM)


def _chunk_gen(rng: "RngStream | np.random.Generator", c: int) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.substream(c).generator()
    return rng  # plain generators run chunks sequentially off one stream


def sinr_samples(
    config: SinrConfig,
    trials: int,
    rng: "RngStream | np.random.Generator",
    user: SurfacePoint | None = None,
) -> np.ndarray:
    """All per-trial SINR draws of the direct link, in trial order."""
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    user = user or _default_user()
    out = np.empty(trials)
    for c, m in _chunks(trials):
        out[c * _CHUNK : c * _CHUNK + m] = _direct_chunk(config, user, m, _chunk_gen(rng, c))[0]
    return out


def _direct_coverage(
    config: SinrConfig,
    trials: int,
    rng: "RngStream | np.random.Generator",
    user: SurfacePoint | None,
) -> CoverageEstimate:
    user = user or _default_user()
    t_lin = db_to_linear(config.threshold_db)
    covered = 0
    for c, m in _chunks(trials):
        sinr, _, _ = _direct_chunk(config, user, m, _chunk_gen(rng, c))
        covered += int(np.count_nonzero(sinr > t_lin))
    p = covered / trials
    return CoverageEstimate(p, float(np.sqrt(p * (1.0 - p) / trials)), trials)


def link_coverage(
    gw: GwLinkConfig, trials: int, rng: "RngStream | np.random.Generator"
) -> CoverageEstimate:
    """Noise-limited ground-link coverage over the nearest-node distance law."""
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    t_lin = db_to_linear(gw.threshold_db)
    noise_w = db_to_linear(gw.noise_power_dbw)
    main_db, _ = _gains(gw.channel)
    alpha = gw.channel.path_loss_exponent
    covered = 0
    for c, m in _chunks(trials):
        gen = _chunk_gen(rng, c)
        d = gw.sample_distances(gen, m)
        if np.any(d <= 0):
            raise ConfigurationError("distance sampler must return positive distances")
        ls_gain, _ = sample_large_scale_array(
            gw.channel.large_scale, np.full(m, gw.zenith_rad), gen
        )
        g = np.asarray(sample_small_scale(gw.channel.small_scale, gen, size=m))
        s = db_to_linear(gw.tx_power_dbw + main_db + ls_gain) * np.power(d * 1000.0, -alpha) * g
        covered += int(np.count_nonzero(s / noise_w > t_lin))
    p = covered / trials
    return CoverageEstimate(p, float(np.sqrt(p * (1.0 - p) / trials)), trials)


def _split(rng: "RngStream | np.random.Generator"):
    if isinstance(rng, RngStream):
        return rng.substream(0), rng.substream(1)
    return rng, rng  # sequential consumption keeps determinism for one call


def coverage_probability(
    config: SinrConfig,
    scenario: LinkScenario,
    trials: int,
    rng: "RngStream | np.random.Generator",
    user: SurfacePoint | None = None,
) -> CoverageEstimate:
    """P(SINR > threshold); relayed scenarios multiply per-link coverages."""
    if isinstance(scenario, Direct):
        return _direct_coverage(config, trials, rng, user)
    sat_rng, gw_rng = _split(rng)
    sat = _direct_coverage(config, trials, sat_rng, user)
    gw = link_coverage(scenario.gw_link, trials, gw_rng)
    p = sat.value * gw.value
    se = np.sqrt((sat.stderr * gw.value) ** 2 + (gw.stderr * sat.value) ** 2)
    return CoverageEstimate(p, float(se), trials)


def _link_rate(gw: GwLinkConfig, bands: int, trials: int, rng) -> RateEstimate:
    noise_w = db_to_linear(gw.noise_power_dbw)
    main_db, _ = _gains(gw.channel)
    alpha = gw.channel.path_loss_exponent
    part_sum = np.zeros((len(list(_chunks(trials))),))
    part_sq = np.zeros_like(part_sum)
    for c, m in _chunks(trials):
        gen = _chunk_gen(rng, c)
        d = gw.sample_distances(gen, m)
        ls_gain, _ = sample_large_scale_array(
            gw.channel.large_scale, np.full(m, gw.zenith_rad), gen
        )
        g = np.asarray(sample_small_scale(gw.channel.small_scale, gen, size=m))
        s = db_to_linear(gw.tx_power_dbw + main_db + ls_gain) * np.power(d * 1000.0, -alpha) * g
        rate = np.log2(1.0 + s / noise_w) / bands
        part_sum[c] = rate.sum()
        part_sq[c] = np.square(rate).sum()
    mean = part_sum.sum() / trials
    var = max(part_sq.sum() / trials - mean * mean, 0.0)
    return RateEstimate(float(mean), float(np.sqrt(var / trials)), trials)


def average_rate(
    config: SinrConfig,
    scenario: LinkScenario,
    trials: int,
    rng: "RngStream | np.random.Generator",
    user: SurfacePoint | None = None,
) -> RateEstimate:
    """Mean of log2(1 + SINR) per orthogonal band; zero-SINR draws contribute 0.

    For relayed scenarios the reported rate is the bottleneck link's
    average rate (the relay cannot forward faster than either hop).
    """
    if config.system_type is SystemType.IDEAL:
        raise ConfigurationError("rate is unbounded for an ideal system")
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    user = user or _default_user()

    def direct(r) -> RateEstimate:
        n_chunks = len(list(_chunks(trials)))
        part_sum = np.zeros(n_chunks)
        part_sq = np.zeros(n_chunks)
        for c, m in _chunks(trials):
            sinr, _, _ = _direct_chunk(config, user, m, _chunk_gen(r, c))
            rate = np.log2(1.0 + sinr) / config.bands
            part_sum[c] = rate.sum()
            part_sq[c] = np.square(rate).sum()
        mean = part_sum.sum() / trials
        var = max(part_sq.sum() / trials - mean * mean, 0.0)
        return RateEstimate(float(mean), float(np.sqrt(var / trials)), trials)

    if isinstance(scenario, Direct):
        return direct(rng)
    sat_rng, gw_rng = _split(rng)
    sat = direct(sat_rng)
    gw = _link_rate(scenario.gw_link, config.bands, trials, gw_rng)
    return sat if sat.value <= gw.value else gw


def interference_laplace(
    config: SinrConfig,
    s,
    trials: int,
    rng: "RngStream | np.random.Generator",
    user: SurfacePoint | None = None,
) -> "float | np.ndarray":
    """Monte Carlo Laplace transform E[exp(-s I)] of the aggregate interference."""
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s_arr < 0):
        raise ConfigurationError("s must be >= 0")
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    user = user or _default_user()
    parts = np.zeros((len(list(_chunks(trials))), len(s_arr)))
    for c, m in _chunks(trials):
        _, interf, _ = _direct_chunk(config, user, m, _chunk_gen(rng, c))
        parts[c] = np.exp(-np.outer(interf, s_arr)).sum(axis=0)
    out = parts.sum(axis=0) / trials
    return float(out[0]) if np.ndim(s) == 0 else out


def realize(
    config: SinrConfig, user: SurfacePoint, rng: "RngStream | np.random.Generator"
) -> NetworkRealization:
    """One full network draw with positions, association and fading attached."""
    gen = as_generator(rng)
    dir_parts, rs_parts, tx_parts, tier_parts = [], [], [], []
    for shell in config.ordered_shells():
        dirs = shell_directions(shell, gen)
        dir_parts.append(dirs.reshape(-1, 3))
        rs_parts.append(np.full(len(dirs), shell.shell_radius_km))
        tx_parts.append(np.full(len(dirs), shell.tx_power_dbw))
        tier_parts.append(np.full(len(dirs), shell.tier_id, dtype=int))
    directions = np.concatenate(dir_parts, axis=0) if dir_parts else np.empty((0, 3))
    r_s = np.concatenate(rs_parts) if rs_parts else np.empty(0)
    tx = np.concatenate(tx_parts) if tx_parts else np.empty(0)
    tier = np.concatenate(tier_parts) if tier_parts else np.empty(0, dtype=int)

    r_u = user.radius_km
    cos_t = directions @ user.direction
    dist = np.sqrt(r_u * r_u + r_s * r_s - 2.0 * r_u * r_s * cos_t)
    visible = cos_t >= r_u / r_s
    with np.errstate(invalid="ignore", divide="ignore"):
        cos_zen = (r_s * r_s - r_u * r_u - dist * dist) / (2.0 * r_u * dist)
    zenith = np.arccos(np.clip(cos_zen, -1.0, 1.0))

    ls_gain, los = sample_large_scale_array(config.channel.large_scale, zenith, gen)
    g = np.asarray(sample_small_scale(config.channel.small_scale, gen, size=len(dist)))

    serving: int | None = None
    if np.any(visible):
        mean_db = mean_power_db(config.channel, 0.0, dist[visible]) + tx[visible]
        serving = int(np.flatnonzero(visible)[np.argmax(mean_db)])

    return NetworkRealization(
        user=user,
        directions=directions,
        shell_radius_km=r_s,
        tx_power_dbw=tx,
        tier_id=tier,
        distance_km=dist,
        zenith_rad=zenith,
        visible=visible,
        large_scale_db=ls_gain,
        los=los,
        small_scale=g,
        serving_index=serving,
    )


def sinr(realization: NetworkRealization, config: SinrConfig) -> float:
    """SINR of one realization under the config's system type; 0 with no server."""
    if realization.serving_index is None:
        return 0.0
    main_db, side_db = _gains(config.channel)
    alpha = config.channel.path_loss_exponent
    idx = realization.serving_index
    dist_m = realization.distance_km * 1000.0

    def rx(i, gain_db) -> float:
        return float(
            db_to_linear(realization.tx_power_dbw[i] + gain_db + realization.large_scale_db[i])
            * dist_m[i] ** -alpha
            * realization.small_scale[i]
        )

    if config.system_type is SystemType.IDEAL:
        return np.inf
    signal = rx(idx, main_db)
    i_los = float(sum(rx(i, side_db) for i in realization.interferer_indices))
    below = np.flatnonzero(~realization.visible)
    nlos = config.nlos_interference
    if isinstance(nlos, NlosZero):
        i_nlos = 0.0
    elif isinstance(nlos, NlosConstant):
        i_nlos = len(below) * float(db_to_linear(nlos.power_dbw))
    else:
        i_nlos = float(sum(rx(i, side_db) for i in below))
    noise_w = float(db_to_linear(config.noise_power_dbw))

    kind = config.system_type
    if kind is SystemType.NOISE_LIMITED:
        denom = noise_w + i_nlos
    elif kind is SystemType.INTERFERENCE_LIMITED:
        denom = i_los + i_nlos
    else:
        denom = noise_w + i_los + i_nlos
    return float(signal / denom) if denom > 0 else np.inf

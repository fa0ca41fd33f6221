"""Cluster/ray fast fading: large-scale parameters through channel coefficients.

Angles are generated in degrees (the parameter tables are in degrees) and
stored in radians on :class:`RayParams` and :class:`ChannelMatrix`.

Cache orientation: a matrix is stored for the (tx, rx) order of the query
that generated it. A query in the opposite direction gets a view with the
element axes swapped (``H'[s, u, n] = H[u, s, n]``) and arrival/departure
angles exchanged; delays, powers and Dopplers are direction independent.
"""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass, replace

import numpy as np

from .antenna import AntennaArray
from .condition import ChannelConditionModel, FixedConditionModel
from .geometry import AngularPair, Orientation, gcs_to_lcs_array, relative_geometry, unit_vectors
from .mobility import Node, pair_key
from .rng import RandomStreams, as_streams
from .tables import LSP_ORDER, Condition, LspRecord, ParameterCatalog, ScenarioParams, default_catalog

SPEED_OF_LIGHT = 299_792_458.0
AZIMUTH_SPREAD_CAP_DEG = 104.0
ZENITH_SPREAD_CAP_DEG = 52.0
PRUNE_THRESHOLD_DB = -25.0
N_STRONGEST_SUBCLUSTERED = 2


@dataclass(frozen=True)
class LargeScaleParams:
    sf_db: float
    k_db: float
    ds: float
    asd: float
    asa: float
    zsd: float
    zsa: float
    mu_lgzsd: float
    mu_offset_zod: float


def lsp_environment(
    params: ScenarioParams, condition: Condition, d2d: float, h_bs: float, h_ut: float, fc: float
) -> dict[str, float]:
    """Variables for the LSP expressions; fc in GHz, raised to the table floor."""
    rec = params.lsp[Condition(condition)]
    d2d = max(d2d, 1.0)
    return {
        "d2D": d2d, "d3D": math.hypot(d2d, h_bs - h_ut), "hBS": h_bs, "hUT": h_ut,
        "fc": max(fc / 1e9, rec.fc_floor_ghz), "dBP": math.inf,
        "h": params.info.avg_building_height, "W": params.info.street_width,
    }


def _sqrt_psd(mat: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(mat)
    if w.min() < -1e-10:
        raise ValueError("LSP correlation matrix is not positive semi-definite")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def draw_large_scale_params(
    rec: LspRecord, env: dict[str, float], rng: np.random.Generator, size: int | None = None
):
    """Correlated LSPs; ``size`` returns a list of draws (vectorised path for statistics)."""
    root = _sqrt_psd(rec.correlation_matrix())
    n = 1 if size is None else size
    z = rng.standard_normal((n, len(LSP_ORDER))) @ root.T
    col = {name: z[:, i] for i, name in enumerate(LSP_ORDER)}

    def lognormal(mu, sigma, key):
        return 10.0 ** (mu(**env) + sigma(**env) * col[key])

    sf = rec.sigma_SF * col["SF"]
    k = rec.mu_K + rec.sigma_K * col["K"]
    ds = lognormal(rec.mu_lgDS, rec.sigma_lgDS, "DS")
    asd = np.minimum(lognormal(rec.mu_lgASD, rec.sigma_lgASD, "ASD"), AZIMUTH_SPREAD_CAP_DEG)
    asa = np.minimum(lognormal(rec.mu_lgASA, rec.sigma_lgASA, "ASA"), AZIMUTH_SPREAD_CAP_DEG)
    zsd = np.minimum(lognormal(rec.mu_lgZSD, rec.sigma_lgZSD, "ZSD"), ZENITH_SPREAD_CAP_DEG)
    zsa = np.minimum(lognormal(rec.mu_lgZSA, rec.sigma_lgZSA, "ZSA"), ZENITH_SPREAD_CAP_DEG)
    mu_zsd = rec.mu_lgZSD(**env)
    offset = rec.mu_offset_ZOD(**env)
    draws = [
        LargeScaleParams(float(sf[i]), float(k[i]), float(ds[i]), float(asd[i]), float(asa[i]),
                         float(zsd[i]), float(zsa[i]), mu_zsd, offset)
        for i in range(n)
    ]
    return draws[0] if size is None else draws


def los_delay_scaling(k_db: float) -> float:
    return 0.7705 - 0.0433 * k_db + 0.0002 * k_db**2 + 0.000017 * k_db**3


@dataclass(frozen=True)
class ClusterDelays:
    delays: np.ndarray  # LOS-scaled in LOS, else equal to raw
    raw: np.ndarray


def generate_cluster_delays(
    ds: float, r_tau: float, k_db: float | None, condition: Condition, n: int, rng: np.random.Generator
) -> ClusterDelays:
    if n < 1 or ds <= 0 or r_tau <= 1:
        raise ValueError(f"need n >= 1, DS > 0, r_tau > 1 (got {n}, {ds}, {r_tau})")
    tau = -r_tau * ds * np.log(rng.uniform(size=n))
    tau = np.sort(tau - tau.min())
    if Condition(condition) == Condition.LOS:
        return ClusterDelays(tau / los_delay_scaling(k_db), tau)
    return ClusterDelays(tau, tau)


@dataclass(frozen=True)
class ClusterPowers:
    """Normalised powers of the surviving clusters.

    ``scattered`` sums to 1 and feeds the coefficients; ``powers`` also carries
    the specular K/(K+1) term on cluster 1 in LOS and feeds the angle step.
    """

    powers: np.ndarray
    scattered: np.ndarray
    kept: np.ndarray


def generate_cluster_powers(
    raw_delays: np.ndarray,
    ds: float,
    r_tau: float,
    xi_db: float,
    k_db: float | None,
    condition: Condition,
    rng: np.random.Generator,
    threshold_db: float = PRUNE_THRESHOLD_DB,
) -> ClusterPowers:
    raw_delays = np.asarray(raw_delays, dtype=float)
    shadow = rng.normal(0.0, xi_db, size=raw_delays.size) if xi_db > 0 else np.zeros(raw_delays.size)
    p = np.exp(-raw_delays * (r_tau - 1.0) / (r_tau * ds)) * 10.0 ** (-shadow / 10.0)
    p = p / p.sum()
    los = Condition(condition) == Condition.LOS

    def with_specular(scattered):
        if not los:
            return scattered.copy()
        k_lin = 10.0 ** (k_db / 10.0)
        if math.isinf(k_lin):
            out = np.zeros_like(scattered)
            out[0] = 1.0
            return out
        out = scattered / (k_lin + 1.0)
        out[0] += k_lin / (k_lin + 1.0)
        return out

    full = with_specular(p)
    kept = np.flatnonzero(full >= full.max() * 10.0 ** (threshold_db / 10.0))
    if kept.size == 0:
        raise ValueError("all clusters pruned")
    scattered = p[kept] / p[kept].sum()
    return ClusterPowers(with_specular(scattered), scattered, kept)


@dataclass(frozen=True)
class RayParams:
    """Per-ray angles (N x M, radians), XPR (linear) and the four initial phases."""

    zoa: np.ndarray
    aoa: np.ndarray
    zod: np.ndarray
    aod: np.ndarray
    cluster_zoa: np.ndarray
    cluster_aoa: np.ndarray
    cluster_zod: np.ndarray
    cluster_aod: np.ndarray
    kappa: np.ndarray
    phases: np.ndarray  # (N, M, 4): theta-theta, theta-phi, phi-theta, phi-phi

    @property
    def shape(self) -> tuple[int, int]:
        return self.aoa.shape


def _reflect_zenith_deg(theta):
    t = np.mod(theta, 360.0)
    return np.where(t > 180.0, 360.0 - t, t)


def _wrap_deg(phi):
    return 180.0 - np.mod(180.0 - phi, 360.0)


def _subcluster_groups(params: ScenarioParams, n_rays: int) -> list[np.ndarray]:
    return [np.array([r - 1 for r in sc.rays if r <= n_rays], dtype=int) for sc in params.subclusters]


def _permute_within(groups: list[np.ndarray], rng: np.random.Generator, n_rays: int) -> np.ndarray:
    perm = np.arange(n_rays)
    for g in groups:
        if g.size:
            perm[g] = g[rng.permutation(g.size)]
    return perm


def generate_ray_angles(
    lsp: LargeScaleParams,
    powers: np.ndarray,
    params: ScenarioParams,
    condition: Condition,
    aod_los: AngularPair,
    aoa_los: AngularPair,
    rng: np.random.Generator,
    coupling_rng: np.random.Generator | None = None,
    strongest: tuple[int, ...] = (),
) -> RayParams:
    """Cluster centres, ray offsets and random coupling.

    ``powers`` includes the specular term in LOS. Rays of the clusters in
    ``strongest`` are only coupled within their sub-clusters. XPR and phases
    are left at neutral values; see :func:`draw_xpr_and_phases`.
    """
    condition = Condition(condition)
    rec = params.lsp[condition]
    los = condition == Condition.LOS
    powers = np.asarray(powers, dtype=float)
    n = powers.size
    alpha = np.asarray(params.ray_offsets.alpha[: rec.n_rays])
    m = alpha.size
    ratio = powers / powers.max()
    k = lsp.k_db

    c_phi = params.azimuth_scaling.lookup(rec.n_clusters)
    c_theta = params.zenith_scaling.lookup(rec.n_clusters)
    if los:
        c_phi *= 1.1035 - 0.028 * k - 0.002 * k**2 + 0.0001 * k**3
        c_theta *= 1.3086 + 0.0339 * k - 0.0077 * k**2 + 0.0002 * k**3

    zod_los, aod_los_deg = aod_los.degrees()
    zoa_los, aoa_los_deg = aoa_los.degrees()

    def azimuth(spread, los_dir):
        base = 2.0 * (spread / 1.4) * np.sqrt(-np.log(ratio)) / c_phi
        phi = rng.choice((-1.0, 1.0), size=n) * base + rng.normal(0.0, spread / 7.0, size=n)
        phi = phi - phi[0] + los_dir if los else phi + los_dir
        return _wrap_deg(phi)

    def zenith(spread, los_dir, offset=0.0):
        base = -spread * np.log(ratio) / c_theta
        theta = rng.choice((-1.0, 1.0), size=n) * base + rng.normal(0.0, spread / 7.0, size=n)
        theta = theta - theta[0] + los_dir if los else theta + los_dir + offset
        return theta

    c_aoa = azimuth(lsp.asa, aoa_los_deg)
    c_aod = azimuth(lsp.asd, aod_los_deg)
    c_zoa = zenith(lsp.zsa, zoa_los)
    c_zod = zenith(lsp.zsd, zod_los, lsp.mu_offset_zod)

    aoa = _wrap_deg(c_aoa[:, None] + rec.c_ASA * alpha[None, :])
    aod = _wrap_deg(c_aod[:, None] + rec.c_ASD * alpha[None, :])
    zoa = _reflect_zenith_deg(c_zoa[:, None] + rec.c_ZSA * alpha[None, :])
    zod = _reflect_zenith_deg(c_zod[:, None] + (3.0 / 8.0) * 10.0**lsp.mu_lgzsd * alpha[None, :])

    # Coupling: shuffle departure azimuth, arrival zenith and departure zenith against arrival azimuth.
    crng = coupling_rng if coupling_rng is not None else rng
    sub_groups = _subcluster_groups(params, m)
    whole = [np.arange(m)]
    for i in range(n):
        groups = sub_groups if i in strongest else whole
        aod[i] = aod[i, _permute_within(groups, crng, m)]
        zoa[i] = zoa[i, _permute_within(groups, crng, m)]
        zod[i] = zod[i, _permute_within(groups, crng, m)]

    rad = np.radians
    return RayParams(
        zoa=rad(zoa), aoa=rad(aoa), zod=rad(zod), aod=rad(aod),
        cluster_zoa=rad(_reflect_zenith_deg(c_zoa)), cluster_aoa=rad(c_aoa),
        cluster_zod=rad(_reflect_zenith_deg(c_zod)), cluster_aod=rad(c_aod),
        kappa=np.ones((n, m)), phases=np.zeros((n, m, 4)),
    )


def draw_xpr_and_phases(
    rays: RayParams, mu_xpr: float, sigma_xpr: float, xpr_rng: np.random.Generator, phase_rng: np.random.Generator
) -> RayParams:
    shape = rays.shape
    kappa = 10.0 ** (xpr_rng.normal(mu_xpr, sigma_xpr, size=shape) / 10.0)
    phases = phase_rng.uniform(-math.pi, math.pi, size=shape + (4,))
    return replace(rays, kappa=kappa, phases=phases)


@dataclass
class BlockageConfig:
    """Stochastic blockage (Model A) settings; ``None`` fields come from the scenario."""

    enabled: bool = False
    n_blockers: int | None = None
    portrait_mode: bool = True
    blocker_distance_m: float | None = None
    blocker_width_deg: tuple[float, float] | None = None


@dataclass(frozen=True)
class Blocker:
    azimuth_deg: float
    azimuth_width_deg: float
    zenith_deg: float
    zenith_width_deg: float
    distance_m: float


def draw_blockers(params: ScenarioParams, config: BlockageConfig, rng: np.random.Generator) -> list[Blocker]:
    b = params.blockage
    n = b.n_blockers if config.n_blockers is None else config.n_blockers
    lo, hi = config.blocker_width_deg or (params.info.blocker_width_min_deg, params.info.blocker_width_max_deg)
    r = config.blocker_distance_m or params.info.blocker_distance_m
    return [
        Blocker(float(rng.uniform(0.0, 360.0)), float(rng.uniform(lo, hi)), b.blocker_zenith_deg,
                b.blocker_height_deg, r)
        for _ in range(n)
    ]


def _in_span(angle, centre, width):
    return np.abs(_wrap_deg(angle - centre)) <= width / 2.0


def _knife_edge(offset_deg, sign, distance, wavelength):
    cos_a = np.cos(np.radians(offset_deg))
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = (math.pi / 2.0) * np.sqrt(np.maximum(math.pi / wavelength * distance * (1.0 / cos_a - 1.0), 0.0))
        f = np.arctan(sign * arg) / math.pi
    return np.where(cos_a <= 0.0, sign * 0.5, f)


def blockage_attenuation(
    zoa,
    aoa,
    params: ScenarioParams,
    config: BlockageConfig,
    rng: np.random.Generator,
    wavelength: float,
    rx_orientation: Orientation = Orientation(),
    blockers: list[Blocker] | None = None,
) -> np.ndarray:
    """Per-cluster attenuation in dB (>= 0) for arrival angles in radians.

    Self-blocking is evaluated in the receiver's local frame, other blockers in
    the global frame. ``blockers`` bypasses the random placement.
    """
    zoa = np.atleast_1d(np.asarray(zoa, dtype=float))
    aoa = np.atleast_1d(np.asarray(aoa, dtype=float))
    att = np.zeros(zoa.shape)
    if not config.enabled:
        return att
    theta_l, phi_l = gcs_to_lcs_array(zoa, aoa, rx_orientation)
    region = params.self_blocking["portrait" if config.portrait_mode else "landscape"]
    inside = _in_span(np.degrees(phi_l), region.azimuth_deg, region.azimuth_width_deg) & (
        np.abs(np.degrees(theta_l) - region.zenith_deg) <= region.zenith_width_deg / 2.0
    )
    att[inside] += params.blockage.self_block_attenuation_db

    if blockers is None:
        blockers = draw_blockers(params, config, rng)
    phi = np.degrees(aoa)
    theta = np.degrees(zoa)
    for bl in blockers:
        inside = _in_span(phi, bl.azimuth_deg, bl.azimuth_width_deg) & (
            np.abs(theta - bl.zenith_deg) <= bl.zenith_width_deg / 2.0
        )
        if not inside.any():
            continue
        a1 = _wrap_deg(phi - (bl.azimuth_deg + bl.azimuth_width_deg / 2.0))
        a2 = _wrap_deg(phi - (bl.azimuth_deg - bl.azimuth_width_deg / 2.0))
        z1 = theta - (bl.zenith_deg + bl.zenith_width_deg / 2.0)
        z2 = theta - (bl.zenith_deg - bl.zenith_width_deg / 2.0)
        fa = _knife_edge(a1, -np.sign(a1), bl.distance_m, wavelength) + _knife_edge(
            a2, np.sign(a2), bl.distance_m, wavelength
        )
        fz = _knife_edge(z1, -np.sign(z1), bl.distance_m, wavelength) + _knife_edge(
            z2, np.sign(z2), bl.distance_m, wavelength
        )
        loss = -20.0 * np.log10(np.clip(1.0 - fa * fz, 1e-12, None))
        att[inside] += loss[inside]
    return att


@dataclass(frozen=True)
class ChannelMatrix:
    coefficients: np.ndarray  # (U, S, N), column-major so U varies fastest
    delays: np.ndarray
    powers: np.ndarray
    doppler: np.ndarray
    cluster_zoa: np.ndarray
    cluster_aoa: np.ndarray
    cluster_zod: np.ndarray
    cluster_aod: np.ndarray
    generated_at: float = 0.0
    node_ids: tuple[int, int] = (0, 1)
    condition: Condition = Condition.NLOS
    k_db: float | None = None
    generation: int = 0

    @property
    def n_clusters(self) -> int:
        return self.coefficients.shape[2]

    def reversed(self) -> "ChannelMatrix":
        """The same realisation seen from the other end of the link."""
        return replace(
            self,
            coefficients=np.asfortranarray(self.coefficients.transpose(1, 0, 2)),
            cluster_zoa=self.cluster_zod, cluster_aoa=self.cluster_aod,
            cluster_zod=self.cluster_zoa, cluster_aod=self.cluster_aoa,
            node_ids=self.node_ids[::-1],
        )


def _field(array: AntennaArray, zen, az):
    return array.field_pattern(zen, az)


def _array_phase(array: AntennaArray, zen, az, wavelength) -> np.ndarray:
    """exp(j 2pi r.d / lambda), shape (elements,) + zen.shape."""
    k = unit_vectors(np.asarray(zen, dtype=float), np.asarray(az, dtype=float))
    loc = array.element_locations(wavelength)
    return np.exp(1j * 2.0 * math.pi / wavelength * np.tensordot(loc, k, axes=([1], [-1])))


def assemble_channel_matrix(
    rays: RayParams,
    powers: np.ndarray,
    delays: np.ndarray,
    tx_array: AntennaArray,
    rx_array: AntennaArray,
    fc: float,
    condition: Condition,
    k_db: float | None = None,
    los_aod: AngularPair | None = None,
    los_aoa: AngularPair | None = None,
    d3d: float | None = None,
    tx_velocity=(0.0, 0.0, 0.0),
    rx_velocity=(0.0, 0.0, 0.0),
    groups: list[list[np.ndarray]] | None = None,
    group_delays: list[np.ndarray] | None = None,
    **meta,
) -> ChannelMatrix:
    """Per-cluster coefficients H[u, s, n] without Doppler or delay terms.

    ``powers`` are the scattered powers (sum 1). ``groups[n]`` optionally
    splits cluster n's rays into sub-clusters with extra delays
    ``group_delays[n]``; each output cluster keeps the sqrt(P_n / M) scale.
    Output clusters are stably sorted by delay.
    """
    condition = Condition(condition)
    n, m = rays.shape
    powers = np.asarray(powers, dtype=float)
    delays = np.asarray(delays, dtype=float)
    if powers.size != n or delays.size != n:
        raise ValueError(f"{n} clusters but {powers.size} powers and {delays.size} delays")
    wavelength = SPEED_OF_LIGHT / fc

    frt, frp = _field(rx_array, rays.zoa, rays.aoa)
    ftt, ftp = _field(tx_array, rays.zod, rays.aod)
    e = np.exp(1j * rays.phases)
    s = 1.0 / np.sqrt(rays.kappa)
    g = frt * (e[..., 0] * ftt + s * e[..., 1] * ftp) + frp * (s * e[..., 2] * ftt + e[..., 3] * ftp)
    g = g * np.sqrt(powers / m)[:, None]
    a_rx = _array_phase(rx_array, rays.zoa, rays.aoa, wavelength).reshape(rx_array.size, n * m)
    a_tx = _array_phase(tx_array, rays.zod, rays.aod, wavelength).reshape(tx_array.size, n * m)

    if groups is None:
        groups = [[np.arange(m)] for _ in range(n)]
        group_delays = [np.zeros(1) for _ in range(n)]
    out_parent, out_delay, out_frac = [], [], []
    weights = np.zeros((n * m, sum(len(gs) for gs in groups)), dtype=complex)
    col = 0
    for i, (gs, offs) in enumerate(zip(groups, group_delays)):
        for rset, off in zip(gs, offs):
            weights[i * m + rset, col] = g[i, rset]
            out_parent.append(i)
            out_delay.append(delays[i] + off)
            out_frac.append(rset.size / m)
            col += 1
    h = np.einsum("ur,sr,rg->usg", a_rx, a_tx, weights)
    out_parent = np.array(out_parent)
    out_power = powers[out_parent] * np.array(out_frac)

    los = condition == Condition.LOS
    if los:
        if k_db is None or los_aod is None or los_aoa is None or d3d is None:
            raise ValueError("LOS assembly needs k_db, los_aod, los_aoa and d3d")
        k_lin = 10.0 ** (k_db / 10.0)
        rt, rp = _field(rx_array, los_aoa.zenith, los_aoa.azimuth)
        tt, tp = _field(tx_array, los_aod.zenith, los_aod.azimuth)
        g_los = (rt * tt - rp * tp) * np.exp(-1j * 2.0 * math.pi * d3d / wavelength)
        h_los = g_los * np.outer(
            _array_phase(rx_array, los_aoa.zenith, los_aoa.azimuth, wavelength),
            _array_phase(tx_array, los_aod.zenith, los_aod.azimuth, wavelength),
        )
        if math.isinf(k_lin):
            h[:] = 0.0
            out_power[:] = 0.0
            h[:, :, 0] = h_los
            out_power[0] = 1.0
        else:
            h *= math.sqrt(1.0 / (k_lin + 1.0))
            out_power /= k_lin + 1.0
            h[:, :, 0] += math.sqrt(k_lin / (k_lin + 1.0)) * h_los
            out_power[0] += k_lin / (k_lin + 1.0)

    # Doppler of each cluster from its central direction; the LOS cluster is already on the geometric path.
    v_rx = np.asarray(rx_velocity, dtype=float)
    v_tx = np.asarray(tx_velocity, dtype=float)
    r_rx = unit_vectors(rays.cluster_zoa, rays.cluster_aoa)
    r_tx = unit_vectors(rays.cluster_zod, rays.cluster_aod)
    doppler = ((r_rx @ v_rx) + (r_tx @ v_tx)) / wavelength

    order = np.argsort(np.array(out_delay), kind="stable")
    p = out_parent[order]
    return ChannelMatrix(
        coefficients=np.asfortranarray(h[:, :, order]),
        delays=np.array(out_delay)[order],
        powers=out_power[order],
        doppler=doppler[p],
        cluster_zoa=rays.cluster_zoa[p], cluster_aoa=rays.cluster_aoa[p],
        cluster_zod=rays.cluster_zod[p], cluster_aod=rays.cluster_aod[p],
        condition=condition,
        k_db=k_db if los else None,
        **meta,
    )


@dataclass
class _Entry:
    matrix: ChannelMatrix
    dims: tuple[int, int]


class ChannelModel:
    """Cached channel realisations per node pair.

    A pair is regenerated when the update period expires, when the channel
    condition differs from the one at generation, or when the array sizes
    change. Every regeneration redraws the whole pipeline.
    """

    def __init__(
        self,
        scenario: str | ScenarioParams,
        fc: float,
        condition_model: ChannelConditionModel | FixedConditionModel,
        catalog: ParameterCatalog | None = None,
        update_period: float = 0.0,
        blockage: BlockageConfig | None = None,
        rng: RandomStreams | int | None = None,
    ):
        self.params = scenario if isinstance(scenario, ScenarioParams) else (catalog or default_catalog())[scenario]
        if not 0.5e9 <= fc <= 100e9:
            raise ValueError(f"carrier frequency {fc / 1e9:g} GHz outside 0.5-100 GHz")
        if update_period < 0:
            raise ValueError("update_period must be >= 0")
        self.fc = float(fc)
        self.condition_model = condition_model
        self.update_period = float(update_period)
        self.blockage = blockage or BlockageConfig()
        self._streams = as_streams(rng)
        self._cache: dict[tuple[int, int], _Entry] = {}
        self._lock = threading.Lock()
        self._counter = itertools.count(1)
        self.generations = 0

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.fc

    def _stale(self, entry: _Entry, cond: Condition, dims: tuple[int, int], now: float) -> bool:
        h = entry.matrix
        if entry.dims != dims or h.condition != cond:
            return True
        return self.update_period > 0 and now - h.generated_at >= self.update_period - 1e-9

    def get_channel(
        self, tx: Node, rx: Node, tx_array: AntennaArray, rx_array: AntennaArray, now: float = 0.0
    ) -> ChannelMatrix:
        key = pair_key(tx, rx)
        cond = self.condition_model.get_channel_condition(tx, rx, now).state
        with self._lock:
            entry = self._cache.get(key)
            if entry is not None:
                stored_tx = entry.matrix.node_ids[0]
                dims = (tx_array.size, rx_array.size) if stored_tx == tx.node_id else (rx_array.size, tx_array.size)
                if not self._stale(entry, cond, dims, now):
                    h = entry.matrix
                    return h if stored_tx == tx.node_id else h.reversed()
            h = self.generate(tx, rx, tx_array, rx_array, cond, now)
            self._cache[key] = _Entry(h, (tx_array.size, rx_array.size))
            return h

    def generate(
        self, tx: Node, rx: Node, tx_array: AntennaArray, rx_array: AntennaArray, condition: Condition, now: float
    ) -> ChannelMatrix:
        """Run the full pipeline for one realisation (no caching)."""
        params = self.params
        condition = Condition(condition)
        rec = params.lsp[condition]
        pt, pr = tx.position_at(now), rx.position_at(now)
        geo = relative_geometry(pt, pr)
        h_bs, h_ut = max(pt.z, pr.z), min(pt.z, pr.z)
        env = lsp_environment(params, condition, geo.d2d, h_bs, h_ut, self.fc)
        st = self._streams
        lsp = draw_large_scale_params(rec, env, st("lsp"))
        los = condition == Condition.LOS
        k_db = lsp.k_db if los else None

        cd = generate_cluster_delays(lsp.ds, rec.r_tau, k_db, condition, rec.n_clusters, st("delays"))
        cp = generate_cluster_powers(cd.raw, lsp.ds, rec.r_tau, rec.xi, k_db, condition, st("powers"))
        delays = cd.delays[cp.kept]
        strongest = tuple(int(i) for i in np.argsort(-cp.scattered, kind="stable")[:N_STRONGEST_SUBCLUSTERED])
        rays = generate_ray_angles(
            lsp, cp.powers, params, condition, geo.aod, geo.aoa, st("angles"), st("coupling"), strongest
        )
        rays = draw_xpr_and_phases(rays, rec.mu_XPR, rec.sigma_XPR, st("xpr"), st("phases"))

        c_ds = rec.c_DS_ns(**env) * 1e-9
        sub = _subcluster_groups(params, rec.n_rays)
        sub_off = np.array([sc.delay_offset_cds * c_ds for sc in params.subclusters])
        groups, offsets = [], []
        for i in range(delays.size):
            if i in strongest:
                groups.append(sub)
                offsets.append(sub_off)
            else:
                groups.append([np.arange(rec.n_rays)])
                offsets.append(np.zeros(1))

        self.generations += 1
        h = assemble_channel_matrix(
            rays, cp.scattered, delays, tx_array, rx_array, self.fc, condition,
            k_db=k_db, los_aod=geo.aod, los_aoa=geo.aoa, d3d=geo.d3d,
            tx_velocity=tx.velocity.as_array(), rx_velocity=rx.velocity.as_array(),
            groups=groups, group_delays=offsets,
            generated_at=now, node_ids=(tx.node_id, rx.node_id), generation=next(self._counter),
        )
        if self.blockage.enabled:
            att = blockage_attenuation(
                h.cluster_zoa, h.cluster_aoa, params, self.blockage, st("blockage"), self.wavelength,
                rx_array.orientation,
            )
            amp = 10.0 ** (-att / 20.0)
            h = replace(h, coefficients=np.asfortranarray(h.coefficients * amp), powers=h.powers * amp**2)
        return h

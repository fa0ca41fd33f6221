import math
from dataclasses import replace

import numpy as np
import pytest

import oracles
from scm38901.antenna import AntennaArray
from scm38901.condition import ChannelConditionModel, FixedConditionModel
from scm38901.fading import (
    SPEED_OF_LIGHT,
    Blocker,
    BlockageConfig,
    ChannelModel,
    LargeScaleParams,
    RayParams,
    assemble_channel_matrix,
    blockage_attenuation,
    draw_large_scale_params,
    generate_cluster_delays,
    generate_cluster_powers,
    generate_ray_angles,
    lsp_environment,
)
from scm38901.geometry import AngularPair, Orientation, Position3D, Velocity3D, relative_geometry
from scm38901.mobility import Node
from scm38901.tables import LSP_ORDER, Condition, Expr, default_catalog

UMA = default_catalog()["UMa"]
NLOS = UMA.lsp[Condition.NLOS]
FC = 28e9
LAMBDA = SPEED_OF_LIGHT / FC


def env(cond=Condition.NLOS, d2d=200.0):
    return lsp_environment(UMA, cond, d2d, 25.0, 1.5, FC)


def test_lsp_mean_lgds():
    e = env()
    draws = draw_large_scale_params(NLOS, e, np.random.default_rng(1), size=100_000)
    lg = np.log10([d.ds for d in draws])
    mu = NLOS.mu_lgDS(**e)
    assert abs(lg.mean() - mu) <= 0.01 * abs(mu)
    assert lg.std() == pytest.approx(NLOS.sigma_lgDS(**e), rel=0.02)


def test_lsp_correlation_ds_asd():
    draws = draw_large_scale_params(NLOS, env(), np.random.default_rng(2), size=100_000)
    r = np.corrcoef(np.log10([d.ds for d in draws]), np.log10([d.asd for d in draws]))[0, 1]
    assert abs(r - NLOS.correlation["ASD_DS"]) < 0.05


def test_lsp_zero_sigma_degenerate():
    zero = Expr(0.0)
    rec = replace(NLOS, sigma_lgDS=zero, sigma_lgASD=zero, sigma_lgASA=zero, sigma_lgZSA=zero,
                  sigma_lgZSD=zero, sigma_SF=0.0, sigma_K=0.0)
    e = env()
    for d in draw_large_scale_params(rec, e, np.random.default_rng(3), size=50):
        assert d.ds == pytest.approx(10 ** rec.mu_lgDS(**e))
        assert d.asa == pytest.approx(10 ** rec.mu_lgASA(**e))
        assert d.sf_db == 0.0


def test_lsp_spread_caps():
    for d in draw_large_scale_params(NLOS, env(), np.random.default_rng(4), size=5000):
        assert 0 < d.asa <= 104 and 0 < d.asd <= 104 and 0 < d.zsa <= 52 and 0 < d.zsd <= 52


def test_delays_sorted_from_zero():
    rng = np.random.default_rng(5)
    for i in range(1000):
        cond = Condition.LOS if i % 2 else Condition.NLOS
        d = generate_cluster_delays(1e-7, 2.5, 9.0, cond, 12, rng)
        assert d.delays[0] == 0.0 and np.all(np.diff(d.delays) >= 0)


def test_los_delay_scaling_shrinks_spread():
    d = generate_cluster_delays(1e-7, 2.5, 9.0, Condition.LOS, 12, np.random.default_rng(6))
    assert np.all(d.delays >= d.raw)  # C_tau < 1 for K = 9 dB


def test_rms_delay_spread_matches_ds():
    rng = np.random.default_rng(7)
    ds = 1e-7
    spreads = np.empty(100_000)
    for i in range(spreads.size):
        d = generate_cluster_delays(ds, NLOS.r_tau, None, Condition.NLOS, NLOS.n_clusters, rng)
        p = generate_cluster_powers(d.raw, ds, NLOS.r_tau, NLOS.xi, None, Condition.NLOS, rng, threshold_db=-np.inf)
        mean = np.sum(p.powers * d.raw)
        spreads[i] = math.sqrt(np.sum(p.powers * d.raw**2) - mean**2)
    assert spreads.mean() == pytest.approx(ds, rel=0.05)


def test_powers_normalised():
    rng = np.random.default_rng(8)
    for i in range(1000):
        cond = Condition.LOS if i % 2 else Condition.NLOS
        d = generate_cluster_delays(1e-7, 2.5, 9.0, cond, 12, rng)
        p = generate_cluster_powers(d.raw, 1e-7, 2.5, 3.0, 9.0, cond, rng)
        assert p.powers.sum() == pytest.approx(1.0, abs=1e-12)
        assert p.scattered.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(p.powers >= p.powers.max() * 10**-2.5)


def test_ricean_limit():
    d = generate_cluster_delays(1e-7, 2.5, 9.0, Condition.LOS, 12, np.random.default_rng(9))
    p = generate_cluster_powers(d.raw, 1e-7, 2.5, 3.0, math.inf, Condition.LOS, np.random.default_rng(9))
    assert p.powers[0] == 1.0 and p.powers.sum() == 1.0


def test_power_decreases_with_delay():
    rng = np.random.default_rng(10)
    taus, logp = [], []
    for _ in range(10_000):
        d = generate_cluster_delays(1e-7, 2.3, None, Condition.NLOS, 20, rng)
        p = generate_cluster_powers(d.raw, 1e-7, 2.3, 3.0, None, Condition.NLOS, rng, threshold_db=-np.inf)
        i = rng.integers(20)
        taus.append(d.raw[i])
        logp.append(math.log(p.powers[i]))
    assert np.corrcoef(taus, logp)[0, 1] < 0


def ray_params(cond, lsp, seed, n=None):
    rec = UMA.lsp[cond]
    rng = np.random.default_rng(seed)
    k = lsp.k_db if cond == Condition.LOS else None
    d = generate_cluster_delays(lsp.ds, rec.r_tau, k, cond, rec.n_clusters, rng)
    p = generate_cluster_powers(d.raw, lsp.ds, rec.r_tau, rec.xi, k, cond, rng)
    aod, aoa = AngularPair.from_degrees(80, 10), AngularPair.from_degrees(100, -170)
    return p, generate_ray_angles(lsp, p.powers, UMA, cond, aod, aoa, rng, strongest=(0, 1)), aod, aoa


LSP = LargeScaleParams(0.0, 9.0, 1e-7, 20.0, 50.0, 8.0, 12.0, 0.9, -1.0)


def test_los_cluster_one_on_geometric_direction():
    for seed in range(50):
        _, rays, aod, aoa = ray_params(Condition.LOS, LSP, seed)
        assert rays.cluster_aoa[0] == pytest.approx(aoa.azimuth, abs=1e-12)
        assert rays.cluster_aod[0] == pytest.approx(aod.azimuth, abs=1e-12)
        assert rays.cluster_zoa[0] == pytest.approx(aoa.zenith, abs=1e-12)
        assert rays.cluster_zod[0] == pytest.approx(aod.zenith, abs=1e-12)


def test_zenith_within_range():
    wide = replace(LSP, zsa=52.0, zsd=52.0)
    for seed in range(10_000 // 20):
        _, rays, _, _ = ray_params(Condition.NLOS, wide, seed)
        for z in (rays.zoa, rays.zod, rays.cluster_zoa, rays.cluster_zod):
            assert np.all((z >= 0) & (z <= math.pi))


def test_coupling_preserves_ray_sets():
    _, rays, _, _ = ray_params(Condition.NLOS, LSP, 0)
    rec = UMA.lsp[Condition.NLOS]
    alpha = np.array(UMA.ray_offsets.alpha)
    offsets = np.degrees(rays.aod - rays.cluster_aod[:, None])
    offsets = (offsets + 180) % 360 - 180
    for row in offsets:
        assert sorted(np.round(row / rec.c_ASD, 6)) == sorted(np.round(alpha, 6))


def angular_spread_deg(angles, weights):
    """Power-weighted rms spread minimised over circular shifts."""
    shifts = np.arange(-180, 180, 2.0)[:, None]
    a = (np.degrees(angles)[None, :] + shifts + 180) % 360 - 180
    mu = a @ weights
    return float(np.sqrt(np.min(((a - mu[:, None]) ** 2) @ weights)))


@pytest.mark.slow
def test_arrival_azimuth_spread_matches_asa():
    rng = np.random.default_rng(11)
    rec = UMA.lsp[Condition.NLOS]
    asa = 40.0
    lsp = replace(LSP, asa=asa)
    spreads = []
    for _ in range(10_000):
        d = generate_cluster_delays(lsp.ds, rec.r_tau, None, Condition.NLOS, rec.n_clusters, rng)
        p = generate_cluster_powers(d.raw, lsp.ds, rec.r_tau, rec.xi, None, Condition.NLOS, rng)
        rays = generate_ray_angles(lsp, p.powers, UMA, Condition.NLOS, AngularPair(1.5, 0.0),
                                   AngularPair(1.6, math.pi), rng)
        w = np.repeat(p.scattered / rays.shape[1], rays.shape[1])
        spreads.append(angular_spread_deg(rays.aoa.ravel(), w))
    assert np.mean(spreads) == pytest.approx(asa, rel=0.10)


def injected_rays(n=2, m=3, seed=0):
    rng = np.random.default_rng(seed)
    shape = (n, m)
    zoa, zod = rng.uniform(0.3, 2.8, shape), rng.uniform(0.3, 2.8, shape)
    aoa, aod = rng.uniform(-3, 3, shape), rng.uniform(-3, 3, shape)
    return RayParams(
        zoa=zoa, aoa=aoa, zod=zod, aod=aod,
        cluster_zoa=zoa[:, 0], cluster_aoa=aoa[:, 0], cluster_zod=zod[:, 0], cluster_aod=aod[:, 0],
        kappa=10 ** (rng.normal(8, 3, shape) / 10), phases=rng.uniform(-math.pi, math.pi, shape + (4,)),
    )


def test_brute_force_oracle_nlos():
    rays = injected_rays()
    powers = np.array([0.7, 0.3])
    tx = AntennaArray(2, 1, orientation=Orientation(0.4, 0.2), element_gain_db=8.0)
    rx = AntennaArray(1, 2, 0.7, 0.4, orientation=Orientation(-1.0, -0.1), element_gain_db=5.0)
    h = assemble_channel_matrix(rays, powers, np.array([0.0, 1e-8]), tx, rx, FC, Condition.NLOS)
    ray_dicts = [[dict(zoa=rays.zoa[n, m], aoa=rays.aoa[n, m], zod=rays.zod[n, m], aod=rays.aod[n, m],
                       kappa=rays.kappa[n, m], phases=tuple(rays.phases[n, m])) for m in range(3)] for n in range(2)]
    rx_loc = oracles.locations(1, 2, 0.7, 0.4, LAMBDA, -1.0, -0.1)
    tx_loc = oracles.locations(2, 1, 0.5, 0.5, LAMBDA, 0.4, 0.2)
    f_rx = lambda t, p: oracles.field(t, p, -1.0, -0.1, 5.0)
    f_tx = lambda t, p: oracles.field(t, p, 0.4, 0.2, 8.0)
    for u in range(2):
        for s in range(2):
            for n in range(2):
                ref = oracles.channel_coefficient(u, s, n, ray_dicts, powers, rx_loc, tx_loc, LAMBDA, f_rx, f_tx)
                assert abs(h.coefficients[u, s, n] - ref) < 1e-12


def test_brute_force_oracle_los_term():
    rays = injected_rays(seed=1)
    powers = np.array([0.6, 0.4])
    tx, rx = AntennaArray(2, 1, element_gain_db=8.0), AntennaArray(1, 2, element_gain_db=8.0)
    a, b = Position3D(0, 0, 25), Position3D(60, 20, 1.5)
    g = relative_geometry(a, b)
    k_db = 6.0
    h = assemble_channel_matrix(rays, powers, np.array([0.0, 1e-8]), tx, rx, FC, Condition.LOS, k_db=k_db,
                                los_aod=g.aod, los_aoa=g.aoa, d3d=g.d3d)
    h_nlos = assemble_channel_matrix(rays, powers, np.array([0.0, 1e-8]), tx, rx, FC, Condition.NLOS)
    k = 10 ** (k_db / 10)
    rx_loc = oracles.locations(1, 2, 0.5, 0.5, LAMBDA)
    tx_loc = oracles.locations(2, 1, 0.5, 0.5, LAMBDA)
    frx = oracles.field(g.aoa.zenith, g.aoa.azimuth, ge=8.0)
    ftx = oracles.field(g.aod.zenith, g.aod.azimuth, ge=8.0)
    k_rx, k_tx = oracles.unit(g.aoa.zenith, g.aoa.azimuth), oracles.unit(g.aod.zenith, g.aod.azimuth)
    for u in range(2):
        for s in range(2):
            los = ((frx[0] * ftx[0] - frx[1] * ftx[1]) * np.exp(-2j * math.pi * g.d3d / LAMBDA)
                   * np.exp(2j * math.pi * oracles.dot(k_rx, rx_loc[u]) / LAMBDA)
                   * np.exp(2j * math.pi * oracles.dot(k_tx, tx_loc[s]) / LAMBDA))
            ref0 = math.sqrt(1 / (k + 1)) * h_nlos.coefficients[u, s, 0] + math.sqrt(k / (k + 1)) * los
            assert abs(h.coefficients[u, s, 0] - ref0) < 1e-12
            assert abs(h.coefficients[u, s, 1] - math.sqrt(1 / (k + 1)) * h_nlos.coefficients[u, s, 1]) < 1e-12


def nodes(d=100.0, v_rx=(0, 0, 0)):
    return Node(0, Position3D(0, 0, 25)), Node(1, Position3D(d, 0, 1.5), Velocity3D(*v_rx))


def model(cond="NLOS", seed=1, **kw):
    return ChannelModel("UMa", FC, FixedConditionModel(cond), rng=seed, **kw)


def test_matrix_shape_and_delay_invariants():
    a, b = nodes()
    for cond in ("LOS", "NLOS"):
        h = model(cond).get_channel(a, b, AntennaArray(2, 2), AntennaArray(1, 2))
        assert h.coefficients.shape == (2, 4, h.n_clusters)
        assert h.coefficients.flags.f_contiguous
        assert h.delays[0] == 0.0 and np.all(np.diff(h.delays) >= 0)
        assert h.powers.sum() == pytest.approx(1.0, abs=1e-12)


def test_subcluster_split():
    rays = injected_rays(n=2, m=20, seed=4)
    iso = AntennaArray(isotropic_elements=True)
    groups = [[np.arange(0, 8), np.arange(8, 14), np.arange(14, 20)], [np.arange(20)]]
    c_ds = 3.91e-9
    offsets = [np.array([0.0, 1.28 * c_ds, 2.56 * c_ds]), np.zeros(1)]
    delays = np.array([0.0, 3e-9])
    h = assemble_channel_matrix(rays, np.array([0.5, 0.5]), delays, iso, iso, FC, Condition.NLOS,
                                groups=groups, group_delays=offsets)
    whole = assemble_channel_matrix(rays, np.array([0.5, 0.5]), delays, iso, iso, FC, Condition.NLOS)
    assert h.n_clusters == 4
    assert np.allclose(h.delays, [0.0, 3e-9, 1.28 * c_ds, 2.56 * c_ds])
    assert np.allclose(h.powers, [0.5 * 8 / 20, 0.5, 0.5 * 6 / 20, 0.5 * 6 / 20])
    # Sub-cluster coefficients add back up to the undivided cluster.
    parts = h.coefficients[0, 0, [0, 2, 3]].sum()
    assert parts == pytest.approx(whole.coefficients[0, 0, 0], abs=1e-12)


def test_pipeline_subclusters_two_strongest():
    a, b = nodes()
    h = model("NLOS", seed=8).get_channel(a, b, AntennaArray(), AntennaArray())
    c_ds = UMA.lsp[Condition.NLOS].c_DS_ns(fc=28.0) * 1e-9
    gaps = np.subtract.outer(h.delays, h.delays)
    hits = np.isclose(gaps, 1.28 * c_ds, rtol=0, atol=1e-15)
    assert hits.sum() >= 4  # two clusters, each with offsets 1.28 and 2.56 c_DS


def test_stationary_zero_doppler():
    a, b = nodes()
    h = model().get_channel(a, b, AntennaArray(), AntennaArray())
    assert np.all(h.doppler == 0.0)


def test_radial_doppler():
    v = 10.0
    # Receiver moves straight toward the transmitter along the line of sight.
    a = Node(0, Position3D(0, 0, 25))
    pos = Position3D(100, 0, 1.5)
    direction = (a.position - pos) / np.linalg.norm(a.position - pos)
    b = Node(1, pos, Velocity3D(*(v * direction)))
    h = model("LOS").get_channel(a, b, AntennaArray(), AntennaArray())
    assert h.doppler[0] == pytest.approx(v * FC / SPEED_OF_LIGHT, rel=1e-9)


def test_deterministic_generation():
    a, b = nodes()
    h1 = model(seed=42).get_channel(a, b, AntennaArray(2, 2), AntennaArray(2, 2))
    h2 = model(seed=42).get_channel(a, b, AntennaArray(2, 2), AntennaArray(2, 2))
    assert np.array_equal(h1.coefficients, h2.coefficients)
    assert np.array_equal(h1.delays, h2.delays)


@pytest.mark.slow
def test_mean_total_power_isotropic():
    a, b = nodes()
    cm = model("NLOS", seed=3)
    iso = AntennaArray(isotropic_elements=True)
    total = 0.0
    n = 10_000
    for i in range(n):
        h = cm.generate(a, b, iso, iso, Condition.NLOS, 0.0)
        total += np.sum(np.abs(h.coefficients[0, 0, :]) ** 2)
    assert total / n == pytest.approx(1.0, rel=0.05)


def test_cache_hits_within_period():
    a, b = nodes()
    cm = model(update_period=1.0)
    h1 = cm.get_channel(a, b, AntennaArray(), AntennaArray(), 0.0)
    h2 = cm.get_channel(a, b, AntennaArray(), AntennaArray(), 0.5)
    assert h1 is h2 and cm.generations == 1
    h3 = cm.get_channel(a, b, AntennaArray(), AntennaArray(), 1.0)
    assert h3.generated_at == 1.0 and cm.generations == 2


def test_zero_period_never_regenerates():
    a, b = nodes()
    cm = model(update_period=0.0)
    first = cm.get_channel(a, b, AntennaArray(), AntennaArray(), 0.0)
    for t in np.linspace(0, 1e7, 100):
        assert cm.get_channel(a, b, AntennaArray(), AntennaArray(), t) is first
    assert cm.generations == 1


def test_condition_flip_regenerates():
    a, b = nodes()
    cond = FixedConditionModel("LOS")
    cm = ChannelModel("UMa", FC, cond, rng=1)
    h1 = cm.get_channel(a, b, AntennaArray(), AntennaArray(), 0.0)
    cond.force("NLOS", 0.1)
    h2 = cm.get_channel(a, b, AntennaArray(), AntennaArray(), 0.1)
    assert h1.condition == Condition.LOS and h2.condition == Condition.NLOS
    assert cm.generations == 2


def test_array_size_change_regenerates():
    a, b = nodes()
    cm = model()
    cm.get_channel(a, b, AntennaArray(), AntennaArray())
    h = cm.get_channel(a, b, AntennaArray(2, 2), AntennaArray())
    assert h.coefficients.shape[:2] == (1, 4) and cm.generations == 2


def test_reciprocal_view():
    a, b = nodes()
    cm = model()
    ta, rb = AntennaArray(2, 2), AntennaArray(1, 2)
    h = cm.get_channel(a, b, ta, rb)
    r = cm.get_channel(b, a, rb, ta)
    assert cm.generations == 1
    assert np.array_equal(r.coefficients, h.coefficients.transpose(1, 0, 2))
    assert np.array_equal(r.cluster_aoa, h.cluster_aod) and r.node_ids == (1, 0)


def test_zero_distance_rejected():
    a = Node(0, Position3D(0, 0, 1.5))
    b = Node(1, Position3D(0, 0, 1.5))
    with pytest.raises(ValueError):
        model().get_channel(a, b, AntennaArray(), AntennaArray())


def test_stochastic_condition_model_drives_channel():
    a, b = nodes(300)
    cm = ChannelModel("UMa", FC, ChannelConditionModel("UMa", rng=2), rng=2)
    h = cm.get_channel(a, b, AntennaArray(), AntennaArray())
    assert h.condition in (Condition.LOS, Condition.NLOS)


def test_blockage_disabled_is_zero():
    att = blockage_attenuation([1.0, 2.0], [0.0, 1.0], UMA, BlockageConfig(False), np.random.default_rng(0), LAMBDA)
    assert np.all(att == 0.0)


def test_blockage_non_negative():
    rng = np.random.default_rng(12)
    cfg = BlockageConfig(True)
    for _ in range(10_000 // 50):
        zoa, aoa = rng.uniform(0, math.pi, 50), rng.uniform(-math.pi, math.pi, 50)
        assert np.all(blockage_attenuation(zoa, aoa, UMA, cfg, rng, LAMBDA) >= 0)


def test_blockage_centre_vs_outside():
    rng = np.random.default_rng(13)
    cfg = BlockageConfig(True, portrait_mode=False)
    inside, outside = [], []
    for _ in range(1000):
        width = rng.uniform(5, 15)
        bl = [Blocker(0.0, width, 90.0, 20.0, 10.0)]
        att = blockage_attenuation([math.pi / 2, math.pi / 2], [0.0, math.radians(-120)], UMA, cfg, rng, LAMBDA,
                                   blockers=bl)
        inside.append(att[0])
        outside.append(att[1])
    assert np.mean(inside) > np.mean(outside)
    assert np.all(np.array(outside) == 0.0)


def test_self_blocking_region():
    cfg = BlockageConfig(True, n_blockers=0)
    att = blockage_attenuation([math.radians(100), math.radians(90)], [math.radians(-100), 0.0], UMA, cfg,
                               np.random.default_rng(0), LAMBDA)
    assert att[0] == 30.0 and att[1] == 0.0


def test_blockage_keeps_other_streams():
    a, b = nodes()
    plain = model(seed=5).get_channel(a, b, AntennaArray(), AntennaArray())
    blocked = model(seed=5, blockage=BlockageConfig(True)).get_channel(a, b, AntennaArray(), AntennaArray())
    assert np.array_equal(plain.delays, blocked.delays)
    assert np.all(np.abs(blocked.coefficients) <= np.abs(plain.coefficients) + 1e-15)

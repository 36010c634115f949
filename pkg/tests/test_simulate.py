import csv
import math

import numpy as np
import pytest
from scipy import special, stats

from alphaduplex.analytic import make_context, outage_dl, outage_ul
from alphaduplex.geometry import max_range
from alphaduplex.simulate import (
    DL,
    UL,
    EmptyEstimateError,
    Realization,
    SimSpec,
    batch_mean,
    collect_samples,
    compute_sinr,
    dump_realization,
    estimate_laplace,
    estimate_metrics,
    generate_realization,
    link_powers,
    metrics_from_samples,
    realization_rng,
)
from alphaduplex.spectrum import SpectralFactors, make_band_plan

from conftest import full_scale_samples

FAC = SpectralFactors(i_dl=0.8, i_ul=0.95, c_dl=0.3, c_ul=0.2)


def test_simspec_validation():
    SimSpec()
    for bad in (
        dict(observation_half_width=10_000.0),
        dict(observation_half_width=0.0),
        dict(realizations=0),
        dict(drops_per_realization=0),
        dict(min_ues_per_cell=1),
        dict(ue_density_factor=1.0),
        dict(dl_receivers="everyone"),
    ):
        with pytest.raises(ValueError):
            SimSpec(**bad)


def test_streams_are_distinct_and_reproducible():
    a = realization_rng(1, 0).random(4)
    assert np.array_equal(a, realization_rng(1, 0).random(4))
    assert not np.array_equal(a, realization_rng(1, 1).random(4))
    assert not np.array_equal(a, realization_rng(2, 0).random(4))
    assert not np.array_equal(realization_rng(1, 0, 0).random(4), realization_rng(1, 0, 1).random(4))


@pytest.mark.parametrize("topology", ["2NT", "3NT"])
def test_realization_bit_identical_on_rerun(cfg, small_sim, topology):
    a = generate_realization(cfg, topology, small_sim, 3)
    b = generate_realization(cfg, topology, small_sim, 3)
    for name in Realization.__dataclass_fields__:
        va, vb = getattr(a, name), getattr(b, name)
        assert np.array_equal(va, vb), name


def test_samples_bit_identical_and_order_free(cfg, small_sim):
    full = collect_samples(cfg, "3NT", FAC, small_sim)
    again = collect_samples(cfg, "3NT", FAC, small_sim)
    part = collect_samples(cfg, "3NT", FAC, small_sim, realizations=[7, 2])
    for link in (DL, UL):
        for x, y in zip(full[link].interference, again[link].interference):
            assert np.array_equal(x, y)
        assert np.array_equal(part[link].interference[0], full[link].interference[7])
        assert np.array_equal(part[link].signal[1], full[link].signal[2])


def test_probes_shared_across_topologies(cfg, small_sim):
    a = generate_realization(cfg, "2NT", small_sim, 1)
    b = generate_realization(cfg, "3NT", small_sim, 1)
    assert np.array_equal(a.bs, b.bs)
    assert np.array_equal(a.dl_rx, b.dl_rx)


def test_bs_count_is_poisson(cfg):
    sim = SimSpec(realizations=1)
    mean = cfg.lambda_bs * (2 * sim.region_half_width) ** 2
    assert mean == pytest.approx(1200.0)
    counts = [generate_realization(cfg, "2NT", sim, k).n_cells for k in range(4)]
    for n in counts:
        assert abs(n - mean) < 6 * math.sqrt(mean)
    small = SimSpec(region_half_width=2000.0, observation_half_width=500.0)
    n = [len(generate_realization(cfg, "2NT", small, k).bs) for k in range(60)]
    mu = cfg.lambda_bs * 16e6
    # dispersion index of a Poisson count is 1
    assert np.mean(n) == pytest.approx(mu, abs=4 * math.sqrt(mu / 60))
    assert 0.5 < np.var(n, ddof=1) / np.mean(n) < 1.6


@pytest.mark.parametrize("k", range(4))
def test_scheduling_invariants(cfg, small_sim, k):
    r_max = max_range(cfg)
    for topology in ("2NT", "3NT"):
        real = generate_realization(cfg, topology, small_sim, k)
        assert np.all(np.abs(real.bs) <= small_sim.region_half_width)
        assert np.array_equal(real.ul_active, real.ul_distance <= r_max)
        assert np.all(real.ul_power[real.ul_active] <= cfg.p_ul_max * (1 + 1e-12))
        assert np.all(real.ul_power[~real.ul_active] == 0)
        np.testing.assert_allclose(real.ul_power[real.ul_active], cfg.rho * real.ul_distance[real.ul_active] ** cfg.eta)
        # scheduled users sit in their own Voronoi cell
        for pts in (real.dl_ue, real.ul_ue):
            d = np.hypot(*(pts[:, None, :] - real.bs[None, :, :]).transpose(2, 0, 1))
            assert np.array_equal(np.argmin(d, axis=1), np.arange(real.n_cells))
        if topology == "2NT":
            assert real.ul_ue is real.dl_ue or np.array_equal(real.ul_ue, real.dl_ue)
        else:
            assert np.all(np.any(real.ul_ue != real.dl_ue, axis=1))
        # test receivers: DL within R_M of the nearest BS, inside the window
        win = small_sim.observation_half_width
        assert np.all(np.abs(real.dl_rx) <= win) and np.all(real.dl_distance <= r_max)
        d = np.hypot(*(real.dl_rx[:, None, :] - real.bs[None, :, :]).transpose(2, 0, 1))
        assert np.array_equal(np.argmin(d, axis=1), real.dl_cell)
        assert np.all(real.ul_active[real.ul_test])
        assert np.all(np.abs(real.bs[real.ul_test]) <= win)


def test_fading_is_unit_mean_exponential(cfg, small_sim):
    real = generate_realization(cfg, "3NT", small_sim, 0)
    h = real.h_dl_bs.ravel()
    assert h.mean() == pytest.approx(1.0, abs=5 / math.sqrt(h.size))
    assert stats.kstest(h, "expon").statistic < 0.02
    assert np.all(real.hs_dl == 1.0)  # degenerate SI


def test_exponential_si_draws(cfg, small_sim):
    real = generate_realization(cfg.replace(si_distribution="exponential"), "2NT", small_sim, 0)
    assert real.hs_dl.min() > 0 and not np.all(real.hs_dl == 1.0)


def _two_cell(cfg, topology):
    bs = np.array([[0.0, 0.0], [1000.0, 0.0]])
    dl_ue = np.array([[100.0, 0.0], [1000.0, 200.0]])
    ul_ue = dl_ue if topology == "2NT" else np.array([[0.0, 50.0], [1100.0, 0.0]])
    ul_distance = np.hypot(*(ul_ue - bs).T)
    one = np.ones((1, 2))
    return Realization(
        stream_index=0, drop=0, bs=bs, dl_ue=dl_ue, ul_ue=ul_ue,
        ul_active=np.array([True, True]), ul_power=cfg.rho * ul_distance**cfg.eta, ul_distance=ul_distance,
        dl_rx=dl_ue[:1], dl_cell=np.array([0]), dl_distance=np.array([100.0]), ul_test=np.array([0]),
        h_dl_bs=one, h_dl_ue=one, hs_dl=np.ones(1), h_ul_bs=one, h_ul_ue=one, hs_ul=np.ones(1),
    )


def test_sinr_by_hand_three_node(cfg):
    c = cfg.replace(beta_ul=1e-12)
    real = _two_cell(c, "3NT")
    f = FAC
    sig = c.p_dl * 100.0**-4 * f.i_dl
    own_ul = c.rho * 50.0**4 * math.hypot(100, 50) ** -4
    other_ul = c.rho * 100.0**4 * 1000.0**-4
    itf = c.p_dl * f.i_dl * 900.0**-4 + f.c_dl * (own_ul + other_ul)
    want = sig / (itf + c.noise * f.i_dl)
    assert compute_sinr(real, c, "3NT", f, DL, 0) == pytest.approx(want, rel=1e-12)
    sig = c.rho * f.i_ul
    itf = f.i_ul * c.rho * 100.0**4 * 1100.0**-4 + c.p_dl * f.c_ul * 1000.0**-4 + c.beta_ul * c.p_dl * f.c_ul
    want = sig / (itf + c.noise * f.i_ul)
    assert compute_sinr(real, c, "3NT", f, UL, 0) == pytest.approx(want, rel=1e-12)


def test_sinr_by_hand_two_node(cfg):
    real = _two_cell(cfg, "2NT")
    f = FAC
    sig = cfg.p_dl * 100.0**-4 * f.i_dl
    other_ul = cfg.rho * math.hypot(0, 200) ** 4 * math.hypot(900, 200) ** -4
    si = cfg.beta_dl * cfg.rho * 100.0**4 * f.c_dl
    itf = cfg.p_dl * f.i_dl * 900.0**-4 + f.c_dl * other_ul + si
    want = sig / (itf + cfg.noise * f.i_dl)
    assert compute_sinr(real, cfg, "2NT", f, DL, 0) == pytest.approx(want, rel=1e-12)


def test_compute_sinr_errors(cfg):
    real = _two_cell(cfg, "3NT")
    with pytest.raises(IndexError):
        compute_sinr(real, cfg, "3NT", FAC, DL, 1)
    with pytest.raises(ValueError):
        compute_sinr(real, cfg, "3NT", FAC, "sideways", 0)
    with pytest.raises(ValueError):
        link_powers(real, cfg, "3NT", FAC, "sideways")


def test_two_node_scoring_dominates_without_si(cfg, small_sim):
    # scoring a 3NT drop as 2NT replaces the co-user by perfectly cancelled SI
    c = cfg.replace(beta_dl=0.0)
    for k in range(3):
        real = generate_realization(c, "3NT", small_sim, k)
        s3, i3, _ = link_powers(real, c, "3NT", FAC, DL)
        s2, i2, _ = link_powers(real, c, "2NT", FAC, DL)
        assert np.array_equal(s2, s3)
        assert np.all(i2 <= i3)


def test_noise_limited_uplink_rate_closed_form(cfg):
    # about one BS per region and nothing else within reach: SINR = rho h / N,
    # so E[B log2(1 + SINR)] = B/ln2 e^{1/a} E1(1/a), a = rho / N
    c = cfg.replace(lambda_bs=1e-6)
    sim = SimSpec(region_half_width=500.0, observation_half_width=490.0, realizations=1, seed=5, drops_per_realization=4)
    sinr = []
    for k in range(1500):
        for d in range(sim.drops_per_realization):
            real = generate_realization(c, "3NT", sim, k, d)
            if real.n_cells != 1:
                break
            s, i, n = link_powers(real, c, "3NT", FAC, UL)
            sinr.append(s / (i + n))
    g = np.concatenate(sinr)
    assert g.size > 1000
    a = c.rho / c.noise
    want = math.exp(1 / a) * special.exp1(1 / a) / math.log(2)
    got = np.log2(1 + g)
    assert abs(got.mean() - want) < 4 * got.std() / math.sqrt(g.size)


def test_batch_mean():
    m, se = batch_mean([np.array([1.0, 3.0]), np.array([5.0])])
    assert m == 3.0
    # sums 4, 5 against 3 n = 6, 3: residuals -2, 2
    assert se == pytest.approx(math.sqrt(2 * 8) / 3, rel=1e-14)
    assert batch_mean([np.array([5.0, 7.0])]) == (6.0, math.inf)
    # empty realizations are skipped
    assert batch_mean([np.array([]), np.array([1.0]), np.array([2.0])])[0] == 1.5
    with pytest.raises(EmptyEstimateError):
        batch_mean([])
    with pytest.raises(EmptyEstimateError):
        batch_mean([np.array([])])


def test_standard_error_shrinks_with_realizations(cfg, small_sim):
    from dataclasses import replace

    plan = make_band_plan(1e6, 1e6, 0.03134, 0.5)
    few = estimate_metrics(cfg, "2NT", plan, FAC, small_sim)
    many = estimate_metrics(cfg, "2NT", plan, FAC, replace(small_sim, realizations=4 * small_sim.realizations))
    for name in ("rate_dl_se", "rate_ul_se"):
        ratio = getattr(many, name) / getattr(few, name)
        assert 0.25 < ratio < 0.9, (name, ratio)
    assert many.n_realizations == 48 and many.n_dl > few.n_dl
    for est in (few, many):
        assert 0 <= est.outage_dl <= 1 and 0 <= est.outage_ul <= 1
        assert est.rate_dl > 0 and est.rate_ul > 0


def test_metrics_from_samples_matches_direct_rates(cfg, small_sim):
    plan = make_band_plan(1e6, 1e6, 0.03134, 1.0)
    samples = collect_samples(cfg, "3NT", FAC, small_sim)
    est = metrics_from_samples(samples, plan, 1e6, 2e6)
    g = np.concatenate(samples[UL].sinr())
    r = plan.bw_ul * np.log2(1 + g)
    assert est.rate_ul == pytest.approx(r.mean(), rel=1e-12)
    assert est.outage_ul == pytest.approx(np.mean(r < 2e6), rel=1e-12)


def test_estimate_laplace_shape_and_range(cfg, small_sim):
    means, ses, dist = estimate_laplace(cfg, "2NT", FAC, small_sim, UL, [0.0, 1e9, 1e11])
    assert means[0] == 1.0 and ses[0] == 0.0
    assert np.all(np.diff(means) <= 0) and np.all((means >= 0) & (means <= 1))
    assert np.all(dist <= max_range(cfg))


def test_dump_realization(cfg, small_sim, tmp_path):
    plan = make_band_plan(1e6, 1e6, 0.03134, 0.5)
    real = generate_realization(cfg, "3NT", small_sim, 0)
    path = tmp_path / "drop.csv"
    dump_realization(path, real, cfg, "3NT", FAC, plan)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    dl = [r for r in rows if r["link"] == DL]
    ul = [r for r in rows if r["link"] == UL]
    assert len(dl) == len(real.dl_cell) and len(ul) == len(real.ul_test)
    s, i, n = link_powers(real, cfg, "3NT", FAC, DL)
    assert [float(r["sinr"]) for r in dl] == (s / (i + n)).tolist()
    assert float(ul[0]["rate"]) == pytest.approx(plan.bw_ul * math.log2(1 + float(ul[0]["sinr"])), rel=1e-12)


# --- full-scale oracles for the closed-form outage ---------------------------


def test_dl_outage_three_node_half_duplex(cfg):
    ctx, samples = full_scale_samples(cfg, "3NT", 0.0)
    est = metrics_from_samples(samples, ctx.plan, 1e6, 1e6)
    want, _ = outage_dl(ctx, 1e6)
    assert abs(want - est.outage_dl) < 3 * est.outage_dl_se


@pytest.mark.parametrize("topology", ["2NT", "3NT"])
def test_ul_outage_at_orthogonal_overlap(cfg, topology):
    ctx, samples = full_scale_samples(cfg, topology, 0.28859)
    est = metrics_from_samples(samples, ctx.plan, 1e6, 1e6)
    want, _ = outage_ul(ctx, 1e6)
    assert abs(want - est.outage_ul) < 3 * est.outage_ul_se

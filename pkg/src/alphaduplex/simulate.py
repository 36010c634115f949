"""Monte Carlo simulation of the alpha-duplex network.

Each realization drops a PPP of base stations over a square region, drops
users uniformly at a much higher density, associates every user with its
nearest BS and schedules one UL and one DL user per cell on the test channel
pair (the same user for both directions in 2NT). Interference is applied in
the power domain with the spectral energy factors. Statistics are collected
at receivers inside a central observation window only, away from the
region's edges.

Realization ``k`` draws from a Philox stream keyed by ``(seed, k)``, so any
subset of realizations can be regenerated on its own and in any order.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
import numpy as np
from scipy.spatial import cKDTree

from alphaduplex.geometry import NetworkConfig, SIDistribution, Topology, max_range
from alphaduplex.spectrum import BandPlan, SpectralFactors

__all__ = [
    "EmptyEstimateError",
    "LinkSamples",
    "McEstimate",
    "Realization",
    "SimSpec",
    "batch_mean",
    "collect_samples",
    "compute_sinr",
    "dump_realization",
    "estimate_laplace",
    "estimate_metrics",
    "generate_realization",
    "link_powers",
    "metrics_from_samples",
    "realization_rng",
]

log = logging.getLogger(__name__)

DL = "DL"
UL = "UL"


class EmptyEstimateError(RuntimeError):
    """No eligible test receiver was found in any realization."""


@dataclass(frozen=True)
class SimSpec:
    """Simulation settings; lengths in meters.

    The defaults are a 20 x 20 km region, a 2 x 2 km observation window and
    200 realizations. ``drops_per_realization`` re-drops users and fading
    over each BS layout.

    ``dl_receivers`` picks the DL test users. With ``"typical"`` a Poisson
    drop of probe users (density ``ue_density_factor * lambda``) covers the
    window and each probe is scored as the scheduled DL user of its cell.
    A scheduled user is uniform in its cell, so a probe has the scheduled
    user's law, only with cells weighted by area; this is the typical user
    of the network. ``"scheduled"`` scores only the DL user each cell
    actually drew, which over-weights small cells.
    """

    region_half_width: float = 10_000.0
    observation_half_width: float = 1_000.0
    realizations: int = 200
    seed: int = 2016
    ue_density_factor: float = 20.0
    min_ues_per_cell: int = 2
    drops_per_realization: int = 1
    dl_receivers: str = "typical"

    def __post_init__(self):
        if not 0 < self.observation_half_width < self.region_half_width:
            raise ValueError("observation window must lie strictly inside the region")
        if self.realizations < 1 or self.drops_per_realization < 1:
            raise ValueError("need at least one realization and one drop")
        if self.min_ues_per_cell < 2:
            raise ValueError("each cell needs at least two users")
        if self.ue_density_factor <= 1:
            raise ValueError("user density must exceed the BS density")
        if self.dl_receivers not in ("typical", "scheduled"):
            raise ValueError("dl_receivers must be 'typical' or 'scheduled'")


@dataclass
class Realization:
    """One spatial sample plus the fading seen by its test receivers.

    Per-cell arrays (``dl_ue``, ``ul_ue``, ``ul_*``) have one entry per BS.
    DL test receivers sit at ``dl_rx``, are served by cell ``dl_cell`` at
    distance ``dl_distance``; ``ul_test`` lists the cells whose BS is a UL
    test receiver. Fading arrays have one row per test receiver and one
    column per BS (``*_bs``) or per cell's scheduled UL user (``*_ue``).
    """

    stream_index: int
    drop: int
    bs: np.ndarray
    dl_ue: np.ndarray
    ul_ue: np.ndarray
    ul_active: np.ndarray
    ul_power: np.ndarray
    ul_distance: np.ndarray
    dl_rx: np.ndarray
    dl_cell: np.ndarray
    dl_distance: np.ndarray
    ul_test: np.ndarray
    h_dl_bs: np.ndarray
    h_dl_ue: np.ndarray
    hs_dl: np.ndarray
    h_ul_bs: np.ndarray
    h_ul_ue: np.ndarray
    hs_ul: np.ndarray

    @property
    def n_cells(self) -> int:
        return len(self.bs)


def realization_rng(seed: int, stream_index: int, drop: int | None = None) -> np.random.Generator:
    """Philox generator for one realization (BS layout) or one of its drops."""
    key = (stream_index,) if drop is None else (stream_index, drop)
    ss = np.random.SeedSequence(entropy=seed, spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def _in_window(points: np.ndarray, half: float) -> np.ndarray:
    return np.all(np.abs(points) <= half, axis=1)


def _top_up(rng, tree, bs, cell, half, need, lam):
    """Uniform points inside Voronoi cell ``cell`` by rejection from a disc."""
    # a disc of this radius holds all but vanishingly rare PPP cells
    radius = 4.0 / math.sqrt(lam)
    got = []
    while len(got) < need:
        m = 256
        rr = radius * np.sqrt(rng.random(m))
        th = 2.0 * math.pi * rng.random(m)
        pts = bs[cell] + np.column_stack((rr * np.cos(th), rr * np.sin(th)))
        pts = pts[np.all(np.abs(pts) <= half, axis=1)]
        if len(pts) == 0:
            continue
        _, idx = tree.query(pts)
        got.extend(pts[idx == cell])
    return np.asarray(got[:need])


def _draw_si(rng, kind: SIDistribution, size) -> np.ndarray:
    if kind is SIDistribution.DEGENERATE:
        return np.ones(size)
    return rng.exponential(1.0, size)


def generate_realization(cfg: NetworkConfig, topology, sim: SimSpec, stream_index: int, drop: int = 0) -> Realization:
    """Draw realization ``stream_index``; ``drop`` re-drops users and fading
    over the same BS layout."""
    topology = Topology.parse(topology)
    rng = realization_rng(sim.seed, stream_index)
    half = sim.region_half_width
    area = (2.0 * half) ** 2

    n_bs = rng.poisson(cfg.lambda_bs * area)
    attempts = 0
    while n_bs == 0:
        attempts += 1
        log.warning("realization %d had no base stations; redrawing (attempt %d)", stream_index, attempts)
        n_bs = rng.poisson(cfg.lambda_bs * area)
    bs = rng.uniform(-half, half, (n_bs, 2))
    tree = cKDTree(bs)
    rng = realization_rng(sim.seed, stream_index, drop)

    n_ue = rng.poisson(sim.ue_density_factor * cfg.lambda_bs * area)
    ue = rng.uniform(-half, half, (n_ue, 2))
    _, owner = tree.query(ue)
    counts = np.bincount(owner, minlength=n_bs)
    short = np.flatnonzero(counts < sim.min_ues_per_cell)
    if len(short):
        extra = [_top_up(rng, tree, bs, c, half, sim.min_ues_per_cell - counts[c], cfg.lambda_bs) for c in short]
        extra_owner = np.concatenate([np.full(len(e), c) for c, e in zip(short, extra)])
        ue = np.vstack([ue] + extra)
        owner = np.concatenate((owner, extra_owner))

    # random permutation, then the first one or two users of each cell
    perm = rng.permutation(len(ue))
    order = perm[np.argsort(owner[perm], kind="stable")]
    starts = np.searchsorted(owner[order], np.arange(n_bs))
    dl_ue = ue[order[starts]]
    ul_ue = dl_ue if topology is Topology.TWO_NODE else ue[order[starts + 1]]

    ul_distance = np.hypot(*(ul_ue - bs).T)
    r_max = max_range(cfg)
    ul_active = ul_distance <= r_max
    ul_power = np.where(ul_active, cfg.rho * ul_distance**cfg.eta, 0.0)

    win = sim.observation_half_width
    if sim.dl_receivers == "typical":
        n_probe = rng.poisson(sim.ue_density_factor * cfg.lambda_bs * (2.0 * win) ** 2)
        dl_rx = rng.uniform(-win, win, (n_probe, 2))
        dl_distance, dl_cell = tree.query(dl_rx)
        dl_cell = np.asarray(dl_cell, dtype=np.intp).reshape(-1)
        dl_distance = np.asarray(dl_distance, dtype=float).reshape(-1)
    else:
        dl_cell = np.flatnonzero(_in_window(dl_ue, win))
        dl_rx = dl_ue[dl_cell]
        dl_distance = np.hypot(*(dl_rx - bs[dl_cell]).T)
    # DL statistics are conditioned on a serving distance within R_M, like the
    # analytic serving-distance law
    keep = dl_distance <= r_max
    dl_rx, dl_cell, dl_distance = dl_rx[keep], dl_cell[keep], dl_distance[keep]
    ul_test = np.flatnonzero(_in_window(bs, win) & ul_active)

    m = len(dl_cell)
    h_dl_bs = rng.exponential(1.0, (m, n_bs))
    h_dl_ue = rng.exponential(1.0, (m, n_bs))
    hs_dl = _draw_si(rng, cfg.si_distribution, m)
    h_ul_bs = rng.exponential(1.0, (len(ul_test), n_bs))
    h_ul_ue = rng.exponential(1.0, (len(ul_test), n_bs))
    hs_ul = _draw_si(rng, cfg.si_distribution, len(ul_test))

    return Realization(
        stream_index=stream_index,
        drop=drop,
        bs=bs,
        dl_ue=dl_ue,
        ul_ue=ul_ue,
        ul_active=ul_active,
        ul_power=ul_power,
        ul_distance=ul_distance,
        dl_rx=dl_rx,
        dl_cell=dl_cell,
        dl_distance=dl_distance,
        ul_test=ul_test,
        h_dl_bs=h_dl_bs,
        h_dl_ue=h_dl_ue,
        hs_dl=hs_dl,
        h_ul_bs=h_ul_bs,
        h_ul_ue=h_ul_ue,
        hs_ul=hs_ul,
    )


def _pathloss(tx: np.ndarray, rx: np.ndarray, eta: float) -> np.ndarray:
    d2 = ((rx[:, None, :] - tx[None, :, :]) ** 2).sum(axis=2)
    with np.errstate(divide="ignore"):
        return d2 ** (-eta / 2.0)


def link_powers(real: Realization, cfg: NetworkConfig, topology, factors: SpectralFactors, link: str):
    """Received powers at every test receiver of one link direction.

    ``topology`` decides how the serving cell's UL emission is treated: as
    self-interference of the DL receiver itself (2NT) or as a co-scheduled
    user elsewhere in the cell (3NT). A 3NT realization can be scored as 2NT
    this way with every other cell unchanged.

    Returns
    -------
    signal, interference, noise : ndarray
        ``interference`` is the aggregate of intra-mode, cross-mode and
        residual SI power; ``noise`` is the filtered noise power.
    """
    topology = Topology.parse(topology)
    eta = cfg.eta
    if link == DL:
        cells = real.dl_cell
        rx = real.dl_rx
        rows = np.arange(len(cells))
        g_bs = _pathloss(real.bs, rx, eta) * real.h_dl_bs
        signal = cfg.p_dl * g_bs[rows, cells] * factors.i_dl
        g_bs[rows, cells] = 0.0
        intra = cfg.p_dl * factors.i_dl * g_bs.sum(axis=1)
        g_ue = _pathloss(real.ul_ue, rx, eta) * real.h_dl_ue * real.ul_power[None, :]
        if topology is Topology.TWO_NODE:
            # the receiver is its cell's UL user too; its own emission is
            # self-interference rather than a propagated signal
            g_ue[rows, cells] = 0.0
            si = cfg.beta_dl * real.hs_dl * cfg.rho * real.dl_distance**eta * factors.c_dl
        else:
            si = np.zeros(len(cells))
        cross = factors.c_dl * g_ue.sum(axis=1)
        noise = np.full(len(cells), cfg.noise * factors.i_dl)
        return signal, intra + cross + si, noise
    if link == UL:
        cells = real.ul_test
        rx = real.bs[cells]
        rows = np.arange(len(cells))
        g_ue = _pathloss(real.ul_ue, rx, eta) * real.h_ul_ue * real.ul_power[None, :]
        # channel inversion: the serving BS receives rho on average
        signal = cfg.rho * real.h_ul_ue[rows, cells] * factors.i_ul
        g_ue[rows, cells] = 0.0
        intra = factors.i_ul * g_ue.sum(axis=1)
        g_bs = _pathloss(real.bs, rx, eta) * real.h_ul_bs
        g_bs[rows, cells] = 0.0
        cross = cfg.p_dl * factors.c_ul * g_bs.sum(axis=1)
        si = cfg.beta_ul * real.hs_ul * cfg.p_dl * factors.c_ul
        noise = np.full(len(cells), cfg.noise * factors.i_ul)
        return signal, intra + cross + si, noise
    raise ValueError(f"link must be {DL!r} or {UL!r}, got {link!r}")


def compute_sinr(real: Realization, cfg: NetworkConfig, topology, factors: SpectralFactors, link: str, test_index: int) -> float:
    """SINR at one test receiver.

    ``test_index`` counts the link's test receivers in order: rows of
    ``real.dl_rx`` for DL, entries of ``real.ul_test`` for UL. All of them
    lie in the observation window by construction.
    """
    n = len(real.dl_cell) if link == DL else len(real.ul_test)
    if link not in (DL, UL):
        raise ValueError(f"link must be {DL!r} or {UL!r}, got {link!r}")
    if not 0 <= test_index < n:
        raise IndexError(f"{link} test receiver {test_index} out of range (have {n})")
    signal, interference, noise = link_powers(real, cfg, topology, factors, link)
    return float(signal[test_index] / (interference[test_index] + noise[test_index]))


@dataclass
class LinkSamples:
    """Per-receiver powers of one link, grouped by realization.

    ``distance`` is the serving distance of each receiver (the UL one is
    the distance of the BS's scheduled user).
    """

    signal: list[np.ndarray]
    interference: list[np.ndarray]
    noise: list[np.ndarray]
    distance: list[np.ndarray]

    def sinr(self) -> list[np.ndarray]:
        return [s / (i + n) for s, i, n in zip(self.signal, self.interference, self.noise)]

    @property
    def count(self) -> int:
        return sum(len(v) for v in self.signal)


def collect_samples(cfg: NetworkConfig, topology, factors: SpectralFactors, sim: SimSpec, realizations=None) -> dict[str, LinkSamples]:
    """Run the simulation once and keep every test receiver's powers.

    ``realizations`` optionally restricts the run to some stream indices;
    any subset gives the same per-realization values as a full run.
    """
    indices = range(sim.realizations) if realizations is None else realizations
    out = {link: LinkSamples([], [], [], []) for link in (DL, UL)}
    for k in indices:
        drops = [generate_realization(cfg, topology, sim, k, d) for d in range(sim.drops_per_realization)]
        for link in (DL, UL):
            parts = [link_powers(r, cfg, topology, factors, link) for r in drops]
            acc = out[link]
            acc.signal.append(np.concatenate([p[0] for p in parts]))
            acc.interference.append(np.concatenate([p[1] for p in parts]))
            acc.noise.append(np.concatenate([p[2] for p in parts]))
            if link == DL:
                acc.distance.append(np.concatenate([r.dl_distance for r in drops]))
            else:
                acc.distance.append(np.concatenate([r.ul_distance[r.ul_test] for r in drops]))
    return out


@dataclass(frozen=True)
class McEstimate:
    rate_dl: float
    rate_dl_se: float
    rate_ul: float
    rate_ul_se: float
    outage_dl: float
    outage_dl_se: float
    outage_ul: float
    outage_ul_se: float
    n_dl: int
    n_ul: int
    n_realizations: int


def batch_mean(values: list[np.ndarray]) -> tuple[float, float]:
    """Pooled mean over receivers; standard error over realizations.

    Receivers of one realization share a layout and are correlated, so the
    error comes from the ratio estimator ``sum x / sum n`` over
    realization-level sums.
    """
    nonempty = [np.asarray(v, dtype=float) for v in values if len(v)]
    if not nonempty:
        raise EmptyEstimateError("no eligible test receivers")
    sums = np.array([v.sum() for v in nonempty])
    ns = np.array([len(v) for v in nonempty], dtype=float)
    mean = float(sums.sum() / ns.sum())
    k = len(nonempty)
    if k < 2:
        return mean, math.inf
    resid = sums - mean * ns
    se = math.sqrt(k / (k - 1) * np.sum(resid**2)) / ns.sum()
    return mean, float(se)


def metrics_from_samples(samples: dict[str, LinkSamples], plan: BandPlan, target_rate_dl: float, target_rate_ul: float) -> McEstimate:
    res = {}
    for link, bw, target in ((DL, plan.bw_dl, target_rate_dl), (UL, plan.bw_ul, target_rate_ul)):
        rates = [bw * np.log2(1.0 + g) for g in samples[link].sinr()]
        res[link] = batch_mean(rates), batch_mean([(r < target).astype(float) for r in rates])
    (rd, rd_se), (od, od_se) = res[DL]
    (ru, ru_se), (ou, ou_se) = res[UL]
    return McEstimate(
        rate_dl=rd,
        rate_dl_se=rd_se,
        rate_ul=ru,
        rate_ul_se=ru_se,
        outage_dl=od,
        outage_dl_se=od_se,
        outage_ul=ou,
        outage_ul_se=ou_se,
        n_dl=samples[DL].count,
        n_ul=samples[UL].count,
        n_realizations=len(samples[DL].signal),
    )


def estimate_metrics(
    cfg: NetworkConfig,
    topology,
    plan: BandPlan,
    factors: SpectralFactors,
    sim: SimSpec,
    target_rate_dl: float = 1e6,
    target_rate_ul: float | None = None,
) -> McEstimate:
    """Shannon rate and outage averaged over all test receivers."""
    if target_rate_ul is None:
        target_rate_ul = target_rate_dl
    samples = collect_samples(cfg, topology, factors, sim)
    return metrics_from_samples(samples, plan, target_rate_dl, target_rate_ul)


def estimate_laplace(cfg: NetworkConfig, topology, factors: SpectralFactors, sim: SimSpec, link: str, s_values):
    """Empirical ``E[exp(-s I)]`` of the aggregate interference.

    Returns the means, their standard errors and the serving distances of
    the test receivers.
    """
    samples = collect_samples(cfg, topology, factors, sim)[link]
    s_values = np.atleast_1d(np.asarray(s_values, dtype=float))
    est = [batch_mean([np.exp(-s * i) for i in samples.interference]) for s in s_values]
    means = np.array([m for m, _ in est])
    ses = np.array([e for _, e in est])
    return means, ses, np.concatenate(samples.distance)


def dump_realization(path, real: Realization, cfg: NetworkConfig, topology, factors: SpectralFactors, plan: BandPlan):
    """One CSV row per test receiver: positions, SINR and Shannon rate."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["link", "cell", "bs_x", "bs_y", "rx_x", "rx_y", "serving_distance", "sinr", "rate"])
        for link, bw in ((DL, plan.bw_dl), (UL, plan.bw_ul)):
            signal, interference, noise = link_powers(real, cfg, topology, factors, link)
            sinr = signal / (interference + noise)
            if link == DL:
                cells, rxs, dists = real.dl_cell, real.dl_rx, real.dl_distance
            else:
                cells = real.ul_test
                rxs, dists = real.bs[cells], real.ul_distance[cells]
            for c, rx, d, g in zip(cells, rxs, dists, sinr):
                w.writerow([link, int(c), *(f"{v:.6f}" for v in real.bs[c]), *(f"{v:.6f}" for v in rx),
                            f"{d:.6f}", repr(float(g)), repr(float(bw * math.log2(1.0 + g)))])

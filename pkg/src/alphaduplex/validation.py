"""Cross-engine checks between the closed-form and Monte Carlo engines.

These are the building blocks of ``alphaduplex validate``: relative rate
errors per sweep point, paired Laplace-transform spot checks and the
serving-distance KS statistic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from alphaduplex.analytic import EvalContext, lt_dl, lt_ul
from alphaduplex.geometry import serving_distance_cdf
from alphaduplex.simulate import DL, UL, LinkSamples, batch_mean

__all__ = [
    "LtCheck",
    "RateCheck",
    "ks_serving_distance",
    "lt_checks",
    "lt_s_grid",
    "rate_checks",
]


@dataclass(frozen=True)
class RateCheck:
    topology: str
    alpha: float
    link: str
    analytic: float
    simulated: float
    simulated_se: float
    rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return abs(self.rel_error) <= self.tolerance


@dataclass(frozen=True)
class LtCheck:
    """Analytic vs empirical ``E[exp(-s I)]`` at one ``s``.

    For DL the analytic side is the conditional transform evaluated at each
    simulated receiver's own serving distance, so the two columns average
    over the same receivers and ``se`` is the standard error of their
    paired difference.
    """

    topology: str
    alpha: float
    link: str
    s: float
    analytic: float
    simulated: float
    se: float
    sigma: float

    @property
    def z(self) -> float:
        diff = self.simulated - self.analytic
        if self.se == 0:
            return 0.0 if diff == 0 else math.copysign(math.inf, diff)
        return diff / self.se

    @property
    def passed(self) -> bool:
        return abs(self.z) <= self.sigma


def rate_checks(topology: str, alpha: float, analytic, simulated, tolerance: float) -> list[RateCheck]:
    """Relative error of the MC rates with respect to the analytic ones."""
    out = []
    for link, a, m, se in (
        (DL, analytic.rate_dl, simulated.rate_dl, simulated.rate_dl_se),
        (UL, analytic.rate_ul, simulated.rate_ul, simulated.rate_ul_se),
    ):
        out.append(RateCheck(topology, alpha, link, a, m, se, m / a - 1.0, tolerance))
    return out


def _analytic_lt(ctx: EvalContext, link: str, distances: list[np.ndarray], s: float) -> list[np.ndarray]:
    if link == DL:
        return [np.asarray(lt_dl(ctx, d, s), dtype=float).reshape(-1) if len(d) else np.empty(0) for d in distances]
    value = lt_ul(ctx, s)
    return [np.full(len(d), value) for d in distances]


def lt_s_grid(ctx: EvalContext, samples: LinkSamples, link: str, n: int = 5, decades: float = 2.0) -> np.ndarray:
    """``n`` log-spaced ``s`` values centered where the analytic transform is 1/2.

    The grid spans ``decades`` decades, so it runs from the light-load end
    (transform near 1) to the heavy one (near 0).
    """
    if n < 1:
        raise ValueError("need at least one s value")
    typical = float(np.median(np.concatenate(samples.interference)))
    if not typical > 0:
        raise ValueError("interference samples are all zero")

    def gap(log_s):
        vals = _analytic_lt(ctx, link, samples.distance, 10.0**log_s)
        return float(np.concatenate(vals).mean()) - 0.5

    lo, hi = math.log10(1.0 / typical) - 4.0, math.log10(1.0 / typical) + 4.0
    center = optimize.brentq(gap, lo, hi, xtol=1e-6)
    half = decades / 2.0
    return 10.0 ** np.linspace(center - half, center + half, n)


def lt_checks(ctx: EvalContext, samples: LinkSamples, link: str, s_values, sigma: float = 3.0) -> list[LtCheck]:
    out = []
    alpha = ctx.plan.alpha
    for s in np.atleast_1d(np.asarray(s_values, dtype=float)):
        emp = [np.exp(-s * i) for i in samples.interference]
        ana = _analytic_lt(ctx, link, samples.distance, float(s))
        m_emp, _ = batch_mean(emp)
        m_ana, _ = batch_mean(ana)
        _, se = batch_mean([e - a for e, a in zip(emp, ana)])
        out.append(LtCheck(ctx.topology.value, alpha, link, float(s), m_ana, m_emp, se, sigma))
    return out


def ks_serving_distance(cfg, distances) -> float:
    """KS distance between sampled DL serving distances and the model law."""
    d = np.concatenate([np.asarray(v, dtype=float) for v in distances]) if isinstance(distances, list) else np.asarray(distances, dtype=float)
    if len(d) == 0:
        raise ValueError("no serving distances to test")
    return float(stats.kstest(d, serving_distance_cdf(cfg)).statistic)

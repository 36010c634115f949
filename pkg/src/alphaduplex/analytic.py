"""Closed-form outage and ergodic rate via interference Laplace transforms.

The downlink transform multiplies four terms: the BS field beyond the serving
distance, the power-controlled UL user field, the co-scheduled UL user of a
3NT cell (``u1``) and the user's own SI in 2NT (``u2``). The uplink transform
has the UL user field, the BS field seen by the test BS without exclusion and
the BS's own SI (``u3``).

``u1`` is a double integral. Rate integrals need it at tens of thousands of
``(r_o, s)`` points, so it is tabulated once per deployment on
``(r_o, log10 a)`` with ``a = s |C_d|^2 rho`` and read back through a bicubic
spline.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad_vec
from scipy.interpolate import RectBivariateSpline

from alphaduplex.geometry import (
    NetworkConfig,
    SIDistribution,
    Topology,
    expected_ul_power_frac,
    max_range,
    serving_distance_pdf,
)
from alphaduplex.numerics import DEFAULT_QUAD, QuadratureSpec, hyp2f1_interference, integrate, integrate_vectorized
from alphaduplex.spectrum import BandPlan, PulseKind, SpectralFactors, make_band_plan, spectral_factors

__all__ = [
    "AnalyticMetrics",
    "EvalContext",
    "U1Grid",
    "evaluate",
    "lt_dl",
    "lt_ul",
    "make_context",
    "outage_dl",
    "outage_ul",
    "rate_dl",
    "rate_ul",
    "si_laplace",
    "u1",
    "u1_table",
    "u2",
    "u3",
]

LN2 = math.log(2.0)
OUTER_QUAD = QuadratureSpec(rel_tol=1e-6, abs_tol=1e-10, max_subdivisions=2000)


@dataclass(frozen=True)
class U1Grid:
    """Resolution of the tabulated intra-cell term.

    Defaults were chosen so that doubling every count moves reference-deployment rates by
    well under 0.2%.
    """

    n_ro: int = 41
    log10_a_min: float = -8.0
    log10_a_max: float = 7.0
    per_decade: int = 6
    n_theta: int = 160


@dataclass(frozen=True)
class EvalContext:
    cfg: NetworkConfig
    topology: Topology
    plan: BandPlan
    factors: SpectralFactors
    quad: QuadratureSpec = DEFAULT_QUAD
    u1_grid: U1Grid = field(default_factory=U1Grid)
    # outer rate integral; the tabulated u1 is only smooth to ~1e-7
    outer_quad: QuadratureSpec = OUTER_QUAD

    def __post_init__(self):
        object.__setattr__(self, "topology", Topology.parse(self.topology))

    @property
    def r_max(self) -> float:
        return max_range(self.cfg)


def make_context(
    cfg: NetworkConfig,
    topology,
    alpha: float,
    *,
    bw_dl_hd: float = 1e6,
    bw_ul_hd: float = 1e6,
    guard_fraction: float = 0.03134,
    dl_kind=PulseKind.RECTANGULAR,
    ul_kind=PulseKind.TRIANGULAR,
    quad: QuadratureSpec = DEFAULT_QUAD,
    u1_grid: U1Grid | None = None,
) -> EvalContext:
    """Build a context from physical inputs; defaults are the reference band plan."""
    plan = make_band_plan(bw_dl_hd, bw_ul_hd, guard_fraction, alpha)
    factors = spectral_factors(plan, dl_kind, ul_kind)
    return EvalContext(cfg, Topology.parse(topology), plan, factors, quad, u1_grid or U1Grid())


@dataclass(frozen=True)
class AnalyticMetrics:
    rate_dl: float
    rate_ul: float
    outage_dl: float
    outage_ul: float
    rate_dl_err: float
    rate_ul_err: float
    outage_dl_err: float
    outage_ul_err: float


def si_laplace(kind, arg):
    """Laplace transform of the unit-mean SI attenuation at ``arg``."""
    kind = SIDistribution.parse(kind)
    arg = np.asarray(arg, dtype=float)
    if np.any(arg < 0):
        raise ValueError("SI Laplace argument must be >= 0")
    out = np.exp(-arg) if kind is SIDistribution.DEGENERATE else 1.0 / (1.0 + arg)
    return float(out) if out.ndim == 0 else out


# --- intra-cell UL user (3NT) -------------------------------------------------


def _theta_kernel(cfg: NetworkConfig, r: float, r_o: float, a: float) -> float:
    # (1/pi) int_0^pi d theta / (1 + a (1 + q^2 - 2 q cos theta)^(-eta/2)), q = r_o / r
    q = r_o / r
    half_eta = cfg.eta / 2.0

    def f(theta):
        d = 1.0 + q * q - 2.0 * q * math.cos(theta)
        if d <= 0.0:
            return 0.0
        return 1.0 / (1.0 + a * d ** (-half_eta))

    val, _ = integrate(f, 0.0, math.pi, QuadratureSpec(1e-9, 1e-12, 400))
    return val / math.pi


def u1(ctx: EvalContext, r_o: float, s: float) -> float:
    """Intra-cell interference term by direct nested quadrature.

    Slow; used to verify the tabulated version and for spot checks.
    """
    if ctx.topology is Topology.TWO_NODE or s == 0:
        return 1.0
    a = s * ctx.factors.c_dl * ctx.cfg.rho
    pdf = serving_distance_pdf(ctx.cfg)
    r_max = ctx.r_max
    pts = [r_o] if 0 < r_o < r_max else None
    val, _ = integrate(lambda r: pdf(r) * _theta_kernel(ctx.cfg, r, r_o, a) if r > 0 else 0.0,
                       0.0, r_max, QuadratureSpec(1e-8, 1e-11, 400), points=pts)
    return val


def _build_u1_table(cfg: NetworkConfig, grid: U1Grid):
    r_max = max_range(cfg)
    pdf = serving_distance_pdf(cfg)
    n_a = int(round((grid.log10_a_max - grid.log10_a_min) * grid.per_decade)) + 1
    log_a = np.linspace(grid.log10_a_min, grid.log10_a_max, n_a)
    a = 10.0**log_a
    r_o_grid = np.linspace(0.0, r_max, grid.n_ro)
    # theta = pi t^2 clusters nodes where the UL user can sit on top of the
    # DL user
    t, w = np.polynomial.legendre.leggauss(grid.n_theta)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    theta = math.pi * t**2
    w_theta = w * 2.0 * t  # d theta / pi
    cos_t = np.cos(theta)
    half_eta = cfg.eta / 2.0

    table = np.empty((grid.n_ro, n_a))
    table[0] = 1.0 / (1.0 + a)
    for i, r_o in enumerate(r_o_grid[1:], start=1):

        def f(r, r_o=r_o):
            if r <= 0.0:
                return np.zeros(n_a)
            q = r_o / r
            d = 1.0 + q * q - 2.0 * q * cos_t
            with np.errstate(divide="ignore"):
                x = np.where(d > 0, d ** (-half_eta), np.inf)
            kern = 1.0 / (1.0 + a[:, None] * x[None, :])
            return pdf(r) * (kern @ w_theta)

        pts = (r_o,) if r_o < r_max else None
        val, _ = quad_vec(f, 0.0, r_max, epsabs=1e-9, epsrel=1e-7, points=pts, limit=400)
        table[i] = val
    return r_o_grid, log_a, np.clip(table, 1e-300, 1.0)


_TABLE_LOCK = threading.Lock()


@lru_cache(maxsize=32)
def _u1_table_cached(lambda_bs: float, eta: float, p_ul_max: float, rho: float, grid: U1Grid):
    cfg = NetworkConfig(lambda_bs=lambda_bs, eta=eta, p_dl=1.0, p_ul_max=p_ul_max, rho=rho,
                        noise=1.0, beta_dl=0.0, beta_ul=0.0)
    r_o_grid, log_a, table = _build_u1_table(cfg, grid)
    spline = RectBivariateSpline(r_o_grid, log_a, table, kx=3, ky=3)
    return r_o_grid, log_a, table, spline


def _u1_table(ctx: EvalContext):
    cfg = ctx.cfg
    with _TABLE_LOCK:
        return _u1_table_cached(cfg.lambda_bs, cfg.eta, cfg.p_ul_max, cfg.rho, ctx.u1_grid)


def u1_table(ctx: EvalContext, r_o, s):
    """Interpolated intra-cell term; equals :func:`u1` to about 1e-4."""
    r_o = np.asarray(r_o, dtype=float)
    s = np.asarray(s, dtype=float)
    if ctx.topology is Topology.TWO_NODE:
        out = np.ones(np.broadcast(r_o, s).shape)
        return float(out) if out.ndim == 0 else out
    _, log_a, table, spline = _u1_table(ctx)
    scalar = r_o.ndim == 0 and s.ndim == 0
    r_o, s = (np.atleast_1d(v) for v in np.broadcast_arrays(r_o, s))
    a = s * ctx.factors.c_dl * ctx.cfg.rho
    with np.errstate(divide="ignore"):
        la = np.log10(a)
    lo, hi = log_a[0], log_a[-1]
    inside = np.clip(la, lo, hi)
    val = np.clip(spline.ev(r_o, inside), 0.0, 1.0)
    # beyond the grid: 1 - u1 ~ a^(2/eta) for small a, u1 ~ 1/a for large a
    delta = 2.0 / ctx.cfg.eta
    below = la < lo
    if np.any(below):
        ratio = 10.0 ** ((la[below] - lo) * delta)
        val[below] = 1.0 - (1.0 - val[below]) * ratio
    above = la > hi
    if np.any(above):
        val[above] = val[above] * 10.0 ** (hi - la[above])
    val = np.where(a == 0, 1.0, val)
    return float(val[0]) if scalar else val


def u2(ctx: EvalContext, r_o, s):
    """The 2NT user's own residual SI (transmit power ``rho r_o^eta``)."""
    if ctx.topology is Topology.THREE_NODE:
        return 1.0 if np.ndim(r_o) == 0 and np.ndim(s) == 0 else np.ones(np.broadcast(r_o, s).shape)
    cfg = ctx.cfg
    arg = cfg.beta_dl * np.asarray(s) * cfg.rho * np.asarray(r_o) ** cfg.eta * ctx.factors.c_dl
    return si_laplace(cfg.si_distribution, arg)


def u3(ctx: EvalContext, s):
    """The test BS's residual SI from its own DL transmission."""
    cfg = ctx.cfg
    return si_laplace(cfg.si_distribution, cfg.beta_ul * np.asarray(s) * cfg.p_dl * ctx.factors.c_ul)


def lt_dl(ctx: EvalContext, r_o, s, *, u1_method: str = "table"):
    """Laplace transform of the aggregate interference at the DL user.

    ``u1_method`` is ``"table"`` (default), ``"quad"`` (direct nested
    quadrature, scalar only) or ``"none"`` (intra-cell term dropped).
    """
    cfg, fac = ctx.cfg, ctx.factors
    r_o = np.asarray(r_o, dtype=float)
    s = np.asarray(s, dtype=float)
    eta = cfg.eta
    c = 2.0 * math.pi * cfg.lambda_bs / (eta - 2.0)
    x_bs = r_o ** (-eta) * cfg.p_dl * fac.i_dl * s
    bs = -c * r_o ** (2.0 - eta) * fac.i_dl * s * cfg.p_dl * hyp2f1_interference(eta, x_bs)
    x_ue = cfg.rho * fac.c_dl * s
    ue = (-c * cfg.rho ** (1.0 - 2.0 / eta) * expected_ul_power_frac(cfg) * fac.c_dl * s
          * hyp2f1_interference(eta, x_ue))
    out = np.exp(bs + ue) * u2(ctx, r_o, s)
    if u1_method == "table":
        out = out * u1_table(ctx, r_o, s)
    elif u1_method == "quad":
        out = out * u1(ctx, float(r_o), float(s))
    elif u1_method != "none":
        raise ValueError(f"unknown u1_method {u1_method!r}")
    out = np.where(s == 0, 1.0, out)
    return float(out) if out.ndim == 0 else out


def _csc(x: float) -> float:
    return 1.0 / math.sin(x)


def lt_ul(ctx: EvalContext, s):
    """Laplace transform of the aggregate interference at the test BS."""
    cfg, fac = ctx.cfg, ctx.factors
    s = np.asarray(s, dtype=float)
    eta = cfg.eta
    c = 2.0 * math.pi * cfg.lambda_bs / (eta - 2.0)
    x_ue = cfg.rho * fac.i_ul * s
    ue = (-c * cfg.rho ** (1.0 - 2.0 / eta) * expected_ul_power_frac(cfg) * fac.i_ul * s
          * hyp2f1_interference(eta, x_ue))
    bs = -(2.0 * math.pi**2 * cfg.lambda_bs / eta) * (s * fac.c_ul * cfg.p_dl) ** (2.0 / eta) * _csc(2.0 * math.pi / eta)
    out = np.exp(ue + bs) * u3(ctx, s)
    return float(out) if np.ndim(out) == 0 else out


# --- metrics -------------------------------------------------------------------


def _dl_inner(ctx: EvalContext, threshold: float) -> tuple[float, float]:
    """int f_R(r) exp(-N_o t r^eta / P_d) L_d(t r^eta / (P_d |I_d|^2)) dr."""
    cfg = ctx.cfg
    pdf = serving_distance_pdf(cfg)
    eta = cfg.eta
    scale = threshold / cfg.p_dl

    def f(r):
        ge = scale * r**eta
        return pdf(r) * np.exp(-cfg.noise * ge) * lt_dl(ctx, r, ge / ctx.factors.i_dl)

    return integrate_vectorized(f, 0.0, ctx.r_max, ctx.quad)


def _threshold(rate: float, bw: float) -> float:
    # SINR needed for ``rate`` over ``bw``; inf past the double range
    try:
        return math.expm1(rate / bw * LN2)
    except OverflowError:
        return math.inf


def outage_dl(ctx: EvalContext, target_rate: float) -> tuple[float, float]:
    """DL outage probability and its quadrature error bound."""
    if target_rate < 0:
        raise ValueError("target rate must be >= 0")
    if target_rate == 0:
        return 0.0, 0.0
    threshold = _threshold(target_rate, ctx.plan.bw_dl)
    if math.isinf(threshold):
        return 1.0, 0.0
    cov, err = _dl_inner(ctx, threshold)
    return min(max(1.0 - cov, 0.0), 1.0), err


def outage_ul(ctx: EvalContext, target_rate: float) -> tuple[float, float]:
    """UL outage probability of a non-truncated user; no quadrature involved."""
    if target_rate < 0:
        raise ValueError("target rate must be >= 0")
    if target_rate == 0:
        return 0.0, 0.0
    cfg = ctx.cfg
    threshold = _threshold(target_rate, ctx.plan.bw_ul)
    if math.isinf(threshold):
        return 1.0, 0.0
    cov = math.exp(-cfg.noise * threshold / cfg.rho) * lt_ul(ctx, threshold / (cfg.rho * ctx.factors.i_ul))
    return min(max(1.0 - cov, 0.0), 1.0), 0.0


def rate_dl(ctx: EvalContext) -> tuple[float, float]:
    """Ergodic DL rate in bit/s with its quadrature error bound."""
    inner_err = []

    def f(g):
        val, err = _dl_inner(ctx, g)
        inner_err.append(err)
        return val / (g + 1.0)

    val, err = integrate(f, 0.0, math.inf, ctx.outer_quad)
    scale = ctx.plan.bw_dl / LN2
    return scale * val, scale * (err + max(inner_err, default=0.0))


def rate_ul(ctx: EvalContext) -> tuple[float, float]:
    """Ergodic UL rate in bit/s (non-truncated user) with error bound."""
    cfg = ctx.cfg

    def f(g):
        return math.exp(-cfg.noise * g / cfg.rho) * lt_ul(ctx, g / (cfg.rho * ctx.factors.i_ul)) / (g + 1.0)

    val, err = integrate(f, 0.0, math.inf, ctx.outer_quad)
    scale = ctx.plan.bw_ul / LN2
    return scale * val, scale * err


def evaluate(ctx: EvalContext, target_rate_dl: float = 1e6, target_rate_ul: float | None = None) -> AnalyticMetrics:
    """All four metrics at one point; the UL target defaults to the DL one."""
    if target_rate_ul is None:
        target_rate_ul = target_rate_dl
    rd, rd_e = rate_dl(ctx)
    ru, ru_e = rate_ul(ctx)
    od, od_e = outage_dl(ctx, target_rate_dl)
    ou, ou_e = outage_ul(ctx, target_rate_ul)
    return AnalyticMetrics(rd, ru, od, ou, rd_e, ru_e, od_e, ou_e)

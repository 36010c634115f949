"""Command line front end: parameter sweeps, cross-validation and factors.

The configuration is one JSON document whose keys carry their units
(``p_dl_watt``, ``rho_dbm``, ``beta_dl_db``); everything is converted to
linear SI units here and nowhere else. Every section is optional and falls
back to the reference deployment, so ``{}`` is a valid config.

Exit codes: 0 ok, 1 usage or config error, 2 numeric failure, 3 a
cross-validation check failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from alphaduplex import analytic
from alphaduplex.geometry import (
    NetworkConfig,
    SIDistribution,
    Topology,
    db_to_linear,
    dbm_to_watt,
    linear_to_db,
    reference_config,
    truncation_probability,
)
from alphaduplex.numerics import ConvergenceError
from alphaduplex.simulate import DL, UL, EmptyEstimateError, SimSpec, collect_samples, metrics_from_samples
from alphaduplex.spectrum import PulseKind, SpectralFactors, make_band_plan, spectral_factors
from alphaduplex.validation import ks_serving_distance, lt_checks, lt_s_grid, rate_checks

__all__ = [
    "ConfigError",
    "DuplexSettings",
    "SweepConfig",
    "ValidationSettings",
    "cross_validate",
    "load_config",
    "main",
    "parse_config",
    "run_sweep",
]

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_VALIDATION = 3

AXES = ("alpha", "beta_dl", "target_rate")
ENGINES = ("analytic", "montecarlo")

CSV_COLUMNS = [
    "axis", "axis_value", "alpha", "beta_dl_db", "target_rate_bps", "si_distribution", "topology", "engine",
    "rate_dl_bps", "rate_ul_bps", "outage_dl", "outage_ul",
    "rate_dl_se", "rate_ul_se", "outage_dl_se", "outage_ul_se",
    "i_dl", "i_ul", "c_dl", "c_ul", "delta_f_hz", "truncation_probability",
]


class ConfigError(ValueError):
    """Config document is malformed or violates the schema."""


class NumericFailure(RuntimeError):
    pass


# ---------------------------------------------------------------- schema


@dataclass(frozen=True)
class DuplexSettings:
    dl_pulse: PulseKind = PulseKind.RECTANGULAR
    ul_pulse: PulseKind = PulseKind.TRIANGULAR
    guard_fraction: float = 0.03134
    bw_dl_hd: float = 1e6
    bw_ul_hd: float = 1e6
    alphas: tuple[float, ...] = (1.0,)
    topologies: tuple[Topology, ...] = (Topology.TWO_NODE, Topology.THREE_NODE)


@dataclass(frozen=True)
class ValidationSettings:
    rate_tolerance: float = 0.05
    lt_sigma: float = 3.0
    lt_points: int = 5
    lt_alpha: float = 1.0
    ks_threshold: float = 0.02


@dataclass(frozen=True)
class SweepConfig:
    network: NetworkConfig = field(default_factory=reference_config)
    duplex: DuplexSettings = DuplexSettings()
    axis: str = "alpha"
    grid: tuple[float, ...] = tuple(np.round(np.linspace(0.0, 1.0, 21), 10))
    engines: tuple[str, ...] = ("analytic",)
    sim: SimSpec = SimSpec()
    target_rate_dl: float = 1e6
    target_rate_ul: float = 1e6
    output: str | None = None
    validation: ValidationSettings = ValidationSettings()
    workers: int = 1


def _number(value, where: str, *, allow_neg_inf: bool = False) -> float:
    if isinstance(value, str) and allow_neg_inf and value.strip().lower() in ("-inf", "-infinity"):
        return -math.inf
    if value is None and allow_neg_inf:
        return -math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if math.isnan(value) or (math.isinf(value) and not (allow_neg_inf and value < 0)):
        raise ConfigError(f"{where}: must be finite")
    return value


def _integer(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    return value


def _section(doc: dict, key: str) -> dict:
    sec = doc.get(key, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"{key}: expected an object")
    return sec


def _reject_unknown(sec: dict, allowed, where: str):
    unknown = sorted(set(sec) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}; allowed: {', '.join(sorted(allowed))}")


# quantity -> {unit suffix: converter to linear SI}
_NETWORK_UNITS: dict[str, dict[str, Callable[[float], float]]] = {
    "lambda_bs": {"per_m2": lambda x: x, "per_km2": lambda x: x * 1e-6},
    "eta": {"": lambda x: x},
    "p_dl": {"watt": lambda x: x, "dbm": dbm_to_watt},
    "p_ul_max": {"watt": lambda x: x, "dbm": dbm_to_watt},
    "rho": {"watt": lambda x: x, "dbm": dbm_to_watt},
    "noise": {"watt": lambda x: x, "dbm": dbm_to_watt},
    "beta_dl": {"linear": lambda x: x, "db": db_to_linear},
    "beta_ul": {"linear": lambda x: x, "db": db_to_linear},
}


def _network_key(q: str, unit: str) -> str:
    return q if not unit else f"{q}_{unit}"


def _parse_network(sec: dict) -> NetworkConfig:
    allowed = {_network_key(q, u) for q, units in _NETWORK_UNITS.items() for u in units} | {"si_distribution"}
    _reject_unknown(sec, allowed, "network")
    values = asdict(reference_config())
    for q, units in _NETWORK_UNITS.items():
        given = [u for u in units if _network_key(q, u) in sec]
        if len(given) > 1:
            keys = ", ".join(_network_key(q, u) for u in given)
            raise ConfigError(f"network: {keys} set the same quantity; give only one")
        if given:
            u = given[0]
            key = _network_key(q, u)
            x = _number(sec[key], f"network.{key}", allow_neg_inf=(u == "db"))
            values[q] = units[u](x)
    if "si_distribution" in sec:
        try:
            values["si_distribution"] = SIDistribution.parse(sec["si_distribution"])
        except ValueError as exc:
            raise ConfigError(f"network.si_distribution: {exc}") from None
    try:
        return NetworkConfig(**values)
    except ValueError as exc:
        raise ConfigError(f"network: {exc}") from None


def _parse_duplex(sec: dict) -> DuplexSettings:
    allowed = {"dl_pulse", "ul_pulse", "guard_fraction", "bw_dl_hd_hz", "bw_ul_hd_hz", "alpha", "topologies"}
    _reject_unknown(sec, allowed, "duplex")
    d = DuplexSettings()
    kw = {}
    for key in ("dl_pulse", "ul_pulse"):
        if key in sec:
            try:
                kw[key] = PulseKind.parse(sec[key])
            except ValueError as exc:
                raise ConfigError(f"duplex.{key}: {exc}") from None
    if "guard_fraction" in sec:
        kw["guard_fraction"] = _number(sec["guard_fraction"], "duplex.guard_fraction")
        if kw["guard_fraction"] < 0:
            raise ConfigError("duplex.guard_fraction: must be >= 0")
    for key, name in (("bw_dl_hd_hz", "bw_dl_hd"), ("bw_ul_hd_hz", "bw_ul_hd")):
        if key in sec:
            kw[name] = _number(sec[key], f"duplex.{key}")
            if not kw[name] > 0:
                raise ConfigError(f"duplex.{key}: must be positive")
    if "alpha" in sec:
        raw = sec["alpha"] if isinstance(sec["alpha"], list) else [sec["alpha"]]
        if not raw:
            raise ConfigError("duplex.alpha: list is empty")
        alphas = tuple(_number(a, f"duplex.alpha[{i}]") for i, a in enumerate(raw))
        for i, a in enumerate(alphas):
            if not 0.0 <= a <= 1.0:
                raise ConfigError(f"duplex.alpha[{i}]: {a} is outside [0, 1]")
        kw["alphas"] = alphas
    if "topologies" in sec:
        raw = sec["topologies"]
        if not isinstance(raw, list) or not raw:
            raise ConfigError("duplex.topologies: expected a nonempty list")
        try:
            kw["topologies"] = tuple(dict.fromkeys(Topology.parse(t) for t in raw))
        except ValueError as exc:
            raise ConfigError(f"duplex.topologies: {exc}") from None
    return replace(d, **kw)


def _parse_grid(sec: dict, axis: str) -> tuple[float, ...]:
    if "values" in sec and "range" in sec:
        raise ConfigError("sweep: give either values or range, not both")
    if "values" in sec:
        raw = sec["values"]
        if not isinstance(raw, list) or not raw:
            raise ConfigError("sweep.values: expected a nonempty list")
        grid = tuple(_number(v, f"sweep.values[{i}]") for i, v in enumerate(raw))
    elif "range" in sec:
        rng = sec["range"]
        if not isinstance(rng, dict):
            raise ConfigError("sweep.range: expected an object with start, stop, num")
        _reject_unknown(rng, {"start", "stop", "num"}, "sweep.range")
        missing = [k for k in ("start", "stop", "num") if k not in rng]
        if missing:
            raise ConfigError(f"sweep.range: missing {', '.join(missing)}")
        num = _integer(rng["num"], "sweep.range.num")
        if num < 1:
            raise ConfigError("sweep.range.num: must be >= 1")
        lo = _number(rng["start"], "sweep.range.start")
        hi = _number(rng["stop"], "sweep.range.stop")
        grid = tuple(float(v) for v in np.round(np.linspace(lo, hi, num), 12))
    else:
        grid = SweepConfig.grid if axis == "alpha" else None
        if grid is None:
            raise ConfigError(f"sweep: axis {axis!r} needs values or range")
    for i, v in enumerate(grid):
        if axis == "alpha" and not 0.0 <= v <= 1.0:
            raise ConfigError(f"sweep grid[{i}]: alpha {v} is outside [0, 1]")
        if axis == "target_rate" and not v > 0:
            raise ConfigError(f"sweep grid[{i}]: target rate must be positive")
    return grid


def _parse_engines(raw) -> tuple[str, ...]:
    items = raw if isinstance(raw, list) else [raw]
    out = []
    for e in items:
        if e == "both":
            out.extend(ENGINES)
        elif e in ENGINES:
            out.append(e)
        else:
            raise ConfigError(f"engines: unknown engine {e!r}; use analytic, montecarlo or both")
    if not out:
        raise ConfigError("engines: at least one engine is required")
    return tuple(dict.fromkeys(out))


_SIM_KEYS = {
    "region_half_width_m": ("region_half_width", _number),
    "observation_half_width_m": ("observation_half_width", _number),
    "realizations": ("realizations", _integer),
    "drops_per_realization": ("drops_per_realization", _integer),
    "seed": ("seed", _integer),
    "min_ues_per_cell": ("min_ues_per_cell", _integer),
    "ue_density_factor": ("ue_density_factor", _number),
    "dl_receivers": ("dl_receivers", None),
}


def _parse_sim(sec: dict) -> SimSpec:
    _reject_unknown(sec, _SIM_KEYS, "sim")
    kw = {}
    for key, (name, conv) in _SIM_KEYS.items():
        if key in sec:
            kw[name] = conv(sec[key], f"sim.{key}") if conv else sec[key]
    try:
        return SimSpec(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"sim: {exc}") from None


def _parse_validation(sec: dict) -> ValidationSettings:
    allowed = {"rate_tolerance", "lt_sigma", "lt_points", "lt_alpha", "ks_threshold"}
    _reject_unknown(sec, allowed, "validation")
    kw = {}
    for key in allowed:
        if key in sec:
            kw[key] = _integer(sec[key], f"validation.{key}") if key == "lt_points" else _number(sec[key], f"validation.{key}")
    v = replace(ValidationSettings(), **kw)
    if not (v.rate_tolerance > 0 and v.lt_sigma > 0 and v.ks_threshold > 0 and v.lt_points >= 1):
        raise ConfigError("validation: tolerances must be positive and lt_points >= 1")
    if not 0.0 <= v.lt_alpha <= 1.0:
        raise ConfigError("validation.lt_alpha: must lie in [0, 1]")
    return v


def parse_config(doc) -> SweepConfig:
    """Validate a decoded JSON document and build a :class:`SweepConfig`."""
    if not isinstance(doc, dict):
        raise ConfigError("top level: expected a JSON object")
    top = {"network", "duplex", "sweep", "engines", "sim", "target_rate_dl_bps", "target_rate_ul_bps",
           "output", "validation", "workers"}
    _reject_unknown(doc, top, "top level")
    sweep = _section(doc, "sweep")
    _reject_unknown(sweep, {"axis", "values", "range"}, "sweep")
    axis = sweep.get("axis", "alpha")
    if axis not in AXES:
        raise ConfigError(f"sweep.axis: {axis!r} is not one of {', '.join(AXES)}")
    kw = dict(
        network=_parse_network(_section(doc, "network")),
        duplex=_parse_duplex(_section(doc, "duplex")),
        axis=axis,
        grid=_parse_grid(sweep, axis),
        sim=_parse_sim(_section(doc, "sim")),
        validation=_parse_validation(_section(doc, "validation")),
    )
    if "engines" in doc:
        kw["engines"] = _parse_engines(doc["engines"])
    for key, name in (("target_rate_dl_bps", "target_rate_dl"), ("target_rate_ul_bps", "target_rate_ul")):
        if key in doc:
            kw[name] = _number(doc[key], key)
            if not kw[name] > 0:
                raise ConfigError(f"{key}: must be positive")
    if "output" in doc:
        if not isinstance(doc["output"], str) or not doc["output"]:
            raise ConfigError("output: expected a file path")
        kw["output"] = doc["output"]
    if "workers" in doc:
        kw["workers"] = _integer(doc["workers"], "workers")
        if kw["workers"] < 1:
            raise ConfigError("workers: must be >= 1")
    return SweepConfig(**kw)


def load_config(path) -> SweepConfig:
    """Read and validate a config file; JSON errors report line and column."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return parse_config(doc)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


# ---------------------------------------------------------------- sweep


@dataclass(frozen=True)
class _Point:
    axis_value: float
    alpha: float
    topology: Topology
    network: NetworkConfig
    target_rate_dl: float
    target_rate_ul: float


def sweep_points(cfg: SweepConfig) -> list[_Point]:
    """Sweep points in output order: axis value, then alpha, then topology."""
    pts = []
    for v in cfg.grid:
        network, t_dl, t_ul = cfg.network, cfg.target_rate_dl, cfg.target_rate_ul
        if cfg.axis == "beta_dl":
            network = network.replace(beta_dl=db_to_linear(v))
        elif cfg.axis == "target_rate":
            t_dl = t_ul = v
        alphas = (v,) if cfg.axis == "alpha" else cfg.duplex.alphas
        for a in alphas:
            for topo in cfg.duplex.topologies:
                pts.append(_Point(v, a, topo, network, t_dl, t_ul))
    return pts


def _context(cfg: SweepConfig, pt: _Point, hook=None) -> analytic.EvalContext:
    d = cfg.duplex
    ctx = analytic.make_context(
        pt.network, pt.topology, pt.alpha,
        bw_dl_hd=d.bw_dl_hd, bw_ul_hd=d.bw_ul_hd, guard_fraction=d.guard_fraction,
        dl_kind=d.dl_pulse, ul_kind=d.ul_pulse,
    )
    if hook is not None:
        ctx = replace(ctx, factors=hook(ctx.factors))
    return ctx


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def _row(cfg: SweepConfig, pt: _Point, ctx, engine: str, m, se=None) -> dict:
    f = ctx.factors
    return {
        "axis": cfg.axis,
        "axis_value": _fmt(pt.axis_value),
        "alpha": _fmt(pt.alpha),
        "beta_dl_db": _fmt(linear_to_db(pt.network.beta_dl)),
        "target_rate_bps": _fmt(pt.target_rate_dl),
        "si_distribution": pt.network.si_distribution.value,
        "topology": pt.topology.value,
        "engine": engine,
        "rate_dl_bps": _fmt(m.rate_dl),
        "rate_ul_bps": _fmt(m.rate_ul),
        "outage_dl": _fmt(m.outage_dl),
        "outage_ul": _fmt(m.outage_ul),
        "rate_dl_se": _fmt(se and se.rate_dl_se),
        "rate_ul_se": _fmt(se and se.rate_ul_se),
        "outage_dl_se": _fmt(se and se.outage_dl_se),
        "outage_ul_se": _fmt(se and se.outage_ul_se),
        "i_dl": _fmt(f.i_dl),
        "i_ul": _fmt(f.i_ul),
        "c_dl": _fmt(f.c_dl),
        "c_ul": _fmt(f.c_ul),
        "delta_f_hz": _fmt(ctx.plan.delta_f),
        "truncation_probability": _fmt(truncation_probability(pt.network)),
    }


def _run_point(cfg: SweepConfig, pt: _Point) -> list[dict]:
    ctx = _context(cfg, pt)
    rows = []
    for engine in cfg.engines:
        if engine == "analytic":
            m = analytic.evaluate(ctx, pt.target_rate_dl, pt.target_rate_ul)
            rows.append(_row(cfg, pt, ctx, engine, m))
        else:
            samples = collect_samples(pt.network, pt.topology, ctx.factors, cfg.sim)
            m = metrics_from_samples(samples, ctx.plan, pt.target_rate_dl, pt.target_rate_ul)
            rows.append(_row(cfg, pt, ctx, engine, m, se=m))
    return rows


def _ordered_map(fn, items, workers: int):
    """Yield ``fn(item)`` in input order; a worker pool when ``workers > 1``."""
    if workers <= 1 or len(items) <= 1:
        for it in items:
            yield fn(it)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, it) for it in items]
        for fut in futures:
            yield fut.result()


class _PointRunner:
    def __init__(self, cfg):
        self.cfg = cfg

    def __call__(self, pt):
        return _run_point(self.cfg, pt)


_NUMERIC_ERRORS = (ConvergenceError, EmptyEstimateError, FloatingPointError, ZeroDivisionError, OverflowError)


def run_sweep(cfg: SweepConfig, stream) -> None:
    """Write the sweep CSV to ``stream``.

    Rows are written as soon as they are ready, in sweep order. If a point
    fails, the rows written so far stay and a final ``# incomplete`` line
    records the reason before :class:`NumericFailure` is raised.
    """
    w = csv.DictWriter(stream, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    pts = sweep_points(cfg)
    done = 0
    try:
        for rows in _ordered_map(_PointRunner(cfg), pts, cfg.workers):
            w.writerows(rows)
            done += 1
    except _NUMERIC_ERRORS as exc:
        pt = pts[done]
        stream.write(f"# incomplete: point {done + 1}/{len(pts)} "
                     f"({cfg.axis}={pt.axis_value!r}, alpha={pt.alpha!r}, {pt.topology.value}) failed: {exc}\n")
        raise NumericFailure(str(exc)) from exc


_PLOT_SCRIPT = '''"""Plot {csv_name}; generated by `alphaduplex sweep`. Needs matplotlib."""
import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt

path = Path(__file__).with_name("{csv_name}")
rows = [r for r in csv.DictReader(line for line in path.open(encoding="utf-8") if not line.startswith("#"))]
curves = defaultdict(list)
for r in rows:
    key = (r["topology"], r["engine"], r["alpha"] if r["axis"] != "alpha" else "", r["si_distribution"])
    curves[key].append(r)

fig, axes = plt.subplots(1, 2, figsize=(11, 4), sharex=True)
for (topo, engine, alpha, si), rs in sorted(curves.items()):
    x = [float(r["axis_value"]) for r in rs]
    label = " ".join(p for p in (topo, engine, f"alpha={{alpha}}" if alpha else "", si) if p)
    style = "-" if engine == "analytic" else "o"
    for ax, col in zip(axes, ("rate_ul_bps", "rate_dl_bps")):
        ax.plot(x, [float(r[col]) / 1e6 for r in rs], style, label=label)
for ax, title in zip(axes, ("UL rate", "DL rate")):
    ax.set_title(title)
    ax.set_xlabel("{axis_label}")
    ax.set_ylabel("Mbit/s")
    ax.grid(True, alpha=0.3)
axes[1].legend(fontsize="small")
fig.tight_layout()
out = path.with_suffix(".png")
fig.savefig(out, dpi=120)
print(out)
'''

_AXIS_LABELS = {"alpha": "alpha", "beta_dl": "beta_dl (dB)", "target_rate": "target rate (bit/s)"}


def write_plot_script(csv_path: Path, axis: str) -> Path:
    script = csv_path.with_name(csv_path.stem + "_plot.py")
    script.write_text(_PLOT_SCRIPT.format(csv_name=csv_path.name, axis_label=_AXIS_LABELS[axis]), encoding="utf-8")
    return script


# ---------------------------------------------------------------- validate


def cross_validate(cfg: SweepConfig, factor_hook: Callable[[SpectralFactors], SpectralFactors] | None = None) -> dict:
    """Run both engines over the sweep and compare them.

    ``factor_hook`` rewrites the spectral factors seen by the analytic
    engine only; it exists to check that a wrong model is caught.

    Returns a JSON-ready report with per-point rate errors, LT spot checks
    at ``validation.lt_alpha``, the serving-distance KS statistic and the
    overall verdict.
    """
    v = cfg.validation
    pts = sweep_points(cfg)
    rate_rows, lt_rows = [], []
    ks = None
    lt_done = set()
    lt_pts = [p for p in pts if p.alpha == v.lt_alpha]
    if not lt_pts:
        lt_pts = [replace(p, alpha=v.lt_alpha) for p in pts if p.axis_value == pts[0].axis_value]
    for pt in pts + [p for p in lt_pts if p not in pts]:
        ctx_a = _context(cfg, pt, factor_hook)
        ctx_sim = _context(cfg, pt)
        samples = collect_samples(pt.network, pt.topology, ctx_sim.factors, cfg.sim)
        if ks is None:
            ks = ks_serving_distance(pt.network, samples[DL].distance)
        if pt in pts:
            am = analytic.evaluate(ctx_a, pt.target_rate_dl, pt.target_rate_ul)
            mm = metrics_from_samples(samples, ctx_sim.plan, pt.target_rate_dl, pt.target_rate_ul)
            for c in rate_checks(pt.topology.value, pt.alpha, am, mm, v.rate_tolerance):
                rate_rows.append(dict(axis_value=pt.axis_value, **asdict(c), passed=c.passed))
        key = (pt.axis_value, pt.topology)
        if pt in lt_pts and key not in lt_done:
            lt_done.add(key)
            for link in (DL, UL):
                s_grid = lt_s_grid(ctx_a, samples[link], link, n=v.lt_points)
                for c in lt_checks(ctx_a, samples[link], link, s_grid, v.lt_sigma):
                    lt_rows.append(dict(axis_value=pt.axis_value, **asdict(c), z=c.z, passed=c.passed))
    ks_pass = ks < v.ks_threshold
    passed = all(r["passed"] for r in rate_rows) and all(r["passed"] for r in lt_rows) and ks_pass
    return {
        "verdict": "PASS" if passed else "FAIL",
        "axis": cfg.axis,
        "realizations": cfg.sim.realizations,
        "seed": cfg.sim.seed,
        "rate_checks": rate_rows,
        "lt_checks": lt_rows,
        "ks": {"statistic": ks, "threshold": v.ks_threshold, "passed": ks_pass},
    }


def format_report(report: dict) -> str:
    out = io.StringIO()
    out.write(f"cross-validation over {report['axis']} ({report['realizations']} realizations, seed {report['seed']})\n")
    out.write("rates (MC vs analytic):\n")
    for r in report["rate_checks"]:
        mark = "ok  " if r["passed"] else "FAIL"
        out.write(f"  {mark} {r['topology']} alpha={r['alpha']:<8g} {r['link']}  analytic {r['analytic']:.6g}  "
                  f"MC {r['simulated']:.6g} +- {r['simulated_se']:.2g}  rel err {r['rel_error']:+.4f} "
                  f"(tol {r['tolerance']:g})\n")
    out.write("Laplace transform spot checks:\n")
    for r in report["lt_checks"]:
        mark = "ok  " if r["passed"] else "FAIL"
        out.write(f"  {mark} {r['topology']} alpha={r['alpha']:<8g} {r['link']}  s={r['s']:.3g}  analytic {r['analytic']:.5f}  "
                  f"MC {r['simulated']:.5f}  z {r['z']:+.2f} (limit {r['sigma']:g})\n")
    k = report["ks"]
    out.write(f"serving-distance KS {k['statistic']:.4f} (limit {k['threshold']:g}) {'ok' if k['passed'] else 'FAIL'}\n")
    out.write(f"{report['verdict']}\n")
    return out.getvalue()


# ---------------------------------------------------------------- factors


def factors_report(cfg: SweepConfig, alpha: float) -> dict:
    d = cfg.duplex
    plan = make_band_plan(d.bw_dl_hd, d.bw_ul_hd, d.guard_fraction, alpha)
    f = spectral_factors(plan, d.dl_pulse, d.ul_pulse)
    return {
        "alpha": alpha,
        "dl_pulse": d.dl_pulse.value,
        "ul_pulse": d.ul_pulse.value,
        "bw_dl_hz": plan.bw_dl,
        "bw_ul_hz": plan.bw_ul,
        "delta_f_hz": plan.delta_f,
        **asdict(f),
    }


# ---------------------------------------------------------------- entry


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="alphaduplex", description="Rates and outage of alpha-duplex cellular networks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="JSON config file (defaults: reference deployment)")
        sp.add_argument("--seed", type=int, help="override sim.seed")
        sp.add_argument("--out", help="output path (default: config 'output', else stdout)")
        sp.add_argument("--engine", choices=("analytic", "montecarlo", "both"), help="override engines")
        sp.add_argument("--workers", type=int, help="worker processes for sweep points")
        sp.add_argument("-v", "--verbose", action="store_true")

    common(sub.add_parser("sweep", help="evaluate a parameter sweep and write CSV"))
    common(sub.add_parser("validate", help="cross-validate the analytic engine against Monte Carlo"))
    fp = sub.add_parser("factors", help="print the spectral factors at one alpha")
    common(fp)
    fp.add_argument("--alpha", type=float, required=True)
    return p


def _resolve(args) -> SweepConfig:
    cfg = load_config(args.config) if args.config else SweepConfig()
    if args.seed is not None:
        cfg = replace(cfg, sim=replace(cfg.sim, seed=args.seed))
    if args.engine is not None:
        cfg = replace(cfg, engines=_parse_engines(args.engine))
    if args.out is not None:
        cfg = replace(cfg, output=args.out)
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg = replace(cfg, workers=args.workers)
    return cfg


def _emit(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve(args)
        if args.command == "factors":
            if not 0.0 <= args.alpha <= 1.0:
                raise ConfigError(f"--alpha {args.alpha} is outside [0, 1]")
            _emit(json.dumps(factors_report(cfg, args.alpha), indent=2) + "\n", cfg.output)
            return EXIT_OK
        if args.command == "sweep":
            if cfg.output is None:
                run_sweep(cfg, sys.stdout)
                return EXIT_OK
            path = Path(cfg.output)
            with path.open("w", encoding="utf-8", newline="") as fh:
                try:
                    run_sweep(cfg, fh)
                finally:
                    write_plot_script(path, cfg.axis)
            return EXIT_OK
        if set(cfg.engines) != set(ENGINES):
            raise ConfigError("validate needs both engines (engines: both)")
        report = cross_validate(cfg)
        sys.stdout.write(format_report(report))
        if cfg.output is not None:
            Path(cfg.output).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
        return EXIT_OK if report["verdict"] == "PASS" else EXIT_VALIDATION
    except ConfigError as exc:
        print(f"alphaduplex: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericFailure as exc:
        print(f"alphaduplex: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except _NUMERIC_ERRORS as exc:
        print(f"alphaduplex: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

"""Deployment and uplink power-control model shared by both engines.

Base stations form a PPP of intensity ``lambda_bs`` (per m^2). Uplink users
invert their path loss to reach ``rho`` at the serving BS and stay silent when
that would need more than ``p_ul_max``. Distances are in meters and the path
loss is ``r ** -eta`` with no reference-distance constant.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from alphaduplex.numerics import lower_incomplete_gamma

__all__ = [
    "NetworkConfig",
    "SIDistribution",
    "Topology",
    "db_to_linear",
    "dbm_to_watt",
    "expected_ul_power_frac",
    "linear_to_db",
    "max_range",
    "sample_serving_distance",
    "serving_distance_cdf",
    "serving_distance_pdf",
    "reference_config",
    "truncation_probability",
    "watt_to_dbm",
]

ETA_MAX = 8.0


def db_to_linear(db):
    """dB to a linear ratio; ``-inf`` maps to 0."""
    out = 10.0 ** (np.asarray(db, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def linear_to_db(x):
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(np.asarray(x, dtype=float))
    return float(out) if out.ndim == 0 else out


def dbm_to_watt(dbm):
    return db_to_linear(dbm) * 1e-3


def watt_to_dbm(w):
    return linear_to_db(w) + 30.0


class SIDistribution(enum.Enum):
    """Law of the unit-mean self-interference attenuation ``h_s``."""

    DEGENERATE = "degenerate"
    EXPONENTIAL = "exponential"

    @classmethod
    def parse(cls, value) -> "SIDistribution":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown SI distribution {value!r}; use 'degenerate' or 'exponential'") from None


class Topology(enum.Enum):
    TWO_NODE = "2NT"
    THREE_NODE = "3NT"

    @classmethod
    def parse(cls, value) -> "Topology":
        if isinstance(value, cls):
            return value
        key = str(value).upper()
        aliases = {"2NT": cls.TWO_NODE, "TWO_NODE": cls.TWO_NODE, "3NT": cls.THREE_NODE, "THREE_NODE": cls.THREE_NODE}
        if key not in aliases:
            raise ValueError(f"unknown topology {value!r}; use '2NT' or '3NT'")
        return aliases[key]


@dataclass(frozen=True)
class NetworkConfig:
    """Physical parameters, all in linear SI units.

    ``beta_dl`` and ``beta_ul`` are the mean SI attenuations of the user and
    the base station; 0 means perfect cancellation.
    """

    lambda_bs: float
    eta: float
    p_dl: float
    p_ul_max: float
    rho: float
    noise: float
    beta_dl: float
    beta_ul: float
    si_distribution: SIDistribution = SIDistribution.DEGENERATE

    def __post_init__(self):
        object.__setattr__(self, "si_distribution", SIDistribution.parse(self.si_distribution))
        if not 2.0 < self.eta <= ETA_MAX:
            raise ValueError(f"eta must lie in (2, {ETA_MAX}], got {self.eta}")
        for name in ("lambda_bs", "p_dl", "p_ul_max", "rho", "noise"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.beta_dl < 0 or self.beta_ul < 0:
            raise ValueError("SI attenuations must be >= 0")
        if self.rho > self.p_ul_max:
            raise ValueError("rho must not exceed p_ul_max")

    def replace(self, **changes) -> "NetworkConfig":
        return replace(self, **changes)


def reference_config(eta: float = 4.0, **overrides) -> NetworkConfig:
    """The reference deployment: 3 BS/km^2, 5 W BSs, 2 W users, rho = -75 dBm.

    Noise is -90 dBm, ``beta_dl`` is -75 dB and the BS cancels its own SI
    perfectly (``beta_ul = 0``).
    """
    cfg = dict(
        lambda_bs=3e-6,
        eta=eta,
        p_dl=5.0,
        p_ul_max=2.0,
        rho=dbm_to_watt(-75.0),
        noise=dbm_to_watt(-90.0),
        beta_dl=db_to_linear(-75.0),
        beta_ul=0.0,
        si_distribution=SIDistribution.DEGENERATE,
    )
    cfg.update(overrides)
    return NetworkConfig(**cfg)


def max_range(cfg: NetworkConfig) -> float:
    """Largest serving distance at which a user can still reach ``rho``."""
    return (cfg.p_ul_max / cfg.rho) ** (1.0 / cfg.eta)


def _mass(cfg: NetworkConfig) -> float:
    # pi * lambda * R_M^2
    return math.pi * cfg.lambda_bs * max_range(cfg) ** 2


def serving_distance_pdf(cfg: NetworkConfig):
    """Density of the serving distance of a non-truncated user.

    Nearest-BS distance is Rayleigh; conditioning on ``r <= R_M`` gives a
    truncated Rayleigh law. The returned callable is vectorized and vanishes
    outside ``[0, R_M]``.
    """
    lam = cfg.lambda_bs
    r_max = max_range(cfg)
    norm = -math.expm1(-_mass(cfg))

    def pdf(r):
        r = np.asarray(r, dtype=float)
        val = 2.0 * math.pi * lam * r * np.exp(-math.pi * lam * r**2) / norm
        out = np.where((r >= 0) & (r <= r_max), val, 0.0)
        return float(out) if out.ndim == 0 else out

    return pdf


def serving_distance_cdf(cfg: NetworkConfig):
    lam = cfg.lambda_bs
    r_max = max_range(cfg)
    norm = -math.expm1(-_mass(cfg))

    def cdf(r):
        r = np.clip(np.asarray(r, dtype=float), 0.0, r_max)
        out = -np.expm1(-math.pi * lam * r**2) / norm
        return float(out) if out.ndim == 0 else out

    return cdf


def sample_serving_distance(cfg: NetworkConfig, size, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draws from :func:`serving_distance_pdf`."""
    u = rng.random(size)
    norm = -math.expm1(-_mass(cfg))
    return np.sqrt(-np.log1p(-u * norm) / (math.pi * cfg.lambda_bs))


def expected_ul_power_frac(cfg: NetworkConfig) -> float:
    """``E[P_u ** (2/eta)]`` for a non-truncated user, ``P_u = rho r^eta``."""
    m = _mass(cfg)
    return cfg.rho ** (2.0 / cfg.eta) * lower_incomplete_gamma(2.0, m) / (math.pi * cfg.lambda_bs * -math.expm1(-m))


def truncation_probability(cfg: NetworkConfig) -> float:
    """Probability that the nearest BS is beyond ``R_M`` (user silent)."""
    return math.exp(-_mass(cfg))

"""Band plan and pulse-shaping energy factors.

Pulses are time-limited rectangles or triangles whose null-to-null bandwidth
equals the channel bandwidth, so their spectra are ``sinc(2f/BW)`` and
``sinc(2f/BW)**2``. The receiver's matched filter is truncated to its own
channel, which makes even the desired pulse lose energy (the intra-mode
factor) and lets a shifted opposite-direction pulse leak in (the cross-mode
factor).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from alphaduplex.numerics import QuadratureSpec, integrate, sinc

__all__ = [
    "BandPlan",
    "PulseKind",
    "SpectralFactors",
    "cross_mode_factor",
    "intra_mode_factor",
    "make_band_plan",
    "pulse_spectrum",
    "spectral_factors",
]

# Factors are O(1e-6) near the orthogonal overlaps, so the absolute
# tolerance has to sit well under that.
_FACTOR_QUAD = QuadratureSpec(rel_tol=1e-10, abs_tol=1e-13, max_subdivisions=500)


class PulseKind(enum.Enum):
    RECTANGULAR = "R"
    TRIANGULAR = "T"

    @classmethod
    def parse(cls, value) -> "PulseKind":
        if isinstance(value, cls):
            return value
        key = str(value).upper()
        aliases = {"R": cls.RECTANGULAR, "RECTANGULAR": cls.RECTANGULAR, "T": cls.TRIANGULAR, "TRIANGULAR": cls.TRIANGULAR}
        if key not in aliases:
            raise ValueError(f"unknown pulse kind {value!r}; use 'R' or 'T'")
        return aliases[key]

    @property
    def sinc_power(self) -> int:
        return 1 if self is PulseKind.RECTANGULAR else 2

    @property
    def energy(self) -> float:
        # integral of sinc(x)**(2p) over the real line
        return 1.0 if self is PulseKind.RECTANGULAR else 2.0 / 3.0


@dataclass(frozen=True)
class BandPlan:
    """Half-duplex channels widened by the alpha-duplex overlap.

    ``delta_f`` is the distance between the DL and UL center frequencies.
    """

    bw_dl_hd: float
    bw_ul_hd: float
    guard_fraction: float
    alpha: float
    bw_dl: float
    bw_ul: float
    delta_f: float


def make_band_plan(bw_dl_hd: float, bw_ul_hd: float, guard_fraction: float, alpha: float) -> BandPlan:
    if not (bw_dl_hd > 0 and bw_ul_hd > 0):
        raise ValueError("bandwidths must be positive")
    if guard_fraction < 0:
        raise ValueError("guard fraction must be >= 0")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    b = min(bw_dl_hd, bw_ul_hd)
    widen = alpha * (guard_fraction + 1.0) * b
    # same value as (B_d + B_u + 2 eps B - 2 alpha B (eps + 1)) / 2, grouped so
    # that full overlap of equal channels gives exactly zero
    delta_f = ((bw_dl_hd + bw_ul_hd) / 2.0 - b) + (guard_fraction + 1.0) * b * (1.0 - alpha)
    return BandPlan(
        bw_dl_hd=bw_dl_hd,
        bw_ul_hd=bw_ul_hd,
        guard_fraction=guard_fraction,
        alpha=alpha,
        bw_dl=bw_dl_hd + widen,
        bw_ul=bw_ul_hd + widen,
        delta_f=delta_f,
    )


def pulse_spectrum(kind, bw: float):
    """Unit-energy spectrum ``S(f)`` of a pulse with null-to-null width ``bw``."""
    kind = PulseKind.parse(kind)
    if not bw > 0:
        raise ValueError("bandwidth must be positive")
    p = kind.sinc_power
    scale = 1.0 / math.sqrt(kind.energy * bw / 2.0)

    def spectrum(f):
        return scale * sinc(2.0 * np.asarray(f, dtype=float) / bw) ** p

    return spectrum


@lru_cache(maxsize=None)
def _intra(kind: PulseKind) -> float:
    p = kind.sinc_power
    val, _ = integrate(lambda x: np.sinc(x) ** (2 * p), -1.0, 1.0, _FACTOR_QUAD)
    return val / kind.energy


def intra_mode_factor(kind, bw: float) -> float:
    """Energy of a unit-energy pulse that survives its own channel filter.

    Depends on the pulse kind only; ``bw`` is checked but does not enter.
    """
    if not bw > 0:
        raise ValueError("bandwidth must be positive")
    return _intra(PulseKind.parse(kind))


@lru_cache(maxsize=65536)
def _cross(victim: PulseKind, aggressor: PulseKind, ratio: float, shift: float) -> float:
    # victim-normalized frequency x = 2 f / B_v; aggressor argument is
    # (x - shift) * ratio with ratio = B_v / B_a and shift = 2 delta_f / B_v
    pv, pa = victim.sinc_power, aggressor.sinc_power

    def f(x):
        return np.sinc(x) ** pv * np.sinc((x - shift) * ratio) ** pa

    val, _ = integrate(f, -1.0, 1.0, _FACTOR_QUAD)
    return math.sqrt(ratio) * val / math.sqrt(victim.energy * aggressor.energy)


def cross_mode_factor(victim_kind, victim_bw: float, aggressor_kind, aggressor_bw: float, delta_f: float) -> float:
    """Signed overlap of a shifted aggressor pulse with the victim's filter.

    Spectra are real, so the conjugate in the overlap integral is a no-op.
    Square the result to get the power weight.
    """
    if not (victim_bw > 0 and aggressor_bw > 0):
        raise ValueError("bandwidths must be positive")
    return _cross(
        PulseKind.parse(victim_kind),
        PulseKind.parse(aggressor_kind),
        float(victim_bw / aggressor_bw),
        float(2.0 * delta_f / victim_bw),
    )


@dataclass(frozen=True)
class SpectralFactors:
    """Power weights: squared intra-mode and cross-mode factors per link."""

    i_dl: float
    i_ul: float
    c_dl: float
    c_ul: float

    def __post_init__(self):
        for name in ("i_dl", "i_ul", "c_dl", "c_ul"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} = {v} is outside [0, 1]")


def spectral_factors(plan: BandPlan, dl_kind, ul_kind) -> SpectralFactors:
    dl_kind = PulseKind.parse(dl_kind)
    ul_kind = PulseKind.parse(ul_kind)
    i_dl = intra_mode_factor(dl_kind, plan.bw_dl)
    i_ul = intra_mode_factor(ul_kind, plan.bw_ul)
    c_dl = cross_mode_factor(dl_kind, plan.bw_dl, ul_kind, plan.bw_ul, plan.delta_f)
    c_ul = cross_mode_factor(ul_kind, plan.bw_ul, dl_kind, plan.bw_dl, -plan.delta_f)
    return SpectralFactors(i_dl=i_dl**2, i_ul=i_ul**2, c_dl=c_dl**2, c_ul=c_ul**2)

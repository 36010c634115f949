import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as spi
from scipy import special

from alphaduplex.spectrum import (
    PulseKind,
    SpectralFactors,
    cross_mode_factor,
    intra_mode_factor,
    make_band_plan,
    pulse_spectrum,
    spectral_factors,
)

R, T = PulseKind.RECTANGULAR, PulseKind.TRIANGULAR
EPS = 0.03134
ALPHA_STAR = 0.28859


def simpson_overlap(pv, pa, ratio, shift, n=400_001):
    """Independent oracle: composite Simpson on the victim band."""
    x = np.linspace(-1.0, 1.0, n)
    f = np.sinc(x) ** pv * np.sinc((x - shift) * ratio) ** pa
    return spi.simpson(f, x=x)


def test_band_plan_full_overlap_has_zero_offset():
    p = make_band_plan(1e6, 1e6, EPS, 1.0)
    assert p.delta_f == 0.0


def test_band_plan_half_duplex():
    p = make_band_plan(1e6, 1e6, EPS, 0.0)
    assert p.delta_f == pytest.approx(1.03134e6, rel=1e-14)
    assert p.bw_dl == 1e6 and p.bw_ul == 1e6


def test_band_plan_half_overlap_bandwidth():
    p = make_band_plan(1e6, 1e6, EPS, 0.5)
    assert p.bw_dl == pytest.approx(1.51567e6, rel=1e-14)
    assert p.bw_ul == pytest.approx(1.51567e6, rel=1e-14)


def test_band_plan_domain():
    for bad in (-0.01, 1.01, math.nan):
        with pytest.raises(ValueError):
            make_band_plan(1e6, 1e6, EPS, bad)
    with pytest.raises(ValueError):
        make_band_plan(0.0, 1e6, EPS, 0.5)
    with pytest.raises(ValueError):
        make_band_plan(1e6, 1e6, -0.1, 0.5)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e3, 1e8), st.floats(1e3, 1e8), st.floats(0.0, 0.5), st.floats(0.0, 1.0))
def test_band_plan_invariants(bd, bu, eps, alpha):
    p = make_band_plan(bd, bu, eps, alpha)
    b = min(bd, bu)
    assert p.bw_dl == pytest.approx(bd + alpha * (eps + 1) * b, rel=1e-13)
    assert p.bw_ul == pytest.approx(bu + alpha * (eps + 1) * b, rel=1e-13)
    want = (bd + bu + 2 * eps * b - 2 * alpha * b * (eps + 1)) / 2
    assert p.delta_f == pytest.approx(want, rel=1e-12, abs=1e-9 * b)


def test_rectangular_spectrum_nulls_at_channel_edges():
    s = pulse_spectrum(R, 2e6)
    assert abs(s(1e6)) < 1e-15 * s(0.0)
    assert abs(s(-1e6)) < 1e-15 * s(0.0)


def test_triangular_spectrum_nonnegative():
    s = pulse_spectrum(T, 1e6)
    f = np.linspace(-2e7, 2e7, 100_001)
    assert np.all(s(f) >= 0)


@pytest.mark.parametrize("kind", [R, T])
@pytest.mark.parametrize("bw", [1e3, 1e6, 3.3e7])
def test_pulse_spectrum_unit_energy(kind, bw):
    # body on +-200 null-to-null widths panel by panel, plus the tail: exact
    # via Si for sinc^2, a bound of order X^-3 for sinc^4
    s = pulse_spectrum(kind, bw)
    X = 200
    edges = np.arange(-X, X + 1) * bw / 2
    body = sum(spi.quad(lambda f: s(f) ** 2, lo, hi, epsabs=0, epsrel=1e-13)[0] for lo, hi in zip(edges[:-1], edges[1:]))
    if kind is R:
        si, _ = special.sici(2 * math.pi * X)
        tail = (1 / X - math.cos(2 * math.pi * X) / X + 2 * math.pi * (math.pi / 2 - si)) / math.pi**2
    else:
        tail = 0.0
        assert 2 / (3 * math.pi**4 * X**3) / kind.energy < 1e-8
    assert body + tail == pytest.approx(1.0, abs=1e-8)


def test_intra_mode_rectangular_closed_form():
    # int_{-1}^{1} sinc^2 = 2 Si(2 pi) / pi
    si, _ = special.sici(2 * math.pi)
    assert intra_mode_factor(R, 1e6) == pytest.approx(2 * si / math.pi, rel=1e-12)
    assert intra_mode_factor(R, 1e6) == pytest.approx(0.9028, abs=1e-4)


def test_intra_mode_triangular():
    oracle = simpson_overlap(2, 2, 1.0, 0.0) / (2 / 3)
    assert intra_mode_factor(T, 1e6) == pytest.approx(oracle, rel=1e-11)
    assert intra_mode_factor(T, 1e6) == pytest.approx(0.997, abs=1e-3)


@pytest.mark.parametrize("kind", [R, T])
def test_intra_mode_strictly_lossy_and_scale_free(kind):
    i = intra_mode_factor(kind, 1e6)
    assert 0.5 < i < 1.0
    assert intra_mode_factor(kind, 2e6) == pytest.approx(i, rel=1e-14)
    assert intra_mode_factor(kind, 17.0) == pytest.approx(i, rel=1e-14)


@pytest.mark.parametrize("kind", [R, T])
def test_cross_equals_intra_without_offset(kind):
    assert cross_mode_factor(kind, 1e6, kind, 1e6, 0.0) == pytest.approx(intra_mode_factor(kind, 1e6), rel=1e-12)


def test_cross_swap_symmetric_for_identical_channels():
    for kind in (R, T):
        for df in (1e5, 4.4e5, 9e5):
            a = cross_mode_factor(kind, 1e6, kind, 1e6, df)
            b = cross_mode_factor(kind, 1e6, kind, 1e6, -df)
            assert a == pytest.approx(b, rel=1e-10, abs=1e-14)


def test_cross_far_offset_is_small():
    c = cross_mode_factor(R, 1e6, T, 1e6, 100e6)
    assert c**2 < 1e-3


@pytest.mark.parametrize("alpha", [0.0, 0.25, ALPHA_STAR, 0.5, 0.75, 1.0])
def test_factors_match_simpson_oracle(alpha):
    plan = make_band_plan(1e6, 1e6, EPS, alpha)
    f = spectral_factors(plan, R, T)
    ratio = plan.bw_dl / plan.bw_ul
    c_dl = math.sqrt(ratio) * simpson_overlap(1, 2, ratio, 2 * plan.delta_f / plan.bw_dl) / math.sqrt(2 / 3)
    c_ul = math.sqrt(1 / ratio) * simpson_overlap(2, 1, 1 / ratio, -2 * plan.delta_f / plan.bw_ul) / math.sqrt(2 / 3)
    assert f.c_dl == pytest.approx(c_dl**2, rel=1e-8, abs=1e-15)
    assert f.c_ul == pytest.approx(c_ul**2, rel=1e-6, abs=1e-14)


def test_reference_factor_values():
    # frozen from the Simpson oracle above
    f0 = spectral_factors(make_band_plan(1e6, 1e6, EPS, 0.0), R, T)
    f5 = spectral_factors(make_band_plan(1e6, 1e6, EPS, 0.5), R, T)
    f1 = spectral_factors(make_band_plan(1e6, 1e6, EPS, 1.0), R, T)
    assert f0.i_dl == pytest.approx(0.81509, abs=1e-5)
    assert f0.i_ul == pytest.approx(0.99412, abs=1e-5)
    assert f0.c_dl == pytest.approx(4.525e-4, rel=1e-3)
    assert f5.c_dl == pytest.approx(0.2221, abs=1e-4)
    assert f5.c_ul == pytest.approx(0.1930, abs=1e-4)
    assert f1.c_dl == pytest.approx(0.86035, abs=1e-5)
    assert f1.c_ul == pytest.approx(0.86035, abs=1e-5)


def test_all_rectangular_full_overlap_c_equals_i():
    f = spectral_factors(make_band_plan(1e6, 1e6, EPS, 1.0), R, R)
    assert f.c_dl == pytest.approx(f.i_dl, rel=1e-12)
    assert f.c_ul == pytest.approx(f.i_ul, rel=1e-12)


def test_half_duplex_cross_factors_negligible():
    f = spectral_factors(make_band_plan(1e6, 1e6, EPS, 0.0), R, T)
    assert f.c_dl < 1e-3 * f.i_dl
    assert f.c_ul < 1e-3 * f.i_ul


def test_uplink_cross_factor_minimum_at_orthogonal_overlap():
    alphas = np.linspace(0.0, 1.0, 101)
    c_ul = np.array([spectral_factors(make_band_plan(1e6, 1e6, EPS, a), R, T).c_ul for a in alphas])
    k = int(np.argmin(c_ul[1:])) + 1
    assert abs(alphas[k] - ALPHA_STAR) <= 0.01
    # exact orthogonality: the signed overlap changes sign here
    assert spectral_factors(make_band_plan(1e6, 1e6, EPS, ALPHA_STAR), R, T).c_ul < 1e-10
    lo = cross_mode_factor(T, 1e6 + 0.288 * (1 + EPS) * 1e6, R, 1e6 + 0.288 * (1 + EPS) * 1e6,
                           -make_band_plan(1e6, 1e6, EPS, 0.288).delta_f)
    hi = cross_mode_factor(T, 1e6 + 0.290 * (1 + EPS) * 1e6, R, 1e6 + 0.290 * (1 + EPS) * 1e6,
                           -make_band_plan(1e6, 1e6, EPS, 0.290).delta_f)
    assert lo * hi < 0


def test_factors_continuous_in_alpha():
    alphas = np.linspace(0.0, 1.0, 401)
    fs = [spectral_factors(make_band_plan(1e6, 1e6, EPS, a), R, T) for a in alphas]
    for name in ("c_dl", "c_ul"):
        v = np.array([getattr(f, name) for f in fs])
        steps = np.abs(np.diff(v))
        # |d c / d alpha| stays below ~3 on this plan
        assert steps.max() < 3.0 * (alphas[1] - alphas[0])


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 1.0), st.sampled_from([R, T]), st.sampled_from([R, T]), st.floats(0.3, 3.0))
def test_factors_in_unit_interval(alpha, kd, ku, ratio):
    plan = make_band_plan(1e6, ratio * 1e6, EPS, alpha)
    f = spectral_factors(plan, kd, ku)
    for v in (f.i_dl, f.i_ul, f.c_dl, f.c_ul):
        assert 0.0 <= v <= 1.0
    # intra factors do not depend on the offset
    assert f.i_dl == pytest.approx(intra_mode_factor(kd, 1.0) ** 2)


def test_spectral_factors_validation():
    with pytest.raises(ValueError):
        SpectralFactors(i_dl=1.2, i_ul=0.5, c_dl=0.1, c_ul=0.1)
    with pytest.raises(ValueError):
        SpectralFactors(i_dl=0.5, i_ul=0.5, c_dl=-0.1, c_ul=0.1)


def test_pulse_kind_parse():
    assert PulseKind.parse("r") is R
    assert PulseKind.parse("Triangular") is T
    with pytest.raises(ValueError):
        PulseKind.parse("gaussian")

import math

import numpy as np
import pytest

from maasslab import kuznetsov as kz
from maasslab.errors import ValidationError
from maasslab.forms import SpectralBasis
from maasslab.kuznetsov import TestFunction, gaussian_pair
from maasslab.lfunc import VWeightParams

H0_GAUSS = 0.295509488209884198851300754988  # (2/pi) int t e^{-t^2} tanh(pi t), mpmath
OMEGA_10 = complex(-0.84528172139036501643924059022, -13.3150240155078727282723906338)  # mpmath


def gauss():
    ev = lambda t: np.exp(-np.asarray(t) ** 2)  # noqa: E731
    return TestFunction(ev, 0.0, 1.0, "e^{-t^2}", ev, support=6.0)


def zero():
    ev = lambda t: np.zeros_like(np.asarray(t, dtype=complex)).real  # noqa: E731
    return TestFunction(ev, 10.0, 2.0, "0", lambda z: np.zeros_like(np.asarray(z, dtype=complex)), support=40.0)


def test_gaussian_pair_contract():
    h = gaussian_pair(14.0, 4.0)
    res = h.contract_residuals()
    assert res["evenness"] <= 1e-12 and res["decay"] <= 1e-12
    with pytest.raises(ValidationError):
        gaussian_pair(10.0, 0.0)
    with pytest.raises(ValidationError):
        TestFunction(lambda t: t, 1.0, 1.0).at(1j)


def test_h_zero():
    assert kz.h_zero(zero()) == 0.0
    assert kz.h_zero(gauss()) == pytest.approx(H0_GAUSS, rel=1e-11)
    h = gaussian_pair(14.0, 4.0)
    assert kz.h_zero(h.scaled(-2.5)) == pytest.approx(-2.5 * kz.h_zero(h), rel=1e-12)


def test_zero_function_transforms_vanish():
    for x in (0.5, 20.0):
        assert kz.h_plus(zero(), x) == 0.0
        assert kz.h_minus(zero(), x) == 0.0


@pytest.mark.parametrize("x", [3.0, 20.0, 45.0])
def test_routes_agree(x):
    h = gaussian_pair(14.0, 4.0)
    plus, plus_b = kz.h_plus(h, x), kz.h_plus_bessel(h, x)
    minus, minus_b = kz.h_minus(h, x), kz.h_minus_bessel(h, x)
    scale = kz.h_zero(h)
    assert abs(plus - plus_b) <= 1e-6 * max(abs(plus_b), 1e-3 * scale)
    assert abs(minus - minus_b) <= 1e-6 * max(abs(minus_b), 1e-3 * scale)


def test_route_argument_validated():
    with pytest.raises(ValidationError):
        kz.h_plus(gaussian_pair(14.0, 4.0), 5.0, route="nope")


def test_h_minus_band_pass_moderate():
    h = gaussian_pair(30.0, 5.0)
    band = max(abs(kz.h_minus(h, x)) for x in np.linspace(6.0, 120.0, 12))
    for x in (0.3, 1.0, 600.0):
        assert abs(kz.h_minus(h, x)) <= 1e-6 * band


def test_k_hat():
    h = gaussian_pair(100.0, 10.0)
    kh = kz.k_hat(h)
    ys = np.array([0.0, 0.3, 0.7])
    assert np.allclose(kh(ys).real, math.sqrt(math.pi) * np.exp(-math.pi ** 2 * ys ** 2), atol=1e-12)
    assert abs(kh(2 * math.log(100.0) ** 2)[0]) <= 1e-10


def test_k_hat_derivative_bound_with_v():
    T = 100.0
    h = gaussian_pair(T, T ** 0.9)
    kh = kz.k_hat(h, VWeightParams(mu=5.0, t=T), n=3, nodes=200)
    ys = np.linspace(-math.log(T) ** 2, math.log(T) ** 2, 61)
    d = (kh(ys + 1e-4) - kh(ys - 1e-4)) / 2e-4
    assert np.max(np.abs(d)) <= 10 * T ** 0.05


def test_phase_monotone_on_khat_support():
    T = 100.0
    M = T ** 0.9
    Z = math.log(T) ** 2
    z = np.linspace(-Z, Z, 2001)
    # exact range where phi' <= -T/10M on |z| <= Z
    x_ok = 1.8 * T / math.sinh(math.pi * Z / M)
    for x in (1.0, 0.5 * x_ok, x_ok):
        assert np.max(kz.phi_prime(z, x, T, M)) <= -T / (10 * M) + 1e-12
    assert np.max(kz.phi_prime(z, 1.01 * x_ok, T, M)) > -T / (10 * M)
    # the asymptotic range |x| <= T^0.95 M is far wider than this at T = 100
    assert T ** 0.95 * M > 10 * x_ok


def test_eisenstein_weight():
    t = np.array([0.3, 2.0, 17.5])
    assert np.allclose(kz.eisenstein_weight(-t), np.conj(kz.eisenstein_weight(t)), rtol=1e-12)
    assert kz.eisenstein_weight(0.0) == 0
    assert abs(kz.eisenstein_weight(10.0) - OMEGA_10) <= 1e-11 * abs(OMEGA_10)
    assert kz.eisenstein_weight(10.0, absolute=True) == pytest.approx(abs(OMEGA_10), rel=1e-12)


def test_eisenstein_integral_symmetric_in_m_n():
    h = gaussian_pair(14.0, 4.0)
    a = kz.eisenstein_integral(h, 2, 3, h.radius)
    b = kz.eisenstein_integral(h, 3, 2, h.radius)
    assert a == pytest.approx(b, abs=1e-12)


@pytest.fixture(scope="module")
def small():
    return gaussian_pair(3.0, 1.5)


def test_trace_report_identities(tiny_basis, small):
    r = kz.trace_both_sides(tiny_basis, small, 2, 3, c_max=12)
    assert r.residual == r.spectral_side - (r.delta_term + r.kloosterman_plus + r.kloosterman_minus + r.eisenstein_term)
    assert r.delta_term == 0.0
    assert r.truncations["c_max"] == 12
    row = r.as_row()
    assert row["residual"] == r.residual


def test_trace_linearity(tiny_basis, small):
    a = kz.trace_both_sides(tiny_basis, small, 1, 1, c_max=12)
    b = kz.trace_both_sides(tiny_basis, small.scaled(3.0), 1, 1, c_max=12)
    for name in ("spectral_side", "delta_term", "kloosterman_plus", "kloosterman_minus", "eisenstein_term"):
        assert getattr(b, name) == pytest.approx(3.0 * getattr(a, name), rel=1e-10, abs=1e-14)


def test_trace_swap(tiny_basis, small):
    a = kz.trace_both_sides(tiny_basis, small, 2, 5, c_max=12)
    b = kz.trace_both_sides(tiny_basis, small, 5, 2, c_max=12)
    assert a.spectral_side == pytest.approx(b.spectral_side, abs=1e-12)
    assert a.geometric_side == pytest.approx(b.geometric_side, abs=1e-9)


def test_trace_preconditions(form_a, form_b, small):
    unweighted = SpectralBasis((form_a,), t_max=20.0, weighted=False)
    with pytest.raises(ValidationError, match="unweighted"):
        kz.trace_both_sides(unweighted, small, 1, 1)
    short = SpectralBasis((form_a, form_b), t_max=4.0)
    with pytest.raises(ValidationError):
        kz.trace_both_sides(short, small, 1, 1)


def test_normalizations_differ_only_by_constants(tiny_basis, small):
    a = kz.trace_both_sides(tiny_basis, small, 1, 1, c_max=8, normalization="paper")
    b = kz.trace_both_sides(tiny_basis, small, 1, 1, c_max=8, normalization="standard")
    assert b.delta_term == pytest.approx(2 / math.pi * a.delta_term, rel=1e-12)
    assert b.kloosterman_plus == pytest.approx(4 / math.pi * a.kloosterman_plus, rel=1e-12, abs=1e-15)
    assert b.kloosterman_minus == pytest.approx(8 / math.pi * a.kloosterman_minus, rel=1e-12, abs=1e-15)
    assert a.spectral_side == b.spectral_side

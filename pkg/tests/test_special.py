import math

import numpy as np
import pytest

from maasslab import special
from maasslab.errors import ConvergenceError, DomainError, PoleError
from maasslab.special import QuadratureSpec, adaptive_quad, log_gamma, zeta

# mpmath values (30 digits), frozen
ZETA_3 = 1.20205690315959428539973816151
ZETA_1P2I = complex(0.598165569762381736703456849174, -0.351854745217845290496538596797)
K0_1 = 0.421024438240708333335627379213
K0_10 = 1.77800623161676518113011927995e-05
K_2I_5 = 0.00254946527795843529418680740062
# (J_{2i}(5) - J_{-2i}(5)) / cosh(pi) = -0.41984...i
JCOMB_1_5 = -0.419845178852429436057148783757


def test_log_gamma_examples():
    assert abs(log_gamma(1)) < 1e-14
    assert log_gamma(0.5).real == pytest.approx(0.5 * math.log(math.pi), abs=1e-12)
    assert log_gamma(5).real == pytest.approx(math.log(24), abs=1e-12)


@pytest.mark.parametrize("z", [0, -1, -7])
def test_log_gamma_poles(z):
    with pytest.raises(PoleError):
        log_gamma(z)


def test_log_gamma_recurrence_grid():
    x, y = np.meshgrid(np.linspace(1, 50, 25), np.linspace(-50, 50, 41))
    z = (x + 1j * y).ravel()
    lhs = log_gamma(z + 1) - log_gamma(z) - np.log(z)
    # equality up to a multiple of 2 pi i in the imaginary part
    lhs = lhs.real + 1j * np.remainder(lhs.imag + math.pi, 2 * math.pi) - 1j * math.pi
    assert np.max(np.abs(lhs)) <= 1e-10


def test_reflection():
    x, y = np.meshgrid(np.linspace(-3.7, 3.7, 15), np.linspace(-3, 3, 13))
    z = (x + 1j * y).ravel()
    z = z[np.abs(z - np.round(z.real)) > 0.1]
    prod = np.exp(log_gamma(z) + log_gamma(1 - z))
    ref = math.pi / np.sin(math.pi * z)
    assert np.max(np.abs(prod - ref) / np.abs(ref)) <= 1e-8


def test_stirling_envelope():
    for z in (40 + 25j, 12 - 30j, 100.0):
        exact = np.exp(log_gamma(z))
        assert abs(special.stirling3(z) / exact - 1) <= 1 / abs(z) ** 3


def test_zeta_values():
    assert complex(zeta(2)).real == pytest.approx(math.pi ** 2 / 6, abs=1e-13)
    assert abs(zeta(3) - ZETA_3) <= 1e-13
    assert abs(zeta(1 + 2j) - ZETA_1P2I) <= 1e-12
    s = 0.8 + 37.5j
    assert abs(zeta(s.conjugate()) - np.conj(zeta(s))) <= 1e-13


def test_zeta_errors():
    with pytest.raises(PoleError):
        zeta(1)
    with pytest.raises(DomainError):
        zeta(0.5 + 3j)


def test_bessel_k():
    assert special.bessel_K_imag_order(0.0, 1.0) == pytest.approx(K0_1, rel=1e-10)
    assert special.bessel_K_imag_order(0.0, 10.0) == pytest.approx(K0_10, rel=1e-8)
    assert special.bessel_K_imag_order(1.0, 5.0) == pytest.approx(K_2I_5, rel=1e-9)
    assert special.bessel_K_imag_order(-1.3, 4.0) == special.bessel_K_imag_order(1.3, 4.0)
    for t in (0.0, 1.0):
        assert abs(special.bessel_K_imag_order(t, 20.0)) < 1e-6 * abs(special.bessel_K_imag_order(t, 1.0))
    # at t = 5 the ratio is 4.2e-4 (mpmath): K_{10i}(1) is itself of size e^{-5 pi}
    ratio = special.bessel_K_imag_order(5.0, 20.0) / special.bessel_K_imag_order(5.0, 1.0)
    assert ratio == pytest.approx(0.000421847951524466, rel=1e-6)
    with pytest.raises(DomainError):
        special.bessel_K_imag_order(1.0, 0.0)


def test_bessel_j_combination():
    assert special.bessel_J_combination(0.0, 3.0) == 0.0
    assert special.bessel_J_combination(1.0, 5.0) == pytest.approx(JCOMB_1_5, rel=1e-9)
    assert special.bessel_J_combination(-2.0, 7.0) == pytest.approx(-special.bessel_J_combination(2.0, 7.0), abs=1e-14)
    with pytest.raises(DomainError):
        special.bessel_J_combination(1.0, -1.0)


def test_adaptive_quad_examples():
    assert adaptive_quad(lambda x: 1.0, (0, 1)).value == pytest.approx(1)
    assert adaptive_quad(lambda x: math.exp(-x * x), (-math.inf, math.inf)).value.real == pytest.approx(math.sqrt(math.pi), abs=1e-11)
    target = math.pi / (2 * math.e)
    blocks = adaptive_quad(lambda x: math.cos(x) / (1 + x * x), (0, math.inf), QuadratureSpec(period=2 * math.pi))
    fourier = adaptive_quad(lambda x: 1 / (1 + x * x), (0, math.inf), QuadratureSpec(weight=("cos", 1.0)))
    assert blocks.value.real == pytest.approx(target, abs=1e-11)
    assert fourier.value.real == pytest.approx(target, abs=1e-12)
    c = adaptive_quad(lambda x: complex(math.cos(x), x), (0, 1))
    assert c.value == pytest.approx(complex(math.sin(1), 0.5))


def test_adaptive_quad_convergence_error_keeps_estimate():
    spec = QuadratureSpec(abs_tol=1e-15, rel_tol=1e-15, max_subdivisions=2)
    with pytest.raises(ConvergenceError) as info:
        adaptive_quad(lambda x: math.sin(1 / x), (1e-4, 1.0), spec)
    assert info.value.estimate is not None


def test_quadrature_spec_validation():
    with pytest.raises(Exception):
        QuadratureSpec(abs_tol=0)
    with pytest.raises(Exception):
        QuadratureSpec(max_subdivisions=0)

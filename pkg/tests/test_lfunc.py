import math

import numpy as np
import pytest

from conftest import synthetic_form
from maasslab import lfunc
from maasslab.errors import ConvergenceError, DomainError, GapError, TruncationError, ValidationError
from maasslab.forms import MaassForm
from maasslab.lfunc import GammaQuadruple, VWeightParams, rs_gamma_factor, v_weight

GAMMA_QUARTER_4_OVER_PI = 55.0014865441629826199207662385  # mpmath
EULER_GAMMA = 0.5772156649015329


@pytest.fixture(scope="module")
def f_big():
    return synthetic_form(9.5, seed=11, P=2000)


@pytest.fixture(scope="module")
def h_big():
    return synthetic_form(12.25, seed=12, P=2000)


def test_gamma_factor_symmetries_and_value():
    s = 0.5 + 0.3j
    a = complex(rs_gamma_factor(GammaQuadruple(s, 7.0, 3.0)))
    assert complex(rs_gamma_factor(GammaQuadruple(s, 3.0, 7.0))) == pytest.approx(a, rel=1e-12)
    assert complex(rs_gamma_factor(GammaQuadruple(s, -7.0, 3.0))) == pytest.approx(a, rel=1e-12)
    g = rs_gamma_factor(GammaQuadruple(0.5, 0.0, 0.0))
    assert complex(g).real == pytest.approx(GAMMA_QUARTER_4_OVER_PI, rel=1e-12)


def test_gamma_factor_log_domain_never_overflows():
    for mu, t in [(500, 500), (500, -3), (0.0, 500)]:
        g = rs_gamma_factor(GammaQuadruple(0.5, mu, t))
        assert math.isfinite(g.log_modulus) and math.isfinite(g.phase)


# V on Re(u) = 3 by mpmath quadrature of the defining contour integral (25 digits)
V_ORACLE = {
    (10.0, 2, 5.0, 60.0): 1.697776677832368885297742,
    (10.0, 4, 5.0, 60.0): 1.676795619992907648302024,
    (1.0, 4, 0.0, 100.0): 3.344504476438282084189906,
    (50.0 ** 2.5, 4, 0.0, 50.0): 0.0002017312282670894122689779,
}


@pytest.mark.parametrize("key", list(V_ORACLE))
def test_v_weight_matches_contour_oracle(key):
    y, A, mu, t = key
    assert v_weight(y, VWeightParams(A=A, mu=mu, t=t)) == pytest.approx(V_ORACLE[key], abs=1e-10)


def test_v_weight_depends_on_a():
    # only the residue at u = 0 is A-free; the shifted integral is not
    v2 = v_weight(10.0, VWeightParams(A=2, mu=5.0, t=60.0))
    v4 = v_weight(10.0, VWeightParams(A=4, mu=5.0, t=60.0))
    assert abs(v2 - v4) > 1e-3


def test_v_weight_residue_main_term():
    # double pole at u = 0: log(|t| / (2 pi sqrt y)) + gamma up to O(sqrt(y)/|t|)
    for y in (1.0, 4.0):
        v = v_weight(y, VWeightParams(mu=0.0, t=100.0))
        assert abs(v - (math.log(100 / (2 * math.pi * math.sqrt(y))) + EULER_GAMMA)) <= math.sqrt(y) / 100


def test_v_weight_decays_past_effective_length():
    p = VWeightParams(mu=0.0, t=50.0)
    vals = [abs(v_weight(y, p)) for y in (50.0 ** 2, 50.0 ** 2.5, 50.0 ** 3)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-2 * vals[0]


def test_v_weight_contours_agree():
    for y in (40.0, 400.0):
        a = v_weight(y, VWeightParams(4, 5.0, 30.0, contour_real_part=3.0))
        b = v_weight(y, VWeightParams(4, 5.0, 30.0, contour_real_part=1.5))
        assert a == pytest.approx(b, abs=1e-10)
        assert a == pytest.approx(v_weight(y, VWeightParams(mu=5.0, t=30.0)), abs=1e-10)
    # far from the saddle the fixed contour is refused rather than returned inaccurate
    with pytest.raises(ConvergenceError):
        v_weight(3.0, VWeightParams(4, 5.0, 30.0, contour_real_part=3.0))


def test_contour_past_pole_rejected():
    with pytest.raises(DomainError):
        VWeightParams(A=1, contour_real_part=2.5)
    with pytest.raises(ValidationError):
        VWeightParams(A=0)


def test_scaling_property():
    T = 100.0
    M = T ** 0.9
    worst = 0.0
    for y in np.geomspace(1.0, T * T, 9):
        up = v_weight(y, VWeightParams(mu=5.0, t=T + 0.01 * M))
        dn = v_weight(y, VWeightParams(mu=5.0, t=T - 0.01 * M))
        worst = max(worst, abs(up - dn) / 0.02)
    assert worst <= 10


def test_v_many_matches_scalar():
    p = VWeightParams(mu=3.0, t=20.0)
    ys = np.array([1.0, 7.0, 90.0, 800.0])
    assert np.allclose(lfunc.v_weight_many(ys, p), [v_weight(y, p) for y in ys], atol=1e-13)


def test_central_value_single_term(f_big):
    n_max = 800
    delta = MaassForm(12.25, {n: float(n == 1) for n in range(1, n_max + 1)})
    cv = lfunc.central_value_rs(f_big, delta, n_max=n_max)
    assert cv.value == pytest.approx(2 * v_weight(1.0, VWeightParams(mu=9.5, t=12.25)), abs=1e-13)


def test_central_value_tail(f_big, h_big):
    # A-independence needs a functional equation, so it is checked on real forms elsewhere
    a4 = lfunc.central_value_rs(f_big, h_big)
    doubled = lfunc.central_value_rs(f_big, h_big, n_max=2 * a4.n_max)
    assert abs(doubled.value - a4.value) <= a4.tail_bound
    with pytest.raises(TruncationError):
        lfunc.central_value_rs(f_big, h_big, n_max=50, tail_tol=1e-12)
    with pytest.raises(GapError):
        lfunc.central_value_rs(f_big, h_big, n_max=10 ** 5)


def test_rs_dirichlet(f_big, h_big):
    v, _ = lfunc.rs_dirichlet_direct(f_big, f_big, 3.0, 500)
    assert abs(v.imag) < 1e-14 and v.real > 0
    a, tail_a = lfunc.rs_dirichlet_direct(f_big, h_big, 2.0, 1000)
    b, _ = lfunc.rs_dirichlet_direct(f_big, h_big, 2.0, 2000)
    assert abs(a - b) <= tail_a
    d, tail_d = lfunc.rs_dirichlet_direct(f_big, h_big, 3.0 + 1j, 2000)
    e = lfunc.rs_euler_product(f_big, h_big, 3.0 + 1j, 2000)
    assert abs(d - e) <= 2 * tail_d
    with pytest.raises(DomainError):
        lfunc.rs_dirichlet_direct(f_big, h_big, 1.0, 100)


def test_standard_l_partial(f_big):
    assert lfunc.standard_L_partial(f_big, 0.5, 100, lambda n: 0.0) == 0
    assert lfunc.standard_L_partial(f_big, 0.5 + 2j, 1, lambda n: 3.0) == pytest.approx(3.0)
    s = 0.5 + 4j
    w = lambda n: math.exp(-n / 30)  # noqa: E731
    loop = sum(f_big.lam(n) * n ** (-s) * w(n) for n in range(1, 201))
    assert abs(lfunc.standard_L_partial(f_big, s, 200, w) - loop) <= 1e-12

import math

import numpy as np
import pytest

from conftest import synthetic_form
from maasslab import arith, moment
from maasslab.errors import ValidationError
from maasslab.forms import MaassForm, SpectralBasis
from maasslab.kuznetsov import eisenstein_integral, gaussian_pair
from maasslab.lfunc import VWeightParams, central_value_rs, v_weight
from maasslab.moment import MomentParams

# (4M/pi sqrt p) int e^{-t^2}(T+tM)[log_0((T+tM)/2 sqrt p) + gamma - 1] dt, mpmath
DIAG_100_50_2 = 25621.88084263496319567715
DIAG_100_50_3 = 19599.12930272333730350151
DIAG_6_2_2 = 6.869553106927950814962372


def with_prime(form: MaassForm, p: int, value: float) -> MaassForm:
    primes = {q: form.coefficients[q] for q in arith.primes_up_to(2000)}
    primes[p] = value
    return MaassForm.from_primes(form.mu, primes, omega=form.omega)


@pytest.fixture(scope="module")
def wide_basis(form_a, form_b):
    return SpectralBasis((form_a, form_b), t_max=40.0)


@pytest.fixture(scope="module")
def params():
    return MomentParams(T=6.0, M=2.0, p=2, c_max=40)


def test_params_validation():
    with pytest.raises(ValidationError):
        MomentParams(T=5.0, M=6.0, p=2)
    with pytest.raises(ValidationError):
        MomentParams(T=5.0, M=1.0, p=4)
    with pytest.raises(ValidationError):
        MomentParams(T=5.0, M=1.0, p=2, workers=0)
    with pytest.raises(ValidationError):
        MomentParams(T=5.0, M=1.0, p=2, normalization="other")
    with pytest.raises(ValidationError, match="AFE length"):
        MomentParams(T=5.0, M=1.0, p=2, n_max=10).resolve(synthetic_form(9.5, 1))


def test_diagonal_oracle_and_scaling():
    f = synthetic_form(9.5, 1)
    p = MomentParams(T=100.0, M=50.0, p=2, normalization="paper")
    one = with_prime(f, 2, 1.0)
    assert moment.diagonal_term(one, p) == pytest.approx(DIAG_100_50_2, rel=1e-10)
    assert moment.diagonal_term(with_prime(f, 2, 2.0), p) == pytest.approx(2 * DIAG_100_50_2, rel=1e-10)
    assert moment.diagonal_term(with_prime(f, 2, 0.0), p) == 0.0
    p3 = MomentParams(T=100.0, M=50.0, p=3, normalization="paper")
    assert moment.main_term(with_prime(f, 3, 1.0), p3) == pytest.approx(DIAG_100_50_3, rel=1e-10)
    # size MT log T
    assert 0.1 < DIAG_100_50_2 / (50 * 100 * math.log(100)) < 10
    std = MomentParams(T=6.0, M=2.0, p=2)
    assert moment.main_term(one, std) == pytest.approx(2 / math.pi * DIAG_6_2_2, rel=1e-10)


def test_kloosterman_table_matches_arith():
    for a, c in [(2, 1), (2, 7), (-3, 12), (5, 30)]:
        tab = moment.kloosterman_table(a, c)
        for n in range(c):
            assert tab[n].real == pytest.approx(arith.kloosterman(n, a, c), abs=1e-9)


def test_exp_sum_partial():
    f = synthetic_form(9.5, 1)
    assert moment.exp_sum_partial(f, 0.0, 1) == 1.0
    assert moment.exp_sum_partial(f, 1.0, 500) == pytest.approx(moment.exp_sum_partial(f, 0.0, 500), abs=1e-12)
    direct = math.fsum(f.lam(n) * math.cos(2 * math.pi * 0.37 * n) for n in range(1, 301))
    assert moment.exp_sum_partial(f, 0.37, 300) == pytest.approx(direct, abs=1e-10)


def test_empty_window(tiny_basis):
    f = synthetic_form(9.5, 7)
    p = MomentParams(T=11.0, M=0.2, p=2)
    assert moment.spectral_moment(f, tiny_basis, p) == 0.0


def test_vanishing_hecke_eigenvalue(form_a, form_b):
    silent = with_prime(form_b, 3, 0.0)
    basis = SpectralBasis((form_a, silent), t_max=30.0)
    f = synthetic_form(9.5, 7)
    p = MomentParams(T=12.25, M=0.3, p=3)
    assert abs(moment.spectral_moment(f, basis, p)) <= 1e-12


def test_spectral_matches_direct_loop(wide_basis, params):
    f = synthetic_form(7.5, 8)
    got = moment.spectral_moment(f, wide_basis, params)
    H = gaussian_pair(params.T, params.M)
    n_max = params.resolve(f).n_max
    expect = 0.0
    for form in wide_basis:
        L = central_value_rs(f, form, VWeightParams(mu=f.mu, t=form.mu), n_max=n_max).value
        expect += float(H(np.array([form.mu]))[0]) * form.omega * L * form.lam(2)
    assert got == pytest.approx(expect, rel=1e-10)


def test_eisenstein_single_term(params):
    n_max = params.resolve(synthetic_form(7.5, 8)).n_max
    f = MaassForm(7.5, {n: float(n == 1) for n in range(1, n_max + 1)})
    p = MomentParams(T=6.0, M=2.0, p=2, c_max=40, normalization="paper")
    E = moment.eisenstein_term(f, p)
    H = gaussian_pair(6.0, 2.0)
    h1 = lambda t: H(t) * np.array([v_weight(1.0, VWeightParams(mu=7.5, t=float(abs(s)))) for s in np.atleast_1d(t)])  # noqa: E731
    oracle = 2.0 * eisenstein_integral(h1, 2, 1, H.radius)
    assert E == pytest.approx(oracle, rel=1e-7, abs=1e-12)


def test_zero_coefficients_give_zero_report(wide_basis, params):
    n_max = params.resolve(synthetic_form(7.5, 8)).n_max
    f = MaassForm(7.5, {n: 0.0 for n in range(1, n_max + 1)})
    r = moment.moment_report(f, wide_basis, params)
    assert (r.spectral, r.diagonal, r.eisenstein, r.j_term, r.k_term, r.main_term) == (0.0,) * 6


def test_jk_linear_in_coefficients(params):
    f1, f2 = synthetic_form(7.5, 8), synthetic_form(7.5, 9)
    N = params.resolve(f1).n_max
    a1, a2 = f1.lam_array(N), f2.lam_array(N)
    mix = MaassForm(7.5, {n: 2.0 * a1[n] - 0.5 * a2[n] for n in range(1, N + 1)})
    p = MomentParams(T=6.0, M=2.0, p=2, c_max=20)
    lhs = moment.jk_terms(mix, p)
    one, two = moment.jk_terms(f1, p), moment.jk_terms(f2, p)
    for i in range(2):
        assert lhs[i] == pytest.approx(2.0 * one[i] - 0.5 * two[i], rel=1e-9, abs=1e-12)
    assert moment.j_term(f1, p) == one[0] and moment.k_term(f1, p) == one[1]


def test_report_residuals_recompute_exactly(wide_basis, params):
    r = moment.moment_report(synthetic_form(7.5, 8), wide_basis, params)
    assert r.residual_identity == r.spectral - (r.diagonal + r.eisenstein + r.j_term + r.k_term)
    assert r.residual_main == r.spectral - r.main_term
    row = r.as_row()
    assert row["residual_identity"] == r.residual_identity
    assert moment.breakdown_csv([r]).startswith("#")


def test_workers_do_not_change_bits(wide_basis, params):
    f = synthetic_form(7.5, 8)
    a = moment.moment_report(f, wide_basis, params)
    b = moment.moment_report(f, wide_basis, MomentParams(T=6.0, M=2.0, p=2, c_max=40, workers=3))
    assert a.as_row() == b.as_row()

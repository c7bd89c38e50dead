import math

import numpy as np
import pytest

from conftest import hecke_coeffs, record_text, synthetic_form
from maasslab.errors import GapError, ParseError, ValidationError
from maasslab.forms import (
    MaassForm,
    coefficient_bound_ratio,
    hecke_check,
    hecke_extend,
    load_basis,
    local_params,
    parse_basis,
    serialize_basis,
)


def test_empty_file_has_no_forms(tmp_path):
    p = tmp_path / "empty.mv1"
    p.write_text("# nothing here\n")
    with pytest.raises(ValidationError, match="no forms"):
        load_basis(p)


def test_missing_file(tmp_path):
    with pytest.raises(ValidationError, match="not found"):
        load_basis(tmp_path / "nope.mv1")


def test_lambda_one_normalization():
    with pytest.raises(ValidationError, match="normalization"):
        parse_basis(record_text(10.0, {1: 0.9, 2: 0.3}))
    with pytest.raises(ValidationError, match="lambda\\(1\\) missing"):
        parse_basis(record_text(10.0, {2: 0.3}))


def test_two_form_fixture_sorted(two_form_text, form_a, form_b):
    basis = parse_basis(two_form_text)
    assert len(basis) == 2
    assert list(basis.t) == [form_a.mu, form_b.mu]
    assert basis.weighted
    assert basis.t_max == form_b.mu


def test_unweighted_basis_refuses_omega():
    basis = parse_basis(record_text(10.0, {1: 1.0, 2: 0.5}, omega=None))
    assert not basis.weighted
    with pytest.raises(ValidationError, match="unweighted"):
        basis.require_weighted()


@pytest.mark.parametrize("line,match", [
    ("bogus 1", "unknown key"),
    ("coeff x 1.0", "not an integer"),
    ("coeff 0 1.0", ">= 1"),
    ("coeff 3 abc", "not a decimal"),
    ("coeff 3 nan", "non-finite"),
    ("coeff 1 1.0", "duplicate coefficient"),
])
def test_parse_errors_carry_line_numbers(line, match):
    text = record_text(10.0, {1: 1.0, 2: 0.5}) + line + "\n"
    with pytest.raises(ParseError, match=match) as info:
        parse_basis(text, path="bad.mv1")
    assert info.value.line == 7
    assert str(info.value).startswith("bad.mv1:7: ")


def test_header_after_coefficients_rejected():
    text = record_text(10.0, {1: 1.0}) + "coeff_tolerance 1e-6\n"
    with pytest.raises(ParseError, match="after coefficient"):
        parse_basis(text)


def test_odd_form_rejected():
    text = record_text(10.0, {1: 1.0}).replace("parity even", "parity odd")
    with pytest.raises(ValidationError, match="odd form"):
        parse_basis(text)


def test_hecke_violation_detected():
    base = MaassForm.from_primes(8.0, {2: 0.5, 3: -0.4, 5: 1.2, 7: 0.3, 11: -0.9})
    coeffs = hecke_coeffs(base, 12)
    coeffs[6] += 1e-3
    bad = MaassForm(base.mu, coeffs)
    # lambda(2) lambda(3) - lambda(6) carries the full perturbation
    assert hecke_check(bad) == pytest.approx(1e-3, rel=1e-6)
    with pytest.raises(ValidationError, match="Hecke"):
        parse_basis(record_text(base.mu, coeffs, extra="coeff_tolerance 1e-4"))


def test_hecke_extend_examples():
    f = MaassForm.from_primes(5.0, {2: 0.7, 3: -1.1})
    assert hecke_extend(f, 6) == pytest.approx(0.7 * -1.1)
    assert hecke_extend(MaassForm.from_primes(5.0, {2: 2.0}), 4) == pytest.approx(3.0)
    g = MaassForm.from_primes(5.0, {2: 0.0})
    assert hecke_extend(g, 4) == pytest.approx(-1.0)
    assert hecke_extend(g, 8) == pytest.approx(0.0)
    with pytest.raises(GapError):
        hecke_extend(f, 10)


def test_extend_then_check_is_exact(form_a):
    exact = MaassForm(form_a.mu, hecke_coeffs(form_a, 300))
    assert hecke_check(exact) <= 1e-12
    assert coefficient_bound_ratio(exact) <= 1.0


@pytest.mark.parametrize("lp,roots", [(2.0, (1, 1)), (0.0, (1j, -1j)), (2.5, (2, 0.5))])
def test_local_params(lp, roots):
    a1, a2 = local_params(lp)
    assert {complex(round(a1.real, 12), round(a1.imag, 12)), complex(round(a2.real, 12), round(a2.imag, 12))} == {complex(r) for r in roots}
    assert a1 * a2 == pytest.approx(1)


def test_round_trip(tmp_path, two_form_text):
    basis = parse_basis(two_form_text)
    text = serialize_basis(basis)
    again = parse_basis(text)
    assert serialize_basis(again) == text
    for f, g in zip(basis, again):
        assert f.coefficients == g.coefficients
        assert f.mu == g.mu and f.omega == g.omega


def test_horizon_header_extends_t_max(form_a):
    text = record_text(form_a.mu, hecke_coeffs(form_a, 30), extra="horizon 40.0")
    assert parse_basis(text).t_max == 40.0


def test_lam_array_mixes_ingested_and_extended():
    f = synthetic_form(7.0, seed=5, P=100)
    lam = f.lam_array(100)
    for n in (1, 12, 49, 97, 100):
        assert lam[n] == pytest.approx(hecke_extend(f, n), abs=1e-13)
    assert lam[1] == 1.0


def test_duplicate_spectral_parameter_rejected():
    rec = record_text(10.0, {1: 1.0})
    with pytest.raises(ValidationError, match="duplicate spectral"):
        parse_basis(rec + "\n" + rec)

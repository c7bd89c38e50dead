import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maasslab import arith
from maasslab.arith import KloostermanQuery, kloosterman
from maasslab.errors import ValidationError


def brute(m, n, c):
    total = 0j
    for a in range(c):
        if math.gcd(a, c) != 1:
            continue
        abar = pow(a, -1, c) if c > 1 else 0
        total += cmath.exp(2j * math.pi * float(Fraction(a * m + abar * n, c) % 1))
    return total


@pytest.mark.parametrize("m,n,c,expected", [(5, 7, 1, 1.0), (1, 1, 3, -1.0), (1, 2, 3, 2.0)])
def test_kloosterman_examples(m, n, c, expected):
    assert kloosterman(KloostermanQuery(m, n, c)) == pytest.approx(expected, abs=1e-12)
    assert kloosterman(m, n, c) == pytest.approx(expected, abs=1e-12)


def test_zero_modulus_rejected():
    with pytest.raises(ValidationError):
        KloostermanQuery(1, 1, 0)


def test_matches_direct_loop_oracle():
    rng = np.random.default_rng(0)
    for c in range(1, 101):
        for m, n in rng.integers(-20, 21, size=(4, 2)):
            assert abs(kloosterman(int(m), int(n), c) - brute(int(m), int(n), c).real) <= 1e-9


@settings(max_examples=150, deadline=None)
@given(st.integers(-50, 50), st.integers(-50, 50), st.integers(1, 1000))
def test_symmetry_reality_weil(m, n, c):
    raw = arith.kloosterman_complex(m, n, c)
    assert abs(raw.imag) <= 1e-12 * max(1.0, c)
    s = kloosterman(m, n, c)
    assert s == pytest.approx(kloosterman(n, m, c), abs=1e-9)
    assert abs(s) <= arith.weil_bound(m, n, c) + 1e-9


def test_reality_all_moduli_to_1000():
    worst = max(abs(arith.kloosterman_complex(3, -7, c).imag) for c in range(1, 1001))
    assert worst <= 1e-12


def test_kloosterman_many_matches_scalar():
    cs = np.arange(1, 60)
    vec = arith.kloosterman_many(-4, 9, cs)
    assert np.allclose(vec, [kloosterman(-4, 9, int(c)) for c in cs], atol=1e-12)


def test_divisor_functions():
    assert arith.divisor_power_sum(6, 0) == pytest.approx(4)
    assert arith.divisor_power_sum(1, 3.7 + 2j) == pytest.approx(1)
    assert arith.divisor_power_sum(4, 1) == pytest.approx(7)
    assert arith.divisor_count(12) == 6
    assert not arith.is_squarefree(12) and arith.is_squarefree(30)
    assert list(arith.primes_up_to(10)) == [2, 3, 5, 7]


def test_sieves_agree_with_scalar():
    N = 500
    sq = arith.squarefree_sieve(N)
    tau = arith.divisor_count_sieve(N)
    for n in range(1, N + 1):
        assert bool(sq[n]) == arith.is_squarefree(n)
        assert tau[n] == arith.divisor_count(n)
    assert [p for p in range(2, 200) if arith.is_prime(p)] == list(arith.primes_up_to(199))

"""Integer arithmetic: Kloosterman sums, divisor functions, primes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import DomainError, ValidationError

__all__ = [
    "KloostermanQuery",
    "kloosterman",
    "kloosterman_complex",
    "kloosterman_many",
    "weil_bound",
    "divisors",
    "divisor_power_sum",
    "divisor_count",
    "is_squarefree",
    "is_prime",
    "primes_up_to",
    "factorize",
    "squarefree_sieve",
]


@dataclass(frozen=True)
class KloostermanQuery:
    """Arguments of S(m, n; c); m and n may be negative."""

    m: int
    n: int
    c: int

    def __post_init__(self):
        if int(self.c) != self.c or self.c < 1:
            raise ValidationError(f"Kloosterman modulus must be a positive integer, got c={self.c}")


def kloosterman_complex(m: int, n: int, c: int) -> complex:
    """Raw complex accumulation of S(m, n; c) before the real cast."""
    KloostermanQuery(m, n, c)
    re, im = kernels.kloosterman_many([m], [n], [c])
    return complex(re[0], im[0])


def kloosterman(q: KloostermanQuery | int, n: int | None = None, c: int | None = None) -> float:
    """S(m, n; c) = sum over alpha coprime to c of e((alpha m + alpha^-1 n)/c).

    Accepts either a :class:`KloostermanQuery` or three integers.
    """
    if not isinstance(q, KloostermanQuery):
        if n is None or c is None:
            raise ValidationError("kloosterman needs (m, n, c)")
        q = KloostermanQuery(int(q), int(n), int(c))
    re, _ = kernels.kloosterman_many([q.m], [q.n], [q.c])
    return float(re[0])


def kloosterman_many(m, n, c) -> np.ndarray:
    """Vectorised real Kloosterman sums; inputs broadcast against each other."""
    m, n, c = np.broadcast_arrays(np.asarray(m, dtype=np.int64),
                                  np.asarray(n, dtype=np.int64),
                                  np.asarray(c, dtype=np.int64))
    if c.size and c.min() < 1:
        raise ValidationError("Kloosterman modulus must be >= 1")
    re, _ = kernels.kloosterman_many(m.ravel(), n.ravel(), c.ravel())
    return re.reshape(c.shape)


def weil_bound(m: int, n: int, c: int) -> float:
    """tau(c) * gcd(m, n, c)^{1/2} * c^{1/2}."""
    g = math.gcd(math.gcd(abs(int(m)), abs(int(n))), int(c))
    return divisor_count(int(c)) * math.sqrt(g) * math.sqrt(c)


@lru_cache(maxsize=4096)
def factorize(n: int) -> tuple[tuple[int, int], ...]:
    """Prime factorisation as ((p, e), ...) by trial division."""
    if n < 1:
        raise DomainError(f"factorize needs n >= 1, got {n}")
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            out.append((d, e))
        d += 1 if d == 2 else 2
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def divisors(n: int) -> list[int]:
    """Sorted list of positive divisors of n."""
    ds = [1]
    for p, e in factorize(int(n)):
        ds = [d * p**k for d in ds for k in range(e + 1)]
    return sorted(ds)


def divisor_power_sum(n: int, s: complex) -> complex:
    """sigma_s(n) = sum_{d | n} d^s."""
    if int(n) != n or n < 1:
        raise DomainError(f"divisor_power_sum needs a positive integer, got {n}")
    ds = np.array(divisors(int(n)), dtype=float)
    val = np.sum(np.exp(complex(s) * np.log(ds)))
    return complex(val)


def divisor_count(n: int) -> int:
    """tau(n)."""
    if n < 1:
        raise DomainError(f"divisor_count needs n >= 1, got {n}")
    out = 1
    for _, e in factorize(int(n)):
        out *= e + 1
    return out


def is_squarefree(n: int) -> bool:
    if n < 1:
        raise DomainError(f"is_squarefree needs n >= 1, got {n}")
    return all(e == 1 for _, e in factorize(int(n)))


def is_prime(n: int) -> bool:
    n = int(n)
    return n >= 2 and factorize(n) == ((n, 1),)


def primes_up_to(P: int) -> list[int]:
    """Primes p <= P by the sieve of Eratosthenes."""
    if P < 2:
        return []
    sieve = np.ones(P + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(math.isqrt(P)) + 1):
        if sieve[p]:
            sieve[p * p::p] = False
    return [int(p) for p in np.nonzero(sieve)[0]]


def squarefree_sieve(N: int) -> np.ndarray:
    """Boolean array s with s[n] true iff n is square-free (s[0] is false)."""
    s = np.ones(N + 1, dtype=bool)
    s[0] = False
    for p in primes_up_to(int(math.isqrt(N)) + 1):
        s[p * p::p * p] = False
    return s


def divisor_count_sieve(N: int) -> np.ndarray:
    """tau(n) for 0 <= n <= N (entry 0 is unused)."""
    tau = np.zeros(N + 1, dtype=np.int64)
    for d in range(1, N + 1):
        tau[d::d] += 1
    return tau

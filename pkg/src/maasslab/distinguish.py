"""Telling two Maass forms apart by their Hecke eigenvalues.

Coefficient distance b(n) = lambda_f(n) - lambda_g(n), the square-free
Rankin-Selberg series

    D_{h,f}(s) = sum^flat lambda_h(n) lambda_f(n) n^{-s} = prod_p (1 + lambda_h(p) lambda_f(p) p^{-s})
               = L(s, h x f) L_{h,f}(s),

its smoothed partial sums and residue, the search for a prime with a large
|b(p)|, and a driver that recovers |b(p)| from the difference of two
twisted first moments.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import arith
from .errors import DomainError, ValidationError
from .forms import THETA_KS, MaassForm, SpectralBasis, local_params
from .lfunc import rs_dirichlet_direct, tau2_tail
from .moment import MomentParams, moment_report
from .special import QuadratureSpec, adaptive_quad

log = logging.getLogger(__name__)

__all__ = [
    "bump",
    "DistinguishConfig",
    "DirichletValue",
    "Witness",
    "ResidueEstimate",
    "coeff_delta",
    "delta_bound_check",
    "smoothed_rs_sum",
    "dseries_dhf",
    "local_correction",
    "residue_estimate",
    "find_distinguishing_prime",
    "theorem_driver",
    "DriverRow",
    "driver_csv",
    "prime_table_csv",
]

FACTORED_MARGIN = 0.05


def bump(y):
    """F(y) = exp(-1/((y - 1/2)(1 - y))) / exp(-16) on (1/2, 1), zero elsewhere; peak value 1."""
    y = np.asarray(y, dtype=float)
    out = np.zeros(y.shape)
    inside = (y > 0.5) & (y < 1.0)
    yi = y[inside]
    out[inside] = np.exp(16.0 - 1.0 / ((yi - 0.5) * (1.0 - yi)))
    return out


@dataclass(frozen=True)
class DistinguishConfig:
    """Knobs of the distinguishing machinery.

    ``F`` must be supported in [1/2, 1]; the default is ``bump``.
    ``threshold_constant`` scales the gap Lambda^{-4 theta} required of |b(p)|.
    """

    theta: float = THETA_KS
    P: int = 100
    X: float = 2000.0
    F: Callable[[np.ndarray], np.ndarray] = bump
    euler_p_max: int = 10000
    threshold_constant: float = 1.0

    def __post_init__(self):
        if not 0 <= self.theta <= 0.5:
            raise ValidationError("theta must lie in [0, 1/2]")
        if self.P < 2 or self.X < 2:
            raise ValidationError("P and X must be >= 2")
        if self.euler_p_max < 2:
            raise ValidationError("euler_p_max must be >= 2")

    @property
    def c_F(self) -> float:
        return adaptive_quad(lambda y: float(self.F(np.array([y]))[0]), (0.5, 1.0), QuadratureSpec()).value.real


# ---------------------------------------------------------------------------
# coefficient distance


def coeff_delta(f: MaassForm, g: MaassForm, n: int) -> float:
    """b(n) = lambda_f(n) - lambda_g(n)."""
    return f.lam(n) - g.lam(n)


def delta_bound_check(f: MaassForm, g: MaassForm, n_max: int, cfg: DistinguishConfig | None = None) -> float:
    """max over square-free n <= n_max of |b(n)| / (2 tau(n)^2 n^theta B + tol).

    B = max_{p <= n_max} |b(p)|; tol is the sum of the two fixtures'
    coefficient tolerances.  Returns 0 when f and g agree (B = 0).
    """
    cfg = cfg or DistinguishConfig()
    n_max = int(n_max)
    b = f.lam_array(n_max) - g.lam_array(n_max)
    primes = np.array(arith.primes_up_to(n_max), dtype=np.int64)
    B = float(np.max(np.abs(b[primes]))) if primes.size else 0.0
    if B == 0.0:
        return 0.0
    sf = arith.squarefree_sieve(n_max)
    tau = arith.divisor_count_sieve(n_max).astype(float)
    n = np.arange(n_max + 1, dtype=float)
    mask = sf.astype(bool)
    mask[0] = False
    tol = f.coeff_tolerance + g.coeff_tolerance
    denom = 2 * tau[mask] ** 2 * n[mask] ** cfg.theta * B + tol
    return float(np.max(np.abs(b[mask]) / denom))


# ---------------------------------------------------------------------------
# square-free Rankin-Selberg series


def smoothed_rs_sum(h: MaassForm, f: MaassForm, X: float, F: Callable | None = None) -> float:
    """sum^flat_n lambda_h(n) lambda_f(n) F(n/X) with F supported in [1/2, 1]."""
    F = F or bump
    N = int(math.floor(X))
    if N < 1:
        return 0.0
    prod = h.lam_array(N) * f.lam_array(N)
    sf = arith.squarefree_sieve(N).astype(bool)
    n = np.arange(N + 1, dtype=float)
    w = np.asarray(F(n[1:] / X), dtype=float)
    return math.fsum(prod[1:][sf[1:]] * w[sf[1:]])


@dataclass(frozen=True)
class DirichletValue:
    value: complex
    tail: float
    regime: str

    def __complex__(self):
        return self.value


def local_correction(h: MaassForm, f: MaassForm, s: complex, cfg: DistinguishConfig | None = None) -> DirichletValue:
    """L_{h,f}(s) = prod_p (1 + lambda_h(p) lambda_f(p) p^{-s}) prod_{i,j} (1 - alpha_i beta_j p^{-s}).

    The product runs over p <= euler_p_max.  With X_p = p^{2 theta - sigma}
    each omitted factor differs from 1 by at most
    22 X^2 + 28 X^3 + 17 X^4 + 4 X^5, which gives the tail bound.
    """
    cfg = cfg or DistinguishConfig()
    s = complex(s)
    sigma_min = 0.5 + 2 * cfg.theta + FACTORED_MARGIN
    if s.real < sigma_min - 1e-12:
        raise DomainError(f"local_correction needs Re(s) >= {sigma_min:.4f}, got {s.real}")
    P = int(cfg.euler_p_max)
    log_total = 0j
    for p in arith.primes_up_to(P):
        lh, lf = h.lam(p), f.lam(p)
        a = local_params(lh)
        b = local_params(lf)
        x = p ** (-s)
        fac = 1 + lh * lf * x
        for ai in a:
            for bj in b:
                fac *= 1 - ai * bj * x
        log_total += np.log(fac)
    value = complex(np.exp(log_total))
    sp = s.real - 2 * cfg.theta

    def zsum(a: float) -> float:  # sum_{n > P} n^{-a}
        return P ** (1 - a) / (a - 1)

    eps_P = sum(c * P ** (-k * sp) for k, c in ((2, 22), (3, 28), (4, 17), (5, 4)))
    if eps_P >= 1:
        return DirichletValue(value, math.inf, "local")
    bound = (22 * zsum(2 * sp) + 28 * zsum(3 * sp) + 17 * zsum(4 * sp) + 4 * zsum(5 * sp)) / (1 - eps_P)
    return DirichletValue(value, abs(value) * math.expm1(bound), "local")


def dseries_dhf(h: MaassForm, f: MaassForm, s: complex, cfg: DistinguishConfig | None = None,
                regime: str = "auto", n_max: int | None = None) -> DirichletValue:
    """D_{h,f}(s) in the direct or the factored regime.

    direct (Re s > 1): sum^flat_{n <= n_max} lambda_h(n) lambda_f(n) n^{-s},
    tail <= sum_{n > n_max} tau(n)^2 n^{2 theta - sigma}.
    factored: L(s, h x f) L_{h,f}(s), with L(s, h x f) from its Dirichlet
    series, which needs Re s > 1 as well (no continuation is built here).
    """
    cfg = cfg or DistinguishConfig()
    s = complex(s)
    if regime == "auto":
        regime = "direct"
    if n_max is None:
        n_max = min(h.n_max, f.n_max)
    n_max = int(n_max)
    if regime == "direct":
        if s.real <= 1:
            raise DomainError("the direct regime needs Re(s) > 1 (absolute convergence)")
        prod = h.lam_array(n_max) * f.lam_array(n_max)
        sf = arith.squarefree_sieve(n_max).astype(bool)
        n = np.arange(1, n_max + 1, dtype=float)
        terms = (prod[1:] * np.exp(-s * np.log(n)))[sf[1:]]
        value = complex(math.fsum(terms.real), math.fsum(terms.imag))
        tail = tau2_tail(n_max, s.real - 2 * cfg.theta)
        return DirichletValue(value, tail, "direct")
    if regime == "factored":
        if s.real <= 1:
            raise DomainError(
                "the factored regime evaluates L(s, h x f) by its Dirichlet series and needs Re(s) > 1")
        L, tail_L = rs_dirichlet_direct(h, f, s, n_max, cfg.theta)
        corr = local_correction(h, f, s, cfg)
        value = L * corr.value
        tail = abs(L) * corr.tail + abs(corr.value) * tail_L + corr.tail * tail_L
        return DirichletValue(value, tail, "factored")
    raise ValidationError(f"unknown regime {regime!r}")


@dataclass(frozen=True)
class ResidueEstimate:
    value: float
    error: float
    scales: tuple[float, float]
    sums: tuple[float, float]


def residue_estimate(f: MaassForm, cfg: DistinguishConfig | None = None, h: MaassForm | None = None) -> ResidueEstimate:
    """Linear-in-X coefficient of sum^flat lambda_f(n)^2 F(n/X) from the scales X and 2X.

    The slope (S(2X) - S(X))/X removes the constant term of the Perron
    expansion; its distance to S(2X)/(2X) is reported as the error.
    """
    cfg = cfg or DistinguishConfig()
    h = h or f
    X1, X2 = float(cfg.X), 2.0 * float(cfg.X)
    S1 = smoothed_rs_sum(h, f, X1, cfg.F)
    S2 = smoothed_rs_sum(h, f, X2, cfg.F)
    slope = (S2 - S1) / (X2 - X1)
    err = abs(slope - S2 / X2)
    return ResidueEstimate(slope, err, (X1, X2), (S1, S2))


# ---------------------------------------------------------------------------
# distinguishing prime


@dataclass(frozen=True)
class Witness:
    p: int | None
    value: float
    threshold: float
    distinguished: bool
    table: tuple[tuple[int, float], ...] = ()


def lambda_bound(f: MaassForm, g: MaassForm) -> float:
    """Lambda = max(|mu|, |nu|), the eigenvalue scale (distinct from a completed L-function)."""
    return max(abs(f.spectral_parameter), abs(g.spectral_parameter))


def find_distinguishing_prime(f: MaassForm, g: MaassForm, cfg: DistinguishConfig | None = None) -> Witness:
    """The prime p <= P maximising |b(p)|, compared against c Lambda^{-4 theta}."""
    cfg = cfg or DistinguishConfig()
    primes = arith.primes_up_to(int(cfg.P))
    table = tuple((p, abs(coeff_delta(f, g, p))) for p in primes)
    Lam = max(lambda_bound(f, g), 1.0)
    threshold = cfg.threshold_constant * Lam ** (-4 * cfg.theta)
    if not table:
        return Witness(None, 0.0, threshold, False, table)
    p_best, v_best = max(table, key=lambda pv: (pv[1], -pv[0]))
    ok = v_best >= threshold and v_best > 0
    return Witness(p_best if v_best > 0 else None, v_best, threshold, ok, table)


def prime_table_csv(w: Witness) -> str:
    buf = io.StringIO()
    buf.write("# |b(p)| = |lambda_f(p) - lambda_g(p)| per prime p <= P\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["p", "abs_b"])
    for p, v in w.table:
        wr.writerow([p, repr(float(v))])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# theorem driver


@dataclass(frozen=True)
class DriverRow:
    T: float
    M: float
    p: int
    xi_f: float
    xi_g: float
    main_integral: float
    empirical_b: float
    true_b: float
    residual_budget: float

    @property
    def ratio(self) -> float:
        """Residual budget relative to |b(p)|; the argument needs this to shrink with T."""
        return self.residual_budget / self.true_b if self.true_b else math.inf

    def as_row(self) -> dict:
        return {"T": self.T, "M": self.M, "p": self.p, "xi_f": self.xi_f, "xi_g": self.xi_g,
                "main_integral": self.main_integral, "empirical_b": self.empirical_b,
                "true_b": self.true_b, "residual_budget": self.residual_budget, "ratio": self.ratio}


def theorem_driver(f: MaassForm, g: MaassForm, basis: SpectralBasis, grid: Sequence[tuple[float, float]],
                   p: int, base: MomentParams | None = None) -> list[DriverRow]:
    """|Xi_f - Xi_g| divided by the main-term integral, per grid point.

    Xi_f - Xi_g = b(p) I + (r_f - r_g) with I the main term per unit
    lambda(p) and r the main-term residuals, so the empirical value differs
    from |b(p)| by at most (|r_f| + |r_g|)/I, the residual budget.
    """
    rows = []
    for T, M in grid:
        params = MomentParams(T, M, p) if base is None else MomentParams(
            T, M, p, base.A, base.n_max, base.c_max, base.quadrature, base.normalization, base.workers)
        bf = moment_report(f, basis, params)
        bg = bf if g is f else moment_report(g, basis, params)
        lam_f = f.lam(p)
        if lam_f != 0:
            I = bf.main_term / lam_f
        elif g.lam(p) != 0:
            I = bg.main_term / g.lam(p)
        else:
            I = math.nan
        emp = abs(bf.spectral - bg.spectral) / abs(I) if I == I and I != 0 else math.nan
        budget = (abs(bf.residual_main) + abs(bg.residual_main)) / abs(I) if I == I and I != 0 else math.nan
        rows.append(DriverRow(float(T), float(M), int(p), bf.spectral, bg.spectral, I, emp,
                              abs(coeff_delta(f, g, p)), budget))
    return rows


def driver_csv(rows: Sequence[DriverRow]) -> str:
    buf = io.StringIO()
    buf.write("# empirical_b = |Xi_f - Xi_g| / main_integral; residual_budget = (|r_f|+|r_g|)/main_integral\n")
    if rows:
        wr = csv.DictWriter(buf, fieldnames=list(rows[0].as_row().keys()), lineterminator="\n")
        wr.writeheader()
        for r in rows:
            wr.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in r.as_row().items()})
    return buf.getvalue()

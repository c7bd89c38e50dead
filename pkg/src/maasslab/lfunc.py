"""Gamma factors, the AFE kernel V, Rankin-Selberg central values.

V_{mu,t}(y) = (1/2 pi i) int_{(c)} y^{-u} cos(pi u / 4A)^{-16A} zeta(1+2u)
              gamma(1/2+u; mu, t) / gamma(1/2; mu, t) du / u.

On u = c + iv the integrand is conjugate-symmetric in v, so V is real and
V(y) = (1/2 pi) int Re[...] dv.  The integrand is analytic in the strip
0 < Re u < 2A (poles of the cosine power at u = 2A(2k+1), of 1/u and
zeta(1+2u) at 0), so the trapezoidal rule in v converges geometrically with
rate set by the distance from c to the strip edges.  All y share the same
v-nodes, which turns V at many n and many t into one matrix product.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .arith import divisor_count_sieve
from .errors import ConvergenceError, DomainError, GapError, TruncationError, ValidationError
from .forms import THETA_KS, MaassForm, local_params
from .special import QuadratureSpec, log_gamma, zeta

log = logging.getLogger(__name__)

__all__ = [
    "GammaQuadruple",
    "GammaValue",
    "VWeightParams",
    "CentralValue",
    "rs_gamma_factor",
    "v_weight",
    "v_weight_many",
    "v_matrix",
    "v_abs_bound",
    "default_n_max",
    "central_value_rs",
    "rs_dirichlet_direct",
    "rs_euler_product",
    "standard_L_partial",
    "tau2_tail",
]

_LOG_PI = math.log(math.pi)


@dataclass(frozen=True)
class GammaQuadruple:
    s: complex
    mu: float
    t: float


@dataclass(frozen=True)
class GammaValue:
    """gamma(s; mu, t) as log-modulus and phase, plus the value when it fits in a double."""

    log_modulus: float
    phase: float
    value: complex | None

    def __complex__(self):
        if self.value is None:
            raise OverflowError("gamma factor not representable in double precision")
        return self.value


def _log_gamma4(s, mu: float, t: float):
    """log gamma(s; mu, t) for complex s (array)."""
    s = np.asarray(s, dtype=complex)
    a, b = mu + t, mu - t
    out = -2.0 * s * _LOG_PI
    for shift in (1j * a, 1j * b, -1j * b, -1j * a):
        out = out + log_gamma((s + shift) / 2.0)
    return out


def rs_gamma_factor(g: GammaQuadruple) -> GammaValue:
    """pi^{-2s} prod Gamma((s +- i(mu +- t))/2) in log form."""
    lg = complex(_log_gamma4(np.array([g.s]), g.mu, g.t)[0])
    phase = math.remainder(lg.imag, 2 * math.pi)
    val = None
    if lg.real < 700:
        val = complex(np.exp(lg))
    return GammaValue(lg.real, phase, val)


@dataclass(frozen=True)
class VWeightParams:
    """Parameters of V_{mu,t}.

    ``contour_real_part`` None selects the contour automatically (the saddle
    of the real integrand at v = 0, kept inside (0, 2A)).  A fixed contour
    must lie strictly inside (0, 2A): beyond 2A the line has crossed poles of
    the cosine power and the integral no longer represents the same V.
    """

    A: int = 4
    mu: float = 0.0
    t: float = 0.0
    contour_real_part: float | None = None
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)

    def __post_init__(self):
        if int(self.A) != self.A or self.A < 1:
            raise ValidationError(f"A must be a positive integer, got {self.A}")
        c = self.contour_real_part
        if c is not None:
            if not c > 0:
                raise ValidationError("contour_real_part must be positive")
            if c >= 2 * self.A:
                raise DomainError(
                    f"contour Re(u) = {c} is at or beyond the first pole u = {2 * self.A} "
                    f"of cos(pi u/4A)^(-16A) for A = {self.A}")

    def with_t(self, t: float) -> "VWeightParams":
        return VWeightParams(self.A, self.mu, t, self.contour_real_part, self.quadrature)


def _log_kernel(u, A: int, mu: float, t: float):
    """log of cos(pi u/4A)^{-16A} zeta(1+2u) gamma(1/2+u)/gamma(1/2) / u (without y^{-u})."""
    u = np.asarray(u, dtype=complex)
    lg = _log_gamma4(0.5 + u, mu, t) - _log_gamma4(np.array([0.5 + 0j]), mu, t)[0]
    lc = -16 * A * np.log(np.cos(np.pi * u / (4 * A)))
    z = zeta(1.0 + 2.0 * u)
    return lg + lc + np.log(z) - np.log(u)


def _auto_contour(A: int, mu: float, t: float, logy: float) -> float:
    hi = min(3.0, 2 * A - 0.5)
    cs = np.linspace(0.1, hi, 60)
    vals = _log_kernel(cs + 0j, A, mu, t).real - cs * logy
    return float(cs[int(np.argmin(vals))])


@dataclass(frozen=True)
class _Grid:
    c: float
    v: np.ndarray
    w: np.ndarray


def _grid(A: int, c: float, tol: float = 1e-17) -> _Grid:
    d = min(c, 2 * A - c, 0.5 + c)
    h = min(0.1, 2 * math.pi * d / (math.log(1.0 / tol) + 5.0))
    # |cos(pi u/4A)|^{-16A} <= 2^{16A} e^{-4 pi |v|}; gamma ratio grows at most polynomially
    L = (16 * A * math.log(2.0) + math.log(1.0 / tol) + 30.0) / (4 * math.pi) + 2.0
    n = int(math.ceil(L / h))
    v = h * np.arange(0, n + 1)
    w = np.full(v.shape, h)
    w[0] = h / 2
    # integrate over v >= 0 and double the real part
    return _Grid(c, v, w)


def _kernel_values(grid: _Grid, A: int, mu: float, t: float) -> np.ndarray:
    u = grid.c + 1j * grid.v
    return np.exp(_log_kernel(u, A, mu, t))


def v_weight_many(ys, p: VWeightParams) -> np.ndarray:
    """V_{mu,t}(y) for an array of y > 0 sharing one contour."""
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    if np.any(ys <= 0):
        raise DomainError("v_weight needs y > 0")
    c = p.contour_real_part
    if c is None:
        c = _auto_contour(p.A, p.mu, p.t, float(np.log(ys).mean()))
    g = _grid(p.A, c)
    F = _kernel_values(g, p.A, p.mu, p.t) * g.w
    E = np.exp(-np.outer(np.log(ys), c + 1j * g.v))
    val = (E @ F).real / math.pi
    # cancellation: rounding error scales with the integral of |integrand|
    mag = (np.abs(E) @ np.abs(F)) / math.pi
    err = 8 * np.finfo(float).eps * mag
    q = p.quadrature
    bad = err > np.maximum(q.abs_tol, q.rel_tol * np.abs(val))
    if np.any(bad):
        i = int(np.argmax(err / np.maximum(q.abs_tol, q.rel_tol * np.abs(val))))
        raise ConvergenceError(
            f"V on Re(u) = {c:g} loses accuracy to cancellation at y = {ys[i]:g} "
            f"(|integrand| integral {mag[i]:.3g}); use a contour closer to the saddle",
            estimate=float(val[i]), error=float(err[i]))
    return val


def v_weight(y: float, p: VWeightParams) -> float:
    """V_{mu,t}(y)."""
    return float(v_weight_many([y], p)[0])


def v_matrix(ns, ts, mu: float, A: int = 4, c: float | None = None) -> np.ndarray:
    """V_{mu,t}(n) for every n in ``ns`` (rows) and t in ``ts`` (columns)."""
    ns = np.asarray(ns, dtype=float)
    ts = np.asarray(ts, dtype=float)
    if c is None:
        c = 0.5
    g = _grid(A, c)
    F = np.empty((g.v.size, ts.size), dtype=complex)
    for j, t in enumerate(ts):
        F[:, j] = _kernel_values(g, A, mu, float(t)) * g.w
    E = np.exp(-np.outer(np.log(ns), c + 1j * g.v))
    return (E @ F).real / math.pi


def v_abs_bound(y: float, p: VWeightParams, c: float) -> float:
    """Upper bound |V(y)| <= y^{-c} (1/2pi) int |kernel(c + iv)| dv on the line Re u = c."""
    if not 0 < c < 2 * p.A:
        raise DomainError("bound contour must lie in (0, 2A)")
    g = _grid(p.A, c)
    F = np.abs(_kernel_values(g, p.A, p.mu, p.t)) * g.w
    return float(y ** (-c) * F.sum() / math.pi)


def default_n_max(mu: float, t: float) -> int:
    """ceil((3 + |t| + |mu|)^2 * 1.2)."""
    return int(math.ceil((3 + abs(t) + abs(mu)) ** 2 * 1.2))


@lru_cache(maxsize=64)
def tau2_tail(N: int, a: float) -> float:
    """Upper bound for sum_{n > N} tau(n)^2 n^{-a}, a > 1.

    Exact summation to K = 16 N, then partial summation with
    sum_{n <= x} tau(n)^2 <= x (1 + log x)^3.
    """
    if a <= 1:
        return math.inf
    K = max(16 * N, N + 1000)
    tau = divisor_count_sieve(K).astype(float)
    n = np.arange(N + 1, K + 1, dtype=float)
    head = math.fsum(tau[N + 1 :] ** 2 * n ** (-a))
    # int_K^inf a x^{-a} (1 + log x)^3 dx in closed form (x = e^u, Gamma(4, z))
    b = a - 1.0
    L = math.log(K)
    z = b * (1.0 + L)
    tail = a * math.exp(-b * L) * 6.0 * (1.0 + z + z * z / 2.0 + z ** 3 / 6.0) / b ** 4
    return head + tail


@dataclass(frozen=True)
class CentralValue:
    value: float
    tail_bound: float
    n_max: int
    params: VWeightParams

    def __float__(self):
        return self.value


def _coeff_products(f: MaassForm, h: MaassForm, n_max: int) -> np.ndarray:
    try:
        return f.lam_array(n_max) * h.lam_array(n_max)
    except GapError as err:
        raise GapError(f"central value needs lambda(n) for n <= {n_max}: {err}") from None


def afe_tail_bound(p: VWeightParams, n_max: int, theta: float = THETA_KS) -> float:
    """Certified bound on 2 sum_{n > n_max} |lambda_f lambda_h| n^{-1/2} |V(n)| from |lambda| <= tau n^theta."""
    best = math.inf
    top = 2 * p.A - 0.25
    for c in np.linspace(0.75 + 2 * theta, top, 12):
        a = 0.5 + c - 2 * theta
        I = v_abs_bound(1.0, p, float(c))
        best = min(best, 2 * I * tau2_tail(int(n_max), float(a)))
    return best


def central_value_rs(f: MaassForm, h: MaassForm, params: VWeightParams | None = None,
                     n_max: int | None = None, tail_tol: float | None = None) -> CentralValue:
    """L(1/2, f x h) = 2 sum_{n <= n_max} lambda_f(n) lambda_h(n) n^{-1/2} V_{mu,t}(n).

    ``params`` defaults to A = 4 with mu, t taken from the forms.  The sum is
    accumulated with math.fsum, so any partition of the n-range gives the
    same double.  Raises TruncationError when the certified tail exceeds
    ``tail_tol`` (default: no check).
    """
    for form in (f, h):
        if form.parity != "even":
            raise ValidationError("central_value_rs supports even forms only")
    if params is None:
        params = VWeightParams(A=4, mu=f.spectral_parameter, t=h.spectral_parameter)
    if n_max is None:
        n_max = default_n_max(params.mu, params.t)
    n_max = int(n_max)
    prod = _coeff_products(f, h, n_max)[1:]
    n = np.arange(1, n_max + 1, dtype=float)
    V = v_weight_many(n, params)
    value = 2.0 * math.fsum(prod * V / np.sqrt(n))
    tail = afe_tail_bound(params, n_max)
    if tail_tol is not None and tail > tail_tol:
        raise TruncationError(
            f"AFE tail bound {tail:.3g} exceeds tolerance {tail_tol:.3g} at n_max = {n_max}", bound=tail)
    return CentralValue(value, tail, n_max, params)


def rs_dirichlet_direct(f: MaassForm, h: MaassForm, s: complex, n_max: int,
                        theta: float = THETA_KS) -> tuple[complex, float]:
    """zeta(2s) sum_{n <= n_max} lambda_f(n) lambda_h(n) n^{-s} and a tail bound."""
    s = complex(s)
    if s.real <= 1:
        raise DomainError("rs_dirichlet_direct needs Re(s) > 1")
    prod = _coeff_products(f, h, n_max)[1:]
    n = np.arange(1, n_max + 1, dtype=float)
    terms = prod * np.exp(-s * np.log(n))
    partial = complex(math.fsum(terms.real), math.fsum(terms.imag))
    z = complex(zeta(2 * s))
    tail = abs(z) * tau2_tail(int(n_max), s.real - 2 * theta)
    return z * partial, tail


def rs_euler_product(f: MaassForm, h: MaassForm, s: complex, p_max: int) -> complex:
    """prod_{p <= p_max} prod_{i,j} (1 - alpha_{f,i} alpha_{h,j} p^{-s})^{-1}."""
    from .arith import primes_up_to

    s = complex(s)
    logv = 0j
    for p in primes_up_to(p_max):
        a = local_params(f.lam(p))
        b = local_params(h.lam(p))
        x = p ** (-s)
        for ai in a:
            for bj in b:
                logv -= np.log(1 - ai * bj * x)
    return complex(np.exp(logv))


def standard_L_partial(f: MaassForm, s: complex, length: int, weight: Callable[[float], float]) -> complex:
    """sum_{n <= length} lambda_f(n) n^{-s} weight(n)."""
    length = int(length)
    if length < 1:
        return 0j
    lam = f.lam_array(length)[1:]
    n = np.arange(1, length + 1, dtype=float)
    w = np.array([weight(float(k)) for k in n], dtype=float)
    terms = lam * w * np.exp(-complex(s) * np.log(n))
    return complex(math.fsum(terms.real), math.fsum(terms.imag))

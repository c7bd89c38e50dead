"""Special functions and quadrature.

* ``log_gamma``: Stirling series after upward recurrence.
* ``zeta``: Euler-Maclaurin summation (N=200, ten Bernoulli corrections).
* ``bessel_K_imag_order`` and ``bessel_J_combination``: the integral
  representations used for the K- and J-Bessel transforms, evaluated by the
  trapezoidal rule on a deformed contour.  The deformation turns the
  conditionally convergent oscillatory integrals into exponentially decaying
  ones without changing their value (Cauchy), so the trapezoidal rule
  converges geometrically.
* ``adaptive_quad``: QUADPACK through scipy, plus block summation with Wynn
  extrapolation for oscillatory tails.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, DomainError, PoleError, ValidationError

__all__ = [
    "QuadratureSpec",
    "QuadResult",
    "log_gamma",
    "gamma",
    "stirling3",
    "zeta",
    "bessel_K_imag_order",
    "bessel_K_scaled",
    "bessel_J_combination",
    "adaptive_quad",
    "gauss_legendre",
    "EULER_GAMMA",
]

EULER_GAMMA = 0.57721566490153286060651209
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# B_{2k} / (2k (2k-1)) for the Stirling series
_STIRLING = np.array([
    1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0, 1.0 / 1188.0,
    -691.0 / 360360.0, 1.0 / 156.0, -3617.0 / 122400.0,
])

# B_{2k} / (2k)! for Euler-Maclaurin, k = 1..10
_EM_COEFF = np.array([
    1.0 / 6.0 / 2.0,
    -1.0 / 30.0 / 24.0,
    1.0 / 42.0 / 720.0,
    -1.0 / 30.0 / 40320.0,
    5.0 / 66.0 / 3628800.0,
    -691.0 / 2730.0 / 479001600.0,
    7.0 / 6.0 / 87178291200.0,
    -3617.0 / 510.0 / 20922789888000.0,
    43867.0 / 798.0 / 6402373705728000.0,
    -174611.0 / 330.0 / 2432902008176640000.0,
])


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and truncation knobs for one integral.

    ``half_width`` truncates infinite intervals; ``period`` switches infinite
    intervals to block summation at that scale with Wynn extrapolation;
    ``weight`` = ("cos" | "sin", omega) selects a Fourier-weight rule.
    """

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 2000
    half_width: float | None = None
    period: float | None = None
    weight: tuple[str, float] | None = None
    max_blocks: int = 20000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValidationError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValidationError("max_subdivisions must be >= 1")
        if self.half_width is not None and self.half_width <= 0:
            raise ValidationError("half_width must be positive")
        if self.period is not None and self.period <= 0:
            raise ValidationError("period must be positive")

    def with_(self, **kw) -> "QuadratureSpec":
        return replace(self, **kw)


@dataclass
class QuadResult:
    value: complex
    error: float
    meta: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.value.real)

    def __complex__(self):
        return complex(self.value)


# ---------------------------------------------------------------------------
# Gamma


def _stirling_series(z):
    zi = 1.0 / z
    zi2 = zi * zi
    acc = np.zeros_like(z)
    p = zi
    for c in _STIRLING:
        acc = acc + c * p
        p = p * zi2
    return (z - 0.5) * np.log(z) - z + _HALF_LOG_2PI + acc


def log_gamma(z):
    """Principal branch of log Gamma(z) for complex z (scalar or array).

    Arguments with small real part are lifted by the recurrence
    log Gamma(z) = log Gamma(z + k) - sum_{j<k} log(z + j) until the Stirling
    series is accurate; the sum of principal logarithms reproduces the
    principal branch off the negative real axis.
    """
    scalar = np.isscalar(z)
    z = np.asarray(z, dtype=complex)
    zr = np.rint(z.real)
    pole = (z.imag == 0) & (z.real <= 0) & (z.real == zr)
    if np.any(pole):
        raise PoleError(f"log_gamma has a pole at {z[pole].ravel()[0]}")
    # shift so that Re z >= 16 unless |Im z| is already large
    need = np.where(np.abs(z.imag) >= 16.0, np.maximum(0.0, 1.0 - z.real),
                    np.maximum(0.0, 16.0 - z.real))
    k = np.ceil(need).astype(np.int64)
    out = np.zeros_like(z)
    w = z.copy()
    kmax = int(k.max()) if k.size else 0
    for j in range(kmax):
        act = k > j
        out[act] -= np.log(w[act])
        w[act] += 1.0
    out += _stirling_series(w)
    return complex(out) if scalar else out


def gamma(z):
    """Gamma(z) = exp(log_gamma(z))."""
    return np.exp(log_gamma(z))


def stirling3(z):
    """Three-term Stirling form exp((z-1/2)log z - z + log(2pi)/2)(1 + 1/12z + 1/288z^2)."""
    z = np.asarray(z, dtype=complex)
    return np.exp((z - 0.5) * np.log(z) - z + _HALF_LOG_2PI) * (1 + 1 / (12 * z) + 1 / (288 * z * z))


# ---------------------------------------------------------------------------
# Zeta

_EM_N = 200
_EM_LOGN = np.log(np.arange(1, _EM_N, dtype=float))


def zeta(s):
    """Riemann zeta for Re(s) >= 0.6, s != 1, by Euler-Maclaurin summation."""
    scalar = np.isscalar(s)
    s = np.asarray(s, dtype=complex)
    if np.any((s.real == 1.0) & (s.imag == 0.0)):
        raise PoleError("zeta has a pole at s = 1")
    if np.any(s.real < 0.6):
        raise DomainError("zeta is implemented for Re(s) >= 0.6 only")
    flat = s.ravel()
    N = float(_EM_N)
    out = np.empty(flat.shape, dtype=complex)
    for lo in range(0, flat.size, 512):
        ss = flat[lo:lo + 512]
        head = np.exp(-np.outer(ss, _EM_LOGN)).sum(axis=1)
        Ns = np.exp(-ss * math.log(N))
        tail = N * Ns / (ss - 1.0) + 0.5 * Ns
        # sum_k B_2k/(2k)! * s(s+1)...(s+2k-2) * N^{-s-2k+1}
        poch = ss.copy()
        Npow = Ns / N
        corr = np.zeros_like(ss)
        for k, c in enumerate(_EM_COEFF):
            corr = corr + c * poch * Npow
            poch = poch * (ss + 2 * k + 1) * (ss + 2 * k + 2)
            Npow = Npow / (N * N)
        out[lo:lo + 512] = head + tail + corr
    out = out.reshape(s.shape)
    return complex(out) if scalar else out


# ---------------------------------------------------------------------------
# Bessel functions of imaginary order


def _k_scaled_vec(r: float, x: np.ndarray) -> np.ndarray:
    """e^{pi r / 2} K_{ir}(x) for r >= 0 and an array of x > 0.

    Starting from K_{ir}(x) = (1/2) e^{-pi r/2} int exp(-i x sinh u + i r u) du
    (the line Im w = pi/2 of int exp(-x cosh w + i r w) dw), the path is bent
    towards the real axis once x cosh u exceeds r, where the integrand
    decays like exp(-x cosh u).
    """
    eps = 0.05
    amp = 0.5 * math.pi - eps
    s = max(r, 1.0)
    out = np.empty(x.shape)
    for i, xi in enumerate(x):
        U = math.acosh(max(1.0, (60.0 + r * math.pi / 2) / (xi * math.cos(eps)))) + 0.5
        h = min(0.05, 0.2 / math.sqrt(1.0 + r), 0.5 / (xi * math.cosh(U) / s + 1.0))
        u = np.arange(-U, U + 0.5 * h, h)
        g = (xi * np.cosh(u) - r) / s
        th = np.tanh(g)
        alpha = 0.5 * math.pi - amp * th
        dalpha = -amp * (1.0 - th * th) * xi * np.sinh(u) / s
        w = u + 1j * alpha
        f = np.exp(-xi * np.cosh(w) + 1j * r * w + 0.5 * r * math.pi) * (1.0 + 1j * dalpha)
        out[i] = 0.5 * h * f.sum().real
    return out


def bessel_K_scaled(t: float, x):
    """cosh(pi t) K_{2it}(x), which stays O(1) for large t."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x <= 0):
        raise DomainError("bessel_K_imag_order needs x > 0")
    t = abs(float(t))
    val = _k_scaled_vec(2.0 * t, x)  # e^{pi t} K_{2it}(x)
    return 0.5 * (1.0 + math.exp(-2.0 * math.pi * t)) * val


def bessel_K_imag_order(t: float, x):
    """K_{2it}(x) from (1/2)(cosh pi t)^{-1} int cos(x sinh z) e^{-2itz} dz.

    Returns a float for scalar x, an array otherwise.  Even in t.
    """
    scalar = np.isscalar(x)
    val = bessel_K_scaled(t, x) / math.cosh(math.pi * float(t))
    return float(val[0]) if scalar else val


def _jcomb_F(t: float, x: float, c: float = 1.0) -> complex:
    """int_R exp(i x cosh w + 2 i t w) dw along a deformed path, t >= 0.

    The path leaves the real axis once x (cosh z - 1) passes ~ 1.15 pi t and
    then runs at height +-(pi/2 - 0.05), where exp(i x cosh w) decays.  Using
    cosh z - 1 (smooth and even) rather than sinh|z| keeps the path analytic
    at z = 0, which is what makes the trapezoidal rule geometric.
    """
    eps = 0.05
    amp = 0.5 * math.pi - eps
    s0 = 1.15 * math.pi * t + 3.0
    sig = 0.25 * s0 + 1.0
    smax = max(s0 + 6.0 * sig, (math.pi * t + 40.0) / math.sin(amp) + 2.0 * sig)
    zmax = math.acosh(1.0 + smax / x)
    rate = math.hypot(x * math.cosh(zmax), 2.0 * t) + amp * x * math.sinh(zmax) / sig
    h = min(0.05, c / rate)
    z = np.arange(-zmax, zmax + 0.5 * h, h)
    sv = x * (np.cosh(z) - 1.0)
    th = np.tanh((sv - s0) / sig)
    ramp = 0.5 * (1.0 + th)
    dramp = (1.0 - th * th) / (2.0 * sig) * x * np.sinh(z)
    dl = 0.5 * math.sqrt(2.0 * s0 / x) if x > 1.0 else 1.0
    sg = np.tanh(z / dl)
    dsg = (1.0 - sg * sg) / dl
    beta = amp * sg * ramp
    dbeta = amp * (dsg * ramp + sg * dramp)
    w = z + 1j * beta
    f = np.exp(1j * x * np.cosh(w) + 2j * t * w) * (1.0 + 1j * dbeta)
    return complex(h * f.sum())


def bessel_J_combination(t: float, x):
    """b(t, x) with (J_{2it}(x) - J_{-2it}(x)) / cosh(pi t) = i * b(t, x).

    Uses (J_{2it} - J_{-2it})/cosh(pi t) = -(2i/pi) tanh(pi t) int cos(x cosh z) e^{2itz} dz,
    so b = -(2/pi) tanh(pi t) Re F with F = int exp(i x cosh w + 2itw) dw.
    Odd in t, zero at t = 0.
    """
    scalar = np.isscalar(x)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs <= 0):
        raise DomainError("bessel_J_combination needs x > 0")
    t = float(t)
    if t == 0.0:
        out = np.zeros(xs.shape)
    else:
        ta = abs(t)
        F = np.array([_jcomb_F(ta, float(xi)).real for xi in xs])
        out = -(2.0 / math.pi) * math.tanh(math.pi * t) * F
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Quadrature


def gauss_legendre(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre nodes and weights on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def _wynn(sums: list[float]) -> float:
    """Wynn epsilon extrapolation of a sequence of partial sums."""
    n = len(sums)
    e_prev = [0.0] * (n + 1)
    e_cur = list(sums)
    best = sums[-1]
    for k in range(1, n):
        e_next = []
        for j in range(len(e_cur) - 1):
            d = e_cur[j + 1] - e_cur[j]
            if d == 0.0:
                e_next.append(float("inf"))
            else:
                e_next.append(e_prev[j + 1] + 1.0 / d)
        e_prev, e_cur = e_cur, e_next
        if k % 2 == 0 and e_cur and np.isfinite(e_cur[-1]):
            best = e_cur[-1]
        if len(e_cur) <= 1:
            break
    return best


def _quad_real(f, a, b, spec: QuadratureSpec, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            return integrate.quad(f, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                                  limit=spec.max_subdivisions, **kw)
        except integrate.IntegrationWarning as err:
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, est = integrate.quad(f, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                                      limit=spec.max_subdivisions, **kw)
            raise ConvergenceError(f"quadrature did not converge: {str(err).splitlines()[0]}",
                                   estimate=val, error=est) from None


def _blocks(f, a, direction, spec: QuadratureSpec):
    """Sum an oscillatory tail in half-period blocks and extrapolate.

    Half periods make the block values alternate in sign, the regime where
    the epsilon algorithm accelerates best.
    """
    P = 0.5 * spec.period
    partial, sums = 0.0, []
    last = None
    x0 = a
    for k in range(spec.max_blocks):
        x1 = x0 + direction * P
        val, _ = _quad_real(f, min(x0, x1), max(x0, x1), spec)
        partial += direction * val if direction < 0 else val
        sums.append(partial)
        x0 = x1
        if len(sums) >= 12 and k % 4 == 3:
            est = _wynn(sums[-24:])
            if last is not None and abs(est - last) <= max(spec.abs_tol, spec.rel_tol * abs(est)):
                return est, abs(est - last), k + 1
            last = est
    raise ConvergenceError("oscillatory tail did not converge", estimate=last,
                           error=float("nan"))


def _adaptive_real(f, a, b, spec: QuadratureSpec):
    meta = {}
    inf_a, inf_b = math.isinf(a), math.isinf(b)
    if spec.weight is not None and (inf_a or inf_b):
        kind, omega = spec.weight
        if inf_a and inf_b:
            raise ValidationError("Fourier-weight rule needs one finite endpoint")
        if inf_a:
            g = lambda x: f(-x)  # noqa: E731
            sgn = -1.0 if kind == "sin" else 1.0
            val, err = _quad_real(g, -b, np.inf, spec, weight=kind, wvar=omega)
            return sgn * val, err, {"rule": "qawf"}
        val, err = _quad_real(f, a, np.inf, spec, weight=kind, wvar=omega)
        return val, err, {"rule": "qawf"}
    if spec.weight is not None:
        kind, omega = spec.weight
        val, err = _quad_real(f, a, b, spec, weight=kind, wvar=omega)
        return val, err, {"rule": "qawo"}
    if not (inf_a or inf_b):
        val, err = _quad_real(f, a, b, spec)
        return val, err, {"rule": "qags"}
    if spec.half_width is not None and spec.period is None:
        lo = max(a, -spec.half_width)
        hi = min(b, spec.half_width)
        val, err = _quad_real(f, lo, hi, spec)
        meta.update(rule="qags-truncated", truncated_at=(lo, hi))
        return val, err, meta
    if spec.period is not None:
        total, err, nblk = 0.0, 0.0, 0
        if inf_a and inf_b:
            mid = 0.0
            v, e, n1 = _blocks(f, mid, +1, spec)
            w, e2, n2 = _blocks(f, mid, -1, spec)
            return v + w, e + e2, {"rule": "blocks+wynn", "blocks": n1 + n2}
        if inf_b:
            v, e, n1 = _blocks(f, a, +1, spec)
            return v, e, {"rule": "blocks+wynn", "blocks": n1}
        v, e, n1 = _blocks(f, b, -1, spec)
        return v, e, {"rule": "blocks+wynn", "blocks": n1}
    val, err = _quad_real(f, a, b, spec)
    return val, err, {"rule": "qagi"}


def adaptive_quad(integrand, interval, spec: QuadratureSpec | None = None) -> QuadResult:
    """Integrate a real-to-complex function over ``interval`` = (a, b).

    Endpoints may be infinite.  Raises :class:`ConvergenceError` (with the
    best estimate attached) when the tolerance cannot be met.
    """
    spec = spec or QuadratureSpec()
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        if a == b:
            return QuadResult(0j, 0.0, {"rule": "empty"})
        raise ValidationError("interval must satisfy a <= b")
    probe = complex(integrand(a if math.isfinite(a) else (b - 1.0 if math.isfinite(b) else 0.0)))
    re, err_re, meta = _adaptive_real(lambda x: complex(integrand(x)).real, a, b, spec)
    im, err_im = 0.0, 0.0
    if probe.imag != 0.0 or _has_imag(integrand, a, b):
        im, err_im, _ = _adaptive_real(lambda x: complex(integrand(x)).imag, a, b, spec)
    return QuadResult(complex(re, im), float(err_re + err_im), meta)


def _has_imag(f, a, b) -> bool:
    lo = a if math.isfinite(a) else -10.0
    hi = b if math.isfinite(b) else lo + 20.0
    for x in np.linspace(lo, hi, 7):
        if complex(f(float(x))).imag != 0.0:
            return True
    return False

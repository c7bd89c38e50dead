"""The Kuznetsov trace formula as a two-sided numerical identity.

Transforms of an even test function h:

    h_0     = (2/pi) int_0^inf t h(t) tanh(pi t) dt
    h^+(x)  = 2i int t J_{2it}(x) h(t) / cosh(pi t) dt
            = (8/pi) int_0^inf cos(x cosh z) G(z) dz
    h^-(x)  = (4/pi) int_0^inf t K_{2it}(x) h(t) sinh(pi t) dt
            = (4/pi) int_0^inf cos(x sinh z) G(z) dz

with G(z) = int_0^inf t h(t) tanh(pi t) cos(2tz) dt.  The second forms are
the double integrals with the z-integral taken outside.  For analytic h,
G splits exactly into the tanh poles at t = i(k + 1/2) and a remainder
taken from the shifted line Im t = K:

    G(z) = - sum_{k<K} (k + 1/2) h(i(k + 1/2)) e^{-(2k+1) z}
           + (e^{-2Kz}/2) int (s + iK) h(s + iK) tanh(pi s) e^{2isz} ds.

The remainder decays like e^{-2Kz}, so the z-range is finite; the pole
exponentials are integrated against cos(x cosh z) by a Fourier-weight rule.
The Bessel route (t outside, Bessel kernels from ``special``) is kept as an
independent cross-check.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import arith
from .errors import ComputationError, ValidationError
from .forms import SpectralBasis
from .lfunc import VWeightParams, v_weight_many
from .special import (
    QuadratureSpec,
    adaptive_quad,
    bessel_J_combination,
    bessel_K_scaled,
    gauss_legendre,
    log_gamma,
    zeta,
)

log = logging.getLogger(__name__)

__all__ = [
    "TestFunction",
    "gaussian_pair",
    "TraceReport",
    "NORMALIZATIONS",
    "h_zero",
    "h_plus",
    "h_minus",
    "h_plus_bessel",
    "h_minus_bessel",
    "h_minus_first",
    "h_sharp_leading",
    "k_function",
    "k_hat",
    "phi_prime",
    "psi_prime",
    "eisenstein_weight",
    "eisenstein_integral",
    "trace_both_sides",
    "default_c_max",
]

DECAY_TOL = 1e-12


@dataclass(frozen=True)
class TestFunction:
    """Even test function h with localisation metadata (T, M).

    ``analytic`` evaluates h at complex arguments; it enables the pole
    splitting of the z-outside route.  ``support`` is a radius beyond which
    |h| < 1e-12 (the decay contract).
    """

    __test__ = False  # not a pytest class

    evaluator: Callable[[np.ndarray], np.ndarray]
    T: float
    M: float
    description: str = ""
    analytic: Callable[[np.ndarray], np.ndarray] | None = None
    support: float | None = None

    def __call__(self, t):
        return self.evaluator(np.asarray(t, dtype=float))

    def at(self, z):
        if self.analytic is None:
            raise ValidationError(f"test function {self.description!r} has no analytic continuation")
        return self.analytic(np.asarray(z, dtype=complex))

    def scaled(self, c: float) -> "TestFunction":
        ev, an = self.evaluator, self.analytic
        return TestFunction(lambda t: c * ev(t), self.T, self.M, f"{c}*({self.description})",
                            None if an is None else (lambda z: c * an(z)), self.support)

    @property
    def radius(self) -> float:
        """Integration radius in t."""
        if self.support is not None:
            return self.support
        return self.T + 12 * self.M

    def contract_residuals(self) -> dict:
        """Evenness and decay residuals on a test grid."""
        ts = np.linspace(0, self.radius + 10 * max(self.M, 1), 801)
        even = float(np.max(np.abs(self(ts) - self(-ts))))
        far = ts[ts >= self.T + 12 * self.M]
        decay = float(np.max(np.abs(self(far)))) if far.size else 0.0
        return {"evenness": even, "decay": decay}


def gaussian_pair(T: float, M: float) -> TestFunction:
    """H_{T,M}(t) = exp(-(t-T)^2/M^2) + exp(-(t+T)^2/M^2)."""
    if not (T >= 0 and M > 0):
        raise ValidationError("gaussian_pair needs T >= 0 and M > 0")

    def ev(t):
        return np.exp(-((t - T) / M) ** 2) + np.exp(-((t + T) / M) ** 2)

    support = T + M * math.sqrt(math.log(2.0 / DECAY_TOL))
    return TestFunction(ev, T, M, f"H_{{T={T:g},M={M:g}}}", ev, support)


# ---------------------------------------------------------------------------
# h_0


def h_zero(h: TestFunction, quad: QuadratureSpec | None = None) -> float:
    """(2/pi) int_0^inf t h(t) tanh(pi t) dt."""
    quad = quad or QuadratureSpec()
    f = lambda t: t * float(h(np.array([t]))[0]) * math.tanh(math.pi * t)  # noqa: E731
    lo, hi = 0.0, h.radius
    # split at the bumps so the adaptive rule sees them
    cuts = sorted({lo, hi, *[x for x in (h.T - 4 * h.M, h.T, h.T + 4 * h.M) if lo < x < hi]})
    total = 0.0
    for a, b in zip(cuts, cuts[1:]):
        total += adaptive_quad(f, (a, b), quad).value.real
    return 2.0 / math.pi * total


# ---------------------------------------------------------------------------
# z-outside route


class _GSplit:
    """Pole/remainder split of G(z) for an analytic test function."""

    def __init__(self, h: TestFunction, tol: float = 1e-16):
        self.h = h
        M = max(h.M, 1e-3)
        S = h.radius + 2.0
        probe = np.linspace(-S, S, 4001)
        # K poles are split off.  The shifted line grows like exp(K^2/M^2), so K <= 3M
        # keeps the pole coefficients below ~e^9; among those K the smallest
        # z-range (remainder below tol) wins.
        best = None
        for K in range(1, int(min(8, max(1, math.floor(3 * M)))) + 1):
            mag = np.abs((probe + 1j * K) * h.at(probe + 1j * K)).sum() * (probe[1] - probe[0]) / 2
            scale = float(max(mag, 1e-300))
            Z = max(0.5, math.log(scale / tol) / (2 * K)) if scale > tol else 0.5
            if best is None or Z < best[2]:
                best = (K, scale, Z)
        self.K, self.scale, self.Z = best
        K = self.K
        ks = np.arange(K)
        self.a = -(ks + 0.5) * h.at(1j * (ks + 0.5)).real
        ds = 2 * math.pi / (80.0 + 2.0 * self.Z)
        n = int(math.ceil(S / ds))
        s = ds * np.arange(-n, n + 1)
        self.s = s
        self.f = 0.5 * ds * (s + 1j * K) * h.at(s + 1j * K) * np.tanh(math.pi * s)
        keep = np.abs(self.f) > 1e-300
        self.s, self.f = self.s[keep], self.f[keep]
        self.smax = float(np.abs(self.s).max()) if self.s.size else 0.0

    def remainder(self, z: np.ndarray) -> np.ndarray:
        out = np.empty(z.shape)
        for lo in range(0, z.size, 256):
            zz = z[lo : lo + 256]
            E = np.exp(2j * np.outer(zz, self.s))
            out[lo : lo + 256] = (np.exp(-2 * self.K * zz) * (E @ self.f)).real
        return out

    def full(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, float)
        poles = sum(a * np.exp(-(2 * k + 1) * z) for k, a in enumerate(self.a))
        return self.remainder(z) + poles


_MAX_PANELS = 200_000


def _panels(x: float, Z: float, smax: float, kind: str, nodes: int = 20):
    """Gauss-Legendre panels on [0, Z] sized by the local oscillation of the integrand."""
    edges = [0.0]
    while edges[-1] < Z:
        z = edges[-1]
        dphase = x * (math.sinh(z + 0.1) if kind == "plus" else math.cosh(z + 0.1)) + 2 * smax + 1.0
        w = min(0.25, 4.0 * math.pi / dphase)
        edges.append(min(Z, z + w))
        if len(edges) > _MAX_PANELS:
            raise ComputationError(
                f"z-range [0, {Z:.3g}] needs more than {_MAX_PANELS} panels at x = {x:g}; "
                "use route='bessel'")
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    a = np.array(edges[:-1])
    b = np.array(edges[1:])
    half = (b - a) / 2
    z = (a[:, None] + half[:, None] * (gx[None, :] + 1)).ravel()
    w = (half[:, None] * gw[None, :]).ravel()
    return z, w


def _pole_integral(kind: str, x: float, k: int, quad: QuadratureSpec) -> float:
    """int_0^inf cos(x cosh z) e^{-(2k+1) z} dz (kind 'plus') or with sinh (kind 'minus')."""
    nu = 2 * k + 1
    q = quad.with_(abs_tol=1e-13, rel_tol=1e-12)
    if kind == "plus":
        # w = cosh z; e^{-z} = 1/(w + sqrt(w^2-1)); near w = 1 use w = 1 + s^2
        def near(s):
            w = 1 + s * s
            r = math.sqrt(w * w - 1)
            return math.cos(x * w) * (w + r) ** (-nu) * 2 / math.sqrt(2 + s * s)

        head = adaptive_quad(near, (0.0, 1.0), q).value.real

        def g(w):
            r = math.sqrt(w * w - 1)
            return (w + r) ** (-nu) / r

        tail = adaptive_quad(g, (2.0, math.inf), q.with_(weight=("cos", x))).value.real
        return head + tail

    def g2(w):
        r = math.sqrt(1 + w * w)
        return (w + r) ** (-nu) / r

    return adaptive_quad(g2, (0.0, math.inf), q.with_(weight=("cos", x))).value.real


def _z_outside(h: TestFunction, x: float, kind: str, quad: QuadratureSpec, split: _GSplit | None = None):
    if x <= 0:
        raise ValidationError("Bessel transforms need x > 0")
    sp = split or _GSplit(h)
    z, w = _panels(x, sp.Z, sp.smax, kind)
    phase = np.cosh(z) if kind == "plus" else np.sinh(z)
    body = float(np.sum(w * np.cos(x * phase) * sp.remainder(z)))
    poles = sum(a * _pole_integral(kind, x, k, quad) for k, a in enumerate(sp.a) if a != 0.0)
    pref = 8.0 / math.pi if kind == "plus" else 4.0 / math.pi
    return float(pref * (body + poles))


def _check_route(route: str) -> None:
    if route not in ("auto", "bessel"):
        raise ValidationError(f"route must be 'auto' or 'bessel', got {route!r}")


def h_plus(h: TestFunction, x: float, quad: QuadratureSpec | None = None, route: str = "auto") -> float:
    """h^+(x) by the double integral with the z-integral outside.

    ``route='bessel'`` (or a test function without analytic continuation)
    uses the t-outside form built on ``bessel_J_combination``.
    """
    quad = quad or QuadratureSpec()
    _check_route(route)
    if route == "bessel" or (route == "auto" and h.analytic is None):
        return h_plus_bessel(h, x)
    return _z_outside(h, float(x), "plus", quad)


def h_minus(h: TestFunction, x: float, quad: QuadratureSpec | None = None, route: str = "auto") -> float:
    """h^-(x) by the double integral with the sinh phase, z-integral outside."""
    quad = quad or QuadratureSpec()
    _check_route(route)
    if route == "bessel" or (route == "auto" and h.analytic is None):
        return h_minus_bessel(h, x)
    return _z_outside(h, float(x), "minus", quad)


# ---------------------------------------------------------------------------
# t-outside (Bessel) route


def _t_nodes(h: TestFunction, lo: float = 0.0, hi: float | None = None, width: float = 0.5, nodes: int = 16):
    hi = h.radius if hi is None else hi
    npan = max(1, int(math.ceil((hi - lo) / width)))
    edges = np.linspace(lo, hi, npan + 1)
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    half = np.diff(edges) / 2
    t = (edges[:-1, None] + half[:, None] * (gx[None, :] + 1)).ravel()
    w = (half[:, None] * gw[None, :]).ravel()
    ht = h(t)
    keep = np.abs(ht) > 1e-18 * max(1.0, float(np.abs(ht).max()))
    return t[keep], w[keep], ht[keep]


def h_plus_bessel(h: TestFunction, x: float) -> float:
    """2i int t J_{2it}(x) h(t)/cosh(pi t) dt = -2 int_0^inf t h(t) b(t, x) dt."""
    t, w, ht = _t_nodes(h)
    b = np.array([bessel_J_combination(float(ti), float(x)) for ti in t])
    return float(-2.0 * np.sum(w * t * ht * b))


def h_minus_bessel(h: TestFunction, x: float) -> float:
    """(4/pi) int_0^inf t K_{2it}(x) h(t) sinh(pi t) dt."""
    t, w, ht = _t_nodes(h)
    ks = np.array([bessel_K_scaled(float(ti), float(x))[0] for ti in t])  # cosh(pi t) K_{2it}
    return float(4.0 / math.pi * np.sum(w * t * ht * np.tanh(math.pi * t) * ks))


def h_minus_first(h: TestFunction, x: float, V: Callable[[np.ndarray], np.ndarray] | None = None) -> float:
    """h^-_{n,1}(x): the t-factor replaced by T and only the bump at +T kept.

    (2MT/pi) int e^{-t^2} V tanh(pi(T+tM)) int cos(x sinh z) e(-(T+tM)z/pi) dz dt
    = (4T/pi) int_R e^{-(t-T)^2/M^2} V(t) tanh(pi t) cosh(pi t) K_{2it}(x) dt.
    """
    T, M = h.T, h.M
    lo = T - M * math.sqrt(math.log(1.0 / 1e-18))
    hi = T + M * math.sqrt(math.log(1.0 / 1e-18))
    npan = max(1, int(math.ceil((hi - lo) / 0.5)))
    gx, gw = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(lo, hi, npan + 1)
    half = np.diff(edges) / 2
    t = (edges[:-1, None] + half[:, None] * (gx[None, :] + 1)).ravel()
    w = (half[:, None] * gw[None, :]).ravel()
    bump = np.exp(-((t - T) / M) ** 2)
    vv = np.ones_like(t) if V is None else V(t)
    ks = np.array([bessel_K_scaled(abs(float(ti)), float(x))[0] for ti in t])
    return float(4.0 * T / math.pi * np.sum(w * bump * vv * np.tanh(math.pi * t) * ks))


# ---------------------------------------------------------------------------
# k-function, its Fourier transform, phases


def k_function(h: TestFunction, n_context: VWeightParams | None = None, n: int = 1):
    """k(t) = e^{-t^2} V_{mu,T+tM}(n) tanh(pi(T+tM)); V = 1 without an n-context."""
    T, M = h.T, h.M

    def k(t):
        t = np.atleast_1d(np.asarray(t, float))
        out = np.exp(-t * t) * np.tanh(math.pi * (T + t * M))
        if n_context is not None:
            vv = np.array([v_weight_many([n], n_context.with_t(float(T + ti * M)))[0] for ti in t])
            out = out * vv
        return out

    return k


def k_hat(h: TestFunction, n_context: VWeightParams | None = None, n: int = 1, nodes: int = 400):
    """Fourier transform khat(y) = int k(t) e(-ty) dt by Gauss-Legendre on [-9, 9].

    The node count grows with max |y| so that the oscillation e(-ty) stays
    resolved (about 3 nodes per period); ``nodes`` is the floor.
    """
    k = k_function(h, n_context, n)
    grids: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def grid(count):
        if count not in grids:
            t, w = gauss_legendre(count, -9.0, 9.0)
            grids[count] = (t, k(t) * w)
        return grids[count]

    def khat(y):
        y = np.atleast_1d(np.asarray(y, float))
        need = int(54 * float(np.max(np.abs(y), initial=0.0))) + 64
        t, kt = grid(max(nodes, 100 * ((need + 99) // 100)))
        return np.exp(-2j * math.pi * np.outer(y, t)) @ kt

    return khat


def h_sharp_leading(h: TestFunction, x: float, n_context: VWeightParams | None = None, n: int = 1) -> float:
    """T int khat(z) e(xz/2M) e(-Tz/M) dz = T k((x/2 - T)/M) by Fourier inversion."""
    k = k_function(h, n_context, n)
    return float(h.T * k((x / 2.0 - h.T) / h.M)[0])


def phi_prime(z, x: float, T: float, M: float):
    """phi'(z) for phi(z) = (x/2pi) cosh(pi z/M) - Tz/M."""
    z = np.asarray(z, float)
    return x / (2 * M) * np.sinh(math.pi * z / M) - T / M


def psi_prime(z, x: float, T: float, M: float):
    """psi'(z) for psi(z) = (x/2pi) sinh(pi z/M) - Tz/M."""
    z = np.asarray(z, float)
    return x / (2 * M) * np.cosh(math.pi * z / M) - T / M


# ---------------------------------------------------------------------------
# continuous spectrum


def _log_cosh_pi(t):
    a = np.pi * np.abs(t)
    return a + np.log1p(np.exp(-2 * a)) - math.log(2.0)


def eisenstein_weight(t, absolute: bool = False):
    """omega(t) = 4 pi^{2+2it} Gamma(1/2+it)^{-2} zeta(1+2it)^{-2} / cosh(pi t).

    ``absolute=True`` gives |omega(t)| = 4 pi |zeta(1+2it)|^{-2}.  omega(0) = 0.
    """
    scalar = np.isscalar(t)
    t = np.atleast_1d(np.asarray(t, float))
    out = np.zeros(t.shape, dtype=complex)
    nz = t != 0
    tt = t[nz]
    if tt.size:
        lz = np.log(zeta(1 + 2j * tt))
        lw = (math.log(4.0) + (2 + 2j * tt) * math.log(math.pi) - 2 * log_gamma(0.5 + 1j * tt)
              - 2 * lz - _log_cosh_pi(tt))
        out[nz] = np.exp(lw.real) if absolute else np.exp(lw)
    if absolute:
        out = out.real
    return (complex(out[0]) if not absolute else float(out[0])) if scalar else out


def _tau_it(n: int, t: np.ndarray) -> np.ndarray:
    """tau_{it}(n) = sum_{ab = n} (a/b)^{it} (real)."""
    ds = np.array(arith.divisors(int(n)), dtype=float)
    return np.cos(np.outer(t, np.log(ds) - np.log(n / ds))).sum(axis=1)


def eisenstein_integral(h_of_t: Callable[[np.ndarray], np.ndarray], m: int, n: int, radius: float,
                        absolute: bool = False, nodes_per_unit: int = 64) -> float:
    """(1/4pi) int_R h(t) omega(t) (m/n)^{it} sigma_{-2it}(m) sigma_{2it}(n) dt.

    The integrand at -t is the conjugate of that at t, so the integral is
    (1/2pi) int_0^R Re[...] dt.  (m/n)^{it} sigma(m,-2it) sigma(n,2it) equals
    tau_it(m) tau_it(n).
    """
    npan = max(4, int(math.ceil(radius * nodes_per_unit / 16)))
    edges = np.linspace(0.0, radius, npan + 1)
    gx, gw = np.polynomial.legendre.leggauss(16)
    half = np.diff(edges) / 2
    t = (edges[:-1, None] + half[:, None] * (gx[None, :] + 1)).ravel()
    w = (half[:, None] * gw[None, :]).ravel()
    om = eisenstein_weight(t, absolute=absolute)
    tau = _tau_it(m, t) * _tau_it(n, t)
    val = np.asarray(h_of_t(t)) * om * tau
    return float(np.sum(w * np.real(val)) / (2 * math.pi))


# ---------------------------------------------------------------------------
# both sides


@dataclass(frozen=True)
class Normalization:
    """Constants multiplying the lemma's terms."""

    name: str
    delta: float
    plus: float
    minus: float
    eisenstein: float
    absolute_omega: bool


NORMALIZATIONS = {
    # the lemma as printed
    "paper": Normalization("paper", 1.0, 1.0, 1.0, 1.0, False),
    # Iwaniec-Kowalski (Thm 16.3) restricted to even forms, written in the
    # lemma's lambda_j, omega_j normalisation
    "standard": Normalization("standard", 2.0 / math.pi, 4.0 / math.pi, 8.0 / math.pi, -4.0, True),
}


@dataclass(frozen=True)
class TraceReport:
    spectral_side: float
    delta_term: float
    kloosterman_plus: float
    kloosterman_minus: float
    eisenstein_term: float
    residual: float
    truncations: dict = field(default_factory=dict)

    @property
    def geometric_side(self) -> float:
        return self.delta_term + self.kloosterman_plus + self.kloosterman_minus + self.eisenstein_term

    @property
    def relative_residual(self) -> float:
        return abs(self.residual) / max(abs(self.spectral_side), 1e-300)

    def as_row(self) -> dict:
        row = {
            "spectral_side": self.spectral_side,
            "delta_term": self.delta_term,
            "kloosterman_plus": self.kloosterman_plus,
            "kloosterman_minus": self.kloosterman_minus,
            "eisenstein_term": self.eisenstein_term,
            "residual": self.residual,
        }
        row.update(self.truncations)
        return row


def default_c_max(h: TestFunction, n: int, m: int) -> int:
    """Smallest c with 4 pi sqrt(mn)/c below the h^- band [T/10, 10T]."""
    band_lo = max(h.T / 10.0, 1e-3)
    return max(4, int(math.ceil(4 * math.pi * math.sqrt(m * n) / band_lo)))


def trace_both_sides(basis: SpectralBasis, h: TestFunction, n: int, m: int, c_max: int | None = None,
                     quad: QuadratureSpec | None = None, normalization: str = "standard") -> TraceReport:
    """Both sides of the trace formula for the pair (n, m).

    ``normalization`` selects the constants: "paper" uses the lemma
    verbatim, "standard" the even-form specialisation of the classical
    formula (see ``NORMALIZATIONS``).
    """
    basis.require_weighted()
    if normalization not in NORMALIZATIONS:
        raise ValidationError(f"unknown normalization {normalization!r}")
    nm = NORMALIZATIONS[normalization]
    if n < 1 or m < 1:
        raise ValidationError("n and m must be positive integers")
    quad = quad or QuadratureSpec()
    edge = float(np.max(np.abs(h(np.array([basis.t_max, basis.t_max + 1.0])))))
    if edge > DECAY_TOL:
        raise ValidationError(
            f"h has not decayed at the basis horizon t_max = {basis.t_max:g} (|h| = {edge:.3g})")
    c_max = default_c_max(h, n, m) if c_max is None else int(c_max)
    if c_max < 1:
        raise ValidationError("c_max must be >= 1")

    t = basis.t
    terms = h(t) * basis.omega * np.array([f.lam(n) * f.lam(m) for f in basis])
    spectral = math.fsum(terms)

    delta = nm.delta * h_zero(h, quad) if n == m else 0.0
    split = _GSplit(h) if h.analytic is not None else None
    cs = np.arange(1, c_max + 1)
    S_plus = arith.kloosterman_many(m, n, cs)
    S_minus = arith.kloosterman_many(-m, n, cs)
    kp, km = [], []
    for c, sp_, sm_ in zip(cs, S_plus, S_minus):
        x = 4 * math.pi * math.sqrt(m * n) / c
        if split is not None:
            hp = _z_outside(h, x, "plus", quad, split)
            hm = _z_outside(h, x, "minus", quad, split)
        else:
            hp, hm = h_plus_bessel(h, x), h_minus_bessel(h, x)
        kp.append(sp_ * hp / (2 * c))
        km.append(sm_ * hm / (2 * c))
    kplus = nm.plus * math.fsum(kp)
    kminus = nm.minus * math.fsum(km)
    eis = nm.eisenstein * eisenstein_integral(h, m, n, h.radius, absolute=nm.absolute_omega)
    residual = spectral - (delta + kplus + kminus + eis)
    trunc = {
        "c_max": int(c_max),
        "t_quad_max": float(h.radius),
        "basis_t_max": float(basis.t_max),
        "normalization": nm.name,
        "last_c_term": float(abs(kp[-1]) + abs(km[-1])) if kp else 0.0,
    }
    return TraceReport(spectral, delta, kplus, kminus, eis, residual, trunc)

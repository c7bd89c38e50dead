"""The twisted first moment of Rankin-Selberg central values.

    Xi = sum_j H_{T,M}(t_j) omega_j L(1/2, f x u_j) lambda_j(p)

Opening L(1/2, f x u_j) with the approximate functional equation and
applying the trace formula to each h_n(t) = H_{T,M}(t) V_{mu,t}(n) gives
Xi = D + E + J + K.  Both sides use the same truncated n-sum, so the
identity holds up to the trace-formula truncations alone.

The Bessel transforms of every h_n come from one shared profile
G_n(z) = int_0^inf t h_n(t) tanh(pi t) cos(2tz) dt sampled on a uniform
z-grid (a single matrix product), followed by strided trapezoid sums of
cos(x cosh z) G_n(z) and cos(x sinh z) G_n(z) in the compiled kernel.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import arith, kernels
from .errors import ValidationError
from .forms import MaassForm, SpectralBasis
from .kuznetsov import NORMALIZATIONS, eisenstein_weight, gaussian_pair
from .lfunc import VWeightParams, central_value_rs, default_n_max, v_matrix
from .special import QuadratureSpec, adaptive_quad

log = logging.getLogger(__name__)

__all__ = [
    "MomentParams",
    "MomentBreakdown",
    "spectral_moment",
    "diagonal_term",
    "main_term",
    "exact_diagonal",
    "eisenstein_term",
    "j_term",
    "jk_terms",
    "k_term",
    "exp_sum_partial",
    "moment_report",
    "breakdown_csv",
    "kloosterman_table",
]

EULER_GAMMA = 0.57721566490153286061
WEIGHT_FLOOR = 1e-12
WINDOW_SLACK = 12.0


@dataclass(frozen=True)
class MomentParams:
    """Parameters of one moment evaluation.

    ``n_max`` and ``c_max`` default (None) to the AFE length at t = T + 10M
    and to the c where 4 pi sqrt(n_max p)/c leaves the h^- band [T/10, 10T].
    """

    T: float
    M: float
    p: int
    A: int = 4
    n_max: int | None = None
    c_max: int | None = None
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    normalization: str = "standard"
    workers: int = 1

    def __post_init__(self):
        if not (self.M > 0 and self.M <= self.T):
            raise ValidationError(f"need 0 < M <= T, got T={self.T}, M={self.M}")
        if not arith.is_prime(int(self.p)):
            raise ValidationError(f"p = {self.p} is not prime")
        if int(self.A) != self.A or self.A < 1:
            raise ValidationError("A must be a positive integer")
        if self.normalization not in NORMALIZATIONS:
            raise ValidationError(f"unknown normalization {self.normalization!r}")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")

    def resolve(self, f: MaassForm) -> "MomentParams":
        """Fill in default truncations for the form f and check the AFE-length invariant."""
        need = default_n_max(f.spectral_parameter, self.T + 10 * self.M)
        n_max = need if self.n_max is None else int(self.n_max)
        if n_max < need:
            raise ValidationError(
                f"n_max = {n_max} is below the AFE length {need} at t = T + 10M")
        c_max = self.c_max
        if c_max is None:
            c_max = int(math.ceil(4 * math.pi * math.sqrt(n_max * self.p) / (self.T / 10.0)))
        if c_max < 1:
            raise ValidationError("c_max must be >= 1")
        return replace(self, n_max=n_max, c_max=int(c_max))

    def doubled(self) -> "MomentParams":
        if self.n_max is None or self.c_max is None:
            raise ValidationError("resolve() before doubling")
        return replace(self, n_max=2 * self.n_max, c_max=2 * self.c_max)


@dataclass(frozen=True)
class MomentBreakdown:
    T: float
    M: float
    p: int
    spectral: float
    diagonal: float
    eisenstein: float
    j_term: float
    k_term: float
    main_term: float
    truncations: dict = field(default_factory=dict)

    @property
    def residual_identity(self) -> float:
        return self.spectral - (self.diagonal + self.eisenstein + self.j_term + self.k_term)

    @property
    def residual_main(self) -> float:
        return self.spectral - self.main_term

    def as_row(self) -> dict:
        row = {
            "T": self.T, "M": self.M, "p": self.p,
            "spectral": self.spectral, "D": self.diagonal, "E": self.eisenstein,
            "J": self.j_term, "K": self.k_term, "main_term": self.main_term,
            "residual_identity": self.residual_identity, "residual_main": self.residual_main,
        }
        row.update(self.truncations)
        return row


CSV_HEADER_NOTE = ("# Xi = sum_j H(t_j) omega_j L(1/2,f x u_j) lambda_j(p); D,E,J,K: trace-formula split; "
                   "residual_identity = spectral-(D+E+J+K); residual_main = spectral-main_term")


def breakdown_csv(rows: list[MomentBreakdown]) -> str:
    """Deterministic CSV text for a list of breakdowns."""
    buf = io.StringIO()
    buf.write(CSV_HEADER_NOTE + "\n")
    if not rows:
        return buf.getvalue()
    fields = list(rows[0].as_row().keys())
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in r.as_row().items()})
    return buf.getvalue()


# ---------------------------------------------------------------------------
# spectral side


def _window_forms(basis: SpectralBasis, params: MomentParams):
    if basis.t_max < params.T + WINDOW_SLACK * params.M:
        raise ValidationError(
            f"basis horizon t_max = {basis.t_max:g} is below T + 12M = {params.T + WINDOW_SLACK * params.M:g}")
    H = gaussian_pair(params.T, params.M)
    out = []
    for bf in basis.basis_forms():
        w = float(H(np.array([bf.t]))[0])
        if w >= WEIGHT_FLOOR:
            out.append((bf, w))
    return out


def spectral_moment(f: MaassForm, basis: SpectralBasis, params: MomentParams) -> float:
    """sum_j H(t_j) omega_j L(1/2, f x u_j) lambda_j(p); forms with H(t_j) < 1e-12 are skipped."""
    basis.require_weighted()
    params = params.resolve(f)
    terms = []
    for bf, w in _window_forms(basis, params):
        vp = VWeightParams(params.A, f.spectral_parameter, bf.t, quadrature=params.quadrature)
        L = central_value_rs(f, bf.form, vp, n_max=params.n_max).value
        terms.append(w * bf.omega * L * bf.form.lam(params.p))
    return math.fsum(terms)


# ---------------------------------------------------------------------------
# diagonal and main term


def _log0(x):
    x = np.asarray(x, float)
    return np.where(x > 1, np.log(np.where(x > 1, x, 1.0)), 0.0)


def _main_integral(params: MomentParams) -> float:
    """int_R e^{-t^2} (T+tM) [log_0((T+tM)/2 sqrt p) + gamma - 1] dt."""
    T, M, p = params.T, params.M, params.p

    def g(t):
        u = T + t * M
        return math.exp(-t * t) * u * (float(_log0(u / (2 * math.sqrt(p)))) + EULER_GAMMA - 1)

    # the log_0 kink sits at t = (2 sqrt p - T)/M
    kink = (2 * math.sqrt(p) - T) / M
    cuts = sorted({-9.0, 9.0, *([kink] if -9 < kink < 9 else [])})
    q = params.quadrature
    return math.fsum(adaptive_quad(g, (a, b), q).value.real for a, b in zip(cuts, cuts[1:]))


def diagonal_term(f: MaassForm, params: MomentParams) -> float:
    """(4 M lambda_f(p) / pi sqrt p) int e^{-t^2}(T+tM)[log_0((T+tM)/2 sqrt p) + gamma - 1] dt.

    This is the leading expression of the diagonal; ``exact_diagonal`` is the
    term that enters the identity.  The normalization factor of ``params``
    multiplies both.
    """
    lam = f.lam(params.p)
    if lam == 0:
        return 0.0
    c = NORMALIZATIONS[params.normalization].delta
    return c * 4 * params.M * lam / (math.pi * math.sqrt(params.p)) * _main_integral(params)


def main_term(f: MaassForm, params: MomentParams) -> float:
    """The proposition's right-hand side; same integrand as ``diagonal_term``."""
    return diagonal_term(f, params)


@dataclass
class _Grid:
    t: np.ndarray
    w: np.ndarray
    H: np.ndarray


def _t_grid(params: MomentParams, width: float = 0.5, nodes: int = 16) -> _Grid:
    hi = params.T + params.M * math.sqrt(math.log(2.0 / 1e-17))
    npan = int(math.ceil(hi / width))
    edges = np.linspace(0.0, hi, npan + 1)
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    half = np.diff(edges) / 2
    t = (edges[:-1, None] + half[:, None] * (gx[None, :] + 1)).ravel()
    w = (half[:, None] * gw[None, :]).ravel()
    H = gaussian_pair(params.T, params.M)(t)
    keep = H > 1e-18
    return _Grid(t[keep], w[keep], H[keep])


def exact_diagonal(f: MaassForm, params: MomentParams, _V=None, _grid=None) -> float:
    """(4/pi) (lambda_f(p)/sqrt p) int_0^inf t h_p(t) tanh(pi t) dt with h_p = H V_{mu,t}(p)."""
    lam = f.lam(params.p)
    if lam == 0:
        return 0.0
    g = _grid or _t_grid(params)
    Vp = _V if _V is not None else v_matrix([params.p], g.t, f.spectral_parameter, params.A)[0]
    integral = math.fsum(g.w * g.t * g.H * Vp * np.tanh(math.pi * g.t))
    c = NORMALIZATIONS[params.normalization].delta
    return c * 4.0 / math.pi * lam / math.sqrt(params.p) * integral


# ---------------------------------------------------------------------------
# Eisenstein term


def _tau_it_table(n_max: int, t: np.ndarray) -> np.ndarray:
    """tau_{it}(n) = sum_{d | n} cos(t log(d^2/n)) for 1 <= n <= n_max (row n-1)."""
    out = np.zeros((n_max, t.size))
    logs = np.log(np.arange(1, n_max + 1, dtype=float))
    for d in range(1, n_max + 1):
        ns = np.arange(d, n_max + 1, d)
        out[ns - 1] += np.cos(np.outer(2 * logs[d - 1] - logs[ns - 1], t))
    return out


def _eisenstein_from(lam_f, Vt, g: _Grid, params: MomentParams) -> float:
    nm = NORMALIZATIONS[params.normalization]
    n_max = lam_f.size - 1
    om = eisenstein_weight(g.t, absolute=nm.absolute_omega)
    om = np.real(om) if nm.absolute_omega else om
    tau = _tau_it_table(n_max, g.t)
    tau_p = tau[params.p - 1] if params.p <= n_max else _tau_it_table(params.p, g.t)[params.p - 1]
    # (1/4pi) int_R = (1/2pi) int_0^inf Re[...]
    kern = np.real(om * tau_p) * g.w * g.H / (2 * math.pi)
    per_n = (Vt * tau) @ kern
    n = np.arange(1, n_max + 1, dtype=float)
    return nm.eisenstein * 2.0 * math.fsum(lam_f[1:] / np.sqrt(n) * per_n)


def eisenstein_term(f: MaassForm, params: MomentParams) -> float:
    """2 sum_n lambda_f(n) n^{-1/2} (1/4pi) int h_n omega (p/n)^{it} sigma(p,-2it) sigma(n,2it) dt."""
    params = params.resolve(f)
    g = _t_grid(params)
    lam_f = f.lam_array(params.n_max)
    Vt = v_matrix(np.arange(1, params.n_max + 1), g.t, f.spectral_parameter, params.A)
    return _eisenstein_from(lam_f, Vt, g, params)


# ---------------------------------------------------------------------------
# J and K terms


def kloosterman_table(a_shift: int, c: int) -> np.ndarray:
    """S(a, a_shift; c) for every residue a mod c, by one FFT of length c."""
    v = np.zeros(c, dtype=complex)
    if c == 1:
        return np.ones(1)
    for x in range(1, c):
        if math.gcd(x, c) == 1:
            v[x] = np.exp(2j * math.pi * ((a_shift * pow(x, -1, c)) % c) / c)
    return (np.fft.ifft(v) * c).real


@dataclass
class _ZGrid:
    z: np.ndarray
    delta: float
    kmax: int
    cosh: np.ndarray
    sinh: np.ndarray


def _z_grid(params: MomentParams, t_hi: float) -> _ZGrid:
    # the smooth part of G_n decays like exp(-M^2 z^2)
    Z = max(1.0, math.sqrt(40.0) / params.M)
    x_max = 4 * math.pi * math.sqrt(params.n_max * params.p)
    delta = 2 * math.pi / (1.3 * (x_max * math.cosh(Z) + 2 * t_hi) + 40.0)
    kmax = int(math.ceil(Z / delta)) + 1
    z = delta * np.arange(kmax)
    return _ZGrid(z, delta, kmax, np.cosh(z), np.sinh(z))


def _strides(x: np.ndarray, zg: _ZGrid, t_hi: float) -> np.ndarray:
    Z = zg.z[-1]
    need = 2 * math.pi / (1.3 * (x * math.cosh(Z) + 2 * t_hi) + 40.0)
    return np.maximum(1, np.floor(need / zg.delta)).astype(np.int64)


def _bessel_sums(lam_f, Vt, g: _Grid, params: MomentParams):
    """Per-n inner sums of the J and K terms (before the lambda_f(n)/sqrt n weights)."""
    n_max, c_max, p = params.n_max, params.c_max, params.p
    t_hi = float(g.t.max())
    zg = _z_grid(params, t_hi)
    W = g.w * g.t * g.H * np.tanh(math.pi * g.t)
    cs = np.arange(1, c_max + 1)
    # padded residue tables: row c-1 holds S(a, +-p; c) for a mod c
    tab_plus = np.zeros((c_max, c_max))
    tab_minus = np.zeros((c_max, c_max))
    for c in cs:
        tab_plus[c - 1, :c] = kloosterman_table(p, int(c))
        tab_minus[c - 1, :c] = kloosterman_table(-p, int(c))
    Cz = np.cos(2 * np.outer(zg.z, g.t)) * zg.delta
    km = np.full(cs.size, zg.kmax, dtype=np.int64)
    Jn = np.zeros(n_max)
    Kn = np.zeros(n_max)
    tail = np.zeros(n_max)

    def block(lo: int, hi: int):
        G = Cz @ (W[:, None] * Vt[lo:hi].T)  # (kmax, block)
        ns = np.arange(lo + 1, hi + 1)
        res = ns[None, :] % cs[:, None]
        Sp = tab_plus[cs[:, None] - 1, res]
        Sm = tab_minus[cs[:, None] - 1, res]
        for j, n in enumerate(ns):
            if lam_f[n] == 0:
                continue
            x = 4 * math.pi * math.sqrt(n * p) / cs
            st = _strides(x, zg, t_hi)
            col = np.ascontiguousarray(G[:, j])
            hp = 8.0 / math.pi * kernels.osc_sum(zg.cosh, col, x, st, km)
            hm = 4.0 / math.pi * kernels.osc_sum(zg.sinh, col, x, st, km)
            Jn[n - 1] = math.fsum(Sp[:, j] * hp / cs)
            Kn[n - 1] = math.fsum(Sm[:, j] * hm / cs)
            tail[n - 1] = abs(col[-1]) / zg.delta * zg.z[-1]

    bs = 256
    blocks = [(lo, min(n_max, lo + bs)) for lo in range(0, n_max, bs)]
    if params.workers > 1:
        with ThreadPoolExecutor(params.workers) as ex:
            list(ex.map(lambda b: block(*b), blocks))
    else:
        for b in blocks:
            block(*b)
    return Jn, Kn, {"z_max": float(zg.z[-1]), "z_nodes": int(zg.kmax), "z_tail_max": float(tail.max())}


def _jk_from(lam_f, Vt, g, params):
    nm = NORMALIZATIONS[params.normalization]
    Jn, Kn, meta = _bessel_sums(lam_f, Vt, g, params)
    n = np.arange(1, params.n_max + 1, dtype=float)
    wts = lam_f[1:] / np.sqrt(n)
    J = nm.plus * math.fsum(wts * Jn)
    K = nm.minus * math.fsum(wts * Kn)
    return J, K, meta


def jk_terms(f: MaassForm, params: MomentParams) -> tuple[float, float]:
    """(J, K) from one shared pass over n and c."""
    params = params.resolve(f)
    g = _t_grid(params)
    lam_f = f.lam_array(params.n_max)
    Vt = v_matrix(np.arange(1, params.n_max + 1), g.t, f.spectral_parameter, params.A)
    J, K, _ = _jk_from(lam_f, Vt, g, params)
    return J, K


def j_term(f: MaassForm, params: MomentParams) -> float:
    """sum_n lambda_f(n) n^{-1/2} sum_{c <= c_max} S(n,p;c)/c h_n^+(4 pi sqrt(np)/c)."""
    params = params.resolve(f)
    g = _t_grid(params)
    lam_f = f.lam_array(params.n_max)
    Vt = v_matrix(np.arange(1, params.n_max + 1), g.t, f.spectral_parameter, params.A)
    return _jk_from(lam_f, Vt, g, params)[0]


def k_term(f: MaassForm, params: MomentParams) -> float:
    """sum_n lambda_f(n) n^{-1/2} sum_{c <= c_max} S(-n,p;c)/c h_n^-(4 pi sqrt(np)/c)."""
    params = params.resolve(f)
    g = _t_grid(params)
    lam_f = f.lam_array(params.n_max)
    Vt = v_matrix(np.arange(1, params.n_max + 1), g.t, f.spectral_parameter, params.A)
    return _jk_from(lam_f, Vt, g, params)[1]


# ---------------------------------------------------------------------------


def exp_sum_partial(f: MaassForm, alpha: float, x: int) -> float:
    """sum_{n <= x} lambda_f(n) cos(2 pi alpha n), the real part of sum lambda_f(n) e(alpha n)."""
    x = int(x)
    if x < 1:
        return 0.0
    lam = f.lam_array(x)[1:]
    n = np.arange(1, x + 1, dtype=float)
    frac = (alpha * n) % 1.0
    return math.fsum(lam * np.cos(2 * math.pi * frac))


def moment_report(f: MaassForm, basis: SpectralBasis, params: MomentParams) -> MomentBreakdown:
    """Spectral side, the four geometric terms and the main term for one (T, M, p)."""
    basis.require_weighted()
    params = params.resolve(f)
    spectral = spectral_moment(f, basis, params)
    g = _t_grid(params)
    lam_f = f.lam_array(params.n_max)
    ns = np.arange(1, params.n_max + 1)
    Vt = v_matrix(ns, g.t, f.spectral_parameter, params.A)
    D = exact_diagonal(f, params, _V=Vt[params.p - 1], _grid=g)
    E = _eisenstein_from(lam_f, Vt, g, params)
    J, K, meta = _jk_from(lam_f, Vt, g, params)
    main = main_term(f, params)
    trunc = {"n_max": params.n_max, "c_max": params.c_max, "A": params.A,
             "normalization": params.normalization, "t_nodes": int(g.t.size)}
    trunc.update(meta)
    log.info("moment T=%g M=%g p=%d: Xi=%.6g D=%.6g E=%.3g J=%.3g K=%.3g",
             params.T, params.M, params.p, spectral, D, E, J, K)
    return MomentBreakdown(params.T, params.M, params.p, spectral, D, E, J, K, main, trunc)

"""Maass form data: the maass-v1 record format, Hecke extension and checks.

Record format (line oriented, ``#`` starts a comment, records separated by
blank lines)::

    format maass-v1
    parity even
    spectral_parameter 13.779751351890742
    omega 21.8986                 (optional; harmonic weight)
    coeff_tolerance 1e-9          (optional; default 1e-6)
    horizon 66.0                  (optional, file level; completeness bound)
    coeff 1 1.0
    coeff 2 1.5493044779412757
    ...

``horizon`` is an extension of the header set: it records the completeness
bound t_max of a spectral basis.  Without it the largest t_j is used.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .arith import divisor_count, factorize, is_prime, primes_up_to
from .errors import GapError, ParseError, ValidationError

__all__ = [
    "MaassForm",
    "BasisForm",
    "SpectralBasis",
    "hecke_extend",
    "local_params",
    "hecke_check",
    "coefficient_bound_ratio",
    "parse_basis",
    "load_basis",
    "serialize_basis",
    "save_basis",
    "DEFAULT_COEFF_TOLERANCE",
    "THETA_KS",
]

DEFAULT_COEFF_TOLERANCE = 1e-6
THETA_KS = 7.0 / 64.0
FORMAT_TAG = "maass-v1"


@dataclass(frozen=True, eq=False)
class MaassForm:
    """An even Hecke-Maass cusp form for SL(2, Z) given by its Hecke eigenvalues.

    ``coefficients`` maps n to lambda(n) for the ingested n.  Any other
    lambda(n) is produced by multiplicativity from the ingested primes.
    """

    spectral_parameter: float
    coefficients: Mapping[int, float]
    parity: str = "even"
    omega: float | None = None
    coeff_tolerance: float = DEFAULT_COEFF_TOLERANCE
    label: str = ""
    epsilon: int = 1  # root number, +1 for even level-one forms

    def __post_init__(self):
        if self.parity not in ("even", "odd"):
            raise ValidationError(f"parity must be 'even' or 'odd', got {self.parity!r}")
        coeffs = {int(n): float(v) for n, v in dict(self.coefficients).items()}
        if any(n < 1 for n in coeffs):
            raise ValidationError("coefficient indices must be >= 1")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def from_primes(cls, spectral_parameter: float, prime_values: Mapping[int, float], **kw) -> "MaassForm":
        """Form with lambda(1) = 1 and the given prime eigenvalues."""
        coeffs = {1: 1.0}
        coeffs.update({int(p): float(v) for p, v in prime_values.items()})
        return cls(spectral_parameter, coeffs, **kw)

    @property
    def mu(self) -> float:
        return self.spectral_parameter

    @property
    def source(self) -> str:
        return "ingested"

    @cached_property
    def _ingested(self) -> tuple[np.ndarray, np.ndarray]:
        ns = np.array(sorted(self.coefficients), dtype=np.int64)
        vals = np.array([self.coefficients[int(n)] for n in ns])
        return ns, vals

    @cached_property
    def contiguous_limit(self) -> int:
        """Largest N with every 1 <= n <= N ingested."""
        ns = self._ingested[0]
        if ns.size == 0 or ns[0] != 1:
            return 0
        gaps = np.nonzero(ns != np.arange(1, ns.size + 1))[0]
        return int(ns[gaps[0] - 1]) if gaps.size else int(ns[-1])

    @cached_property
    def prime_limit(self) -> int:
        """Largest P such that lambda(p) is ingested for every prime p <= P."""
        have = self.coefficients
        last = 1
        ns = self._ingested[0]
        top = int(ns[-1]) if ns.size else 1
        for p in primes_up_to(max(top, 2)):
            if p not in have:
                return max(last, p - 1)
            last = p
        q = top + 1
        while not is_prime(q):
            q += 1
        return q - 1

    @property
    def n_max(self) -> int:
        """Largest N for which lambda(1..N) is available (ingested or extended)."""
        return max(self.contiguous_limit, self.prime_limit)

    def _prime_power_table(self, p: int, kmax: int) -> np.ndarray:
        lp = self.coefficients[p]
        out = np.empty(kmax + 1)
        out[0] = 1.0
        if kmax >= 1:
            out[1] = lp
        for k in range(1, kmax):
            out[k + 1] = lp * out[k] - out[k - 1]
        return out

    def lam_array(self, N: int) -> np.ndarray:
        """Array a with a[n] = lambda(n) for 1 <= n <= N (a[0] = 0)."""
        N = int(N)
        cache = self.__dict__.setdefault("_dense", {})
        best = cache.get("arr")
        if best is not None and len(best) > N:
            return best[: N + 1]
        if N > self.n_max:
            raise GapError(
                f"form {self.label or self.spectral_parameter}: coefficients available to n = "
                f"{self.n_max}, {N} requested")
        arr = np.ones(N + 1)
        arr[0] = 0.0
        if N > self.contiguous_limit:
            for p in primes_up_to(N):
                kmax = int(math.log(N) / math.log(p) + 1e-9)
                table = self._prime_power_table(p, kmax)
                f = np.ones(N + 1)
                pk = p
                for k in range(1, kmax + 1):
                    f[pk::pk] = table[k]
                    pk *= p
                arr[p::p] *= f[p::p]
        ns, vals = self._ingested
        sel = ns <= N
        arr[ns[sel]] = vals[sel]
        cache["arr"] = arr
        return arr

    def lam(self, n: int) -> float:
        n = int(n)
        if n in self.coefficients:
            return self.coefficients[n]
        return hecke_extend(self, n)


@dataclass(frozen=True)
class BasisForm:
    form: MaassForm
    t: float
    omega: float

    def __post_init__(self):
        if not (self.omega > 0):
            raise ValidationError(f"harmonic weight must be positive (t={self.t})")


@dataclass(frozen=True)
class SpectralBasis:
    """Forms sorted by t_j; ``t_max`` is the completeness horizon."""

    forms: tuple[MaassForm, ...]
    t_max: float
    weighted: bool = True
    source: str = ""

    def __post_init__(self):
        ts = [f.spectral_parameter for f in self.forms]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValidationError("spectral parameters must be strictly increasing")

    def __len__(self):
        return len(self.forms)

    def __iter__(self):
        return iter(self.forms)

    def __getitem__(self, i):
        return self.forms[i]

    @property
    def t(self) -> np.ndarray:
        return np.array([f.spectral_parameter for f in self.forms])

    @property
    def omega(self) -> np.ndarray:
        if not self.weighted:
            raise ValidationError("basis is unweighted (omega missing); trace-formula operations need omega_j")
        return np.array([f.omega for f in self.forms])

    def basis_forms(self) -> list[BasisForm]:
        return [BasisForm(f, f.spectral_parameter, f.omega) for f in self.forms]

    def require_weighted(self) -> None:
        if not self.weighted:
            raise ValidationError("basis is unweighted (omega missing); trace-formula operations need omega_j")


def local_params(lambda_p: float) -> tuple[complex, complex]:
    """Roots (alpha_1, alpha_2) of x^2 - lambda_p x + 1, so alpha_1 alpha_2 = 1."""
    lp = complex(lambda_p)
    disc = cmath.sqrt(lp * lp - 4.0)
    a1 = (lp + disc) / 2.0
    a2 = (lp - disc) / 2.0
    return a1, a2


def hecke_extend(form: MaassForm, n: int) -> float:
    """lambda(n) from the ingested prime eigenvalues.

    Coprime factors multiply; prime powers follow
    lambda(p^{k+1}) = lambda(p) lambda(p^k) - lambda(p^{k-1}).
    """
    n = int(n)
    if n < 1:
        raise ValidationError(f"hecke_extend needs n >= 1, got {n}")
    out = 1.0
    for p, e in factorize(n):
        if p not in form.coefficients:
            raise GapError(f"lambda({p}) is not available; cannot extend to n = {n}")
        out *= form._prime_power_table(p, e)[e]
    return out


def hecke_check(form: MaassForm, n_max: int | None = None) -> float:
    """max |lambda(m) lambda(n) - sum_{d | (m, n)} lambda(mn/d^2)| over mn <= n_max.

    Only ingested values are used; ``n_max`` defaults to the largest
    contiguous ingested index.
    """
    N = form.contiguous_limit if n_max is None else int(n_max)
    if N > form.contiguous_limit:
        raise GapError(f"hecke_check needs ingested coefficients to {N}")
    if N < 1:
        return 0.0
    lam = np.zeros(N + 1)
    for n in range(1, N + 1):
        lam[n] = form.coefficients[n]
    worst = abs(lam[1] - 1.0)
    for m in range(2, N + 1):
        top = N // m
        if top < m:
            break
        for n in range(m, top + 1):
            g = math.gcd(m, n)
            rhs = lam[m * n]
            if g > 1:
                rhs = sum(lam[m * n // (d * d)] for d in range(1, g + 1) if g % d == 0)
            worst = max(worst, abs(lam[m] * lam[n] - rhs))
    return float(worst)


def coefficient_bound_ratio(form: MaassForm, theta: float = THETA_KS + 0.01, n_max: int | None = None) -> float:
    """max over ingested n of |lambda(n)| / (tau(n) n^theta)."""
    worst = 0.0
    for n, v in form.coefficients.items():
        if n_max is not None and n > n_max:
            continue
        worst = max(worst, abs(v) / (divisor_count(n) * n ** theta))
    return worst


# ---------------------------------------------------------------------------
# record format


_HEADER_KEYS = {"format", "parity", "spectral_parameter", "omega", "coeff_tolerance", "horizon"}


def _parse_float(tok: str, lineno: int, path) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"not a decimal number: {tok!r}", lineno, path) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite value: {tok!r}", lineno, path)
    return v


def _records(lines: Iterable[str], path):
    rec: list[tuple[int, list[str]]] = []
    for lineno, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            # blank lines separate records; comment-only lines do not
            if not raw.strip() and rec:
                yield rec
                rec = []
            continue
        rec.append((lineno, text.split()))
    if rec:
        yield rec


def _build_form(rec, path) -> tuple[MaassForm, float | None]:
    head: dict[str, float | str] = {}
    coeffs: dict[int, float] = {}
    first = rec[0][0]
    for lineno, toks in rec:
        key = toks[0]
        if key == "coeff":
            if len(toks) != 3:
                raise ParseError("expected 'coeff <n> <value>'", lineno, path)
            try:
                n = int(toks[1])
            except ValueError:
                raise ParseError(f"coefficient index is not an integer: {toks[1]!r}", lineno, path) from None
            if n < 1:
                raise ParseError(f"coefficient index must be >= 1, got {n}", lineno, path)
            if n in coeffs:
                raise ParseError(f"duplicate coefficient {n}", lineno, path)
            coeffs[n] = _parse_float(toks[2], lineno, path)
            continue
        if key not in _HEADER_KEYS:
            raise ParseError(f"unknown key {key!r}", lineno, path)
        if len(toks) != 2:
            raise ParseError(f"expected '{key} <value>'", lineno, path)
        if key in head:
            raise ParseError(f"duplicate header {key!r}", lineno, path)
        if coeffs:
            raise ParseError(f"header {key!r} after coefficient lines", lineno, path)
        if key in ("format", "parity"):
            head[key] = toks[1]
        else:
            head[key] = _parse_float(toks[1], lineno, path)
    if head.get("format") != FORMAT_TAG:
        raise ParseError(f"record must start with 'format {FORMAT_TAG}'", first, path)
    if "parity" not in head:
        raise ParseError("missing 'parity'", first, path)
    if "spectral_parameter" not in head:
        raise ParseError("missing 'spectral_parameter'", first, path)
    parity = str(head["parity"])
    mu = float(head["spectral_parameter"])
    if parity == "odd":
        raise ValidationError(
            f"{path or '<input>'}:{first}: odd form (spectral_parameter {mu}) rejected; "
            "only even forms are supported")
    if parity != "even":
        raise ParseError(f"parity must be even or odd, got {parity!r}", first, path)
    if 1 not in coeffs:
        raise ValidationError(f"form spectral_parameter={mu}: lambda(1) missing (normalization)")
    tol = float(head.get("coeff_tolerance", DEFAULT_COEFF_TOLERANCE))
    if tol <= 0:
        raise ValidationError(f"form spectral_parameter={mu}: coeff_tolerance must be positive")
    if abs(coeffs[1] - 1.0) > tol:
        raise ValidationError(
            f"form spectral_parameter={mu}: normalization error, lambda(1) = {coeffs[1]} != 1")
    omega = head.get("omega")
    if omega is not None and not omega > 0:
        raise ValidationError(f"form spectral_parameter={mu}: omega must be positive")
    form = MaassForm(mu, coeffs, parity=parity, omega=None if omega is None else float(omega),
                     coeff_tolerance=tol, label=f"t={mu:.6f}")
    horizon = head.get("horizon")
    return form, (None if horizon is None else float(horizon))


def parse_basis(text: str, path: str | None = None, validate: bool = True) -> SpectralBasis:
    """Parse maass-v1 records into a validated :class:`SpectralBasis`."""
    forms: list[MaassForm] = []
    horizon = None
    for rec in _records(text.splitlines(), path):
        f, h = _build_form(rec, path)
        forms.append(f)
        if h is not None:
            horizon = h if horizon is None else max(horizon, h)
    if not forms:
        raise ValidationError(f"{path or '<input>'}: no forms")
    forms.sort(key=lambda f: f.spectral_parameter)
    for a, b in zip(forms, forms[1:]):
        if b.spectral_parameter <= a.spectral_parameter:
            raise ValidationError(f"duplicate spectral parameter {a.spectral_parameter}")
    if validate:
        for f in forms:
            v = hecke_check(f)
            if v > f.coeff_tolerance:
                raise ValidationError(
                    f"form {f.label}: Hecke relation violated by {v:.3g} "
                    f"(tolerance {f.coeff_tolerance:.3g})")
            ratio = coefficient_bound_ratio(f, THETA_KS)
            if ratio > 1.0 + f.coeff_tolerance:
                raise ValidationError(
                    f"form {f.label}: |lambda(n)| exceeds tau(n) n^(7/64) (ratio {ratio:.4f})")
    t_top = forms[-1].spectral_parameter
    t_max = t_top if horizon is None else max(horizon, t_top)
    weighted = all(f.omega is not None for f in forms)
    return SpectralBasis(tuple(forms), t_max, weighted, source=str(path or ""))


def load_basis(path) -> SpectralBasis:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"basis file not found: {path}")
    return parse_basis(path.read_text(), str(path))


def serialize_basis(basis: SpectralBasis, include_horizon: bool = True) -> str:
    """Text in the maass-v1 format; floats are written with repr (round-trip exact)."""
    out: list[str] = []
    for i, f in enumerate(basis.forms):
        if i:
            out.append("")
        out.append(f"format {FORMAT_TAG}")
        out.append(f"parity {f.parity}")
        out.append(f"spectral_parameter {f.spectral_parameter!r}")
        if f.omega is not None:
            out.append(f"omega {f.omega!r}")
        out.append(f"coeff_tolerance {f.coeff_tolerance!r}")
        if i == 0 and include_horizon:
            out.append(f"horizon {basis.t_max!r}")
        for n in sorted(f.coefficients):
            out.append(f"coeff {n} {f.coefficients[n]!r}")
    return "\n".join(out) + "\n"


def save_basis(basis: SpectralBasis, path) -> None:
    Path(path).write_text(serialize_basis(basis))

"""Produce the even level-one Maass form fixtures (maass-v1 text format).

This is a data-production tool, not part of the library: the library only
ingests eigendata.  Steps:

1. Hejhal's method (two horocycle heights) scanned over r, with candidates
   from sign changes and local minima of the coefficient mismatch, refined
   and accepted on Hecke checks.
2. Coefficients up to ``--nmax`` from banded horocycle cosine transforms,
   sampling the form at pulled-back points through the first expansion.
3. Petersson norms: Parseval above y = 1, Gauss-Legendre on the rest of the
   fundamental domain; omega_j = 4 pi / (||u_j||^2 cosh(pi t_j)) where
   u_j = sqrt(y) sum_{n != 0} lambda(n) K_{it}(2 pi |n| y) e(nx).

Usage:  python tools/generate_basis.py --rmax 66 --out fixtures/basis.mv1
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import time
from pathlib import Path

import numpy as np
from scipy.optimize import brentq, minimize_scalar

log = logging.getLogger("generate_basis")

Y1, Y2 = 0.5, 0.43


def ks(r: float, x: np.ndarray) -> np.ndarray:
    """e^{pi r/2} K_{ir}(x) for an array of x > 0 (deformed-contour trapezoid)."""
    x = np.atleast_1d(np.asarray(x, float))
    out = np.empty(x.shape)
    flat, o = x.ravel(), out.ravel()
    order = np.argsort(flat)
    for chunk in np.array_split(order, max(1, len(order) // 256)):
        xc = flat[chunk]
        s = max(r, 1.0)
        eps = 0.05
        U = math.acosh(max(1.0, (60.0 + r * math.pi / 2) / (xc.min() * math.cos(eps)))) + 0.5
        h = min(0.05, 0.2 / math.sqrt(1.0 + r))
        u = np.arange(-U, U + h / 2, h)
        g = (xc[:, None] * np.cosh(u)[None, :] - r) / s
        th = np.tanh(g)
        amp = math.pi / 2 - eps
        alpha = math.pi / 2 - amp * th
        dalpha = -amp * (1 - th ** 2) * xc[:, None] * np.sinh(u)[None, :] / s
        w = u[None, :] + 1j * alpha
        vals = np.exp(-xc[:, None] * np.cosh(w) + 1j * r * w + r * math.pi / 2) * (1 + 1j * dalpha)
        o[chunk] = 0.5 * h * vals.sum(axis=1).real
    return out


def pullback(x, y):
    x = np.array(x, float)
    y = np.array(y, float)
    for _ in range(500):
        x = x - np.round(x)
        r2 = x * x + y * y
        m = r2 < 1 - 1e-15
        if not m.any():
            break
        x[m], y[m] = -x[m] / r2[m], y[m] / r2[m]
    return x, y


def hejhal(r: float, Y: float) -> np.ndarray:
    """Coefficients c(1..M0) with c(1) = 1 of the cosine expansion at spectral parameter r."""
    M0 = int(math.ceil((r + 38) / (2 * math.pi * Y)))
    Q = 2 * M0
    m = np.arange(1, Q + 1)
    xm = (m - 0.5) / (2 * Q)
    xs, ys = pullback(xm, np.full(Q, Y))
    k = np.arange(1, M0 + 1)
    Kstar = ks(r, 2 * np.pi * np.outer(ys, k))
    Bstar = np.sqrt(ys)[:, None] * Kstar * np.cos(2 * np.pi * np.outer(xs, k))
    C = np.cos(2 * np.pi * np.outer(k, xm))
    V = -(2.0 / Q) * C @ Bstar
    V[np.diag_indices(M0)] += math.sqrt(Y) * ks(r, 2 * np.pi * k * Y)
    c = np.linalg.solve(V[1:, 1:], -V[1:, 0])
    return np.concatenate([[1.0], c])


def mismatch(r: float) -> np.ndarray:
    a, b = hejhal(r, Y1), hejhal(r, Y2)
    return np.array([a[1] - b[1], a[2] - b[2], a[4] - b[4]])


def hecke_defect(r: float) -> float:
    a = hejhal(r, Y2)
    return max(abs(a[1] * a[2] - a[5]), abs(a[1] ** 2 - 1 - a[3]), abs(a[1] * a[3] - a[1] - a[7]))


def scan(rlo: float, rhi: float, step: float, accept: float = 1e-9) -> list[float]:
    rs = np.arange(rlo, rhi + step / 2, step)
    D = np.array([mismatch(r) for r in rs])
    norm = np.linalg.norm(D, axis=1)
    cand = set()
    for i in range(len(rs) - 1):
        for j in range(2):
            if np.sign(D[i, j]) != np.sign(D[i + 1, j]) and max(abs(D[i, j]), abs(D[i + 1, j])) < 20:
                cand.add(i)
    for i in range(1, len(rs) - 1):
        if norm[i] <= norm[i - 1] and norm[i] <= norm[i + 1] and norm[i] < 5.0:
            cand.add(i - 1)
            cand.add(i)
    roots: list[float] = []

    def consider(r0):
        if r0 is None or any(abs(r0 - q) < 1e-7 for q in roots):
            return
        d = np.abs(mismatch(r0)).max()
        hd = hecke_defect(r0)
        if d < accept and hd < accept:
            roots.append(r0)
            log.info("eigenvalue r=%.12f mismatch=%.1e hecke=%.1e", r0, d, hd)
        elif d < 1e-4:
            log.warning("rejected candidate r=%.12f mismatch=%.1e hecke=%.1e", r0, d, hd)

    for i in sorted(cand):
        lo, hi = rs[i], rs[i + 1]
        found = []
        for j in range(2):
            if np.sign(D[i, j]) != np.sign(D[i + 1, j]):
                try:
                    found.append(brentq(lambda r: mismatch(r)[j], lo, hi, xtol=1e-14, rtol=1e-15))
                except ValueError:
                    pass
        res = minimize_scalar(lambda r: np.linalg.norm(mismatch(r)), bounds=(lo - step, hi + step),
                              method="bounded", options={"xatol": 1e-13})
        found.append(res.x)
        for r0 in found:
            # polish the minimiser with a root solve on the first mismatch
            try:
                r1 = brentq(lambda r: mismatch(r)[0], r0 - 1e-6, r0 + 1e-6, xtol=1e-14, rtol=1e-15)
            except ValueError:
                r1 = r0
            consider(r1)
            # a second eigenvalue hiding inside the same step
            for side in ((lo - step, r1 - 1e-5), (r1 + 1e-5, hi + step)):
                if side[1] - side[0] > 1e-6:
                    res2 = minimize_scalar(lambda r: np.linalg.norm(mismatch(r)), bounds=side,
                                           method="bounded", options={"xatol": 1e-13})
                    if np.linalg.norm(mismatch(res2.x)) < 1e-3:
                        try:
                            r2 = brentq(lambda r: mismatch(r)[0], res2.x - 1e-6, res2.x + 1e-6,
                                        xtol=1e-14, rtol=1e-15)
                        except ValueError:
                            r2 = res2.x
                        consider(r2)
    return sorted(roots)


class KTable:
    """Piecewise Chebyshev interpolant of e^{pi r/2} K_{ir}(x) on [x0, x1]."""

    def __init__(self, r: float, x0: float, x1: float, width: float = 0.5, deg: int = 31):
        self.r, self.x0, self.w = r, x0, width
        self.n = int(math.ceil((x1 - x0) / width))
        nodes = np.cos(np.pi * (np.arange(deg + 1) + 0.5) / (deg + 1))
        xs = x0 + width * (np.arange(self.n)[:, None] + 0.5 * (nodes[None, :] + 1))
        vals = ks(r, xs.ravel()).reshape(xs.shape)
        V = np.polynomial.chebyshev.chebvander(nodes, deg)
        self.coef = np.linalg.solve(V, vals.T).T
        self.x1 = x0 + self.n * width

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, float)
        out = np.zeros(x.shape)
        inside = x < self.x1
        xi = x[inside]
        if np.any(xi < self.x0):
            raise ValueError("KTable evaluated below its range")
        idx = np.minimum(((xi - self.x0) / self.w).astype(int), self.n - 1)
        s = 2 * (xi - self.x0 - idx * self.w) / self.w - 1
        cf = self.coef[idx]
        b1 = np.zeros(len(xi))
        b2 = np.zeros(len(xi))
        for k in range(cf.shape[1] - 1, 0, -1):
            b1, b2 = 2 * s * b1 - b2 + cf[:, k], b1
        out[inside] = s * b1 - b2 + cf[:, 0]
        return out


def expansion(c: np.ndarray, kt: KTable, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """sum_k c_k sqrt(y) Ks(2 pi k y) cos(2 pi k x) for points in the fundamental domain."""
    out = np.zeros(x.shape)
    for k in range(1, len(c) + 1):
        arg = 2 * np.pi * k * y
        if arg.min() > kt.x1:
            break
        out += c[k - 1] * kt(arg) * np.cos(2 * np.pi * k * x)
    return out * np.sqrt(y)


def coefficients(r: float, nmax: int, kt: KTable, c1: np.ndarray):
    """lambda(n), n <= nmax, from banded horocycle transforms; returns values and a consistency estimate."""
    lam = np.full(nmax + 1, np.nan)
    lam[1 : min(len(c1), 8) + 1] = c1[: min(len(c1), 8)]
    disagree = 0.0
    n1 = 2
    while n1 <= nmax:
        Y = max(r, 6.0) / (2 * np.pi * n1)
        n2 = min(nmax, int((max(r, 6.0) + 10) / (2 * np.pi * Y)))
        if n2 < n1:
            n2 = n1
        Q = max(32, 2 * n2 + 8)
        m = np.arange(1, Q + 1)
        xm = (m - 0.5) / (2 * Q)
        xs, ys = pullback(xm, np.full(Q, Y))
        vals = expansion(c1, kt, xs, ys)
        # overlap downwards: the previous band covered n1-3..n1-1 at larger Y
        nn = np.arange(max(2, n1 - 3), n2 + 1)
        # DCT-II projection onto cos(2 pi n x_m)
        proj = (2.0 / Q) * np.cos(2 * np.pi * np.outer(nn, xm)) @ vals
        kraw = ks(r, 2 * np.pi * nn * Y)
        est = proj / (kraw * math.sqrt(Y))
        big = np.abs(kraw) >= 0.2 * np.abs(kraw[nn >= n1]).max()
        for n, v, ok in zip(nn, est, big):
            if not np.isnan(lam[n]):
                if ok:
                    disagree = max(disagree, abs(lam[n] - v))
            else:
                lam[n] = v
        n1 = n2 + 1
    # seed values from the first solve are refined by the transform where available
    return lam, disagree


def norm_squared(r: float, c1: np.ndarray, kt: KTable) -> float:
    """Petersson norm of sum_{n>=1} c(n) sqrt(y) Ks(2 pi n y) cos(2 pi n x) over the fundamental domain."""
    # y >= 1: Parseval; int_{-1/2}^{1/2} cos^2 = 1/2
    total = 0.0
    gx, gw = np.polynomial.legendre.leggauss(400)
    for k in range(1, len(c1) + 1):
        if 2 * np.pi * k > kt.x1:
            break
        # int_1^inf Ks(2 pi k y)^2 dy / y, substitute y = 1 + s, s in [0, S]
        S = (kt.x1 / (2 * np.pi * k)) - 1.0
        yy = 1.0 + S * (gx + 1) / 2
        ww = gw * S / 2
        total += 0.5 * c1[k - 1] ** 2 * np.sum(ww * kt(2 * np.pi * k * yy) ** 2 / yy)
    # region |x| <= 1/2, sqrt(1 - x^2) <= y <= 1, using evenness in x
    nx, ny = 160, 48
    ax, aw = np.polynomial.legendre.leggauss(nx)
    bx, bw = np.polynomial.legendre.leggauss(ny)
    xq = 0.25 * (ax + 1)
    wx = 0.25 * aw
    lo = np.sqrt(1 - xq ** 2)
    Y = lo[:, None] + (1 - lo[:, None]) * (bx[None, :] + 1) / 2
    W = wx[:, None] * (1 - lo[:, None]) / 2 * bw[None, :]
    X = np.broadcast_to(xq[:, None], Y.shape)
    u = expansion(c1, kt, X.ravel(), Y.ravel()).reshape(Y.shape)
    total += 2 * np.sum(W * u ** 2 / Y ** 2)
    return total


def omega(r: float, nrm: float) -> float:
    # u_j = 2 e^{-pi r/2} * (cosine expansion in scaled K), so ||u_j||^2 = 4 e^{-pi r} nrm
    return 4 * math.pi / (4 * nrm * math.exp(-math.pi * r) * math.cosh(math.pi * r))


def primes_up_to(P: int) -> np.ndarray:
    s = np.ones(P + 1, bool)
    s[:2] = False
    for p in range(2, int(P ** 0.5) + 1):
        if s[p]:
            s[p * p :: p] = False
    return np.nonzero(s)[0]


def build_form(r: float, nmax: int, nall: int) -> dict:
    c1 = hejhal(r, Y2)
    kt = KTable(r, 2 * np.pi * 0.86 * 0.999 * min(1.0, 1.0), max(r, 6.0) + 60.0)
    # the transform needs Ks at 2 pi n Y >= r; extend the table down to the fundamental-domain floor
    lam, disagree = coefficients(r, nmax, kt, c1)
    nrm = norm_squared(r, c1, kt)
    keep = sorted(set(range(1, nall + 1)) | set(int(p) for p in primes_up_to(nmax)))
    hecke = 0.0
    for m in range(2, 11):
        for n in range(2, nall // m + 1):
            g = math.gcd(m, n)
            rhs = sum(lam[m * n // (d * d)] for d in range(1, g + 1) if g % d == 0)
            hecke = max(hecke, abs(lam[m] * lam[n] - rhs))
    return {
        "r": r,
        "omega": omega(r, nrm),
        "coeffs": {n: float(lam[n]) for n in keep},
        "hecke": hecke,
        "disagree": disagree,
    }


def write_mv1(path: Path, forms: list[dict], horizon: float, note: str) -> None:
    lines = [f"# {note}", f"# even forms for SL(2,Z); horizon = completeness bound on t_j"]
    for i, f in enumerate(forms):
        if i:
            lines.append("")
        lines.append("format maass-v1")
        lines.append("parity even")
        lines.append(f"spectral_parameter {f['r']!r}")
        lines.append(f"omega {f['omega']!r}")
        tol = max(1e-9, 10 * max(f["hecke"], f["disagree"]))
        lines.append(f"coeff_tolerance {tol:.3g}")
        if i == 0:
            lines.append(f"horizon {horizon!r}")
        for n, v in sorted(f["coeffs"].items()):
            lines.append(f"coeff {n} {v!r}")
    path.write_text("\n".join(lines) + "\n")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rmin", type=float, default=5.0)
    ap.add_argument("--rmax", type=float, default=66.0)
    ap.add_argument("--step", type=float, default=0.005)
    ap.add_argument("--nmax", type=int, default=10000)
    ap.add_argument("--nall", type=int, default=100)
    ap.add_argument("--work", type=Path, default=Path("build/basis_work"))
    ap.add_argument("--out", type=Path, default=Path("fixtures/basis.mv1"))
    ap.add_argument("--pair", type=Path, default=Path("fixtures/pair.mv1"))
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    args.work.mkdir(parents=True, exist_ok=True)

    roots_file = args.work / "roots.json"
    if roots_file.exists():
        roots = json.loads(roots_file.read_text())
    else:
        roots = []
        edges = np.arange(args.rmin, args.rmax, 2.0)
        for lo in edges:
            hi = min(lo + 2.0, args.rmax)
            part = args.work / f"roots_{lo:.1f}.json"
            if part.exists():
                got = json.loads(part.read_text())
            else:
                t0 = time.time()
                got = scan(lo, hi, args.step)
                part.write_text(json.dumps(got))
                log.info("scanned [%.1f, %.1f]: %d roots in %.0fs", lo, hi, len(got), time.time() - t0)
            roots.extend(got)
        roots = sorted(set(round(r, 11) for r in roots))
        roots_file.write_text(json.dumps(roots))
    log.info("%d eigenvalues below %.1f", len(roots), args.rmax)

    forms = []
    for r in roots:
        cache = args.work / f"form_{r:.9f}.json"
        if cache.exists():
            f = json.loads(cache.read_text())
            f["coeffs"] = {int(k): v for k, v in f["coeffs"].items()}
        else:
            t0 = time.time()
            f = build_form(r, args.nmax, args.nall)
            cache.write_text(json.dumps(f))
            log.info("form r=%.6f omega=%.6f hecke=%.1e disagree=%.1e (%.0fs)",
                     r, f["omega"], f["hecke"], f["disagree"], time.time() - t0)
        forms.append(f)
    write_mv1(args.out, forms, args.rmax, "generated by tools/generate_basis.py")
    write_mv1(args.pair, forms[:2], forms[1]["r"], "first two even forms")


if __name__ == "__main__":
    main()

"""Command-line front end.

Every command writes a CSV (to ``--out``, default stdout) whose first line
is a ``#`` comment defining the columns.  ``--plot FILE.svg`` renders a
line plot from the same rows.  Exit status: 0 success, 1 validation error,
2 computation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import MaassLabError, ValidationError

log = logging.getLogger("maasslab")

DATA_ENV = "MAASS_DATA_DIR"


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to the validation exit status."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _csv(note: str, header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(f"# {note}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _emit(text: str, out: str):
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _plot(path: str, x, series: dict, xlabel: str, ylabel: str, title: str, logy: bool = False):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "maasslab"
    plt.rcParams["svg.fonttype"] = "none"
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, ys in series.items():
        ys = [abs(y) if logy else y for y in ys]
        ax.plot(x, ys, marker="o", label=name)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def _basis_path(arg: str | None) -> Path:
    root = Path(os.environ.get(DATA_ENV, "fixtures"))
    if arg is None:
        return root / "basis.mv1"
    p = Path(arg)
    if not p.exists() and not p.is_absolute() and (root / p).exists():
        return root / p
    return p


def _load(arg):
    from .forms import load_basis

    return load_basis(_basis_path(arg))


def _form(basis, idx: int):
    if not 0 <= idx < len(basis.forms):
        raise ValidationError(f"form index {idx} out of range (basis has {len(basis.forms)} forms)")
    return basis.forms[idx]


# ---------------------------------------------------------------------------
# commands


def cmd_kloosterman(a) -> str:
    from .arith import kloosterman, weil_bound

    if a.c < 1:
        raise ValidationError("--c must be >= 1")
    s = kloosterman(a.m, a.n, a.c)
    return _csv("S(m,n;c) = sum over x mod c, (x,c)=1, of cos(2 pi (m x + n xbar)/c); weil = tau(c) gcd(m,n,c)^(1/2) c^(1/2)",
                ["m", "n", "c", "S", "weil"], [[a.m, a.n, a.c, f"{s:.12g}", weil_bound(a.m, a.n, a.c)]])


def cmd_vweight(a) -> str:
    from .lfunc import VWeightParams, v_weight_many

    p = VWeightParams(A=a.A, mu=a.mu, t=a.t, contour_real_part=a.contour)
    vals = v_weight_many(a.y, p)
    rows = [[float(y), a.t, a.mu, a.A, float(v)] for y, v in zip(a.y, vals)]
    if a.plot:
        _plot(a.plot, [r[0] for r in rows], {"V": [r[4] for r in rows]}, "y", "V(y)", "AFE weight", logy=True)
    return _csv("V_{mu,t}(y), the approximate functional equation weight", ["y", "t", "mu", "A", "V"], rows)


def cmd_central_value(a) -> str:
    from .lfunc import VWeightParams, central_value_rs

    basis = _load(a.basis)
    f, g = _form(basis, a.f), _form(basis, a.g)
    p = VWeightParams(A=a.A, mu=f.spectral_parameter, t=g.spectral_parameter)
    cv = central_value_rs(f, g, p, n_max=a.n_max)
    return _csv("L(1/2, f x g) by the approximate functional equation; tail_bound is the certified AFE tail",
                ["mu", "t", "A", "n_max", "value", "tail_bound"],
                [[f.spectral_parameter, g.spectral_parameter, a.A, cv.n_max, cv.value, cv.tail_bound]])


def cmd_kuznetsov_check(a) -> str:
    from .kuznetsov import default_c_max, gaussian_pair, trace_both_sides

    basis = _load(a.basis)
    h = gaussian_pair(a.T, a.M)
    cms = a.c_max or [default_c_max(h, a.n, a.m)]
    reports = [trace_both_sides(basis, h, a.n, a.m, c_max=c, normalization=a.normalization) for c in cms]
    cols = ["n", "m", "T", "M", "c_max", "normalization", "spectral_side", "delta_term", "kloosterman_plus",
            "kloosterman_minus", "eisenstein_term", "residual", "relative_residual"]
    rows = [[a.n, a.m, a.T, a.M, r.truncations["c_max"], r.truncations["normalization"], r.spectral_side,
             r.delta_term, r.kloosterman_plus, r.kloosterman_minus, r.eisenstein_term, r.residual,
             r.relative_residual] for r in reports]
    if a.plot:
        _plot(a.plot, [r[4] for r in rows], {"|residual|": [r[11] for r in rows]}, "c_max", "|residual|",
              f"trace formula residual, n={a.n}, m={a.m}", logy=True)
    return _csv("spectral_side = sum_j h(t_j) omega_j lambda_j(n) lambda_j(m); residual = spectral - geometric",
                cols, rows)


def cmd_moment(a) -> str:
    from .moment import MomentParams, breakdown_csv, moment_report

    basis = _load(a.basis)
    f = _form(basis, a.form)
    rows = []
    for T in a.T:
        params = MomentParams(T, a.M, a.p, a.A, a.n_max, a.c_max, normalization=a.normalization,
                              workers=a.workers)
        rows.append(moment_report(f, basis, params))
    if a.plot:
        _plot(a.plot, [r.T for r in rows],
              {"spectral": [r.spectral for r in rows], "D": [r.diagonal for r in rows],
               "main_term": [r.main_term for r in rows], "E": [r.eisenstein for r in rows],
               "J": [r.j_term for r in rows], "K": [r.k_term for r in rows]},
              "T", "value", f"moment breakdown, p={a.p}")
    return breakdown_csv(rows)


def cmd_distinguish(a) -> str:
    from .distinguish import (DistinguishConfig, driver_csv, find_distinguishing_prime, prime_table_csv,
                              theorem_driver)

    basis = _load(a.basis)
    f, g = _form(basis, a.f), _form(basis, a.g)
    cfg = DistinguishConfig(theta=a.theta, P=a.P, threshold_constant=a.threshold)
    w = find_distinguishing_prime(f, g, cfg)
    if a.plot:
        _plot(a.plot, [p for p, _ in w.table], {"|b(p)|": [v for _, v in w.table]}, "p", "|b(p)|",
              "coefficient distance at primes")
    if a.driver_T:
        from .moment import MomentParams

        p = a.driver_p or w.p
        if p is None:
            raise ValidationError("no distinguishing prime found; pass --driver-p")
        base = MomentParams(max(a.driver_T), a.M, p, workers=a.workers)
        rows = theorem_driver(f, g, basis, [(T, a.M) for T in a.driver_T], p, base)
        Path(a.driver_out).write_text(driver_csv(rows))
    status = "distinguished" if w.distinguished else "indistinguishable at this P"
    log.info("best prime %s with |b(p)| = %.6g (threshold %.3g): %s", w.p, w.value, w.threshold, status)
    return prime_table_csv(w)


def cmd_bessel(a) -> str:
    from .kuznetsov import gaussian_pair, h_minus, h_plus

    h = gaussian_pair(a.T, a.M)
    rows = []
    for x in a.x:
        if x <= 0:
            raise ValidationError("--x values must be positive")
        rows.append([a.T, a.M, float(x), h_plus(h, x, route=a.route), h_minus(h, x, route=a.route)])
    if a.plot:
        _plot(a.plot, [r[2] for r in rows], {"h+": [r[3] for r in rows], "h-": [r[4] for r in rows]},
              "x", "transform", f"Bessel transforms of H_(T={a.T:g},M={a.M:g})")
    return _csv("h_plus(x) = 2i int t J_2it(x) h(t)/cosh(pi t) dt; h_minus(x) = (4/pi) int_0^inf t K_2it(x) h(t) sinh(pi t) dt",
                ["T", "M", "x", "h_plus", "h_minus"], rows)


COMMANDS = {
    "kloosterman": cmd_kloosterman,
    "vweight": cmd_vweight,
    "central-value": cmd_central_value,
    "kuznetsov-check": cmd_kuznetsov_check,
    "moment": cmd_moment,
    "distinguish": cmd_distinguish,
    "bessel": cmd_bessel,
}


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="maasslab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--out", default="-", help="CSV output path (default: stdout)")
    common.add_argument("--plot", default=None, help="also write an SVG line plot to this path")
    common.add_argument("--workers", type=int, default=1, help="threads for internal reductions")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    k = sub.add_parser("kloosterman", parents=[common], help="one Kloosterman sum")
    k.add_argument("--m", type=int, required=True)
    k.add_argument("--n", type=int, required=True)
    k.add_argument("--c", type=int, required=True)

    v = sub.add_parser("vweight", parents=[common], help="AFE weight V_{mu,t}(y)")
    v.add_argument("--y", type=float, nargs="+", required=True)
    v.add_argument("--t", type=float, required=True)
    v.add_argument("--mu", type=float, default=0.0)
    v.add_argument("--A", type=int, default=4)
    v.add_argument("--contour", type=float, default=None, help="Re(u) of the contour (default: automatic)")

    c = sub.add_parser("central-value", parents=[common], help="L(1/2, f x g) for two basis forms")
    c.add_argument("--basis", default=None)
    c.add_argument("--f", type=int, default=0, help="index of f in the basis (0-based)")
    c.add_argument("--g", type=int, default=1)
    c.add_argument("--A", type=int, default=4)
    c.add_argument("--n-max", type=int, default=None)

    q = sub.add_parser("kuznetsov-check", parents=[common], help="both sides of the trace formula")
    q.add_argument("--basis", default=None)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--m", type=int, required=True)
    q.add_argument("--T", type=float, required=True)
    q.add_argument("--M", type=float, required=True)
    q.add_argument("--c-max", type=int, nargs="+", default=None)
    q.add_argument("--normalization", choices=["standard", "paper"], default="standard")

    m = sub.add_parser("moment", parents=[common], help="twisted first moment breakdown")
    m.add_argument("--basis", default=None)
    m.add_argument("--form", type=int, default=0)
    m.add_argument("--T", type=float, nargs="+", required=True)
    m.add_argument("--M", type=float, required=True)
    m.add_argument("--p", type=int, default=2)
    m.add_argument("--A", type=int, default=4)
    m.add_argument("--n-max", type=int, default=None)
    m.add_argument("--c-max", type=int, default=None)
    m.add_argument("--normalization", choices=["standard", "paper"], default="standard")

    d = sub.add_parser("distinguish", parents=[common], help="distinguishing prime and theorem driver")
    d.add_argument("--basis", default=None)
    d.add_argument("--f", type=int, default=0)
    d.add_argument("--g", type=int, default=1)
    d.add_argument("--P", type=int, default=100)
    d.add_argument("--theta", type=float, default=7 / 64)
    d.add_argument("--threshold", type=float, default=1.0)
    d.add_argument("--driver-T", type=float, nargs="*", default=None)
    d.add_argument("--driver-p", type=int, default=None)
    d.add_argument("--M", type=float, default=4.0)
    d.add_argument("--driver-out", default="driver.csv")

    b = sub.add_parser("bessel", parents=[common], help="Bessel transforms of H_{T,M}")
    b.add_argument("--T", type=float, required=True)
    b.add_argument("--M", type=float, required=True)
    b.add_argument("--x", type=float, nargs="+", required=True)
    b.add_argument("--route", choices=["auto", "bessel"], default="auto")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if a.workers < 1:
        sys.stderr.write("error: --workers must be >= 1\n")
        return 1
    try:
        text = COMMANDS[a.command](a)
        _emit(text, a.out)
    except ValidationError as err:
        sys.stderr.write(f"validation error: {err}\n")
        return 1
    except (MaassLabError, ArithmeticError, FloatingPointError) as err:
        sys.stderr.write(f"computation error: {err}\n")
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

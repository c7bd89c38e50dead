"""Pure numpy implementations of the hot kernels.

These define the reference semantics; the compiled module ``_ckernels``
must agree with them to rounding.  Both backends are deterministic and
independent of how callers split their work.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def _units_and_inverses(c: int) -> tuple[np.ndarray, np.ndarray]:
    if c == 1:
        return np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64)
    alpha = np.arange(1, c, dtype=np.int64)
    alpha = alpha[np.gcd(alpha, c) == 1]
    inv = np.array([pow(int(a), -1, c) for a in alpha], dtype=np.int64)
    return alpha, inv


def kloosterman_many(m, n, c):
    """Complex Kloosterman sums S(m_i, n_i; c_i) as (real, imag) arrays."""
    m = np.asarray(m, dtype=np.int64).ravel()
    n = np.asarray(n, dtype=np.int64).ravel()
    c = np.asarray(c, dtype=np.int64).ravel()
    re = np.empty(len(c))
    im = np.empty(len(c))
    for cc in np.unique(c):
        sel = np.nonzero(c == cc)[0]
        cc = int(cc)
        alpha, inv = _units_and_inverses(cc)
        ang = 2.0 * np.pi * np.arange(cc) / cc
        cos_tab, sin_tab = np.cos(ang), np.sin(ang)
        # rows of at most ~4M entries keep memory bounded
        step = max(1, 4_000_000 // max(len(alpha), 1))
        for lo in range(0, len(sel), step):
            idx = sel[lo:lo + step]
            mm = np.mod(m[idx], cc)[:, None]
            nn = np.mod(n[idx], cc)[:, None]
            k = (mm * alpha[None, :] + nn * inv[None, :]) % cc
            re[idx] = cos_tab[k].sum(axis=1)
            im[idx] = sin_tab[k].sum(axis=1)
    return re, im


def osc_sum(phi, wg, x, stride, kmax):
    """out_i = sum_{k < kmax_i, k % stride_i == 0} wg[k] * cos(x_i * phi[k]).

    ``phi`` holds cosh or sinh of a uniform grid; ``wg`` already contains the
    quadrature weights (scaled to the stride) times the sampled function.
    Callers pass ``wg`` for stride 1; coarser strides rescale by the stride.
    """
    phi = np.asarray(phi, dtype=float)
    wg = np.asarray(wg, dtype=float)
    x = np.asarray(x, dtype=float)
    stride = np.asarray(stride, dtype=np.int64)
    kmax = np.asarray(kmax, dtype=np.int64)
    out = np.empty(len(x))
    for s in np.unique(stride):
        for km in np.unique(kmax[stride == s]):
            sel = np.nonzero((stride == s) & (kmax == km))[0]
            p = phi[:km:s]
            w = wg[:km:s] * s
            # first node carries half weight in the trapezoid on [0, Z]
            w = w.copy()
            w[0] *= 0.5
            for lo in range(0, len(sel), 256):
                ii = sel[lo:lo + 256]
                out[ii] = np.cos(np.outer(x[ii], p)) @ w
    return out

# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; semantics match ``_pykernels`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, M_PI
from libc.stdlib cimport malloc, free

cnp.import_array()

BACKEND = "cython"


cdef inline long long _mod(long long a, long long c) nogil:
    cdef long long r = a % c
    if r < 0:
        r += c
    return r


cdef long long _inverse(long long a, long long c) nogil:
    # extended Euclid; returns -1 when gcd(a, c) != 1
    cdef long long r0 = c, r1 = a, s0 = 0, s1 = 1, q, tmp
    while r1 != 0:
        q = r0 // r1
        tmp = r0 - q * r1
        r0 = r1
        r1 = tmp
        tmp = s0 - q * s1
        s0 = s1
        s1 = tmp
    if r0 != 1:
        return -1
    return _mod(s0, c)


cdef struct Pairwise:
    double part[64]
    int level[64]
    int top
    double block
    int nblock


cdef inline void _pw_init(Pairwise* p) nogil:
    p.top = 0
    p.block = 0.0
    p.nblock = 0


cdef inline void _pw_push_block(Pairwise* p, double v) nogil:
    # binary-counter merge: equal-level partials are combined pairwise
    cdef int lev = 0
    while p.top > 0 and p.level[p.top - 1] == lev:
        v = p.part[p.top - 1] + v
        p.top -= 1
        lev += 1
    p.part[p.top] = v
    p.level[p.top] = lev
    p.top += 1


cdef inline void _pw_add(Pairwise* p, double v) nogil:
    p.block += v
    p.nblock += 1
    if p.nblock == 16:
        _pw_push_block(p, p.block)
        p.block = 0.0
        p.nblock = 0


cdef inline double _pw_total(Pairwise* p) nogil:
    cdef double s = p.block
    cdef int i
    for i in range(p.top - 1, -1, -1):
        s = p.part[i] + s
    return s


def kloosterman_many(m, n, c):
    """Complex Kloosterman sums S(m_i, n_i; c_i) as (real, imag) arrays."""
    cdef cnp.ndarray[cnp.int64_t, ndim=1] mm = np.ascontiguousarray(np.asarray(m, dtype=np.int64).ravel())
    cdef cnp.ndarray[cnp.int64_t, ndim=1] nn = np.ascontiguousarray(np.asarray(n, dtype=np.int64).ravel())
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cc = np.ascontiguousarray(np.asarray(c, dtype=np.int64).ravel())
    cdef Py_ssize_t nq = cc.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] re = np.empty(nq)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] im = np.empty(nq)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order = np.argsort(cc, kind="stable").astype(np.int64)
    cdef Py_ssize_t i, j, q
    cdef long long cur = -1, modc, a, inv, k, nunits = 0, mr, nr
    cdef long long* units = NULL
    cdef long long* invs = NULL
    cdef double* ctab = NULL
    cdef double* stab = NULL
    cdef Pairwise pr, pi
    cdef Py_ssize_t jend
    cdef double br, bi
    try:
        with nogil:
            for q in range(nq):
                i = order[q]
                modc = cc[i]
                if modc != cur:
                    free(units); free(invs); free(ctab); free(stab)
                    units = <long long*> malloc(modc * sizeof(long long))
                    invs = <long long*> malloc(modc * sizeof(long long))
                    ctab = <double*> malloc(modc * sizeof(double))
                    stab = <double*> malloc(modc * sizeof(double))
                    nunits = 0
                    if modc == 1:
                        units[0] = 0
                        invs[0] = 0
                        nunits = 1
                    else:
                        for a in range(1, modc):
                            inv = _inverse(a, modc)
                            if inv >= 0:
                                units[nunits] = a
                                invs[nunits] = inv
                                nunits += 1
                    for a in range(modc):
                        ctab[a] = cos(2.0 * M_PI * a / modc)
                        stab[a] = sin(2.0 * M_PI * a / modc)
                    cur = modc
                mr = _mod(mm[i], modc)
                nr = _mod(nn[i], modc)
                _pw_init(&pr)
                _pw_init(&pi)
                j = 0
                while j < nunits:
                    jend = j + 16
                    if jend > nunits:
                        jend = nunits
                    br = 0.0
                    bi = 0.0
                    while j < jend:
                        # both products are < c^2, so one reduction suffices
                        k = (mr * units[j]) % modc + (nr * invs[j]) % modc
                        if k >= modc:
                            k -= modc
                        br += ctab[k]
                        bi += stab[k]
                        j += 1
                    _pw_push_block(&pr, br)
                    _pw_push_block(&pi, bi)
                re[i] = _pw_total(&pr)
                im[i] = _pw_total(&pi)
    finally:
        free(units); free(invs); free(ctab); free(stab)
    return re, im


def osc_sum(phi, wg, x, stride, kmax):
    """out_i = sum over strided nodes k < kmax_i of s*wg[k]*cos(x_i*phi[k]), first node halved."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ph = np.ascontiguousarray(phi, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w = np.ascontiguousarray(wg, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xx = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] st = np.ascontiguousarray(stride, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] km = np.ascontiguousarray(kmax, dtype=np.int64)
    cdef Py_ssize_t nx = xx.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(nx)
    cdef Py_ssize_t i, k, s, kend
    cdef double acc, xi
    with nogil:
        for i in range(nx):
            s = st[i]
            kend = km[i]
            xi = xx[i]
            acc = 0.5 * w[0] * cos(xi * ph[0])
            k = s
            while k < kend:
                acc += w[k] * cos(xi * ph[k])
                k += s
            out[i] = acc * s
    return out

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled span link-function kernel; same contract as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, cos, sin, hypot

cnp.import_array()

ctypedef double complex cplx

cdef double SERIES_RADIUS = 1.0
cdef int SERIES_TERMS = 30


cdef inline cplx _cexp(cplx z) noexcept nogil:
    cdef double a = exp(z.real)
    return a * cos(z.imag) + 1j * (a * sin(z.imag))


cdef inline void _filon_weights(cplx q, cplx* w0, cplx* w1, cplx* w2) noexcept nogil:
    cdef cplx p = 2.0 * q, term = 1.0, m0 = 0.0, m1 = 0.0, m2 = 0.0, ep
    cdef cplx mu0, mu1, mu2
    cdef int n
    if hypot(p.real, p.imag) < SERIES_RADIUS:
        for n in range(SERIES_TERMS):
            m0 = m0 + term / (n + 1)
            m1 = m1 + term / (n + 2)
            m2 = m2 + term / (n + 3)
            term = term * p / (n + 1)
    else:
        ep = _cexp(p)
        m0 = (ep - 1.0) / p
        m1 = (ep - m0) / p
        m2 = (ep - 2.0 * m1) / p
    mu0 = 2.0 * m0
    mu1 = 4.0 * m1
    mu2 = 8.0 * m2
    w0[0] = 0.5 * (mu2 - 3.0 * mu1 + 2.0 * mu0)
    w1[0] = 2.0 * mu1 - mu2
    w2[0] = 0.5 * (mu2 - mu1)


cdef void _link_values(const double* omega, const double* s, Py_ssize_t n,
                       const double* x_nodes, const double* inv_norm, Py_ssize_t n_nodes,
                       double alpha, double dz, bint tilted, double* fbuf,
                       double* out) noexcept nogil:
    cdef Py_ssize_t p, m, k, n_pairs = (n_nodes - 1) // 2
    cdef cplx q, w0, w1, w2, r, g, s0, s1, s2, val
    for p in range(n):
        q = (-alpha + 1j * omega[p]) * dz
        _filon_weights(q, &w0, &w1, &w2)
        r = _cexp(2.0 * q)
        if tilted:
            for m in range(n_nodes):
                fbuf[m] = exp(-s[p] * x_nodes[m]) * inv_norm[m]
        else:
            for m in range(n_nodes):
                fbuf[m] = inv_norm[m]
        g = 1.0
        s0 = 0.0
        s1 = 0.0
        s2 = 0.0
        for k in range(n_pairs):
            s0 = s0 + g * fbuf[2 * k]
            s1 = s1 + g * fbuf[2 * k + 1]
            s2 = s2 + g * fbuf[2 * k + 2]
            g = g * r
        val = w0 * s0 + w1 * s1 + w2 * s2
        out[p] = dz * dz * (val.real * val.real + val.imag * val.imag)


def link_values(omega, s, x_nodes, inv_norm, double alpha, double dz):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] om = np.ascontiguousarray(omega, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ss = np.ascontiguousarray(s, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xn = np.ascontiguousarray(x_nodes, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] inv = np.ascontiguousarray(inv_norm, dtype=np.float64)
    if om.shape[0] != ss.shape[0]:
        raise ValueError("omega and s must have the same length")
    if xn.shape[0] != inv.shape[0] or xn.shape[0] < 3 or xn.shape[0] % 2 == 0:
        raise ValueError("node arrays must match and hold an odd number (>= 3) of nodes")
    cdef Py_ssize_t n = om.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] fbuf = np.empty(xn.shape[0], dtype=np.float64)
    cdef bint tilted = bool(np.any(xn != 0.0))
    if n == 0:
        return out
    with nogil:
        _link_values(&om[0], &ss[0], n, &xn[0], &inv[0], xn.shape[0],
                     alpha, dz, tilted, &fbuf[0], &out[0])
    return out

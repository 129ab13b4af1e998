# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of ``stbeam._kernels_py``.

Same three functions, same semantics; the per-grid-point work (Dirichlet
temporal factors, a small Hermitian Cholesky and one forward solve) runs
in C instead of batched numpy.  ``g^H (rho I + G)^{-1} g`` is evaluated
as ``||L^{-1} g||^2`` from the Cholesky factor ``L``.
"""

import numpy as np

from libc.math cimport cos, sin, sqrt

BACKEND = "compiled"

ctypedef double complex cplx

cdef double TWO_PI = 6.283185307179586476925286766559


cdef inline double _quad_form(cplx[:, ::1] a, cplx[::1] g, cplx[::1] y,
                              Py_ssize_t n, double rho) except -1.0:
    """Overwrite a with its Cholesky factor of (a + rho I); return
    g^H (a + rho I)^{-1} g via one forward substitution into y."""
    cdef Py_ssize_t i, j, p
    cdef cplx s
    cdef double d, quad
    for j in range(n):
        d = a[j, j].real + rho
        for p in range(j):
            d -= (a[j, p].real * a[j, p].real
                  + a[j, p].imag * a[j, p].imag)
        d = sqrt(d)
        a[j, j] = d
        for i in range(j + 1, n):
            s = a[i, j]
            for p in range(j):
                s -= a[i, p] * a[j, p].conjugate()
            a[i, j] = s / d
    quad = 0.0
    for i in range(n):
        s = g[i]
        for p in range(i):
            s -= a[i, p] * y[p]
        y[i] = s / a[i, i].real
        quad += y[i].real * y[i].real + y[i].imag * y[i].imag
    return quad


def slnr_grid_from_gram(cplx[:, :, ::1] gram, Py_ssize_t desired, double rho):
    """See ``stbeam._kernels_py.slnr_grid_from_gram``."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    cdef Py_ssize_t n_r = gram.shape[0], k = gram.shape[1], j = k - 1
    cdef Py_ssize_t r, a, b, ia, ib
    out = np.empty(n_r, dtype=np.float64)
    cdef double[::1] ov = out
    cdef cplx[:, ::1] mat = np.empty((max(j, 1), max(j, 1)),
                                     dtype=np.complex128)
    cdef cplx[::1] g = np.empty(max(j, 1), dtype=np.complex128)
    cdef cplx[::1] y = np.empty(max(j, 1), dtype=np.complex128)
    for r in range(n_r):
        if j == 0:
            ov[r] = gram[r, desired, desired].real / rho
            continue
        ia = 0
        for a in range(k):
            if a == desired:
                continue
            ib = 0
            for b in range(k):
                if b == desired:
                    continue
                mat[ia, ib] = gram[r, a, b]
                ib += 1
            g[ia] = gram[r, a, desired]
            ia += 1
        ov[r] = (gram[r, desired, desired].real
                 - _quad_form(mat, g, y, j, rho)) / rho
    return out


def temporal_gram_stack(double[::1] dopplers, int m, double sample_period_s,
                        Py_ssize_t r_max):
    """See ``stbeam._kernels_py.temporal_gram_stack``."""
    cdef Py_ssize_t k = dopplers.shape[0]
    cdef Py_ssize_t r, a, b
    cdef int q
    cdef double x, ph, re, im
    out = np.empty((r_max, k, k), dtype=np.complex128)
    cdef cplx[:, :, ::1] ov = out
    for r in range(r_max):
        for a in range(k):
            ov[r, a, a] = m
            for b in range(a + 1, k):
                x = (dopplers[b] - dopplers[a]) * (r + 1) * sample_period_s
                re = 0.0
                im = 0.0
                for q in range(m):
                    ph = TWO_PI * q * x
                    re += cos(ph)
                    im -= sin(ph)
                ov[r, a, b] = re + 1j * im
                ov[r, b, a] = re - 1j * im
    return out


def slnr_objective_grid(cplx[:, ::1] spatial_gram, double[::1] dopplers,
                        Py_ssize_t desired, int m, double sample_period_s,
                        Py_ssize_t r_max, double rho):
    """See ``stbeam._kernels_py.slnr_objective_grid``."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    cdef Py_ssize_t k = spatial_gram.shape[0], j = k - 1
    cdef Py_ssize_t r, a, b, ia, ib
    cdef int q
    cdef double x, ph, re, im, hsq
    out = np.empty(r_max, dtype=np.float64)
    cdef double[::1] ov = out
    cdef cplx[:, ::1] tg = np.empty((k, k), dtype=np.complex128)
    cdef cplx[:, ::1] mat = np.empty((max(j, 1), max(j, 1)),
                                     dtype=np.complex128)
    cdef cplx[::1] g = np.empty(max(j, 1), dtype=np.complex128)
    cdef cplx[::1] y = np.empty(max(j, 1), dtype=np.complex128)
    for r in range(r_max):
        for a in range(k):
            tg[a, a] = m
            for b in range(a + 1, k):
                x = (dopplers[b] - dopplers[a]) * (r + 1) * sample_period_s
                re = 0.0
                im = 0.0
                for q in range(m):
                    ph = TWO_PI * q * x
                    re += cos(ph)
                    im -= sin(ph)
                tg[a, b] = re + 1j * im
                tg[b, a] = re - 1j * im
        hsq = m * spatial_gram[desired, desired].real
        if j == 0:
            ov[r] = hsq / rho
            continue
        ia = 0
        for a in range(k):
            if a == desired:
                continue
            ib = 0
            for b in range(k):
                if b == desired:
                    continue
                mat[ia, ib] = tg[a, b] * spatial_gram[a, b]
                ib += 1
            g[ia] = tg[a, desired] * spatial_gram[a, desired]
            ia += 1
        ov[r] = (hsq - _quad_form(mat, g, y, j, rho)) / rho
    return out

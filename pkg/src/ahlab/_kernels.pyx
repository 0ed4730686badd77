# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled radial-solver kernels; same signatures as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport copysign, fabs, pow

cnp.import_array()


cdef inline int _int_exponent(double e) nogil:
    # small nonnegative integer exponents are done by repeated multiplication
    if e >= 0.0 and e <= 8.0 and e == <double>(<int>e):
        return <int>e
    return -1


cdef inline double _pw(double x, double e, int ie) nogil:
    cdef double out = 1.0
    cdef int i
    if ie < 0:
        return pow(x, e)
    for i in range(ie):
        out *= x
    return out


cdef inline double _sign(double x) nogil:
    if x > 0:
        return 1.0
    if x < 0:
        return -1.0
    return 0.0


def energy_grad(double[::1] f, double p, double inv_h, double[::1] W,
                double[:, ::1] wq, double[::1] xi):
    cdef Py_ssize_t M = W.shape[0], Q = xi.shape[0], e, q
    cdef double N = 0.0, D = 0.0, g, ag, flux, fq, afq, src, pa, f0, f1, w, de, s0, s1
    cdef int ie = _int_exponent(p - 1.0)
    gN_arr = np.zeros(M + 1)
    gD_arr = np.zeros(M + 1)
    cdef double[::1] gN = gN_arr
    cdef double[::1] gD = gD_arr
    with nogil:
        for e in range(M):
            f0 = f[e]
            f1 = f[e + 1]
            g = (f1 - f0) * inv_h
            ag = fabs(g)
            pa = _pw(ag, p - 1.0, ie)
            N += W[e] * pa * ag
            # pa vanishes with g, so the sign of zero is irrelevant
            flux = p * W[e] * copysign(pa, g) * inv_h
            gN[e] -= flux
            gN[e + 1] += flux
            de = 0.0
            s0 = 0.0
            s1 = 0.0
            for q in range(Q):
                fq = f0 * (1.0 - xi[q]) + f1 * xi[q]
                afq = fabs(fq)
                pa = _pw(afq, p - 1.0, ie)
                w = wq[e, q]
                de += w * pa * afq
                src = w * copysign(pa, fq)
                s0 += src * (1.0 - xi[q])
                s1 += src * xi[q]
            D += de
            gD[e] += p * s0
            gD[e + 1] += p * s1
    return N, D, gN_arr, gD_arr


def assemble(double[::1] f, double p, double inv_h, double[::1] W,
             double[:, ::1] wq, double[::1] xi, double floor):
    cdef Py_ssize_t M = W.shape[0], Q = xi.shape[0], e, q
    cdef double gmax = 0.0, fmax = 0.0, g, fq, a, b, k, wb
    Kd_arr = np.zeros(M + 1)
    Ko_arr = np.zeros(M)
    Md_arr = np.zeros(M + 1)
    Mo_arr = np.zeros(M)
    cdef double[::1] Kd = Kd_arr
    cdef double[::1] Ko = Ko_arr
    cdef double[::1] Md = Md_arr
    cdef double[::1] Mo = Mo_arr
    cdef bint linear = p == 2.0
    cdef int ie = _int_exponent(p - 2.0)
    with nogil:
        if not linear:
            for e in range(M):
                g = fabs((f[e + 1] - f[e]) * inv_h)
                if g > gmax:
                    gmax = g
                for q in range(Q):
                    fq = fabs(f[e] * (1.0 - xi[q]) + f[e + 1] * xi[q])
                    if fq > fmax:
                        fmax = fq
        for e in range(M):
            if linear:
                a = 1.0
            else:
                g = fabs((f[e + 1] - f[e]) * inv_h)
                if g < floor * gmax:
                    g = floor * gmax
                a = _pw(g, p - 2.0, ie)
            k = W[e] * a * inv_h * inv_h
            Kd[e] += k
            Kd[e + 1] += k
            Ko[e] = -k
            for q in range(Q):
                if linear:
                    b = 1.0
                else:
                    fq = fabs(f[e] * (1.0 - xi[q]) + f[e + 1] * xi[q])
                    if fq < floor * fmax:
                        fq = floor * fmax
                    b = _pw(fq, p - 2.0, ie)
                wb = wq[e, q] * b
                Md[e] += wb * (1.0 - xi[q]) * (1.0 - xi[q])
                Md[e + 1] += wb * xi[q] * xi[q]
                Mo[e] += wb * xi[q] * (1.0 - xi[q])
    return Kd_arr, Ko_arr, Md_arr, Mo_arr


def tridiag_solve(double[::1] diag, double[::1] off, double[::1] rhs):
    cdef Py_ssize_t n = diag.shape[0], i
    c_arr = np.empty(n)
    d_arr = np.empty(n)
    x_arr = np.empty(n)
    cdef double[::1] c = c_arr
    cdef double[::1] d = d_arr
    cdef double[::1] x = x_arr
    cdef double piv, min_piv
    with nogil:
        piv = diag[0]
        min_piv = piv
        c[0] = off[0] / piv if n > 1 else 0.0
        d[0] = rhs[0] / piv
        for i in range(1, n):
            piv = diag[i] - off[i - 1] * c[i - 1]
            if piv < min_piv:
                min_piv = piv
            if i < n - 1:
                c[i] = off[i] / piv
            d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / piv
        x[n - 1] = d[n - 1]
        for i in range(n - 2, -1, -1):
            x[i] = d[i] - c[i] * x[i + 1]
    return x_arr, min_piv


def tridiag_matvec(double[::1] diag, double[::1] off, double[::1] x):
    cdef Py_ssize_t n = diag.shape[0], i
    y_arr = np.empty(n)
    cdef double[::1] y = y_arr
    with nogil:
        for i in range(n):
            y[i] = diag[i] * x[i]
        for i in range(n - 1):
            y[i] += off[i] * x[i + 1]
            y[i + 1] += off[i] * x[i]
    return y_arr

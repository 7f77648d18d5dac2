"""Compiled versions of the hot kernels in ``_kernels_py``."""
import numpy as np

from libc.math cimport exp, fabs, pow, sqrt, INFINITY

cdef enum:
    LEBESGUE = 0
    GAUSSIAN = 1
    EXP_L1 = 2
    RADIAL_POWER = 3
    BUMP = 4


def lp_gauge(y, double p, inv_w):
    cdef const double[:, ::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[::1] iw = np.ascontiguousarray(inv_w, dtype=np.float64)
    cdef Py_ssize_t n = yv.shape[0], d = yv.shape[1], i, j
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef double acc, mx, v
    cdef int mode
    if p == 1.0:
        mode = 1
    elif p == 2.0:
        mode = 2
    elif p == INFINITY:
        mode = 3
    else:
        mode = 0
    with nogil:
        for i in range(n):
            if mode == 1:
                acc = 0.0
                for j in range(d):
                    acc += fabs(yv[i, j]) * iw[j]
                o[i] = acc
            elif mode == 2:
                acc = 0.0
                for j in range(d):
                    v = fabs(yv[i, j]) * iw[j]
                    acc += v * v
                o[i] = sqrt(acc)
            else:
                mx = 0.0
                for j in range(d):
                    v = fabs(yv[i, j]) * iw[j]
                    if v > mx:
                        mx = v
                if mode == 3 or mx == 0.0:
                    o[i] = mx
                else:
                    acc = 0.0
                    for j in range(d):
                        acc += pow(fabs(yv[i, j]) * iw[j] / mx, p)
                    o[i] = mx * pow(acc, 1.0 / p)
    return out


def radial_moments(rho, snorm, int m, int kind, double a, double b, nodes, weights):
    cdef const double[::1] rv = np.ascontiguousarray(rho, dtype=np.float64)
    cdef Py_ssize_t n = rv.shape[0], i, k
    if kind == LEBESGUE:
        return np.asarray(rho, dtype=np.float64) ** m / m
    if kind < 0 or kind > BUMP:
        raise ValueError(f"unknown radial profile {kind}")
    cdef const double[::1] sv = np.ascontiguousarray(snorm, dtype=np.float64)
    cdef const double[::1] tv = np.ascontiguousarray(nodes, dtype=np.float64)
    cdef const double[::1] wv = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t nk = tv.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef double rmax, s, r, u, q, h, acc, rp
    cdef int e
    with nogil:
        for i in range(n):
            rmax = rv[i]
            s = sv[i]
            if kind == BUMP and s > 0.0 and a / s < rmax:
                rmax = a / s
            acc = 0.0
            for k in range(nk):
                r = rmax * tv[k]
                u = r * s
                if kind == GAUSSIAN:
                    h = a * exp(-b * u * u)
                elif kind == EXP_L1:
                    h = exp(-u)
                elif kind == RADIAL_POWER:
                    h = pow(u, a)
                else:
                    q = u / a
                    q = q * q
                    if q < 1.0:
                        h = exp(1.0 - 1.0 / (1.0 - q))
                    else:
                        h = 0.0
                # integer power by repeated multiplication; libm pow is far slower
                rp = 1.0
                for e in range(m - 1):
                    rp = rp * r
                acc += wv[k] * h * rp
            o[i] = rmax * acc
    return out

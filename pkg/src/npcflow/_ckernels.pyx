# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical kernels (same signatures as ``_pykernels``)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, sinh, cosh, asinh, exp

cnp.import_array()


cdef inline double _mdot(const double[::1] x, const double[::1] y) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = -x[0] * y[0]
    for i in range(1, x.shape[0]):
        s += x[i] * y[i]
    return s


cdef inline double _hdist(const double[::1] x, const double[::1] y) noexcept nogil:
    cdef Py_ssize_t i
    cdef double d0 = x[0] - y[0]
    cdef double c = -d0 * d0
    cdef double di
    for i in range(1, x.shape[0]):
        di = x[i] - y[i]
        c += di * di
    if c <= 0.0:
        return 0.0
    return 2.0 * asinh(0.5 * sqrt(c))


cdef inline void _lift(double[::1] z) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 1.0
    for i in range(1, z.shape[0]):
        s += z[i] * z[i]
    z[0] = sqrt(s)


cdef inline void _hgeo(const double[::1] x, const double[::1] y, double t,
                       double length, double[::1] out) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s, a, b
    if length < 1e-14:
        for i in range(x.shape[0]):
            out[i] = x[i]
        return
    s = sinh(length)
    a = sinh((1.0 - t) * length) / s
    b = sinh(t * length) / s
    for i in range(x.shape[0]):
        out[i] = a * x[i] + b * y[i]
    _lift(out)


def minkowski_dot(x, y):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    return _mdot(xv, yv)


def hyperbolic_distance(x, y):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    return _hdist(xv, yv)


def hyperbolic_lift(spatial):
    cdef const double[::1] s = np.ascontiguousarray(spatial, dtype=np.float64)
    out = np.empty(s.shape[0] + 1)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    for i in range(s.shape[0]):
        o[i + 1] = s[i]
    _lift(o)
    return out


def hyperbolic_geodesic(x, y, double t, double length):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    out = np.empty(xv.shape[0])
    _hgeo(xv, yv, t, length, out)
    return out


def hyperbolic_distances(X, Y):
    cdef const double[:, ::1] A = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] B = np.ascontiguousarray(Y, dtype=np.float64)
    out = np.empty(A.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(A.shape[0]):
            o[i] = _hdist(A[i], B[i])
    return out


def euclidean_distances(X, Y):
    cdef const double[:, ::1] A = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] B = np.ascontiguousarray(Y, dtype=np.float64)
    out = np.empty(A.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t i, j
    cdef double s, d
    with nogil:
        for i in range(A.shape[0]):
            s = 0.0
            for j in range(A.shape[1]):
                d = A[i, j] - B[i, j]
                s += d * d
            o[i] = sqrt(s)
    return out


def pairwise_euclidean(X):
    cdef const double[:, ::1] A = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t m = A.shape[0]
    out = np.zeros((m, m))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, k
    cdef double s, d
    with nogil:
        for i in range(m):
            for j in range(i + 1, m):
                s = 0.0
                for k in range(A.shape[1]):
                    d = A[i, k] - A[j, k]
                    s += d * d
                o[i, j] = sqrt(s)
                o[j, i] = o[i, j]
    return out


def pairwise_hyperbolic(X):
    cdef const double[:, ::1] A = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t m = A.shape[0]
    out = np.zeros((m, m))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(m):
            for j in range(i + 1, m):
                o[i, j] = _hdist(A[i], A[j])
                o[j, i] = o[i, j]
    return out


def affine_chain(P, q, y0, Py_ssize_t n, Py_ssize_t stride):
    cdef const double[:, ::1] M = np.ascontiguousarray(P, dtype=np.float64)
    cdef const double[::1] c = np.ascontiguousarray(q, dtype=np.float64)
    cdef Py_ssize_t d = M.shape[0]
    cdef double[::1] y = np.array(y0, dtype=np.float64)
    cdef double[::1] tmp = np.empty(d)
    out = np.empty((n // stride + 1, d))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t k, i, j, r = 1
    cdef double s
    o[0, :] = y
    with nogil:
        for k in range(1, n + 1):
            for i in range(d):
                s = c[i]
                for j in range(d):
                    s += M[i, j] * y[j]
                tmp[i] = s
            for i in range(d):
                y[i] = tmp[i]
            if k % stride == 0:
                for i in range(d):
                    o[r, i] = y[i]
                r += 1
    return out


def hyperbolic_anchor_chain(x0, anchor, double frac, Py_ssize_t n, Py_ssize_t stride):
    cdef double[::1] x = np.array(x0, dtype=np.float64)
    cdef const double[::1] a = np.ascontiguousarray(anchor, dtype=np.float64)
    cdef Py_ssize_t d = x.shape[0]
    cdef double[::1] tmp = np.empty(d)
    out = np.empty((n // stride + 1, d))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t k, i, r = 1
    o[0, :] = x
    with nogil:
        for k in range(1, n + 1):
            _hgeo(x, a, frac, _hdist(x, a), tmp)
            for i in range(d):
                x[i] = tmp[i]
            if k % stride == 0:
                for i in range(d):
                    o[r, i] = x[i]
                r += 1
    return out


cdef inline double _bgap(const double[::1] x, const double[::1] p) noexcept nogil:
    cdef Py_ssize_t i, d = x.shape[0]
    cdef double s = 0.0, xx = 0.0, ww = 0.0, w, x0
    for i in range(1, d):
        s += x[i] * p[i]
        xx += x[i] * x[i]
    x0 = sqrt(1.0 + xx)
    if s <= 0.0:
        return x0 - s
    for i in range(1, d):
        w = x[i] - s * p[i]
        ww += w * w
    return (1.0 + ww) / (x0 + s)


def busemann_gap(x, p):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    return _bgap(xv, pv)


cdef inline void _bstep(double[::1] x, const double[::1] p, double tau,
                        double[::1] tmp) noexcept nogil:
    cdef Py_ssize_t i
    cdef double m = _bgap(x, p)
    cdef double e = exp(-tau), c = sinh(tau) / m
    for i in range(x.shape[0]):
        tmp[i] = e * x[i] + c * p[i]
    _lift(tmp)
    for i in range(x.shape[0]):
        x[i] = tmp[i]


def busemann_step(x, p, double tau):
    cdef double[::1] xv = np.array(x, dtype=np.float64)
    cdef const double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef double[::1] tmp = np.empty(xv.shape[0])
    _bstep(xv, pv, tau, tmp)
    return np.asarray(xv)


def hyperbolic_busemann_chain(x0, ideal, double tau, Py_ssize_t n, Py_ssize_t stride):
    cdef double[::1] x = np.array(x0, dtype=np.float64)
    cdef const double[::1] p = np.ascontiguousarray(ideal, dtype=np.float64)
    cdef Py_ssize_t d = x.shape[0]
    cdef double[::1] tmp = np.empty(d)
    out = np.empty((n // stride + 1, d))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t k, i, r = 1
    o[0, :] = x
    with nogil:
        for k in range(1, n + 1):
            _bstep(x, p, tau, tmp)
            if k % stride == 0:
                for i in range(d):
                    o[r, i] = x[i]
                r += 1
    return out


def npc_gaps_euclidean(X, Y, Z, t):
    cdef const double[:, ::1] A = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] B = np.ascontiguousarray(Y, dtype=np.float64)
    cdef const double[:, ::1] C = np.ascontiguousarray(Z, dtype=np.float64)
    cdef const double[::1] T = np.ascontiguousarray(t, dtype=np.float64)
    out = np.empty(A.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t i, j
    cdef double tt, g, zg, zx, zy, xy, dd
    with nogil:
        for i in range(A.shape[0]):
            tt = T[i]
            zg = 0.0; zx = 0.0; zy = 0.0; xy = 0.0
            for j in range(A.shape[1]):
                g = (1.0 - tt) * A[i, j] + tt * B[i, j]
                dd = C[i, j] - g; zg += dd * dd
                dd = C[i, j] - A[i, j]; zx += dd * dd
                dd = C[i, j] - B[i, j]; zy += dd * dd
                dd = A[i, j] - B[i, j]; xy += dd * dd
            o[i] = zg - ((1.0 - tt) * zx + tt * zy - tt * (1.0 - tt) * xy)
    return out


def npc_gaps_hyperbolic(X, Y, Z, t):
    cdef const double[:, ::1] A = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] B = np.ascontiguousarray(Y, dtype=np.float64)
    cdef const double[:, ::1] C = np.ascontiguousarray(Z, dtype=np.float64)
    cdef const double[::1] T = np.ascontiguousarray(t, dtype=np.float64)
    cdef Py_ssize_t m = A.shape[0]
    out = np.empty(m)
    cdef double[::1] o = out
    cdef double[::1] g = np.empty(A.shape[1])
    cdef Py_ssize_t i
    cdef double tt, L, zg, zx, zy
    with nogil:
        for i in range(m):
            tt = T[i]
            L = _hdist(A[i], B[i])
            _hgeo(A[i], B[i], tt, L, g)
            zg = _hdist(C[i], g)
            zx = _hdist(C[i], A[i])
            zy = _hdist(C[i], B[i])
            o[i] = zg * zg - ((1.0 - tt) * zx * zx + tt * zy * zy - tt * (1.0 - tt) * L * L)
    return out


def dykstra_halfspaces(A, c, y, Py_ssize_t sweeps, double tol):
    cdef const double[:, ::1] Av = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    z_arr = np.array(y, dtype=np.float64)
    cdef double[::1] z = z_arr
    cdef double[:, ::1] incr = np.zeros((Av.shape[0], Av.shape[1]))
    cdef double[::1] prev = np.empty(Av.shape[1])
    cdef double[::1] w = np.empty(Av.shape[1])
    cdef Py_ssize_t m = Av.shape[0], d = Av.shape[1], s, j, i, used = 0
    cdef double viol, change, diff
    with nogil:
        for s in range(sweeps):
            used = s + 1
            for i in range(d):
                prev[i] = z[i]
            for j in range(m):
                viol = cv[j]
                for i in range(d):
                    w[i] = z[i] + incr[j, i]
                    viol += Av[j, i] * w[i]
                for i in range(d):
                    if viol > 0.0:
                        z[i] = w[i] - viol * Av[j, i]
                    else:
                        z[i] = w[i]
                    incr[j, i] = w[i] - z[i]
            change = 0.0
            for i in range(d):
                diff = z[i] - prev[i]
                change += diff * diff
            if sqrt(change) <= tol:
                break
    return z_arr, used

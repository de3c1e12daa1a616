# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: discrete Legendre conjugates via lower-hull sweeps
and the subgradient-cell polygon clipper.

Semantics match torapot._fallback (up to floating-point rounding of
equivalent expressions); torapot.kernels picks whichever is importable.
Masked nodes are passed as +inf values and never achieve the max.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


cdef Py_ssize_t _lower_hull(const double[::1] x, const double[::1] u, Py_ssize_t n,
                            cnp.intp_t[::1] hull) nogil:
    """Monotone-chain lower hull of (x_i, u_i), x strictly increasing.
    Returns the number of hull vertices written to `hull`."""
    cdef Py_ssize_t i, h = 0
    cdef double cross
    for i in range(n):
        while h >= 2:
            cross = (x[hull[h - 1]] - x[hull[h - 2]]) * (u[i] - u[hull[h - 2]]) - \
                    (u[hull[h - 1]] - u[hull[h - 2]]) * (x[i] - x[hull[h - 2]])
            if cross <= 0.0:
                h -= 1
            else:
                break
        hull[h] = i
        h += 1
    return h


cdef void _sweep(const double[::1] xs, const double[::1] us, Py_ssize_t h,
                 const cnp.intp_t[::1] hull, const double[::1] y, const cnp.intp_t[::1] order,
                 double[::1] out, Py_ssize_t stride_off) nogil:
    """Fill out[order[j]] = max_k (xs_k * y - us_k) walking the hull once."""
    cdef Py_ssize_t j, k = 0, idx
    cdef double yy
    for j in range(order.shape[0]):
        idx = order[j]
        yy = y[idx]
        while k + 1 < h and \
                xs[hull[k + 1]] * yy - us[hull[k + 1]] >= xs[hull[k]] * yy - us[hull[k]]:
            k += 1
        out[stride_off + idx] = xs[hull[k]] * yy - us[hull[k]]


def conjugate_1d(const double[::1] x, const double[::1] u, const double[::1] y):
    """max_i (x_i * y - u_i) per query slope; +inf entries of u are skipped."""
    cdef Py_ssize_t n = x.shape[0], m = y.shape[0]
    if n == 0:
        raise ValueError("conjugate of an empty node set")
    out_arr = np.empty(m)
    cdef double[::1] out = out_arr
    cdef cnp.intp_t[::1] order = np.argsort(y, kind="stable")
    cdef cnp.intp_t[::1] hull = np.empty(n, dtype=np.intp)
    xs_arr = np.empty(n)
    us_arr = np.empty(n)
    cdef double[::1] xs = xs_arr, us = us_arr
    cdef Py_ssize_t i, nn = 0, h, j
    cdef double pos_inf = np.inf
    with nogil:
        for i in range(n):
            if u[i] != pos_inf:
                xs[nn] = x[i]
                us[nn] = u[i]
                nn += 1
    if nn == 0:
        out_arr[:] = -np.inf
        return out_arr
    with nogil:
        h = _lower_hull(xs, us, nn, hull)
        _sweep(xs, us, h, hull, y, order, out, 0)
    return out_arr


def conjugate_1d_batch(const double[::1] x, const double[:, ::1] U, const double[::1] y):
    """Row-wise conjugates; +inf entries of U are skipped, all-inf rows
    yield -inf outputs."""
    cdef Py_ssize_t b = U.shape[0], n = U.shape[1], m = y.shape[0]
    out_arr = np.empty((b, m))
    cdef double[::1] out = out_arr.reshape(-1)
    cdef cnp.intp_t[::1] order = np.argsort(y, kind="stable")
    cdef cnp.intp_t[::1] hull = np.empty(n, dtype=np.intp)
    xs_arr = np.empty(n)
    us_arr = np.empty(n)
    cdef double[::1] xs = xs_arr, us = us_arr
    cdef Py_ssize_t r, i, nn, h, j
    cdef double pos_inf = np.inf, neg_inf = -np.inf
    with nogil:
        for r in range(b):
            nn = 0
            for i in range(n):
                if U[r, i] != pos_inf:
                    xs[nn] = x[i]
                    us[nn] = U[r, i]
                    nn += 1
            if nn == 0:
                for j in range(m):
                    out[r * m + j] = neg_inf
                continue
            h = _lower_hull(xs, us, nn, hull)
            _sweep(xs, us, h, hull, y, order, out, r * m)
    return out_arr


def cell_areas_2d(const double[::1] body_x, const double[::1] body_y,
                  const double[:, ::1] normals, const double[::1] offsets,
                  const cnp.intp_t[::1] indptr, bint collect_vertices=False):
    """Sutherland-Hodgman clip of the body polygon by each cell's halfplanes;
    returns cell areas (and optionally all clipped-cell vertices)."""
    cdef Py_ssize_t ncells = indptr.shape[0] - 1
    cdef Py_ssize_t nb = body_x.shape[0]
    areas_arr = np.zeros(ncells)
    cdef double[::1] areas = areas_arr
    cdef Py_ssize_t maxv = nb + normals.shape[0] + 8
    buf_ax = np.empty(maxv)
    buf_ay = np.empty(maxv)
    buf_bx = np.empty(maxv)
    buf_by = np.empty(maxv)
    cdef double[::1] ax = buf_ax, ay = buf_ay, bx = buf_bx, by = buf_by
    verts_x: list = []
    verts_y: list = []
    cdef Py_ssize_t k, j, i, cnt, ncnt, prev
    cdef double a0, a1, bb, pv, cv, t, s
    for k in range(ncells):
        cnt = nb
        for i in range(nb):
            ax[i] = body_x[i]
            ay[i] = body_y[i]
        for j in range(indptr[k], indptr[k + 1]):
            if cnt == 0:
                break
            a0 = normals[j, 0]
            a1 = normals[j, 1]
            bb = offsets[j]
            ncnt = 0
            prev = cnt - 1
            pv = a0 * ax[prev] + a1 * ay[prev] - bb
            for i in range(cnt):
                cv = a0 * ax[i] + a1 * ay[i] - bb
                if cv <= 0.0:
                    if pv > 0.0:
                        t = pv / (pv - cv)
                        bx[ncnt] = ax[prev] + t * (ax[i] - ax[prev])
                        by[ncnt] = ay[prev] + t * (ay[i] - ay[prev])
                        ncnt += 1
                    bx[ncnt] = ax[i]
                    by[ncnt] = ay[i]
                    ncnt += 1
                elif pv <= 0.0:
                    t = pv / (pv - cv)
                    bx[ncnt] = ax[prev] + t * (ax[i] - ax[prev])
                    by[ncnt] = ay[prev] + t * (ay[i] - ay[prev])
                    ncnt += 1
                prev = i
                pv = cv
            for i in range(ncnt):
                ax[i] = bx[i]
                ay[i] = by[i]
            cnt = ncnt
        if cnt >= 3:
            s = 0.0
            for i in range(cnt):
                j = i + 1
                if j == cnt:
                    j = 0
                s += ax[i] * ay[j] - ax[j] * ay[i]
            areas[k] = 0.5 * (s if s >= 0 else -s)
        if collect_vertices and cnt > 0:
            for i in range(cnt):
                verts_x.append(ax[i])
                verts_y.append(ay[i])
    if collect_vertices:
        if verts_x:
            vv = np.column_stack([np.asarray(verts_x), np.asarray(verts_y)])
        else:
            vv = np.empty((0, 2))
        return areas_arr, vv
    return areas_arr

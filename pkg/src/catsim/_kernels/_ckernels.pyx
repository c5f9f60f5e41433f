# cython: language_level=3
"""Compiled versions of the hot loops; semantics mirror _pykernels."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY

cnp.import_array()


def best_split(X, y, Py_ssize_t min_leaf):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0], d = Xv.shape[1]
    cdef Py_ssize_t i, j, k
    cdef int best_feature = -1
    cdef double best_threshold = np.nan, best_sdr = 0.0
    if n < 2 * min_leaf or n < 2:
        return best_feature, best_threshold, best_sdr

    cdef double ym = np.mean(yv)
    cdef double[::1] yc = np.empty(n)
    cdef double total = 0.0, total2 = 0.0
    for i in range(n):
        yc[i] = yv[i] - ym
    total = float(np.sum(yc))
    total2 = float(np.dot(yc, yc))
    cdef double sd_all = total2 / n - (total / n) * (total / n)
    # variances below rounding noise of the running sums count as zero
    cdef double var_floor = 1e-12 * total2 / n
    sd_all = sqrt(sd_all) if sd_all > 0 else 0.0

    cdef cnp.intp_t[::1] order
    cdef double cs, cs2, nl, nr, var_l, var_r, sdr, x_here, x_next
    cdef double feat_best
    cdef Py_ssize_t feat_i
    cdef double[::1] col
    for j in range(d):
        col = np.ascontiguousarray(Xv[:, j])
        order = np.argsort(col, kind="mergesort")
        cs = 0.0
        cs2 = 0.0
        feat_best = -INFINITY
        feat_i = -1
        for i in range(n - 1):
            k = order[i]
            cs += yc[k]
            cs2 += yc[k] * yc[k]
            nl = i + 1
            nr = n - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            x_here = col[k]
            x_next = col[order[i + 1]]
            if not x_here < x_next:
                continue
            var_l = cs2 / nl - (cs / nl) * (cs / nl)
            var_r = (total2 - cs2) / nr - ((total - cs) / nr) * ((total - cs) / nr)
            if var_l < var_floor:
                var_l = 0.0
            if var_r < var_floor:
                var_r = 0.0
            sdr = sd_all - (nl / n) * sqrt(var_l) - (nr / n) * sqrt(var_r)
            if sdr > feat_best:
                feat_best = sdr
                feat_i = i
        if feat_i >= 0 and feat_best > best_sdr:
            best_feature = <int>j
            best_threshold = 0.5 * (col[order[feat_i]] + col[order[feat_i + 1]])
            best_sdr = feat_best
    return best_feature, best_threshold, best_sdr


def project_polyline(points, cumdist, double px, double py):
    cdef const double[:, ::1] P = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[::1] cum = np.ascontiguousarray(cumdist, dtype=np.float64)
    cdef Py_ssize_t k, best_k = 0, m = P.shape[0] - 1
    cdef double sx, sy, rx, ry, l2, t, ox, oy, dist, best_dist = INFINITY, best_t = 0.0
    for k in range(m):
        sx = P[k + 1, 0] - P[k, 0]
        sy = P[k + 1, 1] - P[k, 1]
        rx = px - P[k, 0]
        ry = py - P[k, 1]
        l2 = sx * sx + sy * sy
        t = (rx * sx + ry * sy) / l2
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        ox = rx - sx * t
        oy = ry - sy * t
        dist = sqrt(ox * ox + oy * oy)
        if dist < best_dist:
            best_dist = dist
            best_k = k
            best_t = t
    return (cum[best_k] + best_t * (cum[best_k + 1] - cum[best_k]), best_dist, best_k)


def tree_predict(feature, threshold, left, right, coef, intercept, X):
    cdef const cnp.intp_t[::1] fv = np.ascontiguousarray(feature, dtype=np.intp)
    cdef const double[::1] tv = np.ascontiguousarray(threshold, dtype=np.float64)
    cdef const cnp.intp_t[::1] lv = np.ascontiguousarray(left, dtype=np.intp)
    cdef const cnp.intp_t[::1] rv = np.ascontiguousarray(right, dtype=np.intp)
    cdef const double[:, ::1] cv = np.ascontiguousarray(coef, dtype=np.float64)
    cdef const double[::1] iv = np.ascontiguousarray(intercept, dtype=np.float64)
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0], d = Xv.shape[1], i, j, node
    out = np.empty(n)
    cdef double[::1] ov = out
    cdef double acc
    for i in range(n):
        node = 0
        while fv[node] >= 0:
            if Xv[i, fv[node]] <= tv[node]:
                node = lv[node]
            else:
                node = rv[node]
        acc = 0.0
        for j in range(d):
            acc += cv[node, j] * Xv[i, j]
        ov[i] = iv[node] + acc
    return out

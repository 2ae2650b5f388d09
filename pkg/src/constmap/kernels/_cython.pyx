# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled implementations of the block mapping kernels.

Mirrors ``_numpy.py`` operation for operation; hard forward paths use the
same expression order so results match the fallback bit for bit (the module
is compiled with -ffp-contract=off to rule out FMA contraction). Soft-path
sums run serially and may differ from NumPy reductions by rounding only.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, sqrt

cnp.import_array()


cdef inline double _sigmoid(double z) noexcept nogil:
    cdef double ez
    if z >= 0.0:
        return 1.0 / (1.0 + exp(-z))
    ez = exp(z)
    return ez / (1.0 + ez)


def mrc_forward_block(const double[::1] x, const double[::1] d, const double[::1] levels):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t m1 = d.shape[0]
    y_arr = np.empty(n, dtype=np.float64)
    idx_arr = np.empty(n, dtype=np.int64)
    cdef double[::1] y = y_arr
    cdef cnp.int64_t[::1] idx = idx_arr
    cdef Py_ssize_t i, j, k
    cdef double xi, best, dist
    with nogil:
        for i in range(n):
            xi = x[i]
            best = fabs(xi - d[0])
            k = 0
            for j in range(1, m1):
                dist = fabs(xi - d[j])
                if dist < best:
                    best = dist
                    k = j
            if xi > d[k]:
                k += 1
            y[i] = levels[k]
            idx[i] = k
    return y_arr, idx_arr


def mrc_backward_value_block(const double[::1] x, const double[::1] d, const double[::1] levels, double delta):
    yb_arr, _, _ = _mrc_backward(x, d, levels, delta, False)
    return yb_arr


def mrc_backward_grad_block(const double[::1] x, const double[::1] d, const double[::1] levels, double delta):
    return _mrc_backward(x, d, levels, delta, True)


cdef _mrc_backward(const double[::1] x, const double[::1] d, const double[::1] levels, double delta, bint want_grad):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t m1 = d.shape[0]
    cdef Py_ssize_t m = levels.shape[0]
    cdef double gap = (levels[m - 1] - levels[0]) / (m - 1)
    yb_arr = np.empty(n, dtype=np.float64)
    gx_arr = np.empty(n if want_grad else 0, dtype=np.float64)
    gd_arr = np.empty((n if want_grad else 0, m1), dtype=np.float64)
    w_arr = np.empty(m1, dtype=np.float64)
    sg_arr = np.empty(m1, dtype=np.float64)
    cdef double[::1] yb = yb_arr
    cdef double[::1] gx = gx_arr
    cdef double[:, ::1] gd = gd_arr
    cdef double[::1] w = w_arr
    cdef double[::1] sg = sg_arr
    cdef Py_ssize_t i, j
    cdef double xi, mind, dist, z, dhat, chat, s, sp, diff
    cdef double ws_sum, wsd, wsc, ddhat_dx, dchat_dx, spg
    with nogil:
        for i in range(n):
            xi = x[i]
            mind = fabs(xi - d[0])
            for j in range(1, m1):
                dist = fabs(xi - d[j])
                if dist < mind:
                    mind = dist
            z = 0.0
            for j in range(m1):
                diff = xi - d[j]
                if diff > 0.0:
                    sg[j] = 1.0
                elif diff < 0.0:
                    sg[j] = -1.0
                else:
                    sg[j] = 0.0
                w[j] = exp(-delta * (fabs(diff) - mind))
                z += w[j]
            dhat = 0.0
            chat = 0.0
            for j in range(m1):
                w[j] /= z
                dhat += w[j] * d[j]
                chat += w[j] * levels[j]
            s = _sigmoid(delta * (xi - dhat))
            yb[i] = chat + s * gap
            if want_grad:
                ws_sum = 0.0
                wsd = 0.0
                wsc = 0.0
                for j in range(m1):
                    ws_sum += w[j] * sg[j]
                    wsd += w[j] * sg[j] * d[j]
                    wsc += w[j] * sg[j] * levels[j]
                ddhat_dx = -delta * (wsd - ws_sum * dhat)
                dchat_dx = -delta * (wsc - ws_sum * chat)
                sp = s * (1.0 - s)
                spg = sp * delta * gap
                gx[i] = dchat_dx + sp * delta * (1.0 - ddhat_dx) * gap
                for j in range(m1):
                    gd[i, j] = (
                        delta * sg[j] * w[j] * (levels[j] - chat)
                        - spg * w[j] * (1.0 + delta * sg[j] * (d[j] - dhat))
                    )
    if want_grad:
        return yb_arr, gx_arr, gd_arr
    return yb_arr, None, None


def mic_forward_block(const double[::1] pre, const double[::1] pim, const double[::1] cre, const double[::1] cim):
    cdef Py_ssize_t n = pre.shape[0]
    cdef Py_ssize_t nc = cre.shape[0]
    yre_arr = np.empty(n, dtype=np.float64)
    yim_arr = np.empty(n, dtype=np.float64)
    idx_arr = np.empty(n, dtype=np.int64)
    cdef double[::1] yre = yre_arr
    cdef double[::1] yim = yim_arr
    cdef cnp.int64_t[::1] idx = idx_arr
    cdef Py_ssize_t i, j, k
    cdef double dx, dy, d2, best
    with nogil:
        for i in range(n):
            dx = pre[i] - cre[0]
            dy = pim[i] - cim[0]
            best = dx * dx + dy * dy
            k = 0
            for j in range(1, nc):
                dx = pre[i] - cre[j]
                dy = pim[i] - cim[j]
                d2 = dx * dx + dy * dy
                if d2 < best:
                    best = d2
                    k = j
            yre[i] = cre[k]
            yim[i] = cim[k]
            idx[i] = k
    return yre_arr, yim_arr, idx_arr


def mic_backward_value_block(const double[::1] pre, const double[::1] pim, const double[::1] cre, const double[::1] cim, double delta):
    bre_arr, bim_arr, _, _ = _mic_backward(pre, pim, cre, cim, delta, False)
    return bre_arr, bim_arr


def mic_backward_grad_block(const double[::1] pre, const double[::1] pim, const double[::1] cre, const double[::1] cim, double delta):
    return _mic_backward(pre, pim, cre, cim, delta, True)


cdef _mic_backward(const double[::1] pre, const double[::1] pim, const double[::1] cre, const double[::1] cim, double delta, bint want_grad):
    cdef Py_ssize_t n = pre.shape[0]
    cdef Py_ssize_t nc = cre.shape[0]
    bre_arr = np.empty(n, dtype=np.float64)
    bim_arr = np.empty(n, dtype=np.float64)
    jp_arr = np.empty((n if want_grad else 0, 2, 2), dtype=np.float64)
    jc_arr = np.empty((n if want_grad else 0, 2, nc, 2), dtype=np.float64)
    w_arr = np.empty(nc, dtype=np.float64)
    ure_arr = np.empty(nc, dtype=np.float64)
    uim_arr = np.empty(nc, dtype=np.float64)
    cdef double[::1] bre = bre_arr
    cdef double[::1] bim = bim_arr
    cdef double[:, :, ::1] jp = jp_arr
    cdef double[:, :, :, ::1] jc = jc_arr
    cdef double[::1] w = w_arr
    cdef double[::1] ure = ure_arr
    cdef double[::1] uim = uim_arr
    cdef Py_ssize_t i, j
    cdef double dx, dy, dist, mind, z, br, bi
    cdef double sur, sui, surc, suic, surd, suid, rre, rim
    with nogil:
        for i in range(n):
            mind = -1.0
            for j in range(nc):
                dx = pre[i] - cre[j]
                dy = pim[i] - cim[j]
                dist = sqrt(dx * dx + dy * dy)
                w[j] = dist
                if mind < 0.0 or dist < mind:
                    mind = dist
            z = 0.0
            for j in range(nc):
                dist = w[j]
                if want_grad:
                    if dist == 0.0:
                        ure[j] = 0.0
                        uim[j] = 0.0
                    else:
                        ure[j] = (pre[i] - cre[j]) / dist
                        uim[j] = (pim[i] - cim[j]) / dist
                w[j] = exp(-delta * (dist - mind))
                z += w[j]
            br = 0.0
            bi = 0.0
            for j in range(nc):
                w[j] /= z
                br += w[j] * cre[j]
                bi += w[j] * cim[j]
            bre[i] = br
            bim[i] = bi
            if want_grad:
                sur = 0.0
                sui = 0.0
                surc = 0.0
                suic = 0.0
                surd = 0.0
                suid = 0.0
                for j in range(nc):
                    sur += w[j] * ure[j]
                    sui += w[j] * uim[j]
                    surc += w[j] * ure[j] * cre[j]
                    suic += w[j] * uim[j] * cre[j]
                    surd += w[j] * ure[j] * cim[j]
                    suid += w[j] * uim[j] * cim[j]
                jp[i, 0, 0] = -delta * (surc - sur * br)
                jp[i, 0, 1] = -delta * (suic - sui * br)
                jp[i, 1, 0] = -delta * (surd - sur * bi)
                jp[i, 1, 1] = -delta * (suid - sui * bi)
                for j in range(nc):
                    rre = cre[j] - br
                    rim = cim[j] - bi
                    jc[i, 0, j, 0] = w[j] * (1.0 + delta * ure[j] * rre)
                    jc[i, 0, j, 1] = w[j] * (delta * uim[j] * rre)
                    jc[i, 1, j, 0] = w[j] * (delta * ure[j] * rim)
                    jc[i, 1, j, 1] = w[j] * (1.0 + delta * uim[j] * rim)
    if want_grad:
        return bre_arr, bim_arr, jp_arr, jc_arr
    return bre_arr, bim_arr, None, None

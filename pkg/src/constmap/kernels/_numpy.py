"""NumPy implementations of the block mapping kernels.

Contract shared with the compiled backend: float64 C-contiguous inputs,
first-index tie-breaking on every argmin, and identical arithmetic on the
hard forward paths so both backends agree bit for bit on mapped values.
Soft-path reductions (softmax sums, weighted means) may differ between
backends by rounding only.

Inputs are processed in row chunks to bound the transient distance-matrix
memory; chunking does not change any result because rows are independent.
"""

import numpy as np

_CHUNK = 1 << 15


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _gap(levels):
    return (levels[-1] - levels[0]) / (levels.shape[0] - 1)


def mrc_forward_block(x, d, levels):
    """Hard per-axis decision: nearest boundary, then a strict > test.

    Returns ``(level values, level indices)``; an input equal to its nearest
    boundary takes the lower interval (the step function is 0 at 0).
    """
    n = x.shape[0]
    y = np.empty(n)
    idx = np.empty(n, dtype=np.int64)
    for lo in range(0, n, _CHUNK):
        xs = x[lo : lo + _CHUNK]
        k = np.argmin(np.abs(xs[:, None] - d[None, :]), axis=1)
        ki = k + (xs > d[k])
        idx[lo : lo + _CHUNK] = ki
        y[lo : lo + _CHUNK] = levels[ki]
    return y, idx


def _mrc_soft(xs, d, c, delta, gap):
    diff = xs[:, None] - d[None, :]
    a = -delta * np.abs(diff)
    a -= a.max(axis=1, keepdims=True)
    e = np.exp(a)
    w = e / e.sum(axis=1, keepdims=True)
    dhat = w @ d
    chat = w @ c
    s = _sigmoid(delta * (xs - dhat))
    yb = chat + s * gap
    return diff, w, dhat, chat, s, yb


def mrc_backward_value_block(x, d, levels, delta):
    """Smooth stand-in for the hard decision: softmax over boundary distances
    feeds a sigmoid step of sharpness ``delta``."""
    gap = _gap(levels)
    c = levels[: d.shape[0]]
    n = x.shape[0]
    yb = np.empty(n)
    for lo in range(0, n, _CHUNK):
        yb[lo : lo + _CHUNK] = _mrc_soft(x[lo : lo + _CHUNK], d, c, delta, gap)[5]
    return yb


def mrc_backward_grad_block(x, d, levels, delta):
    """Soft value plus its exact derivatives.

    Returns ``(yb, gx, gd)`` with ``gx[i] = d yb[i] / d x[i]`` and
    ``gd[i, j] = d yb[i] / d d[j]``. ``sign(0) = 0`` at boundary hits.
    """
    gap = _gap(levels)
    m1 = d.shape[0]
    c = levels[:m1]
    n = x.shape[0]
    yb = np.empty(n)
    gx = np.empty(n)
    gd = np.empty((n, m1))
    for lo in range(0, n, _CHUNK):
        xs = x[lo : lo + _CHUNK]
        diff, w, dhat, chat, s, ybs = _mrc_soft(xs, d, c, delta, gap)
        sgn = np.sign(diff)
        ws = w * sgn
        ws_sum = ws.sum(axis=1)
        # d dhat/dx = -delta * Cov_w(sign, d); same shape for chat.
        ddhat_dx = -delta * (ws @ d - ws_sum * dhat)
        dchat_dx = -delta * (ws @ c - ws_sum * chat)
        sp = s * (1.0 - s)
        gx[lo : lo + _CHUNK] = dchat_dx + sp * delta * (1.0 - ddhat_dx) * gap
        ddhat_dd = w * (1.0 + delta * sgn * (d[None, :] - dhat[:, None]))
        dchat_dd = delta * sgn * w * (c[None, :] - chat[:, None])
        gd[lo : lo + _CHUNK] = dchat_dd - (sp * delta * gap)[:, None] * ddhat_dd
        yb[lo : lo + _CHUNK] = ybs
    return yb, gx, gd


def mic_forward_block(pre, pim, cre, cim):
    """Nearest constellation point by Euclidean distance (squared form).

    Returns ``(yre, yim, index)``; distance ties take the lowest index.
    """
    n = pre.shape[0]
    yre = np.empty(n)
    yim = np.empty(n)
    idx = np.empty(n, dtype=np.int64)
    for lo in range(0, n, _CHUNK):
        dre = pre[lo : lo + _CHUNK, None] - cre[None, :]
        dim = pim[lo : lo + _CHUNK, None] - cim[None, :]
        j = np.argmin(dre * dre + dim * dim, axis=1)
        idx[lo : lo + _CHUNK] = j
        yre[lo : lo + _CHUNK] = cre[j]
        yim[lo : lo + _CHUNK] = cim[j]
    return yre, yim, idx


def _mic_soft(pres, pims, cre, cim, delta):
    dre = pres[:, None] - cre[None, :]
    dim = pims[:, None] - cim[None, :]
    dist = np.sqrt(dre * dre + dim * dim)
    a = -delta * dist
    a -= a.max(axis=1, keepdims=True)
    e = np.exp(a)
    w = e / e.sum(axis=1, keepdims=True)
    bre = w @ cre
    bim = w @ cim
    return dre, dim, dist, w, bre, bim


def mic_backward_value_block(pre, pim, cre, cim, delta):
    """Distance-softmax convex combination of the constellation points."""
    n = pre.shape[0]
    bre = np.empty(n)
    bim = np.empty(n)
    for lo in range(0, n, _CHUNK):
        _, _, _, _, br, bi = _mic_soft(pre[lo : lo + _CHUNK], pim[lo : lo + _CHUNK], cre, cim, delta)
        bre[lo : lo + _CHUNK] = br
        bim[lo : lo + _CHUNK] = bi
    return bre, bim


def mic_backward_grad_block(pre, pim, cre, cim, delta):
    """Soft value plus exact jacobians.

    Returns ``(bre, bim, jp, jc)`` where ``jp[i, o, q]`` is the derivative of
    output component ``o`` w.r.t. input component ``q`` (0 = re, 1 = im) and
    ``jc[i, o, j, q]`` the derivative w.r.t. component ``q`` of point ``j``.
    The unit vector toward a point with zero distance is taken as 0.
    """
    n = pre.shape[0]
    nc = cre.shape[0]
    bre = np.empty(n)
    bim = np.empty(n)
    jp = np.empty((n, 2, 2))
    jc = np.empty((n, 2, nc, 2))
    for lo in range(0, n, _CHUNK):
        hi = lo + _CHUNK
        dre, dim, dist, w, br, bi = _mic_soft(pre[lo:hi], pim[lo:hi], cre, cim, delta)
        den = np.where(dist == 0.0, 1.0, dist)
        ure = dre / den
        uim = dim / den
        wure = w * ure
        wuim = w * uim
        sur = wure.sum(axis=1)
        sui = wuim.sum(axis=1)
        jp[lo:hi, 0, 0] = -delta * (wure @ cre - sur * br)
        jp[lo:hi, 0, 1] = -delta * (wuim @ cre - sui * br)
        jp[lo:hi, 1, 0] = -delta * (wure @ cim - sur * bi)
        jp[lo:hi, 1, 1] = -delta * (wuim @ cim - sui * bi)
        rre = cre[None, :] - br[:, None]
        rim = cim[None, :] - bi[:, None]
        jc[lo:hi, 0, :, 0] = w * (1.0 + delta * ure * rre)
        jc[lo:hi, 0, :, 1] = w * (delta * uim * rre)
        jc[lo:hi, 1, :, 0] = w * (delta * ure * rim)
        jc[lo:hi, 1, :, 1] = w * (1.0 + delta * uim * rim)
        bre[lo:hi] = br
        bim[lo:hi] = bi
    return bre, bim, jp, jc

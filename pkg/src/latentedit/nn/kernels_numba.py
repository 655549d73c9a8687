"""Numba-jitted convolution kernels (default hot path).

Same contracts as kernels_numpy: stride 1, "same" zero padding, odd square
kernels, NCHW layout.  Loops are arranged so the innermost loop runs over
contiguous memory (the image row) for SIMD auto-vectorisation, and every
output element is owned by exactly one parallel task, which keeps results
deterministic run to run.  fastmath stays off for the same reason.
"""

import numpy as np
from numba import njit, prange


@njit(parallel=True, cache=True)
def _conv2d_fwd_padded(xp, w, b, out):
    n, o, h, wd = out.shape
    c = w.shape[1]
    k = w.shape[2]
    for no in prange(n * o):
        ni = no // o
        oi = no % o
        for y in range(h):
            row = out[ni, oi, y]
            for x in range(wd):
                row[x] = b[oi]
            for ci in range(c):
                for dy in range(k):
                    xrow = xp[ni, ci, y + dy]
                    for dx in range(k):
                        wv = w[oi, ci, dy, dx]
                        for x in range(wd):
                            row[x] += wv * xrow[x + dx]


@njit(parallel=True, cache=True)
def _conv2d_dx_padded(dout, w, dxp):
    n, o, h, wd = dout.shape
    c = w.shape[1]
    k = w.shape[2]
    for nc in prange(n * c):
        ni = nc // c
        ci = nc % c
        for oi in range(o):
            for y in range(h):
                drow = dout[ni, oi, y]
                for dy in range(k):
                    xrow = dxp[ni, ci, y + dy]
                    for dx in range(k):
                        wv = w[oi, ci, dy, dx]
                        for x in range(wd):
                            xrow[x + dx] += wv * drow[x]


@njit(parallel=True, cache=True)
def _conv2d_dw_padded(xp, dout, dw):
    n, o, h, wd = dout.shape
    c = xp.shape[1]
    k = dw.shape[2]
    for oc in prange(o * c):
        oi = oc // c
        ci = oc % c
        for dy in range(k):
            for dx in range(k):
                acc = 0.0
                for ni in range(n):
                    for y in range(h):
                        drow = dout[ni, oi, y]
                        xrow = xp[ni, ci, y + dy]
                        for x in range(wd):
                            acc += drow[x] * xrow[x + dx]
                dw[oi, ci, dy, dx] = acc


def _pad(x: np.ndarray, p: int) -> np.ndarray:
    if not p:
        return np.ascontiguousarray(x)
    return np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))


def conv2d_fwd(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, _, h, wd = x.shape
    o, _, k, _ = w.shape
    out = np.empty((n, o, h, wd), dtype=x.dtype)
    _conv2d_fwd_padded(_pad(x, k // 2), w, b, out)
    return out


def conv2d_dx(dout: np.ndarray, w: np.ndarray) -> np.ndarray:
    n, _, h, wd = dout.shape
    c = w.shape[1]
    k = w.shape[2]
    p = k // 2
    dxp = np.zeros((n, c, h + 2 * p, wd + 2 * p), dtype=dout.dtype)
    _conv2d_dx_padded(np.ascontiguousarray(dout), w, dxp)
    if p:
        return np.ascontiguousarray(dxp[:, :, p:p + h, p:p + wd])
    return dxp


def conv2d_dw(x: np.ndarray, dout: np.ndarray, k: int) -> np.ndarray:
    o = dout.shape[1]
    c = x.shape[1]
    dw = np.empty((o, c, k, k), dtype=x.dtype)
    _conv2d_dw_padded(_pad(x, k // 2), np.ascontiguousarray(dout), dw)
    return dw

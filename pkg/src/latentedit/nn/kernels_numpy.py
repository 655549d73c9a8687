"""Pure-numpy convolution kernels (BLAS-backed fallback path).

All convolutions are stride-1 with "same" zero padding and square odd
kernels (1x1 or 3x3 in practice).  The per-offset tensordot formulation
keeps the heavy lifting inside BLAS without materialising im2col buffers.
Layouts are NCHW throughout.
"""

import numpy as np


def conv2d_fwd(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """out[n,o,y,x] = b[o] + sum_{c,dy,dx} w[o,c,dy,dx] * xpad[n,c,y+dy,x+dx]."""
    n, c, h, wd = x.shape
    o, _, k, _ = w.shape
    p = k // 2
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
    out = np.empty((n, o, h, wd), dtype=x.dtype)
    out[:] = b.reshape(1, o, 1, 1)
    for dy in range(k):
        for dx in range(k):
            # (o,c) x (n,c,h,w) -> (o,n,h,w)
            part = np.tensordot(w[:, :, dy, dx], xp[:, :, dy:dy + h, dx:dx + wd], axes=([1], [1]))
            out += part.transpose(1, 0, 2, 3)
    return out


def conv2d_dx(dout: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Gradient of conv2d_fwd w.r.t. its input."""
    n, o, h, wd = dout.shape
    _, c, k, _ = w.shape
    p = k // 2
    dxp = np.zeros((n, c, h + 2 * p, wd + 2 * p), dtype=dout.dtype)
    for dy in range(k):
        for dx in range(k):
            part = np.tensordot(w[:, :, dy, dx], dout, axes=([0], [1]))  # (c,n,h,w)
            dxp[:, :, dy:dy + h, dx:dx + wd] += part.transpose(1, 0, 2, 3)
    if p:
        return np.ascontiguousarray(dxp[:, :, p:p + h, p:p + wd])
    return dxp


def conv2d_dw(x: np.ndarray, dout: np.ndarray, k: int) -> np.ndarray:
    """Gradient of conv2d_fwd w.r.t. the kernel weights."""
    n, c, h, wd = x.shape
    o = dout.shape[1]
    p = k // 2
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
    dw = np.empty((o, c, k, k), dtype=x.dtype)
    for dy in range(k):
        for dx in range(k):
            dw[:, :, dy, dx] = np.tensordot(
                dout, xp[:, :, dy:dy + h, dx:dx + wd], axes=([0, 2, 3], [0, 2, 3])
            )
    return dw

"""Pure numpy implementations of the resampling kernels.

Same arithmetic as ``_kernels.pyx``; selected automatically when the compiled
extension is unavailable or ``ORBITPOOL_PURE_PYTHON=1``.
"""

import numpy as np

KEYS_A = -0.5


def cubic_weights(frac):
    """Keys cubic-convolution weights for taps at offsets -1, 0, 1, 2."""
    a = KEYS_A
    f = frac
    t0 = 1.0 + f
    t1 = f
    t2 = 1.0 - f
    t3 = 2.0 - f
    w0 = ((a * t0 - 5.0 * a) * t0 + 8.0 * a) * t0 - 4.0 * a
    w1 = ((a + 2.0) * t1 - (a + 3.0)) * t1 * t1 + 1.0
    w2 = ((a + 2.0) * t2 - (a + 3.0)) * t2 * t2 + 1.0
    w3 = ((a * t3 - 5.0 * a) * t3 + 8.0 * a) * t3 - 4.0 * a
    return w0, w1, w2, w3


def warp_affine(src, coeffs, order):
    """Resample ``src`` at ``(u, v) = A (j, i) + b`` for every output pixel.

    ``coeffs = (a11, a12, b1, a21, a22, b2)`` maps output column ``j`` and row
    ``i`` to fractional source column ``u`` and row ``v``.  Samples outside the
    grid read as zero.
    """
    src = np.ascontiguousarray(src, dtype=np.float64)
    nr, nc = src.shape
    a11, a12, b1, a21, a22, b2 = (float(c) for c in coeffs)
    jj = np.arange(nc, dtype=np.float64)[None, :]
    ii = np.arange(nr, dtype=np.float64)[:, None]
    u = a11 * jj + a12 * ii + b1
    v = a21 * jj + a22 * ii + b2
    u0 = np.floor(u)
    v0 = np.floor(v)
    fu = u - u0
    fv = v - v0
    u0 = u0.astype(np.int64)
    v0 = v0.astype(np.int64)
    if order == 3:
        wu = cubic_weights(fu)
        wv = cubic_weights(fv)
        taps = (-1, 0, 1, 2)
    elif order == 1:
        wu = (1.0 - fu, fu)
        wv = (1.0 - fv, fv)
        taps = (0, 1)
    else:
        raise ValueError(f"unsupported interpolation order {order}")
    flat = src.ravel()
    out = np.zeros((nr, nc))
    for p, dv in enumerate(taps):
        rows = v0 + dv
        rok = (rows >= 0) & (rows < nr)
        acc = np.zeros((nr, nc))
        for q, du in enumerate(taps):
            cols = u0 + du
            ok = rok & (cols >= 0) & (cols < nc)
            idx = np.where(ok, rows * nc + cols, 0)
            acc += wu[q] * np.where(ok, flat[idx], 0.0)
        out += wv[p] * acc
    return out


def correlate_axis(src, offsets, weights, axis):
    """``out[k] = sum_d weights[d] * src[k + offsets[d]]`` along ``axis``, zero padded."""
    src = np.ascontiguousarray(src, dtype=np.float64)
    moved = np.moveaxis(src, axis, -1)
    n = moved.shape[-1]
    out = np.zeros_like(moved)
    for off, w in zip(offsets, weights):
        off = int(off)
        if off >= n or off <= -n:
            continue
        if off >= 0:
            out[..., : n - off] += w * moved[..., off:]
        else:
            out[..., -off:] += w * moved[..., : n + off]
    return np.ascontiguousarray(np.moveaxis(out, -1, axis))

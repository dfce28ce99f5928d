"""Pure numpy versions of the compiled stencil kernels in ``_core.pyx``.

Same signatures and the same per-cell accumulation order, one offset at a
time, vectorized over the grid.
"""
import numpy as np


def _overlap(n, d):
    # destination / source slices along one axis for a shift by d
    if abs(d) >= n:
        return slice(0, 0), slice(0, 0)
    if d >= 0:
        return slice(0, n - d), slice(d, n)
    return slice(-d, n), slice(0, n + d)


def _slices(shape, off):
    (dx, sx), (dy, sy) = _overlap(shape[0], int(off[0])), _overlap(shape[1], int(off[1]))
    return (dx, dy), (sx, sy)


def stencil_sum(g, offsets, weights):
    g = np.asarray(g, dtype=np.float64)
    out = np.zeros_like(g)
    for off, w in zip(offsets, weights):
        dst, src = _slices(g.shape, off)
        out[dst] += w * g[src]
    return out


def pair_energy(g, offsets, weights):
    g = np.asarray(g, dtype=np.float64)
    total = 0.0
    for off, w in zip(offsets, weights):
        dst, src = _slices(g.shape, off)
        d = g[src] - g[dst]
        total += float(w * np.sum(d * d))
    return total


def bilateral_rhs(u, offsets, weights, inv_h2):
    u = np.asarray(u, dtype=np.float64)
    out = np.zeros_like(u)
    for off, w in zip(offsets, weights):
        dst, src = _slices(u.shape, off)
        d = u[src] - u[dst]
        out[dst] += w * np.exp(-d * d * inv_h2) * d
    return out

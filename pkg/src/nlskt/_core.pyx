# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stencil kernels.

All arrays are 2D C-contiguous float64 grids (1D problems use shape ``(n, 1)``).
Offsets are integer index shifts; entries that leave the grid are dropped,
which realizes integration over the bounded domain only.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()


cdef inline void _span(Py_ssize_t n, Py_ssize_t d, Py_ssize_t* lo, Py_ssize_t* hi) noexcept nogil:
    # indices i with 0 <= i + d < n
    lo[0] = -d if d < 0 else 0
    hi[0] = n - d if d > 0 else n
    if hi[0] < lo[0]:
        hi[0] = lo[0]


def stencil_sum(const double[:, ::1] g, const long[:, ::1] offsets,
                const double[::1] weights):
    cdef Py_ssize_t nx = g.shape[0], ny = g.shape[1], ns = weights.shape[0]
    cdef Py_ssize_t i, j, k, dx, dy, i0, i1, j0, j1
    cdef double w
    out = np.zeros((nx, ny), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for k in range(ns):
            dx = offsets[k, 0]
            dy = offsets[k, 1]
            w = weights[k]
            _span(nx, dx, &i0, &i1)
            _span(ny, dy, &j0, &j1)
            for i in range(i0, i1):
                for j in range(j0, j1):
                    o[i, j] += w * g[i + dx, j + dy]
    return out


def pair_energy(const double[:, ::1] g, const long[:, ::1] offsets,
                const double[::1] weights):
    cdef Py_ssize_t nx = g.shape[0], ny = g.shape[1], ns = weights.shape[0]
    cdef Py_ssize_t i, j, k, dx, dy, i0, i1, j0, j1
    cdef double d, part, total = 0.0
    with nogil:
        for k in range(ns):
            dx = offsets[k, 0]
            dy = offsets[k, 1]
            _span(nx, dx, &i0, &i1)
            _span(ny, dy, &j0, &j1)
            part = 0.0
            for i in range(i0, i1):
                for j in range(j0, j1):
                    d = g[i + dx, j + dy] - g[i, j]
                    part += d * d
            total += weights[k] * part
    return total


def _mirror_pairs(const long[:, ::1] offsets):
    """Match each offset with a distinct copy of its negation.

    Returns ``(partner, lead)``: ``partner[k]`` is the matched index or -1,
    ``lead[k]`` is 1 for the member that handles the pair (or an unmatched
    offset) and 0 for the member that is skipped.
    """
    ns = offsets.shape[0]
    partner = np.full(ns, -1, dtype=np.intp)
    lead = np.ones(ns, dtype=np.intp)
    free = {}
    for k in range(ns):
        key = (int(offsets[k, 0]), int(offsets[k, 1]))
        if key == (0, 0):
            continue
        neg = (-key[0], -key[1])
        if free.get(neg):
            m = free[neg].pop()
            partner[k], partner[m] = m, k
            lead[k] = 0
        else:
            free.setdefault(key, []).append(k)
    return partner, lead


def bilateral_rhs(const double[:, ::1] u, const long[:, ::1] offsets,
                  const double[::1] weights, double inv_h2):
    cdef Py_ssize_t nx = u.shape[0], ny = u.shape[1], ns = weights.shape[0]
    cdef Py_ssize_t i, j, k, m, dx, dy, i0, i1, j0, j1
    cdef double w, wm, d, e
    p, q = _mirror_pairs(offsets)
    cdef Py_ssize_t[::1] partner = p
    cdef Py_ssize_t[::1] lead = q
    out = np.zeros((nx, ny), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for k in range(ns):
            dx = offsets[k, 0]
            dy = offsets[k, 1]
            if dx == 0 and dy == 0:
                continue
            # a +-offset pair shares exp(-d^2/h^2) and is visited once
            if lead[k] == 0:
                continue
            m = partner[k]
            w = weights[k]
            wm = weights[m] if m >= 0 else 0.0
            _span(nx, dx, &i0, &i1)
            _span(ny, dy, &j0, &j1)
            for i in range(i0, i1):
                for j in range(j0, j1):
                    d = u[i + dx, j + dy] - u[i, j]
                    e = d if inv_h2 == 0.0 else exp(-d * d * inv_h2) * d
                    o[i, j] += w * e
                    o[i + dx, j + dy] -= wm * e
    return out

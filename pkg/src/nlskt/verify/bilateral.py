"""Iterated bilateral filtering as an explicit nonlocal diffusion with a
state-dependent Gaussian range kernel.

The spatial weight is ``exp(-|x - y|^2 / rho^2)`` truncated at ``3 rho`` and
the range weight ``exp(-|u(x) - u(y)|^2 / h^2)``; ``h = inf`` drops the range
factor.
"""
from __future__ import annotations

import math

import numpy as np

from nlskt import _backend
from nlskt.errors import UnstableStep
from nlskt.grid import Field
from nlskt.kernel import KernelSpec, KernelTable, build_table

SUPPORT = 3.0


def spatial_kernel(spatial_scale: float, dim: int) -> KernelSpec:
    """``exp(-r^2 / rho^2)`` on ``r <= 3 rho`` (not unit mass)."""
    base = KernelSpec("truncated-gaussian", SUPPORT * spatial_scale, dim=dim,
                      width=spatial_scale / math.sqrt(2.0))
    return KernelSpec("truncated-gaussian", base.rho, dim=dim, width=base.width,
                      amplitude=1.0 / float(base.profile(0.0)))


def spatial_table(image: Field, spatial_scale: float) -> KernelTable:
    return build_table(spatial_kernel(spatial_scale, image.domain.dim), image.domain)


def _inv_h2(range_scale: float) -> float:
    if not range_scale > 0:
        raise ValueError(f"range scale must be positive, got {range_scale}")
    return 0.0 if math.isinf(range_scale) else 1.0 / range_scale ** 2


def default_tau(table: KernelTable) -> float:
    """``1 / (2 max mass)``: keeps every update a convex combination."""
    return 0.5 / table.J1


def bilateral_rhs(image: Field, table: KernelTable, range_scale: float) -> Field:
    g = image.grid()
    out = _backend.bilateral_rhs(g, table.offsets, table.weights, _inv_h2(range_scale))
    return image.with_values(out)


def _step(image: Field, table: KernelTable, range_scale: float, tau: float, span: float) -> Field:
    new = image.values + tau * bilateral_rhs(image, table, range_scale).values
    centre = 0.5 * (image.values.max() + image.values.min())
    if not np.all(np.isfinite(new)) or np.max(np.abs(new - centre)) > max(span, 1e-300) * 2.0:
        raise UnstableStep(f"explicit step with tau={tau} blew up")
    return image.with_values(new)


def bilateral_step(image: Field, spatial_scale: float, range_scale: float, tau: float | None = None,
                   table: KernelTable | None = None) -> Field:
    """One explicit Euler step of the bilateral flow."""
    if not spatial_scale > 0:
        raise ValueError(f"spatial scale must be positive, got {spatial_scale}")
    table = table or spatial_table(image, spatial_scale)
    tau = default_tau(table) if tau is None else tau
    span = float(image.values.max() - image.values.min())
    return _step(image, table, range_scale, tau, span)


def bilateral_filter(image: Field, spatial_scale: float, range_scale: float, t_final: float,
                     tau: float | None = None, callback=None) -> Field:
    """Iterate :func:`bilateral_step` up to ``t_final``; the range kernel is
    re-evaluated from the current image at every step."""
    table = spatial_table(image, spatial_scale)
    tau = default_tau(table) if tau is None else tau
    if not tau > 0:
        raise ValueError("tau must be positive")
    span = float(image.values.max() - image.values.min())
    t, k = 0.0, 0
    u = image
    while t_final - t > 1e-12 * max(t_final, 1.0):
        dt = min(tau, t_final - t)
        u = _step(u, table, range_scale, dt, span)
        t += dt
        k += 1
        if callback is not None:
            callback(k, u)
    return u

"""Radial interaction kernels and their precomputed grid stencils.

A :class:`KernelSpec` describes an even, nonnegative, compactly supported
kernel ``J`` on R^d. :func:`build_table` turns it into a translation-invariant
stencil on a :class:`~nlskt.grid.Domain` together with the boundary-truncated
mass function ``m(x) = int_Omega J(x - y) dy``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate as sp_integrate
from scipy.special import erf

from nlskt import _backend
from nlskt.errors import DegenerateKernel, InvalidDelta
from nlskt.grid import Domain, Field

FAMILIES = ("uniform-ball", "truncated-gaussian", "table")

# composite Gauss-Legendre used for 2D cell averages
_SUBCELLS = 8
_GAUSS_ORDER = 4


@dataclass(frozen=True)
class KernelSpec:
    """Even kernel ``J(z) = amplitude * profile(|z|)`` supported in ``|z| <= rho``.

    ``uniform-ball`` and ``truncated-gaussian`` profiles carry unit mass on R^d
    (the Gaussian is renormalized after truncation at ``rho``). A ``table``
    kernel interpolates ``values`` linearly in ``|z|`` over ``radii`` and is
    not renormalized.
    """

    family: str
    rho: float
    dim: int = 1
    width: float | None = None
    amplitude: float = 1.0
    radii: tuple[float, ...] | None = None
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; choose from {FAMILIES}")
        if self.dim not in (1, 2):
            raise ValueError("kernel dimension must be 1 or 2")
        if not (self.rho > 0 and math.isfinite(self.rho)):
            raise ValueError(f"support radius must be positive, got {self.rho}")
        if not self.amplitude > 0:
            raise ValueError(f"amplitude must be positive, got {self.amplitude}")
        if self.family == "truncated-gaussian" and not (self.width and self.width > 0):
            raise ValueError("truncated-gaussian kernels need a positive width")
        if self.family == "table":
            if self.radii is None or self.values is None or len(self.radii) != len(self.values):
                raise ValueError("table kernels need radii and values of equal length")
            r = np.asarray(self.radii, float)
            if r[0] != 0.0 or np.any(np.diff(r) <= 0) or not np.isclose(r[-1], self.rho):
                raise ValueError("table radii must increase from 0 to rho")
            if np.any(np.asarray(self.values, float) < 0):
                raise ValueError("table values must be nonnegative")

    def profile(self, r) -> np.ndarray:
        """Kernel value as a function of the distance ``r >= 0``."""
        r = np.asarray(r, dtype=float)
        inside = r <= self.rho
        if self.family == "uniform-ball":
            vol = 2.0 * self.rho if self.dim == 1 else math.pi * self.rho ** 2
            base = np.full(r.shape, 1.0 / vol)
        elif self.family == "truncated-gaussian":
            w = self.width
            if self.dim == 1:
                z = w * math.sqrt(2 * math.pi) * erf(self.rho / (w * math.sqrt(2)))
            else:
                z = 2 * math.pi * w * w * (-math.expm1(-self.rho ** 2 / (2 * w * w)))
            base = np.exp(-r * r / (2 * w * w)) / z
        else:
            base = np.interp(r, self.radii, self.values)
        return np.where(inside, self.amplitude * base, 0.0)


def evaluate(spec: KernelSpec, z) -> np.ndarray | float:
    """``J(z)``; in 2D the last axis of ``z`` holds the coordinates."""
    z = np.asarray(z, dtype=float)
    if spec.dim == 1:
        r = np.abs(z)
    else:
        r = np.sqrt(np.sum(z * z, axis=-1))
    out = spec.profile(r)
    return float(out) if out.ndim == 0 else out


def second_moment(spec: KernelSpec) -> float:
    """``int J(z) z_d^2 dz`` over the support, by adaptive radial quadrature."""
    if spec.dim == 1:
        fn, factor = (lambda r: float(spec.profile(r)) * r * r), 2.0
    else:
        # int_0^rho int_0^{2 pi} J(r) r^2 sin^2(t) r dt dr
        fn, factor = (lambda r: float(spec.profile(r)) * r ** 3), math.pi
    points = None
    if spec.family == "table":
        points = [r for r in spec.radii[1:-1]] or None
    val, _ = sp_integrate.quad(fn, 0.0, spec.rho, points=points, epsabs=0.0, epsrel=1e-13, limit=200)
    return factor * val


def normalizer_c1(spec: KernelSpec) -> float:
    m2 = second_moment(spec)
    if not m2 > 0:
        raise DegenerateKernel("kernel has zero second moment")
    return 2.0 / m2


def rescale(spec: KernelSpec, delta: float) -> KernelSpec:
    """``J_delta(z) = c1 / delta^(2+d) * J(z / delta)`` with ``c1 = 2 / int J z_d^2``."""
    if not (math.isfinite(delta) and 0 < delta <= 1):
        raise InvalidDelta(f"delta must lie in (0, 1], got {delta}")
    c1 = normalizer_c1(spec)
    if spec.family == "table":
        return replace(spec, rho=spec.rho * delta,
                       radii=tuple(r * delta for r in spec.radii),
                       amplitude=spec.amplitude * c1 / delta ** (2 + spec.dim))
    # unit-mass families already carry the delta^-d of the dilation
    width = None if spec.width is None else spec.width * delta
    return replace(spec, rho=spec.rho * delta, width=width,
                   amplitude=spec.amplitude * c1 / delta ** 2)


@dataclass(frozen=True, eq=False)
class KernelTable:
    """Stencil ``offset -> J h^d`` on a domain, plus the mass function.

    ``weights[k]`` is the integral of ``J`` over the cell displaced by
    ``offsets[k]`` (index units), so ``sum_k weights[k] g(x + offsets[k] h)``
    approximates ``int J(x - y) g(y) dy``.
    """

    domain: Domain
    offsets: np.ndarray
    weights: np.ndarray
    mass: Field
    J0: float
    J1: float
    linf: float
    spec: KernelSpec | None = None

    @classmethod
    def from_weights(cls, domain: Domain, offsets, weights, spec=None) -> KernelTable:
        offsets = np.asarray(offsets, dtype=np.int64).reshape(-1, domain.dim)
        weights = np.ascontiguousarray(weights, dtype=np.float64).reshape(-1)
        if offsets.shape[0] != weights.shape[0]:
            raise ValueError("one weight per offset required")
        off2 = np.zeros((offsets.shape[0], 2), dtype=np.int64)
        off2[:, :domain.dim] = offsets
        off2.flags.writeable = False
        weights.flags.writeable = False
        ones = np.ones(domain.grid_shape)
        mass = _backend.stencil_sum(ones, off2, weights)
        linf = float(weights.max() / domain.cell_volume) if weights.size else 0.0
        return cls(domain, off2, weights, Field(domain, mass),
                   float(mass.min()), float(mass.max()), linf, spec)

    @classmethod
    def zero(cls, domain: Domain) -> KernelTable:
        """The table of ``J = 0``; only useful as a reaction-only reference."""
        return cls.from_weights(domain, np.zeros((0, domain.dim)), np.zeros(0))

    @property
    def row_l1(self) -> float:
        """Full (untruncated) stencil mass ``sum_k |w_k|``."""
        return float(np.sum(np.abs(self.weights)))

    def positions(self) -> np.ndarray:
        """Physical offsets ``offsets * h``, shape ``(S, dim)``."""
        return self.offsets[:, :self.domain.dim] * np.asarray(self.domain.h)

    def first_moment(self) -> np.ndarray:
        return self.weights @ self.positions()

    def discrete_second_moment(self) -> float:
        z = self.positions()[:, -1]
        return float(self.weights @ (z * z))

    def interior_mask(self) -> np.ndarray:
        """Cells whose full stencil lies inside the domain."""
        mask = np.ones(self.domain.shape, dtype=bool)
        if self.offsets.shape[0] == 0:
            return mask
        for axis, n in enumerate(self.domain.cells):
            reach = int(np.max(np.abs(self.offsets[:, axis])))
            idx = np.arange(n)
            ok = (idx >= reach) & (idx < n - reach)
            shape = [1] * self.domain.dim
            shape[axis] = n
            mask &= ok.reshape(shape)
        return mask


def _cell_integrals_1d(spec: KernelSpec, h: float, reach: int) -> np.ndarray:
    out = np.zeros(reach + 1)
    for k in range(reach + 1):
        a, b = (k - 0.5) * h, min((k + 0.5) * h, spec.rho)
        a = max(a, -spec.rho)
        if b <= a:
            continue
        if spec.family == "uniform-ball":
            out[k] = float(spec.profile(0.0)) * (b - a)
            continue
        pts = None
        if spec.family == "table":
            pts = [r for r in spec.radii if a < r < b] or None
        out[k], _ = sp_integrate.quad(lambda z: float(spec.profile(abs(z))), a, b,
                                      points=pts, epsabs=0.0, epsrel=1e-12, limit=200)
    return out


def _cell_integrals_2d(spec: KernelSpec, h: tuple[float, float], reach: tuple[int, int]) -> np.ndarray:
    x, w = np.polynomial.legendre.leggauss(_GAUSS_ORDER)
    sub = (np.arange(_SUBCELLS)[:, None] + 0.5 * (x[None, :] + 1.0)) / _SUBCELLS - 0.5
    nodes, wts = sub.ravel(), np.tile(w / (2 * _SUBCELLS), _SUBCELLS)
    kx = np.arange(-reach[0], reach[0] + 1)
    ky = np.arange(-reach[1], reach[1] + 1)
    px = (kx[:, None] + nodes[None, :]) * h[0]
    py = (ky[:, None] + nodes[None, :]) * h[1]
    r = np.sqrt(px[:, None, :, None] ** 2 + py[None, :, None, :] ** 2)
    vals = spec.profile(r)
    out = np.einsum("ijab,a,b->ij", vals, wts, wts) * h[0] * h[1]
    # average the four mirror images, then copy one quadrant so evenness is bitwise exact
    out = 0.25 * (out + out[::-1, :] + out[:, ::-1] + out[::-1, ::-1])
    quad = out[reach[0]:, reach[1]:]
    return quad[np.abs(kx)[:, None], np.abs(ky)[None, :]]


def build_table(spec: KernelSpec, domain: Domain, moment_match: bool = False) -> KernelTable:
    """Precompute the stencil of ``spec`` on ``domain``.

    Weights are exact cell averages of ``J`` times the cell volume (adaptive
    quadrature in 1D, composite Gauss-Legendre in 2D). With ``moment_match``
    the weights are scaled so that the discrete second moment equals
    :func:`second_moment` of ``spec``.
    """
    if spec.dim != domain.dim:
        raise ValueError(f"kernel dimension {spec.dim} != domain dimension {domain.dim}")
    h = domain.h
    if spec.rho < min(h):
        raise DegenerateKernel(f"support radius {spec.rho} below grid spacing {min(h)}")
    reach = tuple(min(math.ceil(spec.rho / hk - 0.5), n - 1) for hk, n in zip(h, domain.cells))
    if domain.dim == 1:
        half = _cell_integrals_1d(spec, h[0], reach[0])
        ks = np.arange(-reach[0], reach[0] + 1)
        w = half[np.abs(ks)]
        offsets = ks[:, None]
    else:
        grid = _cell_integrals_2d(spec, h, reach)
        kx, ky = np.meshgrid(np.arange(-reach[0], reach[0] + 1),
                             np.arange(-reach[1], reach[1] + 1), indexing="ij")
        offsets = np.stack([kx.ravel(), ky.ravel()], axis=1)
        w = grid.ravel()
    keep = w > 0
    offsets, w = offsets[keep], w[keep]
    table = KernelTable.from_weights(domain, offsets, w, spec)
    if moment_match:
        target = second_moment(spec)
        w = w * (target / table.discrete_second_moment())
        table = KernelTable.from_weights(domain, offsets, w, spec)
    if not table.J0 > 0:
        raise DegenerateKernel(f"discrete mass function vanishes somewhere (J0={table.J0})")
    return table

"""Uniform cell-centred grids on boxes in one or two dimensions.

Fields hold one value per cell and are read-only once built. Integrals use
the midpoint rule, so every quadrature weight equals the cell volume.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from nlskt.errors import DomainError


@dataclass(frozen=True)
class Domain:
    """Box ``prod_k (lower[k], upper[k])`` split into ``cells[k]`` cells per axis."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    cells: tuple[int, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        cells = tuple(int(v) for v in np.atleast_1d(self.cells))
        if not (len(lower) == len(upper) == len(cells)) or len(cells) not in (1, 2):
            raise DomainError("lower, upper and cells must all have length 1 or 2")
        if any(n < 3 for n in cells):
            raise DomainError(f"need at least 3 cells per axis, got {cells}")
        if any(not (hi > lo) for lo, hi in zip(lower, upper)):
            raise DomainError(f"empty box: lower={lower}, upper={upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "cells", cells)

    @classmethod
    def interval(cls, a: float, b: float, n: int) -> Domain:
        return cls((a,), (b,), (n,))

    @classmethod
    def box(cls, lower, upper, cells) -> Domain:
        return cls(tuple(lower), tuple(upper), tuple(cells))

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def h(self) -> tuple[float, ...]:
        return tuple((hi - lo) / n for lo, hi, n in zip(self.lower, self.upper, self.cells))

    @property
    def cell_volume(self) -> float:
        return math.prod(self.h)

    @property
    def volume(self) -> float:
        return math.prod(hi - lo for lo, hi in zip(self.lower, self.upper))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cells

    @property
    def size(self) -> int:
        return math.prod(self.cells)

    @property
    def grid_shape(self) -> tuple[int, int]:
        """Shape of the 2D work arrays used by the stencil kernels."""
        return (self.cells[0], 1) if self.dim == 1 else self.cells

    def axes(self) -> list[np.ndarray]:
        return [lo + (np.arange(n) + 0.5) * h
                for lo, n, h in zip(self.lower, self.cells, self.h)]

    def coords(self) -> np.ndarray:
        """Cell centres, shape ``cells + (dim,)``."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(mesh, axis=-1)

    def field(self, values) -> Field:
        return Field(self, values)

    def sample(self, fn) -> Field:
        """Evaluate ``fn(*axes)`` at the cell centres."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return Field(self, np.broadcast_to(fn(*mesh), self.shape))

    def constant(self, value: float) -> Field:
        return Field(self, np.full(self.shape, float(value)))


@dataclass(frozen=True, eq=False)
class Field:
    domain: Domain
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.size != self.domain.size:
            raise DomainError(f"field has {v.size} values, domain has {self.domain.size} cells")
        v = v.reshape(self.domain.shape)
        if not np.all(np.isfinite(v)):
            raise DomainError("field values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def grid(self) -> np.ndarray:
        """Values as a C-contiguous 2D array for the stencil kernels."""
        return np.ascontiguousarray(self.values.reshape(self.domain.grid_shape))

    def with_values(self, values) -> Field:
        return Field(self.domain, values)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass(frozen=True, eq=False)
class State:
    """Two species on one domain at time ``t``."""

    u1: Field
    u2: Field
    t: float = 0.0

    def __post_init__(self):
        if self.u1.domain != self.u2.domain:
            raise DomainError("both species must live on the same domain")
        if not self.t >= 0:
            raise DomainError(f"time stamp must be >= 0, got {self.t}")

    @classmethod
    def from_arrays(cls, domain: Domain, u1, u2, t: float = 0.0) -> State:
        return cls(Field(domain, u1), Field(domain, u2), float(t))

    @property
    def domain(self) -> Domain:
        return self.u1.domain

    @property
    def fields(self) -> tuple[Field, Field]:
        return (self.u1, self.u2)

    def stacked(self) -> np.ndarray:
        """Array of shape ``(2,) + domain.shape``."""
        return np.stack([self.u1.values, self.u2.values])

    def swapped(self) -> State:
        return State(self.u2, self.u1, self.t)


class Norms(NamedTuple):
    l1: float
    l2sq: float
    linf: float


def integrate(f: Field) -> float:
    return float(np.sum(f.values) * f.domain.cell_volume)


def norms(f: Field) -> Norms:
    v = f.values
    vol = f.domain.cell_volume
    return Norms(float(np.sum(np.abs(v)) * vol),
                 float(np.sum(v * v) * vol),
                 float(np.max(np.abs(v))))


def split_signs(f: Field) -> tuple[Field, Field]:
    """Positive and negative parts, ``f = plus - minus`` with both >= 0."""
    v = f.values
    return f.with_values(np.maximum(v, 0.0)), f.with_values(np.maximum(-v, 0.0))

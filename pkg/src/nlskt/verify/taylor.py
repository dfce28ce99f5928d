"""Consistency of the rescaled nonlocal operator with the second derivative."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from nlskt.dynamics import nonlocal_apply
from nlskt.grid import Domain
from nlskt.kernel import KernelSpec, build_table, rescale


@dataclass(frozen=True)
class TaylorRow:
    delta: float
    error: float        # max interior |A_delta(u) - u''|
    first_moment: float  # |sum_k w_k xi_k| / sum_k |w_k xi_k|
    interior_cells: int


@dataclass(frozen=True)
class TaylorReport:
    rows: tuple[TaylorRow, ...]
    order: float

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.error for r in self.rows])

    @property
    def decreasing(self) -> bool:
        e = self.errors
        return bool(np.all(np.diff(e) < 0))


def fitted_order(deltas, errors) -> float:
    """Least-squares slope of ``log error`` against ``log delta``."""
    d, e = np.asarray(deltas, float), np.asarray(errors, float)
    if len(d) < 2 or np.any(e <= 0):
        return float("inf") if np.all(e == 0) else float("nan")
    return float(np.polyfit(np.log(d), np.log(e), 1)[0])


def taylor_consistency(fn: Callable, second_derivative: Callable, deltas: Sequence[float],
                       base: KernelSpec, domain: Domain, moment_match: bool = True) -> TaylorReport:
    """Compare ``A_delta(u)`` with ``u''`` on cells whose full stencil is inside the domain."""
    if domain.dim != 1:
        raise ValueError("taylor_consistency works on 1D domains")
    x = domain.axes()[0]
    u = domain.field(fn(x))
    exact = np.asarray(second_derivative(x), float) * np.ones_like(x)
    rows = []
    for delta in deltas:
        table = build_table(rescale(base, delta), domain, moment_match=moment_match)
        inner = table.interior_mask()
        if not inner.any():
            raise ValueError(f"no interior cells at delta={delta}")
        approx = nonlocal_apply(table, u).values
        xi = table.positions()[:, 0]
        fm = abs(float(table.weights @ xi)) / float(np.abs(table.weights) @ np.abs(xi))
        err = float(np.max(np.abs(approx - exact)[inner]))
        rows.append(TaylorRow(float(delta), err, fm, int(inner.sum())))
    order = fitted_order([r.delta for r in rows], [r.error for r in rows])
    return TaylorReport(tuple(rows), order)

"""Convergence of the rescaled nonlocal heat flow to the Neumann heat equation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from nlskt.dynamics import Coefficients
from nlskt.grid import Domain, State
from nlskt.kernel import KernelSpec, build_table, rescale
from nlskt.stepper import StepConfig, simulate

# p_1(u) = u_1 with no reaction and an empty second species
LINEAR_HEAT = Coefficients(c=(1.0, 0.0))

DEFAULT_BASE = KernelSpec("uniform-ball", 1.0)


def neumann_cosine(t, x):
    """``1 + exp(-pi^2 t) cos(pi x)``: the heat flow on (0, 1) with no-flux ends."""
    return 1.0 + math.exp(-math.pi ** 2 * t) * np.cos(math.pi * np.asarray(x))


@dataclass(frozen=True)
class HeatRow:
    delta: float
    error: float
    steps: int


@dataclass(frozen=True)
class HeatReport:
    rows: tuple[HeatRow, ...]
    t_final: float
    cells: int

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.error for r in self.rows])

    @property
    def strictly_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.errors) < 0))


def heat_solution(delta: float, cells: int = 256, t_final: float = 0.05, tau_cap: float = 1e-4,
                  base: KernelSpec = DEFAULT_BASE, initial=None):
    domain = Domain.interval(0.0, 1.0, cells)
    table = build_table(rescale(base, delta), domain, moment_match=True)
    x = domain.axes()[0]
    u1 = neumann_cosine(0.0, x) if initial is None else np.broadcast_to(initial(x), x.shape)
    u0 = State.from_arrays(domain, u1, np.zeros_like(x))
    cfg = StepConfig(t_final=t_final, tau_cap=tau_cap)
    return simulate(u0, LINEAR_HEAT, table, cfg)


def heat_convergence(deltas: Sequence[float], cells: int = 256, t_final: float = 0.05,
                     tau_cap: float = 1e-4, base: KernelSpec = DEFAULT_BASE) -> HeatReport:
    """Sup-norm error at ``t_final`` against the closed-form solution, per delta."""
    rows = []
    for delta in deltas:
        traj = heat_solution(delta, cells, t_final, tau_cap, base)
        x = traj.domain.axes()[0]
        final = traj.data[-1][0]
        err = float(np.max(np.abs(final - neumann_cosine(traj.t_end, x))))
        rows.append(HeatRow(float(delta), err, len(traj.steps)))
    return HeatReport(tuple(rows), float(t_final), int(cells))

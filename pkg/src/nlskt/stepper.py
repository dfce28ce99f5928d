"""Implicit Euler time stepping by Picard iteration of the fixed-point map

    T(v) = u^j + tau * [ sum_y J(x-y) (P(v)(y) - P(v)(x)) h^d + F(v)(x) ],
    P(v) = p(v^+ + eps),  F(v) = f(v^+ + eps).

The automatic step size keeps ``T`` a self-map of the ball
``|v| <= 2 M0`` and a contraction there, with ``M0`` refreshed every step.
"""
from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from nlskt.dynamics import Coefficients, LipschitzBounds, lipschitz_bounds, regularized_parts
from nlskt.errors import DegenerateState, NoConvergence, NonContracting, OutOfRange, SolverError
from nlskt.grid import Domain, State
from nlskt.kernel import KernelTable

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepConfig:
    """Time-stepping controls.

    ``tau`` selects the policy: ``None`` for the automatic rule, a float for
    a fixed step, or a sequence for an explicit schedule. ``tau_cap`` bounds
    automatic steps from above. ``picard_tol=None`` means ``1e-10 * (1 + M0)``.
    """

    t_final: float = 1.0
    tau: float | Sequence[float] | None = None
    tau_cap: float | None = None
    theta: float = 0.5
    picard_tol: float | None = None
    picard_max_iters: int = 500
    snapshot_stride: int = 1
    m0_floor: float = 1e-2

    def __post_init__(self):
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        if self.picard_tol is not None and not self.picard_tol > 0:
            raise ValueError("picard_tol must be positive")
        if self.picard_max_iters < 1 or self.snapshot_stride < 1:
            raise ValueError("picard_max_iters and snapshot_stride must be >= 1")
        if self.tau_cap is not None and not self.tau_cap > 0:
            raise ValueError("tau_cap must be positive")
        if isinstance(self.tau, Sequence):
            object.__setattr__(self, "tau", tuple(float(t) for t in self.tau))
            if not all(t > 0 for t in self.tau):
                raise ValueError("scheduled steps must be positive")
        elif self.tau is not None and not self.tau > 0:
            raise ValueError("fixed tau must be positive")

    @property
    def policy(self) -> str:
        if self.tau is None:
            return "auto"
        return "schedule" if isinstance(self.tau, tuple) else "fixed"

    def tolerance(self, M0: float) -> float:
        return self.picard_tol if self.picard_tol is not None else 1e-10 * (1.0 + M0)


class TauBound(NamedTuple):
    tau: float
    M0: float
    Lp: float
    Lf: float
    C0: float
    C1: float
    C_M0: float

    @property
    def contraction(self) -> float:
        """Certified Picard contraction factor ``C1 tau (Lp + Lf)``."""
        return self.C1 * self.tau * (self.Lp + self.Lf)


def step_constants(table: KernelTable, coeffs: Coefficients) -> tuple[float, float]:
    """``(C0, C1)`` for the invariance and contraction estimates.

    With ``B = 2 M0 + eps``, ``|T_i(v)| <= M0 + tau C0 (B + B^2)`` and
    ``|T(v) - T(w)| <= tau (2 J1 Lp + Lf) |v - w| <= C1 tau (Lp + Lf) |v - w|``.
    """
    J1 = table.J1
    C0 = max(max(J1 * coeffs.c[i] + coeffs.alpha[i],
                  J1 * (coeffs.a[i] + 1.0) + coeffs.beta[i][0] + coeffs.beta[i][1]) for i in range(2))
    C1 = 2.0 * max(1.0, J1) + table.row_l1
    return C0, C1


def sup_bound(v: np.ndarray, floor: float) -> float:
    if not np.all(np.isfinite(v)):
        raise DegenerateState("state contains non-finite values")
    return max(float(np.max(np.abs(v))), floor)


def tau_bound(state: State | np.ndarray, coeffs: Coefficients, table: KernelTable,
              cfg: StepConfig) -> TauBound:
    v = state.stacked() if isinstance(state, State) else state
    M0 = sup_bound(v, cfg.m0_floor)
    lb: LipschitzBounds = lipschitz_bounds(M0, coeffs)
    C0, C1 = step_constants(table, coeffs)
    B = 2.0 * M0 + coeffs.eps
    C_M0 = M0 / (C0 * (1.0 + B + B * B)) if C0 > 0 else math.inf
    L = lb.Lp + lb.Lf
    contr = 1.0 / (C1 * L) if L > 0 else math.inf
    tau = cfg.theta * min(C_M0 / 2.0, contr)
    return TauBound(tau, M0, lb.Lp, lb.Lf, C0, C1, C_M0)


def tau_max(state: State, coeffs: Coefficients, table: KernelTable, cfg: StepConfig) -> float:
    return tau_bound(state, coeffs, table, cfg).tau


class PicardResult(NamedTuple):
    state: State
    iterations: int
    residual: float
    ratios: tuple[float, ...]
    sup_iterate: float


def fixed_point_map(u_prev: np.ndarray, v: np.ndarray, tau: float,
                    coeffs: Coefficients, table: KernelTable) -> np.ndarray:
    diff, reac = regularized_parts(v, coeffs, table)
    return u_prev + tau * (diff + reac)


def _picard(u_prev, tau, coeffs, table, tol, max_iters, start=None):
    v = u_prev.copy() if start is None else np.array(start, dtype=float)
    ratios = []
    sup_it = float(np.max(np.abs(v)))
    prev_res = None
    growing = 0
    floor = 1e-13 * (1.0 + float(np.max(np.abs(u_prev))))
    for k in range(1, max_iters + 1):
        tv = fixed_point_map(u_prev, v, tau, coeffs, table)
        res = float(np.max(np.abs(tv - v)))
        if not math.isfinite(res):
            raise NonContracting(f"Picard iterate became non-finite at iteration {k}")
        sup_it = max(sup_it, float(np.max(np.abs(tv))))
        if res < tol:
            return v, k, res, tuple(ratios), sup_it
        if prev_res is not None and prev_res > floor:
            r = res / prev_res
            ratios.append(r)
            growing = growing + 1 if r > 1.0 else 0
            if growing >= 2:
                raise NonContracting(f"Picard residual grew twice in a row (ratio {r:.3g}); tau={tau:.3g} too large")
        prev_res = res
        v = tv
    raise NoConvergence(f"Picard residual {res:.3e} above tolerance {tol:.3e} after {max_iters} iterations")


def picard_step(state_j: State, tau: float, coeffs: Coefficients, table: KernelTable,
                cfg: StepConfig, start: State | None = None) -> PicardResult:
    """Solve one implicit step; the initial iterate defaults to ``state_j``."""
    u_prev = np.stack([state_j.u1.grid(), state_j.u2.grid()])
    M0 = sup_bound(u_prev, cfg.m0_floor)
    init = None if start is None else np.stack([start.u1.grid(), start.u2.grid()])
    v, k, res, ratios, sup_it = _picard(u_prev, tau, coeffs, table, cfg.tolerance(M0),
                                        cfg.picard_max_iters, init)
    new = State.from_arrays(state_j.domain, v[0], v[1], state_j.t + tau)
    return PicardResult(new, k, res, ratios, sup_it)


@dataclass(frozen=True)
class StepRecord:
    tau: float
    iterations: int
    residual: float
    M0: float
    max_ratio: float
    sup_iterate: float
    certified: float  # C1 tau (Lp + Lf); nan for non-automatic steps


@dataclass
class Trajectory:
    """Knots ``t_0 = 0 < t_1 < ...`` and the states there (append-only)."""

    domain: Domain
    times: list[float] = field(default_factory=list)
    data: list[np.ndarray] = field(default_factory=list)
    steps: list[StepRecord] = field(default_factory=list)
    complete: bool = False

    def append(self, t: float, values: np.ndarray, record: StepRecord | None = None):
        if self.times and not t > self.times[-1]:
            raise ValueError("trajectory times must increase strictly")
        v = np.array(values, dtype=float).reshape((2,) + self.domain.shape)
        v.flags.writeable = False
        self.times.append(float(t))
        self.data.append(v)
        if record is not None:
            self.steps.append(record)

    def __len__(self):
        return len(self.times)

    @property
    def taus(self) -> list[float]:
        return list(np.diff(self.times))

    @property
    def t_end(self) -> float:
        return self.times[-1]

    def state(self, j: int) -> State:
        v = self.data[j]
        return State.from_arrays(self.domain, v[0], v[1], self.times[j])

    def states(self):
        return [self.state(j) for j in range(len(self))]

    def array(self) -> np.ndarray:
        """All knots, shape ``(n_knots, 2) + domain.shape``."""
        return np.stack(self.data)


def _locate(traj: Trajectory, t: float) -> int:
    if len(traj) == 0:
        raise OutOfRange("empty trajectory")
    if not (traj.times[0] <= t <= traj.times[-1]):
        raise OutOfRange(f"t={t} outside [{traj.times[0]}, {traj.times[-1]}]")
    return int(np.searchsorted(traj.times, t, side="left"))


def interpolate(traj: Trajectory, t: float) -> State:
    """Piecewise-linear-in-time state, exact at the knots."""
    j = _locate(traj, t)
    if traj.times[j] == t:
        return traj.state(j)
    t0, t1 = traj.times[j - 1], traj.times[j]
    lam = (t1 - t) / (t1 - t0)
    v = traj.data[j] + lam * (traj.data[j - 1] - traj.data[j])
    return State.from_arrays(traj.domain, v[0], v[1], t)


def piecewise_constant(traj: Trajectory, t: float) -> State:
    """The right-endpoint step function: ``u^{j+1}`` on ``(t_j, t_{j+1}]``."""
    j = _locate(traj, t)
    v = traj.data[j]
    return State.from_arrays(traj.domain, v[0], v[1], t)


def _policy_tau(cfg: StepConfig, j: int, v: np.ndarray, coeffs, table):
    if cfg.policy == "auto":
        b = tau_bound(v, coeffs, table, cfg)
        tau = min(b.tau, cfg.tau_cap) if cfg.tau_cap is not None else b.tau
        return tau, b.M0, b.C1 * (b.Lp + b.Lf)
    M0 = sup_bound(v, cfg.m0_floor)
    if cfg.policy == "fixed":
        return cfg.tau, M0, math.nan
    if j >= len(cfg.tau):
        raise SolverError(f"step schedule exhausted after {j} steps")
    return cfg.tau[j], M0, math.nan


def simulate(u0: State, coeffs: Coefficients, table: KernelTable, cfg: StepConfig,
             callback: Callable[[int, State], None] | None = None) -> Trajectory:
    """Advance ``u0`` to ``cfg.t_final``; the last step is shortened to land on it.

    ``callback(j, state)`` fires at ``j = 0`` and every ``snapshot_stride``
    steps (and at the final knot). On a solver failure the exception carries
    the partial trajectory as ``exc.trajectory``.
    """
    v = u0.stacked().astype(float)
    if np.any(v < 0):
        log.warning("initial data has negative values (min %.3g); clipping to 0", float(v.min()))
        v = np.maximum(v, 0.0)
    traj = Trajectory(u0.domain)
    traj.append(0.0, v)
    if callback is not None:
        callback(0, traj.state(0))
    shape2 = (2,) + u0.domain.grid_shape
    t, j = 0.0, 0
    T = cfg.t_final
    while T - t > 1e-12 * T:
        try:
            tau, M0, rate = _policy_tau(cfg, j, v, coeffs, table)
            if not math.isfinite(tau):
                tau = T - t
            tau = min(tau, T - t)
            u_prev = v.reshape(shape2)
            new, k, res, ratios, sup_it = _picard(u_prev, tau, coeffs, table, cfg.tolerance(M0),
                                                  cfg.picard_max_iters)
        except SolverError as exc:
            exc.trajectory = traj
            raise
        except DegenerateState as exc:
            raise SolverError(str(exc), traj) from exc
        t = T if T - (t + tau) <= 1e-12 * T else t + tau
        j += 1
        v = new.reshape((2,) + u0.domain.shape)
        rec = StepRecord(tau, k, res, M0, max(ratios, default=0.0), sup_it, rate * tau)
        traj.append(t, v, rec)
        if callback is not None and (j % cfg.snapshot_stride == 0 or t >= T):
            callback(j, traj.state(j))
    traj.complete = True
    return traj

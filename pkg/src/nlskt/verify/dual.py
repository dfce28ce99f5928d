"""Uniqueness certificate through the linear dual (adjoint) problem.

For two discrete solutions ``u``, ``v`` with difference ``w = u - v`` the
implicit step gives ``w^n - w^{n-1} = tau M^n w^n + r^{n-1}`` where ``r`` is
the solver residual and, with ``U = u^+ + eps`` and ``V = v^+ + eps``,

    (M w)_i = A(K_i w_i + V_i w_j) + L_i w_i - beta_ij V_i w_j,
    K_i = c_i + a_i (U_i + V_i) + U_j,
    L_i = alpha_i - beta_ii (U_i + V_i) - beta_ij U_j.

The dual runs backwards from zero final data,
``phi^n = phi^{n+1} + tau_{n-1} (M^{n*} phi^n + w^n)``, and summation by parts
gives ``sum tau |w^n|^2 = sum <r^{n-1}, phi^n> + <w^0, phi^1>``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from nlskt import _backend
from nlskt.dynamics import Coefficients, shifted
from nlskt.errors import WindowTooLarge
from nlskt.grid import Field
from nlskt.kernel import KernelTable
from nlskt.stepper import Trajectory


@dataclass(frozen=True)
class DualConfig:
    theta: float = 0.5        # T_0 = theta / c_hat
    tol: float = 1e-13        # relative sup-norm increment that ends a window
    max_iters: int = 200
    min_theta: float = 1e-3   # give up halving below this


@dataclass(frozen=True)
class DualState:
    """Dual fields at reversed time ``s`` (``s = 0`` is the final time of ``u``)."""

    phi1: Field
    phi2: Field
    s: float


@dataclass(frozen=True)
class FrozenCoefficients:
    """Per-step coefficient fields, each of shape ``(N, 2) + grid_shape``."""

    K: np.ndarray
    L: np.ndarray
    V: np.ndarray
    W: np.ndarray
    cross: tuple[float, float]  # (beta_12, beta_21)


@dataclass
class DualSolution:
    domain: object
    times: np.ndarray      # forward knots t_0 .. t_N
    phi: np.ndarray        # (N + 2, 2) + grid_shape, phi[n] for n = 0 .. N + 1, phi[0] unused
    T0: float
    c_hat: float
    windows: list[tuple[int, int]] = field(default_factory=list)
    ratios: list[float] = field(default_factory=list)

    def state(self, n: int) -> DualState:
        """``phi^n``, living at reversed time ``T - t_{n-1}``."""
        T = self.times[-1]
        s = 0.0 if n == len(self.times) else float(T - self.times[n - 1])
        v = self.phi[n].reshape((2,) + self.domain.shape)
        return DualState(Field(self.domain, v[0]), Field(self.domain, v[1]), s)

    def history(self) -> list[DualState]:
        """Dual states ordered by increasing reversed time, from ``phi = 0``."""
        return [self.state(n) for n in range(len(self.times), 0, -1)]

    @property
    def max_ratio(self) -> float:
        return max(self.ratios, default=0.0)


def _A(table: KernelTable, g: np.ndarray) -> np.ndarray:
    g = np.ascontiguousarray(g)
    return _backend.stencil_sum(g, table.offsets, table.weights) - table.mass.values.reshape(g.shape) * g


def adjoint(phi: np.ndarray, K, L, V, cross, table: KernelTable) -> np.ndarray:
    """``(M^* phi)_i = K_i A phi_i + V_j A phi_j + L_i phi_i - beta_ji V_j phi_j``."""
    Aphi = np.stack([_A(table, phi[0]), _A(table, phi[1])])
    out = K * Aphi + L * phi
    out[0] += V[1] * Aphi[1] - cross[1] * V[1] * phi[1]
    out[1] += V[0] * Aphi[0] - cross[0] * V[0] * phi[0]
    return out


def forward_operator(w: np.ndarray, K, L, V, cross, table: KernelTable) -> np.ndarray:
    """``(M w)_i = A(K_i w_i + V_i w_j) + L_i w_i - beta_ij V_i w_j``."""
    out = np.empty_like(w)
    for i in range(2):
        j = 1 - i
        out[i] = _A(table, K[i] * w[i] + V[i] * w[j]) + L[i] * w[i] - cross[i] * V[i] * w[j]
    return out


def frozen_coefficients(traj_u: Trajectory, traj_v: Trajectory, coeffs: Coefficients) -> FrozenCoefficients:
    if traj_u.domain != traj_v.domain:
        raise ValueError("trajectories live on different domains")
    tu, tv = np.asarray(traj_u.times), np.asarray(traj_v.times)
    if tu.shape != tv.shape or np.max(np.abs(tu - tv)) > 1e-12 * max(1.0, tu[-1]):
        raise ValueError("trajectories must share the time grid")
    gs = (2,) + traj_u.domain.grid_shape
    u = traj_u.array()[1:].reshape((-1,) + gs)
    v = traj_v.array()[1:].reshape((-1,) + gs)
    U, V = shifted(u, coeffs.eps), shifted(v, coeffs.eps)
    c, a, al, b = (np.array(x, float) for x in (coeffs.c, coeffs.a, coeffs.alpha, coeffs.beta))
    K = np.empty_like(U)
    L = np.empty_like(U)
    for i in range(2):
        j = 1 - i
        K[:, i] = c[i] + a[i] * (U[:, i] + V[:, i]) + U[:, j]
        L[:, i] = al[i] - b[i, i] * (U[:, i] + V[:, i]) - b[i, j] * U[:, j]
    return FrozenCoefficients(K, L, V, u - v, (b[0, 1], b[1, 0]))


def lipschitz_constant(fc: FrozenCoefficients, table: KernelTable) -> float:
    """Sup-norm bound of ``M^*``: ``max_i 2 J1 (|K_i| + |V_j|) + |L_i| + beta_ji |V_j|``."""
    out = 0.0
    for i in range(2):
        j = 1 - i
        k, l, vj = (float(np.max(np.abs(x[:, s]))) if x.size else 0.0
                    for x, s in ((fc.K, i), (fc.L, i), (fc.V, j)))
        out = max(out, 2.0 * table.J1 * (k + vj) + l + fc.cross[j] * vj)
    return out


def _window(phi_next, lo, hi, taus, fc, table, tol, max_iters):
    # Picard on phi^n = phi^{hi+1} + sum_{k=n}^{hi} tau_{k-1} (M^{k*} phi^k + w^k), n in [lo, hi]
    idx = range(lo, hi + 1)
    cur = np.repeat(phi_next[None], hi - lo + 1, axis=0)
    prev_diff, ratios, bad = None, [], 0
    for _ in range(max_iters):
        g = np.empty_like(cur)
        for m, n in enumerate(idx):
            k = n - 1  # coefficient arrays start at n = 1
            g[m] = taus[n - 1] * (adjoint(cur[m], fc.K[k], fc.L[k], fc.V[k], fc.cross, table) + fc.W[k])
        new = phi_next[None] + np.cumsum(g[::-1], axis=0)[::-1]
        diff = float(np.max(np.abs(new - cur)))
        scale = 1.0 + float(np.max(np.abs(new)))
        if prev_diff is not None and prev_diff > 1e-13 * scale:
            r = diff / prev_diff
            ratios.append(r)
            bad = bad + 1 if r > 1.0 else 0
            if bad >= 2:
                raise WindowTooLarge(f"dual Picard ratio {r:.3g} > 1 on steps {lo}..{hi}")
        cur = new
        if diff <= tol * scale:
            return cur, ratios
        prev_diff = diff
    raise WindowTooLarge(f"dual Picard did not settle in {max_iters} iterations on steps {lo}..{hi}")


def solve_dual_system(fc: FrozenCoefficients, times, table: KernelTable, cfg: DualConfig = DualConfig(),
                      domain=None) -> DualSolution:
    """Windowed Picard solve of the dual recursion for given frozen coefficients."""
    times = np.asarray(times, float)
    taus = np.diff(times)
    N = len(taus)
    gs = (2,) + table.domain.grid_shape
    c_hat = lipschitz_constant(fc, table) if N else 0.0
    theta = cfg.theta
    while True:
        T0 = theta / c_hat if c_hat > 0 else math.inf
        phi = np.zeros((N + 2,) + gs)
        sol = DualSolution(domain or table.domain, times, phi, T0, c_hat)
        try:
            hi = N
            while hi >= 1:
                lo, span = hi, taus[hi - 1]
                while lo > 1 and span + taus[lo - 2] <= T0:
                    lo -= 1
                    span += taus[lo - 1]
                if c_hat * span >= 1.0:
                    raise WindowTooLarge(f"single step of length {span:.3g} exceeds 1/c_hat = {1 / c_hat:.3g}")
                block, ratios = _window(phi[hi + 1], lo, hi, taus, fc, table, cfg.tol, cfg.max_iters)
                phi[lo:hi + 1] = block
                sol.windows.append((lo, hi))
                sol.ratios.extend(ratios)
                hi = lo - 1
            return sol
        except WindowTooLarge:
            theta *= 0.5
            if theta < cfg.min_theta:
                raise


def dual_solve(traj_u: Trajectory, traj_v: Trajectory, coeffs: Coefficients, table: KernelTable,
               cfg: DualConfig = DualConfig()) -> DualSolution:
    fc = frozen_coefficients(traj_u, traj_v, coeffs)
    return solve_dual_system(fc, traj_u.times, table, cfg, traj_u.domain)


def uniqueness_residual(traj_u: Trajectory, traj_v: Trajectory, dual: DualSolution | None = None) -> float:
    """``sum_i int_{Q_T} |u_i - v_i|^2`` with the right-endpoint time quadrature."""
    taus = np.diff(traj_u.times)
    w = traj_u.array()[1:] - traj_v.array()[1:]
    axes = tuple(range(1, w.ndim))
    return float(np.sum(taus * np.sum(w * w, axis=axes)) * traj_u.domain.cell_volume)


@dataclass(frozen=True)
class Certificate:
    residual: float   # sum tau |w^n|^2
    pairing: float    # sum <w^n, phi^n - phi^{n+1} - tau M^* phi^n>
    defect: float     # sum <r^{n-1}, phi^n> + <w^0, phi^1>
    identity_gap: float
    scale: float
    max_ratio: float

    @property
    def identity_holds(self) -> bool:
        return self.identity_gap <= 1e-9 * self.scale


def certificate(traj_u: Trajectory, traj_v: Trajectory, coeffs: Coefficients, table: KernelTable,
                dual: DualSolution) -> Certificate:
    """Residual plus the weak identity ``residual = pairing = defect``."""
    fc = frozen_coefficients(traj_u, traj_v, coeffs)
    vol = traj_u.domain.cell_volume
    gs = (2,) + traj_u.domain.grid_shape
    w_all = (traj_u.array() - traj_v.array()).reshape((-1,) + gs)
    taus = np.diff(traj_u.times)
    phi = dual.phi
    R = uniqueness_residual(traj_u, traj_v)
    P = Q = 0.0
    scale = abs(float(np.sum(w_all[0] * phi[1])) * vol)
    for n in range(1, len(taus) + 1):
        k, tau = n - 1, taus[n - 1]
        wn = w_all[n]
        ms = adjoint(phi[n], fc.K[k], fc.L[k], fc.V[k], fc.cross, table)
        P += float(np.sum(wn * (phi[n] - phi[n + 1] - tau * ms))) * vol
        r = wn - w_all[n - 1] - tau * forward_operator(wn, fc.K[k], fc.L[k], fc.V[k], fc.cross, table)
        Q += float(np.sum(r * phi[n])) * vol
        scale += tau * float(np.sum(wn * wn)) * vol + abs(float(np.sum(r * phi[n]))) * vol
    Q += float(np.sum(w_all[0] * phi[1])) * vol
    gap = max(abs(R - P), abs(R - Q))
    return Certificate(R, P, Q, gap, scale, dual.max_ratio)

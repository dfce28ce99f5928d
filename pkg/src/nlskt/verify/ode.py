"""Spatially constant data: the scheme must reproduce the Lotka-Volterra ODE."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from nlskt.dynamics import Coefficients, f
from nlskt.grid import Domain, State
from nlskt.kernel import KernelSpec, KernelTable, build_table
from nlskt.stepper import StepConfig, Trajectory, simulate


def logistic(t, u0: float, rate: float = 1.0, capacity: float = 1.0):
    """Closed-form solution of ``u' = rate u (1 - u / capacity)``."""
    e = np.exp(rate * np.asarray(t, float))
    return capacity * u0 * e / (capacity + u0 * (e - 1.0))


@dataclass(frozen=True)
class OdeReport:
    times: np.ndarray
    scheme: np.ndarray   # (n, 2) spatial means
    reference: np.ndarray  # (n, 2)
    max_deviation: float
    constancy: float     # max_t max_x |u_i(t, x) - mean_x u_i(t)|
    trajectory: Trajectory

    @property
    def final(self) -> np.ndarray:
        return self.scheme[-1]


def reaction_reference(u0, coeffs: Coefficients, times) -> np.ndarray:
    """High-order explicit integration of ``du_i/dt = f_i(u)`` sampled at ``times``."""
    times = np.asarray(times, float)
    sol = solve_ivp(lambda t, u: [f(1, u, coeffs), f(2, u, coeffs)], (0.0, float(times[-1])),
                    [float(u0[0]), float(u0[1])], method="DOP853", t_eval=times,
                    rtol=1e-12, atol=1e-14)
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.y.T


def ode_reduction(u0, coeffs: Coefficients, t_final: float = 1.0, tau: float = 1e-3,
                  domain: Domain | None = None, table: KernelTable | None = None) -> OdeReport:
    """Run the scheme from constant data and compare with the reaction ODE.

    With the regularization ``eps`` the reference integrates the unshifted
    reaction, so ``eps`` should be 0 for a like-for-like comparison.
    """
    domain = domain or Domain.interval(0.0, 1.0, 16)
    table = table or build_table(KernelSpec("uniform-ball", 0.25, dim=domain.dim), domain)
    init = State(domain.constant(u0[0]), domain.constant(u0[1]))
    traj = simulate(init, coeffs, table, StepConfig(t_final=t_final, tau=tau))
    arr = traj.array()
    axes = tuple(range(2, arr.ndim))
    means = arr.mean(axis=axes)
    spread = float(np.max(np.abs(arr - arr.mean(axis=axes, keepdims=True))))
    ref = reaction_reference(u0, coeffs, traj.times)
    dev = float(np.max(np.abs(means - ref)))
    return OdeReport(np.asarray(traj.times), means, ref, dev, spread, traj)


LOGISTIC_TARGET = math.e / (math.e + 1.0)

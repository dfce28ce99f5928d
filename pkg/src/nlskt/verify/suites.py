"""Canned verification studies producing CSV-ready tables with pass flags."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from nlskt.dynamics import Coefficients
from nlskt.grid import Domain, State
from nlskt.kernel import KernelSpec, KernelTable, build_table
from nlskt.stepper import StepConfig, simulate
from nlskt.verify import bilateral, dual, heat, ode, taylor


@dataclass(frozen=True)
class StudyResult:
    name: str
    header: tuple[str, ...]
    rows: tuple[tuple, ...]
    passed: bool
    summary: dict


TAYLOR_DELTAS = (0.2, 0.1, 0.05)


def taylor_study(deltas=TAYLOR_DELTAS, cells: int = 256) -> StudyResult:
    dom = Domain.interval(0.0, 1.0, cells)
    base = KernelSpec("uniform-ball", 1.0)
    k = 2 * math.pi
    cos = taylor.taylor_consistency(lambda x: np.cos(k * x), lambda x: -k * k * np.cos(k * x),
                                    deltas, base, dom)
    quad = taylor.taylor_consistency(lambda x: x * x, lambda x: np.full_like(x, 2.0), deltas, base, dom)
    rows = tuple((r.delta, r.error, q.error, r.first_moment) for r, q in zip(cos.rows, quad.rows))
    ok = (cos.decreasing and cos.order >= 1.0 and max(q.error for q in quad.rows) <= 1e-10
          and max(r.first_moment for r in cos.rows) < 1e-12)
    return StudyResult("taylor", ("delta", "error_cos", "error_quadratic", "first_moment"), rows, ok,
                       {"order": cos.order})


def heat_study(deltas=(0.4, 0.2, 0.1), cells: int = 256, t_final: float = 0.05,
               tau_cap: float = 1e-4) -> StudyResult:
    rep = heat.heat_convergence(deltas, cells, t_final, tau_cap)
    rows = tuple((r.delta, r.error, r.steps) for r in rep.rows)
    ok = rep.strictly_decreasing and rep.rows[-1].error <= 0.05
    return StudyResult("heat", ("delta", "sup_error", "steps"), rows, ok,
                       {"t_final": t_final, "cells": cells})


def ode_study(tau: float = 1e-3) -> StudyResult:
    coeffs = Coefficients(alpha=(1.0, 0.0), beta=((1.0, 0.0), (0.0, 0.0)))
    rep = ode.ode_reduction((0.5, 0.0), coeffs, 1.0, tau)
    err = abs(rep.final[0] - ode.LOGISTIC_TARGET)
    rows = ((1.0, rep.final[0], ode.LOGISTIC_TARGET, err, rep.max_deviation, rep.constancy),)
    ok = err <= 2e-3 and rep.constancy <= 1e-8
    return StudyResult("ode", ("t", "u1", "exact", "error", "max_deviation_ivp", "constancy"), rows, ok, {})


def bilateral_study(size=(32, 32), count: int = 1, steps: int = 100, spatial_scale: float = 1.5,
                    range_scale: float = 0.2, seed: int = 0) -> StudyResult:
    rng = np.random.default_rng(seed)
    rows, ok = [], True
    for k in range(count):
        img = Domain((0.0, 0.0), (float(size[0]), float(size[1])), tuple(size)).field(rng.random(size))
        table = bilateral.spatial_table(img, spatial_scale)
        tau = bilateral.default_tau(table)
        lo, hi = [img.values.min()], [img.values.max()]

        def track(_, u):
            lo.append(u.values.min())
            hi.append(u.values.max())
        out = bilateral.bilateral_filter(img, spatial_scale, range_scale, steps * tau, tau, callback=track)
        drift = abs(out.values.sum() - img.values.sum()) * out.domain.cell_volume
        inside = min(lo) >= img.values.min() and max(hi) <= img.values.max()
        mean_ok = drift <= 1e-10 * max(1.0, abs(img.values.sum() * img.domain.cell_volume))
        ok = ok and inside and mean_ok
        rows.append((k, float(img.values.min()), float(img.values.max()), float(min(lo)), float(max(hi)), drift))
    return StudyResult("bilateral", ("image", "min_in", "max_in", "min_seen", "max_seen", "mass_drift"),
                       tuple(rows), ok, {})


def scalar_dual_oracle(rate: float = 1.0, source: float = 1.0, horizon: float = 0.1,
                       steps: int = 20000, cells: int = 8) -> float:
    """Max deviation of the dual solve from ``(w/l)(1 - exp(-l s))`` for frozen
    constant coefficients on one species with decay ``l``."""
    dom = Domain.interval(0.0, 1.0, cells)
    table = build_table(KernelSpec("uniform-ball", 0.25), dom)
    shape = (steps, 2) + dom.grid_shape
    K = np.full(shape, 1.0)
    L = np.full(shape, -rate)
    W = np.zeros(shape)
    W[:, 0] = source
    fc = dual.FrozenCoefficients(K, L, np.zeros(shape), W, (0.0, 0.0))
    sol = dual.solve_dual_system(fc, np.linspace(0.0, horizon, steps + 1), table)
    err = 0.0
    for st in sol.history():
        exact = source / rate * -math.expm1(-rate * st.s)
        err = max(err, float(np.max(np.abs(st.phi1.values - exact))), float(np.max(np.abs(st.phi2.values))))
    return err


def dual_study(u0: State, coeffs: Coefficients, table: KernelTable, t_final: float = 1.0,
               tols=(1e-10, 1e-8)) -> StudyResult:
    a = simulate(u0, coeffs, table, StepConfig(t_final=t_final, picard_tol=tols[0]))
    b = simulate(u0, coeffs, table, StepConfig(t_final=t_final, picard_tol=tols[1], tau=a.taus))
    sol = dual.dual_solve(a, b, coeffs, table)
    cert = dual.certificate(a, b, coeffs, table, sol)
    q_vol = t_final * u0.domain.volume
    scale = max(1.0, float(np.max(np.abs(a.array())))) ** 2
    oracle = scalar_dual_oracle()
    ok = cert.residual <= 1e-12 * q_vol * scale and oracle <= 1e-6 and sol.max_ratio < 1.0
    rows = ((cert.residual, cert.pairing, cert.defect, cert.identity_gap, sol.T0, len(sol.windows),
             sol.max_ratio, oracle),)
    return StudyResult("dual", ("residual", "pairing", "defect", "identity_gap", "window", "windows",
                                "max_ratio", "oracle_error"), rows, ok, {"bound": 1e-12 * q_vol * scale})

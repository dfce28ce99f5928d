import logging
import math

import numpy as np
import pytest
from scipy.optimize import brentq

from conftest import benchmark
from nlskt.dynamics import Coefficients
from nlskt.errors import DegenerateState, NoConvergence, NonContracting, OutOfRange, SolverError
from nlskt.grid import Domain, State
from nlskt.kernel import KernelSpec, build_table
from nlskt.stepper import (StepConfig, interpolate, picard_step, piecewise_constant, simulate, tau_bound,
                           tau_max)

LOGISTIC = Coefficients(alpha=(1, 0), beta=((1, 0), (0, 0)))


def const_state(dom, a, b):
    return State(dom.constant(a), dom.constant(b))


def test_tau_max_linear_diffusion(unit64):
    dom, tab = unit64
    co = Coefficients(c=(1, 1))
    cfg = StepConfig()
    s = const_state(dom, 1e-12, 0.0)
    b = tau_bound(s, co, tab, cfg)
    # M0 floored at 1e-2: Lp = 1 + 2 * 0.02, Lf = 0, C1 = 2 + 1
    assert b.Lp == pytest.approx(1.04) and b.Lf == 0.0 and b.C1 == pytest.approx(3.0)
    assert b.tau <= 0.5 / b.C1


def test_tau_max_decreases_with_competition(unit64):
    dom, tab = unit64
    s = const_state(dom, 1.0, 0.5)
    a = Coefficients.uniform(1.0)
    b = Coefficients((1, 1), (1, 1), (1, 1), ((2, 2), (2, 2)))
    assert tau_max(s, b, tab, StepConfig()) < tau_max(s, a, tab, StepConfig())


def test_tau_max_benchmark_by_hand():
    dom, tab, co, u0 = benchmark(64)
    assert tab.J1 == pytest.approx(1.0, abs=1e-14) and tab.row_l1 == pytest.approx(1.0, abs=1e-14)
    M0 = float(np.max(u0.stacked()))
    eps = 0.01
    B = 2 * M0 + eps
    C0 = 4.0                      # max(J1 c + alpha, J1 (a + 1) + beta_i1 + beta_i2)
    C1 = 3.0                      # 2 max(1, J1) + row_l1
    Lp = 1 + 4 * B                # corner (B, B): c + 2 a B + B + B
    Lf = 4 * B - 1                # corner (B, B): |1 - 3B| + B
    CM = M0 / (C0 * (1 + B + B * B))
    expect = 0.5 * min(CM / 2, 1 / (C1 * (Lp + Lf)))
    assert tau_max(u0, co, tab, StepConfig()) == pytest.approx(expect, rel=1e-12)


def test_tau_bound_rejects_nonfinite(unit64):
    dom, tab = unit64
    v = np.ones((2, 64))
    v[0, 3] = np.inf
    with pytest.raises(DegenerateState):
        tau_bound(v, Coefficients.uniform(1.0), tab, StepConfig())


def test_picard_zero_state(unit64):
    dom, tab = unit64
    res = picard_step(const_state(dom, 0, 0), 0.01, Coefficients.uniform(1.0), tab, StepConfig())
    assert res.iterations == 1 and np.all(res.state.stacked() == 0)


def test_picard_scalar_logistic(unit64):
    dom, tab = unit64
    res = picard_step(const_state(dom, 0.5, 0.0), 0.01, LOGISTIC, tab, StepConfig(picard_tol=1e-14))
    z = brentq(lambda z: 0.5 + 0.01 * z * (1 - z) - z, 0.4, 0.6, xtol=1e-15)
    np.testing.assert_allclose(res.state.u1.values, z, atol=1e-13)
    assert np.all(res.state.u2.values == 0)


def test_picard_ratios_within_certified_bound(rng):
    dom, tab, co, _ = benchmark(64)
    cfg = StepConfig(picard_tol=1e-13)
    for _ in range(10):
        s = State.from_arrays(dom, rng.random(64) * 2, rng.random(64) * 2)
        b = tau_bound(s, co, tab, cfg)
        res = picard_step(s, b.tau, co, tab, cfg)
        assert max(res.ratios) <= b.contraction + 1e-9
        assert res.sup_iterate <= 2 * b.M0 + 1e-9


def test_picard_uniqueness_surrogate(rng):
    dom, tab, co, u0 = benchmark(64)
    cfg = StepConfig(picard_tol=1e-12)
    tau = tau_max(u0, co, tab, cfg)
    a = picard_step(u0, tau, co, tab, cfg)
    b = picard_step(u0, tau, co, tab, cfg, start=const_state(dom, 0, 0))
    # distance to the fixed point is at most tol / (1 - contraction) from each side
    assert np.abs(a.state.stacked() - b.state.stacked()).max() <= 2 * 2e-12


def test_picard_errors(unit64):
    dom, tab = unit64
    co = Coefficients.uniform(1.0)
    s = const_state(dom, 1.0, 1.0)
    with pytest.raises(NoConvergence):
        picard_step(s, 1e-3, co, tab, StepConfig(picard_max_iters=2, picard_tol=1e-15))
    bumpy = State.from_arrays(dom, 1 + np.cos(np.arange(64)), np.ones(64))
    with pytest.raises(NonContracting):
        picard_step(bumpy, 5.0, co, tab, StepConfig())


def test_simulate_zero_is_zero(unit64):
    dom, tab = unit64
    traj = simulate(const_state(dom, 0, 0), Coefficients.uniform(1.0, eps=0.0), tab, StepConfig(t_final=0.2))
    assert traj.complete and traj.t_end == 0.2
    assert np.all(traj.array() == 0)


def test_simulate_logistic(unit64):
    dom, tab = unit64
    traj = simulate(const_state(dom, 0.5, 0.0), LOGISTIC, tab, StepConfig(tau=1e-3))
    assert traj.t_end == 1.0
    assert abs(traj.data[-1][0].mean() - math.e / (math.e + 1)) <= 2e-3


def test_simulate_first_order_self_convergence(unit64):
    dom, tab = unit64
    finals = [simulate(const_state(dom, 0.5, 0.0), LOGISTIC, tab, StepConfig(tau=t)).data[-1][0, 0]
              for t in (0.02, 0.01, 0.005)]
    order = math.log2(abs(finals[0] - finals[1]) / abs(finals[1] - finals[2]))
    assert order >= 0.9


def test_simulate_clips_negative_data(unit64, caplog):
    dom, tab = unit64
    s = State.from_arrays(dom, np.full(64, -1e-14), np.ones(64))
    with caplog.at_level(logging.WARNING):
        traj = simulate(s, Coefficients.uniform(1.0, eps=0.0), tab, StepConfig(t_final=0.01))
    assert "clipping" in caplog.text
    assert traj.data[0].min() == 0.0


def test_simulate_keeps_partial_trajectory(unit64):
    dom, tab = unit64
    bumpy = State.from_arrays(dom, 1 + np.cos(np.arange(64)), np.ones(64))
    with pytest.raises(SolverError) as info:
        simulate(bumpy, Coefficients.uniform(1.0), tab, StepConfig(tau=(1e-3, 1e-3, 5.0, 1e-3)))
    traj = info.value.trajectory
    assert traj is not None and len(traj) == 3 and not traj.complete


def test_schedule_exhausted(unit64):
    dom, tab = unit64
    with pytest.raises(SolverError, match="schedule"):
        simulate(const_state(dom, 1, 1), Coefficients.uniform(1.0), tab, StepConfig(t_final=1.0, tau=(0.1, 0.1)))


def test_schedule_replays_times():
    dom, tab, co, u0 = benchmark(32)
    a = simulate(u0, co, tab, StepConfig(t_final=0.2))
    b = simulate(u0, co, tab, StepConfig(t_final=0.2, tau=a.taus))
    np.testing.assert_array_equal(a.times, b.times)


def test_callback_stride(unit64):
    dom, tab = unit64
    seen = []
    simulate(const_state(dom, 0.5, 0.1), LOGISTIC, tab, StepConfig(t_final=0.1, tau=0.01, snapshot_stride=3),
             callback=lambda j, s: seen.append(j))
    assert seen == [0, 3, 6, 9, 10]


def test_auto_tau_invariants():
    dom, tab, co, u0 = benchmark(64)
    traj = simulate(u0, co, tab, StepConfig())
    for s in traj.steps:
        assert s.max_ratio <= s.certified + 1e-9
        assert s.sup_iterate <= 2 * s.M0 + 1e-9
        assert s.certified <= 0.5 + 1e-12


def test_interpolation(unit64):
    dom, tab = unit64
    traj = simulate(const_state(dom, 0.5, 0.2), Coefficients.uniform(1.0, eps=0.0), tab,
                    StepConfig(t_final=0.05, tau=0.01))
    np.testing.assert_array_equal(interpolate(traj, traj.times[2]).stacked(), traj.data[2])
    mid = 0.5 * (traj.times[1] + traj.times[2])
    np.testing.assert_allclose(interpolate(traj, mid).stacked(), 0.5 * (traj.data[1] + traj.data[2]), rtol=1e-14)
    with pytest.raises(OutOfRange):
        interpolate(traj, 0.06)
    # piecewise-constant interpolant takes the right-endpoint value
    np.testing.assert_array_equal(piecewise_constant(traj, mid).stacked(), traj.data[2])
    rate = max(np.abs(np.diff(traj.array(), axis=0)).max(axis=(1, 2)) / np.diff(traj.times))
    for t in np.linspace(0, 0.05, 23):
        gap = np.abs(interpolate(traj, t).stacked() - piecewise_constant(traj, t).stacked()).max()
        assert gap <= 0.01 * rate + 1e-15


def test_step_config_validation():
    with pytest.raises(ValueError):
        StepConfig(theta=1.0)
    with pytest.raises(ValueError):
        StepConfig(tau=-1.0)
    with pytest.raises(ValueError):
        StepConfig(tau=(0.1, 0.0))
    assert StepConfig(tau=[0.1, 0.2]).policy == "schedule"
    assert StepConfig(tau=0.1).policy == "fixed"
    assert StepConfig().tolerance(2.0) == pytest.approx(3e-10)


def test_2d_simulation_runs():
    dom = Domain.box((0, 0), (1, 1), (16, 16))
    tab = build_table(KernelSpec("uniform-ball", 0.2, dim=2), dom)
    x, y = np.meshgrid(*dom.axes(), indexing="ij")
    u0 = State.from_arrays(dom, 1 + 0.5 * np.cos(np.pi * x), 1 + 0.5 * np.cos(np.pi * y))
    traj = simulate(u0, Coefficients.uniform(1.0, eps=0.01), tab, StepConfig(t_final=0.1))
    mass0 = u0.stacked().sum()
    assert traj.complete and np.all(np.isfinite(traj.array()))
    assert traj.data[-1].sum() != mass0

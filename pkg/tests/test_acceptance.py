"""End-to-end acceptance checks; each test prints one PASS/FAIL line."""
import math
from functools import lru_cache

import numpy as np
import pytest

from conftest import benchmark
from nlskt import diagnostics as dg
from nlskt.cli import main
from nlskt.dynamics import lipschitz_bounds, nonlocal_apply
from nlskt.grid import Domain
from nlskt.io import image_field
from nlskt.kernel import KernelSpec, build_table
from nlskt.stepper import StepConfig, step_constants, simulate
from nlskt.verify import bilateral, suites


@lru_cache(maxsize=None)
def bench_run(cells=64, theta=0.5, eps=None):
    extra = {} if eps is None else {"coeffs__epsilon": eps}
    dom, tab, co, u0 = benchmark(cells, **extra)
    return simulate(u0, co, tab, StepConfig(t_final=1.0, theta=theta)), co, tab


def test_taylor_consistency(verdict):
    res = suites.taylor_study(suites.TAYLOR_DELTAS, 256)
    errs = [r[1] for r in res.rows]
    verdict("1 taylor consistency", res.passed,
            f"errors {', '.join(f'{e:.3g}' for e in errs)}, order {res.summary['order']:.2f}, "
            f"quadratic {max(r[2] for r in res.rows):.1e}")


def test_heat_limit(verdict):
    res = suites.heat_study((0.4, 0.2, 0.1), 256, 0.05, 1e-4)
    verdict("2 nonlocal to local heat", res.passed,
            "errors " + ", ".join(f"{r[1]:.4g}" for r in res.rows))


def test_ode_reduction(verdict):
    res = suites.ode_study(1e-3)
    row = res.rows[0]
    verdict("3 ode reduction", res.passed, f"u1(1) error {row[3]:.2e}, constancy {row[5]:.1e}")


def test_picard_contraction(verdict):
    traj, co, tab = bench_run()
    _, C1 = step_constants(tab, co)
    worst_ratio, worst_ball = -math.inf, -math.inf
    for s in traj.steps:
        lb = lipschitz_bounds(s.M0, co)
        bound = C1 * s.tau * (lb.Lp + lb.Lf)
        assert s.certified == pytest.approx(bound, rel=1e-12)
        worst_ratio = max(worst_ratio, s.max_ratio - bound - 1e-9)
        worst_ball = max(worst_ball, s.sup_iterate - 2 * s.M0 - 1e-9)
    ok = worst_ratio <= 0 and worst_ball <= 0 and len(traj.steps) > 0
    verdict("4 picard contraction", ok,
            f"{len(traj.steps)} steps, ratio slack {-worst_ratio:.3g}, ball slack {-worst_ball:.3g}")


def _l1_constants(cells, theta):
    traj, co, _ = bench_run(cells, theta)
    return dg.l1_ledger(traj, co)


def test_l1_ledgers(verdict):
    grid = [_l1_constants(n, 0.5) for n in (32, 64, 128)]
    tau = [_l1_constants(64, th) for th in (0.5, 0.25)]
    finite = all(np.all(np.isfinite(l.c_plus)) and np.all(np.isfinite(l.c_minus)) for l in grid + tau)
    spreads = {
        "grid+": dg.relative_spread(l.C_plus for l in grid),
        "grid-": dg.relative_spread(l.C_minus for l in grid),
        "tau+": dg.relative_spread(l.C_plus for l in tau),
        "tau-": dg.relative_spread(l.C_minus for l in tau),
    }
    ok = (finite and spreads["grid+"] <= 0.2 and spreads["grid-"] <= 0.2
          and spreads["tau+"] <= 0.1 and spreads["tau-"] <= 0.1)
    verdict("5 l1 ledgers", ok, ", ".join(f"{k} {v:.3f}" for k, v in spreads.items())
            + f", c+ {grid[1].C_plus:.3g}, c- {grid[1].C_minus:.3g}")


def test_entropy_inequality(verdict):
    runs = [(64, 0.5), (32, 0.5), (128, 0.5), (64, 0.25)]
    cs, ok = [], True
    for cells, theta in runs:
        traj, co, tab = bench_run(cells, theta)
        led = dg.entropy_ledger(traj, co, tab)
        t = np.asarray(traj.times)
        rhs = led.reports[0].E_eps + led.c * (1 + co.eps) * t
        ok = ok and bool(np.all(led.lhs <= rhs + 1e-12 * (1 + np.abs(rhs)))) and traj.t_end >= 1.0
        cs.append(led.c)
    spread = dg.relative_spread(cs)
    verdict("6 entropy inequality", ok and spread <= 0.2,
            f"c = {', '.join(f'{c:.4f}' for c in cs)}, spread {spread:.3f}")


def test_epsilon_sweep(verdict):
    rep = dg.negpart_summary({e: bench_run(64, 0.5, e)[0] for e in (1e-2, 5e-3, 2.5e-3)})
    traj0, co0, _ = bench_run(64, 0.5, 0.0)
    floor = -sum(StepConfig().tolerance(s.M0) for s in traj0.steps)
    lowest = float(traj0.array().min())
    ok = rep.at_most_linear and lowest >= floor
    verdict("7 epsilon sweep", ok,
            f"max neg {', '.join(f'{v:.3g}' for v in rep.max_neg)}, slope {rep.slope:.2f}, "
            f"eps=0 min {lowest:.2g} vs {floor:.2g}")


def test_poincare(verdict):
    rng = np.random.default_rng(2024)
    configs = [
        build_table(KernelSpec("uniform-ball", 0.25), Domain.interval(0, 1, 64)),
        build_table(KernelSpec("truncated-gaussian", 0.3, width=0.1), Domain.interval(-1, 2, 96)),
        build_table(KernelSpec("uniform-ball", 0.3, dim=2), Domain.box((0, 0), (1, 1), (24, 24))),
    ]
    worst = math.inf
    for tab in configs:
        dom = tab.domain
        for k in range(200):
            kind = k % 4
            if kind == 0:
                v = rng.normal(size=dom.grid_shape)
            elif kind == 1:
                v = rng.random(dom.grid_shape) * 10
            elif kind == 2:
                v = np.full(dom.grid_shape, rng.normal()) + 1e-3 * rng.normal(size=dom.grid_shape)
            else:
                v = np.where(rng.random(dom.grid_shape) < 0.05, rng.normal(size=dom.grid_shape) * 100, 0.0)
                v.flat[rng.integers(v.size)] = 50.0
            chk = dg.poincare_check(dom.field(v), tab)
            worst = min(worst, chk.margin / max(chk.lhs, chk.rhs, 1e-300))
    verdict("8 nonlocal poincare", worst >= -1e-12, f"min relative margin {worst:.3g}")


def test_uniqueness_certificate(verdict):
    dom, tab, co, u0 = benchmark(64)
    res = suites.dual_study(u0, co, tab, 1.0)
    row = dict(zip(res.header, res.rows[0]))
    verdict("9 uniqueness certificate", res.passed,
            f"residual {row['residual']:.2e} <= {res.summary['bound']:.1e}, "
            f"identity gap {row['identity_gap']:.1e}, oracle {row['oracle_error']:.2e}")


def _heat_step(tab, img, tau):
    return img.values + tau * nonlocal_apply(tab, img).values


def test_bilateral_filter(verdict):
    const = image_field(np.full((32, 32), 0.42))
    fixed = bool(np.array_equal(bilateral.bilateral_filter(const, 1.5, 0.2, 5.0).values, const.values))
    res = suites.bilateral_study((32, 32), 20, 100, 1.5, 0.2, seed=7)
    rng = np.random.default_rng(11)
    img = image_field(rng.random((32, 32)))
    tab = bilateral.spatial_table(img, 1.5)
    tau = bilateral.default_tau(tab)
    heat_step = _heat_step(tab, img, tau)
    gap = float(np.abs(bilateral.bilateral_step(img, 1.5, math.inf, tau, tab).values - heat_step).max())
    verdict("10 bilateral filter", fixed and res.passed and gap <= 1e-9,
            f"fixed point {fixed}, min/max principle on 20 images {res.passed}, h=inf gap {gap:.1e}")


def _artifacts(root):
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file() and p.name != "manifest.json"}


def test_determinism(verdict, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(["simulate", "--out", str(out)]) == 0
        outs.append(_artifacts(out))
    a, b = outs
    same = a.keys() == b.keys() and all(a[k] == b[k] for k in a)
    has = {"ledger.csv", "steps.csv", "config.txt"} <= a.keys() and any(k.startswith("snapshots/") for k in a)
    verdict("11 determinism", same and has, f"{len(a)} files compared byte for byte")

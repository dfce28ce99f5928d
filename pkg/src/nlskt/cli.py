"""Command line entry point: ``nlskt simulate|sweep|verify|filter``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from nlskt import __version__, config, diagnostics, io
from nlskt.errors import ConfigError, NlsktError, SolverError
from nlskt.stepper import Trajectory, simulate
from nlskt.verify import bilateral, suites

log = logging.getLogger("nlskt")

LEDGER_COLUMNS = ("t", "E", "E_eps", "D_cumulative", "neg1", "neg2", "mass1", "mass2",
                  "sup1", "sup2", "ledger_c", "gronwall_C")
STEP_COLUMNS = ("step", "tau", "iterations", "residual", "M0", "max_ratio", "sup_iterate", "certified")


def _write_manifest(out: Path, cfg, command: str, complete: bool, artifacts, timings, extra=None):
    manifest = {
        "tool": "nlskt",
        "version": __version__,
        "command": command,
        "config_sha256": config.config_hash(cfg),
        "complete": complete,
        "artifacts": sorted(artifacts),
        "timings_s": timings,
    }
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _prepare(cfg, out: Path) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(config.emit(cfg))
    return out


def _trajectory_artifacts(traj: Trajectory, cfg, coeffs, table, out: Path, stride: int) -> list[str]:
    names = ["config.txt"]
    snap = out / "snapshots"
    snap.mkdir(exist_ok=True)
    last = len(traj) - 1
    for j in range(len(traj)):
        if j % stride == 0 or j == last:
            name = f"snapshots/state_{j:06d}.csv"
            io.write_state(out / name, traj.state(j))
            names.append(name)
    steps = [(j + 1, s.tau, s.iterations, s.residual, s.M0, s.max_ratio, s.sup_iterate, s.certified)
             for j, s in enumerate(traj.steps)]
    io.write_rows(out / "steps.csv", STEP_COLUMNS, steps)
    names.append("steps.csv")
    if len(traj) > 0:
        rows = diagnostics.ledger_rows(traj, coeffs, table)
        io.write_rows(out / "ledger.csv", LEDGER_COLUMNS, [[r[c] for c in LEDGER_COLUMNS] for r in rows])
        names.append("ledger.csv")
    return names


def run_simulate(cfg, out: Path) -> int:
    t0 = time.perf_counter()
    domain = config.build_domain(cfg)
    table = config.build_kernel(cfg, domain)
    coeffs = config.build_coeffs(cfg)
    u0 = config.initial_state(cfg, domain)
    try:
        traj = simulate(u0, coeffs, table, config.step_config(cfg))
        complete, err = True, None
    except SolverError as exc:
        traj, complete, err = exc.trajectory, False, exc
    t1 = time.perf_counter()
    names = _trajectory_artifacts(traj, cfg, coeffs, table, out, cfg.stepper.snapshot_stride)
    extra = {"steps": len(traj.steps), "t_end": traj.t_end}
    if complete and len(traj) > 1:
        l1 = diagnostics.l1_ledger(traj, coeffs)
        extra.update({"l1_positive_c": l1.C_plus, "l1_negative_c": l1.C_minus})
    if err is not None:
        extra["error"] = str(err)
    _write_manifest(out, cfg, "simulate", complete, names,
                    {"simulate": round(t1 - t0, 3), "total": round(time.perf_counter() - t0, 3)}, extra)
    if err is not None:
        log.error("simulation stopped: %s", err)
        return 1
    return 0


def run_sweep(cfg, out: Path) -> int:
    t0 = time.perf_counter()
    domain = config.build_domain(cfg)
    u0 = config.initial_state(cfg, domain)
    scfg = config.step_config(cfg)
    if cfg.study.kind == "epsilon":
        table = config.build_kernel(cfg, domain)
        rep = diagnostics.negpart_sweep(u0, config.build_coeffs(cfg), table, scfg, cfg.study.epsilon_list)
        rows = [(e, v, r) for e, v, r in zip(rep.eps, rep.max_neg, rep.ratios)]
        io.write_rows(out / "sweep_epsilon.csv", ("epsilon", "max_neg_l1", "ratio"), rows)
        extra = {"slope": rep.slope, "at_most_linear": rep.at_most_linear}
        ok = rep.at_most_linear
        names = ["config.txt", "sweep_epsilon.csv"]
    else:
        coeffs = config.build_coeffs(cfg)
        rows = []
        for delta in cfg.study.delta_list:
            table = config.build_kernel(cfg, domain, delta)
            traj = simulate(u0, coeffs, table, scfg)
            c = diagnostics.ledger_rows(traj, coeffs, table)[-1]["ledger_c"]
            g = diagnostics.gronwall_bound(traj, coeffs, table).C
            rows.append((delta, len(traj.steps), c, g, float(np.max(np.abs(traj.data[-1])))))
        io.write_rows(out / "sweep_delta.csv", ("delta", "steps", "ledger_c", "gronwall_C", "sup_final"), rows)
        extra, ok = {}, True
        names = ["config.txt", "sweep_delta.csv"]
    _write_manifest(out, cfg, f"sweep {cfg.study.kind}", True, names,
                    {"total": round(time.perf_counter() - t0, 3)}, extra)
    return 0 if ok else 1


STUDY_NAMES = ("taylor", "heat", "ode", "bilateral", "dual")


def _study(name: str, cfg, deltas):
    st = cfg.study
    if name == "taylor":
        return suites.taylor_study(deltas or suites.TAYLOR_DELTAS, st.cells)
    if name == "heat":
        return suites.heat_study(deltas or st.delta_list, st.cells, st.t_final, st.tau_cap)
    if name == "ode":
        return suites.ode_study()
    if name == "bilateral":
        fb = cfg.filter
        return suites.bilateral_study(fb.size, 1, fb.steps, fb.spatial_scale, fb.range_scale, cfg.seed)
    domain = config.build_domain(cfg)
    return suites.dual_study(config.initial_state(cfg, domain), config.build_coeffs(cfg),
                             config.build_kernel(cfg, domain), cfg.stepper.t_final)


def run_verify(cfg, out: Path, studies, deltas=None) -> int:
    t0 = time.perf_counter()
    names, flags, timings = ["config.txt"], {}, {}
    for name in studies:
        ts = time.perf_counter()
        res = _study(name, cfg, deltas)
        timings[name] = round(time.perf_counter() - ts, 3)
        header = res.header + ("passed",)
        io.write_rows(out / f"{name}.csv", header, [r + (res.passed,) for r in res.rows])
        names.append(f"{name}.csv")
        flags[name] = bool(res.passed)
        print(f"{name}: {'PASS' if res.passed else 'FAIL'}")
    timings["total"] = round(time.perf_counter() - t0, 3)
    _write_manifest(out, cfg, "verify " + " ".join(studies), True, names, timings, {"passed": flags})
    return 0 if all(flags.values()) else 1


def run_filter(cfg, out: Path) -> int:
    t0 = time.perf_counter()
    fb = cfg.filter
    if fb.image:
        pixels, maxval = io.read_pgm(fb.image)
        img = io.image_field(pixels / maxval)
    else:
        img = io.image_field(np.random.default_rng(cfg.seed).random(tuple(fb.size)))
    table = bilateral.spatial_table(img, fb.spatial_scale)
    tau = fb.tau or bilateral.default_tau(table)
    stats = [(0, float(img.values.min()), float(img.values.max()), float(img.values.mean()))]

    def track(k, u):
        stats.append((k, float(u.values.min()), float(u.values.max()), float(u.values.mean())))
    res = bilateral.bilateral_filter(img, fb.spatial_scale, fb.range_scale, fb.steps * tau, tau, callback=track)
    io.write_pgm(out / "input.pgm", img, lo=0.0, hi=1.0)
    io.write_pgm(out / "filtered.pgm", res, lo=0.0, hi=1.0)
    io.write_rows(out / "filter.csv", ("step", "min", "max", "mean"), stats)
    _write_manifest(out, cfg, "filter", True, ["config.txt", "input.pgm", "filtered.pgm", "filter.csv"],
                    {"total": round(time.perf_counter() - t0, 3)}, {"tau": tau})
    return 0


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(v) for v in s.split(",") if v.strip())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nlskt", description="Nonlocal cross-diffusion solver and checks")
    p.add_argument("--version", action="version", version=f"nlskt {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key = value config file (defaults if omitted)")
        sp.add_argument("--out", help="output directory (overrides output.dir)")
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="set a config key; may be repeated")
        sp.add_argument("-v", "--verbose", action="store_true")

    common(sub.add_parser("simulate", help="run the scheme and write snapshots and ledgers"))
    sw = sub.add_parser("sweep", help="epsilon or delta study")
    common(sw)
    group = sw.add_mutually_exclusive_group()
    group.add_argument("--epsilon", type=_floats, help="comma separated regularization values")
    group.add_argument("--delta", type=_floats, help="comma separated kernel scales")
    vf = sub.add_parser("verify", help="oracle studies")
    common(vf)
    vf.add_argument("studies", nargs="*", metavar="STUDY",
                    help=f"any of {', '.join(STUDY_NAMES)} or all (default)")
    vf.add_argument("--delta", type=_floats, help="kernel scales for taylor/heat")
    common(sub.add_parser("filter", help="iterated bilateral filter on an image"))
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = list(args.override)
    if args.command == "sweep":
        if args.epsilon:
            overrides += ["study.kind=epsilon", "study.epsilon_list=" + ",".join(map(repr, args.epsilon))]
        if args.delta:
            overrides += ["study.kind=delta", "study.delta_list=" + ",".join(map(repr, args.delta))]
    try:
        text = Path(args.config).read_text() if args.config else ""
        cfg = config.validate(config.parse(text, overrides))
    except ConfigError as exc:
        for key, msg in exc.violations:
            print(f"config error: {key}: {msg}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    out = _prepare(cfg, Path(args.out or cfg.output.dir))
    try:
        if args.command == "simulate":
            return run_simulate(cfg, out)
        if args.command == "sweep":
            return run_sweep(cfg, out)
        if args.command == "verify":
            unknown = sorted(set(args.studies) - set(STUDY_NAMES) - {"all"})
            if unknown:
                print(f"unknown study: {', '.join(unknown)}", file=sys.stderr)
                return 2
            wanted = args.studies or ["all"]
            studies = STUDY_NAMES if "all" in wanted else tuple(dict.fromkeys(wanted))
            return run_verify(cfg, out, studies, args.delta)
        return run_filter(cfg, out)
    except NlsktError as exc:
        _write_manifest(out, cfg, args.command, False, ["config.txt"], {}, {"error": str(exc)})
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

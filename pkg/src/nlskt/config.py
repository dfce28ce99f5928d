"""Flat ``key = value`` run configuration with dotted block prefixes.

Example::

    domain.cells = 64
    kernel.family = uniform-ball
    kernel.rho = 0.25
    coeffs.beta = 1, 1, 1, 1
    stepper.t_final = 1

Unset keys take the defaults below. :func:`emit` writes every key, so
``parse(emit(cfg)) == cfg``.
"""
from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from nlskt.dynamics import Coefficients
from nlskt.errors import ConfigError
from nlskt.grid import Domain, State
from nlskt.kernel import FAMILIES, KernelSpec, build_table, rescale
from nlskt.stepper import StepConfig

log = logging.getLogger(__name__)

PROFILES = ("constant", "cosine-bump", "two-bump", "csv")
STUDIES = ("epsilon", "delta")


@dataclass(frozen=True)
class DomainBlock:
    lower: tuple = (0.0,)
    upper: tuple = (1.0,)
    cells: tuple = (64,)


@dataclass(frozen=True)
class KernelBlock:
    family: str = "uniform-ball"
    rho: float = 0.25
    width: float | None = None
    delta: float | None = None
    moment_match: bool = False


@dataclass(frozen=True)
class CoeffBlock:
    c: tuple = (1.0, 1.0)
    a: tuple = (1.0, 1.0)
    alpha: tuple = (1.0, 1.0)
    beta: tuple = (1.0, 1.0, 1.0, 1.0)
    epsilon: float = 1e-2
    theorem_mode: bool = True


@dataclass(frozen=True)
class StepperBlock:
    t_final: float = 1.0
    tau: float | None = None
    tau_cap: float | None = None
    theta: float = 0.5
    picard_tol: float | None = None
    picard_max_iters: int = 500
    snapshot_stride: int = 10


@dataclass(frozen=True)
class InitialBlock:
    profile: str = "two-bump"
    u1: float = 2.0
    u2: float = 2.0
    amplitude: float = 0.5
    path: str | None = None


@dataclass(frozen=True)
class StudyBlock:
    kind: str = "epsilon"
    delta_list: tuple = (0.4, 0.2, 0.1)
    epsilon_list: tuple = (1e-2, 5e-3, 2.5e-3)
    cells: int = 256
    t_final: float = 0.05
    tau_cap: float = 1e-4


@dataclass(frozen=True)
class FilterBlock:
    image: str | None = None
    size: tuple = (32, 32)
    spatial_scale: float = 1.5
    range_scale: float = 0.2
    steps: int = 100
    tau: float | None = None


@dataclass(frozen=True)
class OutputBlock:
    dir: str = "out"


@dataclass(frozen=True)
class RunConfig:
    domain: DomainBlock = field(default_factory=DomainBlock)
    kernel: KernelBlock = field(default_factory=KernelBlock)
    coeffs: CoeffBlock = field(default_factory=CoeffBlock)
    stepper: StepperBlock = field(default_factory=StepperBlock)
    initial: InitialBlock = field(default_factory=InitialBlock)
    study: StudyBlock = field(default_factory=StudyBlock)
    filter: FilterBlock = field(default_factory=FilterBlock)
    output: OutputBlock = field(default_factory=OutputBlock)
    seed: int = 0


def _floats(s):
    return tuple(float(v) for v in s.replace(",", " ").split())


def _ints(s):
    return tuple(int(v) for v in s.replace(",", " ").split())


def _opt(conv):
    def parse(s):
        return None if s.strip().lower() in ("none", "auto", "") else conv(s)
    return parse


def _bool(s):
    v = s.strip().lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _str(s):
    return s.strip()


_CONVERT = {
    "domain": {"lower": _floats, "upper": _floats, "cells": _ints},
    "kernel": {"family": _str, "rho": float, "width": _opt(float), "delta": _opt(float), "moment_match": _bool},
    "coeffs": {"c": _floats, "a": _floats, "alpha": _floats, "beta": _floats, "epsilon": float,
               "theorem_mode": _bool},
    "stepper": {"t_final": float, "tau": _opt(float), "tau_cap": _opt(float), "theta": float,
                "picard_tol": _opt(float), "picard_max_iters": int, "snapshot_stride": int},
    "initial": {"profile": _str, "u1": float, "u2": float, "amplitude": float, "path": _opt(_str)},
    "study": {"kind": _str, "delta_list": _floats, "epsilon_list": _floats, "cells": int,
              "t_final": float, "tau_cap": float},
    "filter": {"image": _opt(_str), "size": _ints, "spatial_scale": float, "range_scale": float,
               "steps": int, "tau": _opt(float)},
    "output": {"dir": _str},
}


def keys() -> list[str]:
    return [f"{b}.{k}" for b, conv in _CONVERT.items() for k in conv] + ["seed"]


def _format(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(_format(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse(text: str, overrides: list[str] | tuple[str, ...] = ()) -> RunConfig:
    """Parse config text plus ``key=value`` overrides (applied last)."""
    pairs = []
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError([(f"line {n}", f"expected 'key = value', got {line!r}")])
        pairs.append(tuple(p.strip() for p in line.split("=", 1)))
    for item in overrides:
        if "=" not in item:
            raise ConfigError([(item, "override must look like key=value")])
        pairs.append(tuple(p.strip() for p in item.split("=", 1)))
    blocks = {name: {} for name in _CONVERT}
    seed = 0
    errors = []
    for key, raw in pairs:
        if key == "seed":
            try:
                seed = int(raw)
            except ValueError:
                errors.append((key, f"not an integer: {raw!r}"))
            continue
        block, _, name = key.partition(".")
        if block not in _CONVERT or name not in _CONVERT[block]:
            errors.append((key, "unknown key"))
            continue
        try:
            blocks[block][name] = _CONVERT[block][name](raw)
        except ValueError as exc:
            errors.append((key, f"cannot parse {raw!r}: {exc}"))
    if errors:
        raise ConfigError(errors)
    base = RunConfig()
    parts = {name: replace(getattr(base, name), **vals) for name, vals in blocks.items()}
    return RunConfig(**parts, seed=seed)


def load(path, overrides=()) -> RunConfig:
    return parse(Path(path).read_text(), overrides)


def emit(cfg: RunConfig) -> str:
    """Every key with its effective value, one per line, in a fixed order."""
    lines = []
    for block in _CONVERT:
        obj = getattr(cfg, block)
        for f in fields(obj):
            lines.append(f"{block}.{f.name} = {_format(getattr(obj, f.name))}")
    lines.append(f"seed = {cfg.seed}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(emit(cfg).encode()).hexdigest()


def violations(cfg: RunConfig) -> list[tuple[str, str]]:
    """Every invalid setting as ``(key, reason)``."""
    out = []
    d = cfg.domain
    dim = len(d.cells)
    if not (len(d.lower) == len(d.upper) == dim) or dim not in (1, 2):
        out.append(("domain.cells", "lower, upper and cells must have the same length, 1 or 2"))
    else:
        if any(n < 3 for n in d.cells):
            out.append(("domain.cells", "need at least 3 cells per axis"))
        if any(not hi > lo for lo, hi in zip(d.lower, d.upper)):
            out.append(("domain.upper", "upper bounds must exceed lower bounds"))

    k = cfg.kernel
    if k.family not in FAMILIES:
        out.append(("kernel.family", f"unknown family, choose from {', '.join(FAMILIES)}"))
    if k.family == "table":
        out.append(("kernel.family", "tabulated kernels are not configurable from text"))
    if not (k.rho > 0 and math.isfinite(k.rho)):
        out.append(("kernel.rho", "kernel support radius must be positive"))
    if k.family == "truncated-gaussian" and not (k.width is not None and k.width > 0):
        out.append(("kernel.width", "gaussian kernel needs a positive width"))
    if k.delta is not None and not 0 < k.delta <= 1:
        out.append(("kernel.delta", "rescaling parameter must lie in (0, 1]"))

    c = cfg.coeffs
    shapes = {"c": 2, "a": 2, "alpha": 2, "beta": 4}
    for name, n in shapes.items():
        vals = getattr(c, name)
        if len(vals) != n:
            out.append((f"coeffs.{name}", f"expected {n} values, got {len(vals)}"))
        elif any(not (v >= 0 and math.isfinite(v)) for v in vals):
            out.append((f"coeffs.{name}", "model coefficients must be finite and nonnegative"))
    if not (c.epsilon >= 0 and math.isfinite(c.epsilon)):
        out.append(("coeffs.epsilon", "regularization must be nonnegative"))
    if len(c.a) == 2 and len(c.beta) == 4:
        for i in range(2):
            if not c.a[i] + c.beta[3 * i] > 0:
                msg = (f"a{i + 1} + beta{i + 1}{i + 1} > 0 is required for the existence and "
                       f"uniqueness result")
                if c.theorem_mode:
                    out.append(("coeffs.a", msg))
                else:
                    log.warning("%s (theorem mode off, continuing)", msg)

    s = cfg.stepper
    if not s.t_final > 0:
        out.append(("stepper.t_final", "final time must be positive"))
    if s.tau is not None and not s.tau > 0:
        out.append(("stepper.tau", "time step must be positive"))
    if s.tau_cap is not None and not s.tau_cap > 0:
        out.append(("stepper.tau_cap", "step cap must be positive"))
    if not 0 < s.theta < 1:
        out.append(("stepper.theta", "safety factor must lie in (0, 1)"))
    if s.picard_tol is not None and not s.picard_tol > 0:
        out.append(("stepper.picard_tol", "tolerance must be positive"))
    if s.picard_max_iters < 1:
        out.append(("stepper.picard_max_iters", "need at least one iteration"))
    if s.snapshot_stride < 1:
        out.append(("stepper.snapshot_stride", "stride must be at least 1"))

    ini = cfg.initial
    if ini.profile not in PROFILES:
        out.append(("initial.profile", f"unknown profile, choose from {', '.join(PROFILES)}"))
    if ini.u1 < 0 or ini.u2 < 0:
        out.append(("initial.u1", "initial data must be nonnegative"))
    if ini.profile == "cosine-bump" and not 0 <= ini.amplitude <= 1:
        out.append(("initial.amplitude", "cosine-bump amplitude must lie in [0, 1] to keep the data nonnegative"))
    if ini.profile == "csv" and not (ini.path and Path(ini.path).is_file()):
        out.append(("initial.path", "csv profile needs an existing file"))

    st = cfg.study
    if st.kind not in STUDIES:
        out.append(("study.kind", f"unknown study, choose from {', '.join(STUDIES)}"))
    if not st.delta_list or any(not 0 < v <= 1 for v in st.delta_list):
        out.append(("study.delta_list", "values must lie in (0, 1]"))
    if not st.epsilon_list or any(not v > 0 for v in st.epsilon_list):
        out.append(("study.epsilon_list", "values must be positive"))
    if st.cells < 3 or not st.t_final > 0 or not st.tau_cap > 0:
        out.append(("study.cells", "study grid, final time and step cap must be positive"))

    fb = cfg.filter
    if not (fb.spatial_scale > 0 and fb.range_scale > 0):
        out.append(("filter.spatial_scale", "filter scales must be positive"))
    if fb.steps < 0 or (fb.tau is not None and not fb.tau > 0):
        out.append(("filter.steps", "steps must be >= 0 and tau positive"))
    if len(fb.size) != 2 or min(fb.size) < 3:
        out.append(("filter.size", "image size needs two entries >= 3"))
    return out


def validate(cfg: RunConfig) -> RunConfig:
    bad = violations(cfg)
    if bad:
        raise ConfigError(bad)
    return cfg


def build_domain(cfg: RunConfig) -> Domain:
    d = cfg.domain
    return Domain(d.lower, d.upper, d.cells)


def kernel_spec(cfg: RunConfig, dim: int, delta: float | None = None) -> KernelSpec:
    k = cfg.kernel
    spec = KernelSpec(k.family, k.rho, dim=dim, width=k.width)
    delta = k.delta if delta is None else delta
    return spec if delta is None else rescale(spec, delta)


def build_kernel(cfg: RunConfig, domain: Domain, delta: float | None = None):
    return build_table(kernel_spec(cfg, domain.dim, delta), domain, cfg.kernel.moment_match)


def build_coeffs(cfg: RunConfig, eps: float | None = None) -> Coefficients:
    c = cfg.coeffs
    b = c.beta
    return Coefficients(c.c, c.a, c.alpha, ((b[0], b[1]), (b[2], b[3])),
                        c.epsilon if eps is None else eps, c.theorem_mode)


def step_config(cfg: RunConfig) -> StepConfig:
    s = cfg.stepper
    return StepConfig(t_final=s.t_final, tau=s.tau, tau_cap=s.tau_cap, theta=s.theta,
                      picard_tol=s.picard_tol, picard_max_iters=s.picard_max_iters,
                      snapshot_stride=s.snapshot_stride)


def _unit(domain: Domain):
    # first coordinate mapped to [0, 1]
    x = domain.coords()[..., 0]
    return (x - domain.lower[0]) / (domain.upper[0] - domain.lower[0])


def bump(xi, centre: float, half_width: float):
    """``cos^2`` bump of height 1 on ``|xi - centre| < half_width``."""
    z = (xi - centre) / half_width
    return np.where(np.abs(z) < 1.0, np.cos(0.5 * math.pi * z) ** 2, 0.0)


def initial_state(cfg: RunConfig, domain: Domain) -> State:
    ini = cfg.initial
    if ini.profile == "csv":
        from nlskt.io import read_state
        state = read_state(ini.path)
        if state.domain != domain:
            raise ConfigError([("initial.path", "csv domain differs from the configured domain")])
        return State(state.u1, state.u2, 0.0)
    xi = _unit(domain)
    if ini.profile == "constant":
        u1, u2 = np.full(domain.shape, ini.u1), np.full(domain.shape, ini.u2)
    elif ini.profile == "cosine-bump":
        u1 = ini.u1 * (1.0 + ini.amplitude * np.cos(math.pi * xi))
        u2 = ini.u2 * (1.0 - ini.amplitude * np.cos(math.pi * xi))
    else:
        # segregated species: one bump each, touching zero in between
        u1 = ini.u1 * bump(xi, 0.25, 0.25)
        u2 = ini.u2 * bump(xi, 0.75, 0.25)
    return State.from_arrays(domain, u1, u2)

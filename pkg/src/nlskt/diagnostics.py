"""Entropy, dissipation and the a-priori estimates of the regularized scheme
as numerical ledgers.

Each ledger reports the smallest constant for which the corresponding
inequality holds along a computed trajectory. Time integrals use the
right-endpoint step function ``u^{j+1}`` on ``(t_j, t_{j+1}]``, the same
quadrature that the implicit scheme integrates exactly.
"""
from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from nlskt import _backend
from nlskt.dynamics import Coefficients
from nlskt.errors import LedgerViolation
from nlskt.grid import Field, State
from nlskt.kernel import KernelTable
from nlskt.stepper import StepConfig, Trajectory, simulate


def _xlogx(s):
    # s ln s with 0 ln 0 = 0
    s = np.asarray(s, float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = s[pos] * np.log(s[pos])
    return out


def _entropy_values(v: np.ndarray, vol: float) -> float:
    s = np.maximum(v, 0.0)
    return float(np.sum(_xlogx(s) - s + 1.0) * vol)


def _entropy_eps_values(v: np.ndarray, eps: float, vol: float) -> float:
    s = np.maximum(v, 0.0) + eps
    return float(np.sum(_xlogx(s) - s) * vol)


def entropy(state: State) -> float:
    """``sum_i int u_i (ln u_i - 1) + 1``; negative values enter as 0."""
    return _entropy_values(state.stacked(), state.domain.cell_volume)


def entropy_eps(state: State, eps: float) -> float:
    """``sum_i int (u_i^+ + eps)(ln(u_i^+ + eps) - 1)`` (no ``+1`` normalization).

    ``eps = 0`` is the limit with ``0 ln 0 = 0``.
    """
    if not eps >= 0:
        raise ValueError("entropy_eps needs eps >= 0")
    return _entropy_eps_values(state.stacked(), eps, state.domain.cell_volume)


def _pair(table: KernelTable, values: np.ndarray) -> float:
    g = np.ascontiguousarray(values.reshape(table.domain.grid_shape), dtype=float)
    return _backend.pair_energy(g, table.offsets, table.weights) * table.domain.cell_volume


def dissipation(state: State, coeffs: Coefficients, table: KernelTable, positive_part: bool = False) -> float:
    """``sum_i a_i int int J(x-y) (u_i(y) - u_i(x))^2 dy dx``."""
    total = 0.0
    for i, fld in enumerate(state.fields):
        if coeffs.a[i] == 0:
            continue
        v = np.maximum(fld.values, 0.0) if positive_part else fld.values
        total += coeffs.a[i] * _pair(table, v)
    return total


@dataclass(frozen=True)
class EntropyReport:
    t: float
    E: float
    E_eps: float
    D: float
    neg_l1: tuple[float, float]
    mass: tuple[float, float]
    sup: tuple[float, float]
    clipped: bool
    margins: dict = field(default_factory=dict)


def entropy_report(state: State, coeffs: Coefficients, table: KernelTable, eps: float | None = None) -> EntropyReport:
    eps = coeffs.eps if eps is None else eps
    v = state.stacked()
    vol = state.domain.cell_volume
    return EntropyReport(
        t=state.t,
        E=_entropy_values(v, vol),
        E_eps=_entropy_eps_values(v, eps, vol),
        D=dissipation(state, coeffs, table, positive_part=True),
        neg_l1=tuple(float(np.sum(np.maximum(-v[i], 0.0)) * vol) for i in range(2)),
        mass=tuple(float(np.sum(v[i]) * vol) for i in range(2)),
        sup=tuple(float(np.max(np.abs(v[i]))) for i in range(2)),
        clipped=bool(np.any(v < 0)),
    )


def _log_weight(eps: float, neg: float) -> float:
    # -ln(eps) * neg, with the eps -> 0 limit 0 for neg = 0
    if neg == 0:
        return 0.0
    return -math.log(eps) * neg if eps > 0 else math.inf


class EntropyLedger(NamedTuple):
    reports: list[EntropyReport]
    lhs: np.ndarray
    D_cumulative: np.ndarray
    c_series: np.ndarray  # smallest c up to and including each knot
    c: float


def entropy_ledger(traj: Trajectory, coeffs: Coefficients, table: KernelTable,
                   eps: float | None = None) -> EntropyLedger:
    """Check ``E_eps(t) + int_0^t D - ln(eps) |u^-|_1 <= E_eps(0) + c (1 + eps) t``.

    ``c`` is the smallest constant valid at every knot (it may be negative
    when the left side decreases).
    """
    eps = coeffs.eps if eps is None else eps
    if not eps >= 0:
        raise ValueError("the entropy ledger needs eps >= 0")
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    reports = [entropy_report(traj.state(j), coeffs, table, eps) for j in range(len(traj))]
    taus = np.diff(traj.times)
    D = np.array([r.D for r in reports])
    Dcum = np.concatenate([[0.0], np.cumsum(taus * D[1:])])
    lhs = np.array([r.E_eps + _log_weight(eps, sum(r.neg_l1)) for r in reports]) + Dcum
    t = np.asarray(traj.times)
    cj = np.full(len(traj), -math.inf)
    cj[1:] = (lhs[1:] - reports[0].E_eps) / ((1.0 + eps) * t[1:])
    series = np.maximum.accumulate(cj)
    c = float(series[-1]) if len(traj) > 1 else 0.0
    if not math.isfinite(c) and len(traj) > 1:
        raise LedgerViolation(f"entropy ledger constant is not finite ({c})")
    return EntropyLedger(reports, lhs, Dcum, series, c)


class L1Ledger(NamedTuple):
    c_plus: np.ndarray   # per step, L1 law of the positive parts
    c_minus: np.ndarray  # per step, L1 law of the negative parts
    C_plus: float
    C_minus: float


def _ratio(num, den, tol=0.0):
    if den > 0:
        return num / den
    return 0.0 if num <= tol else math.inf


def l1_ledger(traj: Trajectory, coeffs: Coefficients) -> L1Ledger:
    """Smallest per-step constants in the discrete L1 laws

        sum_i (|u_i^+|_1 + tau beta_ii |u_i^+|_2^2)
            <= sum_i (|(u_i^j)^+|_1 + c tau |u_i^+|_1) + c tau eps,
        sum_i |u_i^-|_1 <= sum_i (|(u_i^j)^-|_1 + c tau eps (1 + |u_i^+|_1)).
    """
    vol = traj.domain.cell_volume
    eps = coeffs.eps
    arr = traj.array()
    pos = np.maximum(arr, 0.0)
    neg = np.maximum(-arr, 0.0)
    axes = tuple(range(2, arr.ndim))
    pl1 = pos.sum(axis=axes) * vol           # (n, 2)
    pl2 = (pos * pos).sum(axis=axes) * vol
    nl1 = neg.sum(axis=axes) * vol
    bii = np.array([coeffs.beta[0][0], coeffs.beta[1][1]])
    c_plus, c_minus = [], []
    for j, tau in enumerate(np.diff(traj.times)):
        lhs = np.sum(pl1[j + 1] + tau * bii * pl2[j + 1])
        c_plus.append(_ratio(lhs - pl1[j].sum(), tau * (pl1[j + 1].sum() + eps)))
        num = nl1[j + 1].sum() - nl1[j].sum()
        c_minus.append(_ratio(num, tau * eps * np.sum(1.0 + pl1[j + 1]), tol=1e-14))
    c_plus, c_minus = np.array(c_plus), np.array(c_minus)
    Cp = float(max(0.0, c_plus.max())) if c_plus.size else 0.0
    Cm = float(max(0.0, c_minus.max())) if c_minus.size else 0.0
    return L1Ledger(c_plus, c_minus, Cp, Cm)


class GronwallReport(NamedTuple):
    C: float
    C_series: np.ndarray
    violations: int


def gronwall_bound(traj: Trajectory, coeffs: Coefficients, table: KernelTable,
                   C: float | None = None) -> GronwallReport:
    """Pointwise bound ``u_i(t,x) <= u_0i(x) + C |J|_inf N_i(t) + alpha_i int_0^t u_i(s,x) ds``
    with ``N_i = |u_i|_{L1(Q_t)} + |u_i|^2_{L2(Q_t)} + |u_1|_{L2(Q_t)} |u_2|_{L2(Q_t)}``.

    Returns the smallest admissible ``C`` (>= 0) and, if ``C`` is given, the
    number of (knot, species, cell) triples violating the bound with it.
    """
    vol = traj.domain.cell_volume
    arr = traj.array()
    pos = np.maximum(arr, 0.0)
    axes = tuple(range(2, arr.ndim))
    taus = np.diff(traj.times)
    w = taus.reshape((-1,) + (1,) * (arr.ndim - 1))
    l1 = np.concatenate([np.zeros((1, 2)), np.cumsum(taus[:, None] * pos[1:].sum(axis=axes) * vol, axis=0)])
    l2 = np.concatenate([np.zeros((1, 2)), np.cumsum(taus[:, None] * (pos[1:] ** 2).sum(axis=axes) * vol, axis=0)])
    time_int = np.concatenate([np.zeros((1,) + arr.shape[1:]), np.cumsum(w * arr[1:], axis=0)])
    alpha = np.array(coeffs.alpha).reshape((1, 2) + (1,) * (arr.ndim - 2))
    excess = arr - arr[0:1] - alpha * time_int
    cross = np.sqrt(l2[:, 0] * l2[:, 1])
    N = table.linf * (l1 + l2 + cross[:, None])  # (n, 2)
    Nb = N.reshape(N.shape + (1,) * (arr.ndim - 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        need = np.where(excess > 0, np.where(Nb > 0, excess / Nb, math.inf), 0.0)
    per_knot = need.reshape(len(traj), -1).max(axis=1)
    series = np.maximum.accumulate(np.maximum(per_knot, 0.0))
    Cmin = float(series[-1])
    viol = 0
    if C is not None:
        viol = int(np.count_nonzero(excess > C * Nb + 1e-12))
    elif not math.isfinite(Cmin):
        viol = int(np.count_nonzero(np.isinf(need)))
    return GronwallReport(Cmin, series, viol)


class PoincareCheck(NamedTuple):
    lhs: float
    rhs: float
    margin: float


def poincare_check(v: Field, table: KernelTable) -> PoincareCheck:
    """``|v|_2^2 <= (|J|_inf / J0) |v|_1^2 + 1/(2 J0) int int J (v(y) - v(x))^2``."""
    vol = v.domain.cell_volume
    lhs = float(np.sum(v.values ** 2) * vol)
    l1 = float(np.sum(np.abs(v.values)) * vol)
    rhs = table.linf / table.J0 * l1 ** 2 + _pair(table, v.values) / (2.0 * table.J0)
    return PoincareCheck(lhs, rhs, rhs - lhs)


class SweepReport(NamedTuple):
    eps: tuple[float, ...]
    max_neg: tuple[float, ...]
    ratios: tuple[float, ...]
    slope: float
    at_most_linear: bool


def max_negative_mass(traj: Trajectory) -> float:
    """``max_t max_i |u_i^-(t)|_1``."""
    arr = traj.array()
    axes = tuple(range(2, arr.ndim))
    return float((np.maximum(-arr, 0.0).sum(axis=axes) * traj.domain.cell_volume).max())


def negpart_summary(runs: Mapping[float, Trajectory], slack: float = 2.0) -> SweepReport:
    """Scaling of the negative mass with eps across runs keyed by eps.

    The flag requires ``max_neg / eps`` at every smaller eps to stay within
    ``slack`` times its value at the previous and at the largest eps.
    """
    eps = tuple(sorted(runs, reverse=True))
    vals = tuple(max_negative_mass(runs[e]) for e in eps)
    ratios = tuple(v / e for v, e in zip(vals, eps))
    ok = all(r <= slack * ratios[0] + 1e-300 for r in ratios)
    ok = ok and all(b <= slack * a + 1e-300 for a, b in zip(ratios, ratios[1:]))
    if all(v > 0 for v in vals) and len(eps) > 1:
        slope = float(np.polyfit(np.log(eps), np.log(vals), 1)[0])
    else:
        slope = 0.0
    return SweepReport(eps, vals, ratios, slope, bool(ok))


def negpart_sweep(u0: State, coeffs: Coefficients, table: KernelTable, cfg: StepConfig,
                  eps_list: Iterable[float], slack: float = 2.0) -> SweepReport:
    runs = {float(e): simulate(u0, coeffs.with_eps(e), table, cfg) for e in eps_list}
    return negpart_summary(runs, slack)


def relative_spread(values: Iterable[float]) -> float:
    """``(max - min) / max |v|``; 0 for all-zero input."""
    v = np.asarray(list(values), float)
    top = np.max(np.abs(v))
    return 0.0 if top == 0 else float((v.max() - v.min()) / top)


def check_refinement_stability(values: Iterable[float], rel_tol: float, what: str = "ledger constant") -> float:
    """Raise :class:`LedgerViolation` if the constants spread by more than ``rel_tol``."""
    v = list(values)
    if not all(math.isfinite(x) for x in v):
        raise LedgerViolation(f"{what} is not finite: {v}")
    spread = relative_spread(v)
    if spread > rel_tol:
        raise LedgerViolation(f"{what} varies by {spread:.1%} under refinement (allowed {rel_tol:.0%}): {v}")
    return spread


def ledger_rows(traj: Trajectory, coeffs: Coefficients, table: KernelTable) -> list[dict]:
    """Per-knot rows for the ledger CSV."""
    eps = coeffs.eps
    reports = [entropy_report(traj.state(j), coeffs, table, eps) for j in range(len(traj))]
    taus = np.diff(traj.times)
    Dcum = np.concatenate([[0.0], np.cumsum(taus * np.array([r.D for r in reports[1:]]))])
    try:
        c_series = entropy_ledger(traj, coeffs, table, eps).c_series
    except LedgerViolation:
        c_series = np.full(len(traj), math.inf)
    g = gronwall_bound(traj, coeffs, table).C_series
    rows = []
    for j, r in enumerate(reports):
        rows.append({
            "t": r.t, "E": r.E, "E_eps": r.E_eps, "D_cumulative": float(Dcum[j]),
            "neg1": r.neg_l1[0], "neg2": r.neg_l1[1], "mass1": r.mass[0], "mass2": r.mass[1],
            "sup1": r.sup[0], "sup2": r.sup[1],
            "ledger_c": float(c_series[j]) if j > 0 else 0.0,
            "gronwall_C": float(g[j]),
        })
    return rows

"""Model nonlinearities, the nonlocal diffusion operator and the regularized
right-hand side.

For species ``i`` with partner ``j``::

    p_i(u) = u_i (c_i + a_i u_i + u_j)
    f_i(u) = u_i (alpha_i - beta_i1 u_1 - beta_i2 u_2)

and the regularized evolution evaluates both at ``u^+ + eps``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from nlskt import _backend
from nlskt.grid import Field, State
from nlskt.kernel import KernelTable


@dataclass(frozen=True)
class Coefficients:
    """Nonnegative model constants plus the regularization ``eps``.

    ``beta[i][j]`` is the competition rate of species ``j`` on species ``i``
    (zero-based). With ``theorem_mode`` the existence/uniqueness condition
    ``a_i + beta_ii > 0`` is enforced at construction.
    """

    c: tuple[float, float] = (0.0, 0.0)
    a: tuple[float, float] = (0.0, 0.0)
    alpha: tuple[float, float] = (0.0, 0.0)
    beta: tuple[tuple[float, float], tuple[float, float]] = ((0.0, 0.0), (0.0, 0.0))
    eps: float = 0.0
    theorem_mode: bool = False

    def __post_init__(self):
        c = tuple(float(v) for v in self.c)
        a = tuple(float(v) for v in self.a)
        alpha = tuple(float(v) for v in self.alpha)
        beta = tuple(tuple(float(v) for v in row) for row in self.beta)
        if len(c) != 2 or len(a) != 2 or len(alpha) != 2 or len(beta) != 2 or any(len(r) != 2 for r in beta):
            raise ValueError("coefficients are per species: c, a, alpha of length 2, beta 2x2")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "eps", float(self.eps))
        bad = self.violations()
        if bad:
            raise ValueError("; ".join(f"{k}: {m}" for k, m in bad))

    def violations(self) -> list[tuple[str, str]]:
        """``(key, message)`` for every negative entry and, in theorem mode,
        every species with ``a_i + beta_ii == 0``."""
        out = []
        named = {"c1": self.c[0], "c2": self.c[1], "a1": self.a[0], "a2": self.a[1],
                 "alpha1": self.alpha[0], "alpha2": self.alpha[1],
                 "beta11": self.beta[0][0], "beta12": self.beta[0][1],
                 "beta21": self.beta[1][0], "beta22": self.beta[1][1],
                 "epsilon": self.eps}
        for k, v in named.items():
            if not (v >= 0 and np.isfinite(v)):
                out.append((k, f"must be a finite nonnegative number, got {v}"))
        if self.theorem_mode:
            for i in range(2):
                if not self.a[i] + self.beta[i][i] > 0:
                    out.append((f"a{i + 1}", f"a{i + 1} + beta{i + 1}{i + 1} > 0 is required in theorem mode"))
        return out

    def satisfies_theorem(self) -> bool:
        return all(self.a[i] + self.beta[i][i] > 0 for i in range(2))

    def swapped(self) -> Coefficients:
        """Coefficients with the species labels exchanged."""
        b = self.beta
        return Coefficients(self.c[::-1], self.a[::-1], self.alpha[::-1],
                            ((b[1][1], b[1][0]), (b[0][1], b[0][0])), self.eps, self.theorem_mode)

    def with_eps(self, eps: float) -> Coefficients:
        return Coefficients(self.c, self.a, self.alpha, self.beta, eps, self.theorem_mode)

    @classmethod
    def uniform(cls, value: float = 1.0, eps: float = 0.0, theorem_mode: bool = False) -> Coefficients:
        v = float(value)
        return cls((v, v), (v, v), (v, v), ((v, v), (v, v)), eps, theorem_mode)


def _check_species(i: int) -> int:
    if i not in (1, 2):
        raise ValueError(f"species index must be 1 or 2, got {i}")
    return i - 1


def p(i: int, u, coeffs: Coefficients):
    k = _check_species(i)
    ui, uj = u[k], u[1 - k]
    return ui * (coeffs.c[k] + coeffs.a[k] * ui + uj)


def f(i: int, u, coeffs: Coefficients):
    k = _check_species(i)
    # own species first so that relabelling the species is bitwise symmetric
    return u[k] * (coeffs.alpha[k] - coeffs.beta[k][k] * u[k] - coeffs.beta[k][1 - k] * u[1 - k])


def _apply(table: KernelTable, g: np.ndarray) -> np.ndarray:
    # g is a 2D work array
    mass = table.mass.values.reshape(g.shape)
    return _backend.stencil_sum(g, table.offsets, table.weights) - mass * g


def nonlocal_apply(table: KernelTable, g: Field) -> Field:
    """``x -> sum_y J(x - y) (g(y) - g(x)) h^d`` over the domain."""
    if g.domain != table.domain:
        raise ValueError("field and kernel table live on different domains")
    return g.with_values(_apply(table, g.grid()))


def shifted(v: np.ndarray, eps: float) -> np.ndarray:
    """``v^+ + eps``."""
    return np.maximum(v, 0.0) + eps


def regularized_parts(v: np.ndarray, coeffs: Coefficients, table: KernelTable):
    """Nonlocal and reaction parts of the regularized right-hand side.

    ``v`` has shape ``(2,) + grid_shape``; returns two arrays of that shape.
    """
    s = shifted(v, coeffs.eps)
    diff = np.empty_like(s)
    reac = np.empty_like(s)
    for i in (1, 2):
        diff[i - 1] = _apply(table, np.ascontiguousarray(p(i, s, coeffs)))
        reac[i - 1] = f(i, s, coeffs)
    return diff, reac


def rhs_regularized(state: State, coeffs: Coefficients, table: KernelTable) -> tuple[Field, Field]:
    v = np.stack([state.u1.grid(), state.u2.grid()])
    diff, reac = regularized_parts(v, coeffs, table)
    out = diff + reac
    return state.u1.with_values(out[0]), state.u2.with_values(out[1])


class LipschitzBounds(NamedTuple):
    M0: float
    Lp: float
    Lf: float


def _jacobian_rows(u1, u2, coeffs: Coefficients):
    c, a, al, b = coeffs.c, coeffs.a, coeffs.alpha, coeffs.beta
    jp = ((c[0] + 2 * a[0] * u1 + u2, u1),
          (u2, c[1] + 2 * a[1] * u2 + u1))
    jf = ((al[0] - 2 * b[0][0] * u1 - b[0][1] * u2, -b[0][1] * u1),
          (-b[1][0] * u2, al[1] - b[1][0] * u1 - 2 * b[1][1] * u2))
    return jp, jf


def lipschitz_bounds(M0: float, coeffs: Coefficients) -> LipschitzBounds:
    """Row-sum Lipschitz constants of ``p`` and ``f`` on ``[0, 2 M0 + eps]^2``.

    Every partial derivative is affine, so the absolute row sums are convex
    and attain their maximum at a corner of the box.
    """
    if not M0 > 0:
        raise ValueError(f"M0 must be positive, got {M0}")
    top = 2.0 * M0 + coeffs.eps
    Lp = Lf = 0.0
    for u1, u2 in itertools.product((0.0, top), repeat=2):
        jp, jf = _jacobian_rows(u1, u2, coeffs)
        Lp = max(Lp, *(abs(r[0]) + abs(r[1]) for r in jp))
        Lf = max(Lf, *(abs(r[0]) + abs(r[1]) for r in jf))
    return LipschitzBounds(float(M0), float(Lp), float(Lf))


def elementary_log_gap(s, sigma):
    """``s (ln s - ln sigma) - (s - sigma)``, nonnegative for ``s, sigma > 0``."""
    s = np.asarray(s, float)
    sigma = np.asarray(sigma, float)
    return s * (np.log(s) - np.log(sigma)) - (s - sigma)

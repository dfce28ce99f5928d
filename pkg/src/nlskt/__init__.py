"""Nonlocal two-species cross-diffusion with a regularized implicit scheme."""

__version__ = "0.1.0"

from nlskt._backend import BACKEND
from nlskt.dynamics import Coefficients, nonlocal_apply, rhs_regularized
from nlskt.grid import Domain, Field, State, integrate, norms
from nlskt.kernel import KernelSpec, KernelTable, build_table, rescale
from nlskt.stepper import StepConfig, Trajectory, picard_step, simulate

__all__ = [
    "BACKEND", "Coefficients", "Domain", "Field", "KernelSpec", "KernelTable", "State", "StepConfig",
    "Trajectory", "build_table", "integrate", "nonlocal_apply", "norms", "picard_step", "rescale",
    "rhs_regularized", "simulate",
]

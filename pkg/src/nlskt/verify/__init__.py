"""Independent oracles for the scheme: consistency, limits and uniqueness."""
from nlskt.verify.bilateral import bilateral_filter, bilateral_step
from nlskt.verify.dual import (DualConfig, DualSolution, DualState, certificate, dual_solve,
                               solve_dual_system, uniqueness_residual)
from nlskt.verify.heat import heat_convergence, neumann_cosine
from nlskt.verify.ode import logistic, ode_reduction
from nlskt.verify.taylor import taylor_consistency

__all__ = [
    "DualConfig", "DualSolution", "DualState", "bilateral_filter", "bilateral_step", "certificate",
    "dual_solve", "heat_convergence", "logistic", "neumann_cosine", "ode_reduction",
    "solve_dual_system", "taylor_consistency", "uniqueness_residual",
]

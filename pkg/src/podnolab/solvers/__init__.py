"""Ground-truth PDE solvers: Darcy finite differences, NLS splitting, KP ETDRK4."""

from .darcy import DarcyProblem, SolverError, apply_operator, solve_darcy
from .kp import KpProblem, etdrk4_kp, kp_linear_exact, linear_symbol
from .nls import (NlsProblem, lie_trotter_nls, nonlinear_phase,
                  pod_lie_trotter_nls, splitting_snapshots)

__all__ = [
    "DarcyProblem", "SolverError", "apply_operator", "solve_darcy",
    "KpProblem", "etdrk4_kp", "kp_linear_exact", "linear_symbol",
    "NlsProblem", "lie_trotter_nls", "nonlinear_phase",
    "pod_lie_trotter_nls", "splitting_snapshots",
]

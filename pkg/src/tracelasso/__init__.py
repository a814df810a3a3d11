"""Trace Lasso regression toolkit.

The trace Lasso penalizes ``w`` by ``||X Diag(w)||_*``, which behaves like
the l1 norm for uncorrelated predictors and like the l2 norm for identical
ones. The package provides the norm and its ``Omega_P`` generalization, an
IRLS solver with regularization paths, ridge/Lasso/elastic-net baselines,
second-order perturbation expansions and synthetic benchmark sweeps.
"""

from .baselines import elastic_net_solve, lasso_solve, ridge_solve
from .exceptions import ConvergenceError, DomainError, InvalidInputError
from .norms import (GroupPartition, PenaltyMatrix, group_lasso_matrix, omega,
                    trace_lasso, unit_ball_slice)
from .perturbation import (expansion_residual_report, lasso_neighborhood_expansion,
                           trace_norm_expansion)
from .solver import (Problem, SolverConfig, SolveResult, irls_solve, lambda_max,
                     objective, reg_path, uniqueness_probe)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DomainError",
    "InvalidInputError",
    "GroupPartition",
    "PenaltyMatrix",
    "Problem",
    "SolveResult",
    "SolverConfig",
    "elastic_net_solve",
    "expansion_residual_report",
    "group_lasso_matrix",
    "irls_solve",
    "lambda_max",
    "lasso_neighborhood_expansion",
    "lasso_solve",
    "objective",
    "omega",
    "reg_path",
    "ridge_solve",
    "trace_lasso",
    "trace_norm_expansion",
    "uniqueness_probe",
    "unit_ball_slice",
]

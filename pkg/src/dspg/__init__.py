"""Dual spectral projected gradient solver for l1-penalized log-det programs.

Estimates sparse precision matrices by maximizing the dual of

    min  Tr(C X) - mu log det X + sum(rho * |X|)
    s.t. Tr(A_p X) = b_p,  X positive definite

with a projected gradient iteration using Barzilai-Borwein step lengths and a
nonmonotone line search.  See :mod:`dspg.solver` for the iteration,
:mod:`dspg.model` for problem data, :mod:`dspg.generate` for synthetic
instances, :mod:`dspg.metrics` for recovery scoring and :mod:`dspg.cli` for
the command-line surface.
"""

from .linalg import CholeskyFactor, NotPositiveDefinite
from .metrics import RecoveryReport, entropy_loss, quadratic_loss, support_scores
from .model import (
    ConstraintMap,
    DualIterate,
    Infeasible,
    KktResiduals,
    ProblemInstance,
    build_instance,
    dual_gradient,
    dual_objective,
    kkt_residuals,
    make_iterate,
    primal_objective,
    project_box,
    recover_primal,
)
from .generate import GenSpec, build_zero_constraints, gen_precision, sample_covariance
from .solver import (
    IterationRecord,
    SolveReport,
    SolveStatus,
    SolverConfig,
    bb_update,
    line_search,
    max_feasible_step,
    search_direction,
    solve,
    step_bound,
)

__version__ = "0.1.0"

__all__ = [
    "CholeskyFactor",
    "ConstraintMap",
    "DualIterate",
    "GenSpec",
    "Infeasible",
    "IterationRecord",
    "KktResiduals",
    "NotPositiveDefinite",
    "ProblemInstance",
    "RecoveryReport",
    "SolveReport",
    "SolveStatus",
    "SolverConfig",
    "bb_update",
    "build_instance",
    "build_zero_constraints",
    "dual_gradient",
    "dual_objective",
    "entropy_loss",
    "gen_precision",
    "kkt_residuals",
    "line_search",
    "make_iterate",
    "max_feasible_step",
    "primal_objective",
    "project_box",
    "quadratic_loss",
    "recover_primal",
    "sample_covariance",
    "search_direction",
    "solve",
    "step_bound",
    "support_scores",
]

"""Relaxed iterative perturbation theory as an eigensolver for sparse symmetric problems."""

from .accel import AitkenResult, AndersonStep, AndersonWindow, aitken, anderson_coefficients, anderson_step
from .core import (DegenerateDiagonal, IterationState, Partitioning, SolverConfig, Status,
                   convergence_radius_bound, energy, epstein_nesbet, h1_norm_estimate, iterate_q,
                   natural_partitioning, q_ipt, reduced_resolvent_apply, relax_iterate, repartition,
                   residual_norm, restrict, rs_coefficients, rs_step, target_component)
from .operator import SparseSymmetricOperator, SymmetryError
from .pencil import (GeneralizedProblem, SymmetricPencil, generalized_residual, pencil_energy,
                     q_ipt_generalized, relax_iterate_generalized)
from .precision import DOUBLE, EXTENDED
from .trace import ConvergenceTrace, TraceRecord

__version__ = "0.1.0"

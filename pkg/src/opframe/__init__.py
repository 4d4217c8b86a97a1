"""Controlled K-operator frames on Hilbert C*-modules over M_n(C)."""
from .errors import *  # noqa: F401,F403
from .algebra import (
    DEFAULT_RANK_TOL,
    DEFAULT_TOL,
    hermitian_eigen,
    loewner_leq,
    positive_sqrt,
    pseudo_inverse,
    svd,
)
from .module import ModuleVector, inner_product, make_rng, module_norm, random_vector
from .operators import (
    GLPlusOperator,
    ModuleOperator,
    adjoint,
    compose,
    inverse,
    norm_dominance_check,
    random_glplus,
    random_operator,
    surjectivity_lower_bound,
)
from .frames import (
    ControlledSystem,
    FrameBounds,
    controlled_frame_operator,
    lift_from_controlled_k_frame,
    middle_operator,
    optimal_bounds,
    verify_bounds,
)
from .douglas import equivalence_report, factorize, majorization_lambda, range_inclusion
from .theorems import THEOREM_IDS, TheoremVerdict
from .lab import GenSpec, generate, run_suite

__version__ = "0.1.0"

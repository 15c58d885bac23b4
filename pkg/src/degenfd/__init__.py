"""Monotone finite-difference schemes for possibly degenerate second-order
parabolic and elliptic equations on the periodic torus, with executable
checkers for the scheme hypotheses, exact discrete identities, and a
Richardson-extrapolation accelerator verified by manufactured-solution
convergence studies."""

from .grid import GridFunction, Lattice
from .stencil import (
    StencilSet,
    delta,
    leibniz_expand,
    mixed_difference,
    second_difference,
    shift,
)
from .fields import (
    CoefficientSet,
    DataSet,
    FieldExpr,
    data_norms,
    exact_derivative,
    parse_expr,
    sample,
    seminorm_k,
)
from .operators import Scheme, apply_L, apply_L0, continuum_L, manufacture_rhs, q_form
from .parabolic import (
    ParabolicSolution,
    TimeGrid,
    cfl_bound,
    solve_parabolic,
    verify_max_principle,
)
from .elliptic import solve_elliptic_direct, solve_elliptic_march
from .richardson import ExtrapolationPlan, combine, vandermonde_coefficients
from .analysis import StudyResult, convergence_study, derivative_bound_study, mixed_diff_sup
from .validate import (
    ValidationReport,
    check_c_floor,
    check_increment_bounds,
    check_kappa_floor,
    check_monotonicity,
    check_q_drift,
    check_symmetry,
    estimate_Mk,
    probe_coercivity_first,
    probe_coercivity_second,
)
from .scenario import Scenario, load_scenario

__version__ = "0.1.0"

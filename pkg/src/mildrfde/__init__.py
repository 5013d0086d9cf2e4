"""Mild solutions of linear retarded functional differential equations.

The equation ``x'(t) = L x_t`` with ``L psi = int_{-r}^0 d eta(theta) psi(theta)``
is solved for histories that may be discontinuous, through the integral form
``x(t) = phi(0) + L int_0^t x_s ds``.
"""
from .diagnostics import (
    RegularityReport,
    ResidualStats,
    ac_modulus,
    de_residual,
    derivative_lp,
    lipschitz_estimate,
    mild_residual,
)
from .errors import (
    DomainError,
    PicardError,
    SharedDiscontinuityError,
    SolverConfigError,
    StepRejection,
    UndefinedPointError,
)
from .forcing import (
    ForcingReport,
    G_forcing,
    check_lp_bound,
    f_forcing,
    forcing_function,
    forcing_report,
    g_forcing,
    mollify_history,
)
from .model import (
    History,
    Kernel,
    apply_L,
    instantaneous_input,
    kernel_variation,
    lp_norm,
    reflect_kernel,
    segment,
    static_prolongation,
)
from .piecewise import BivariatePolynomial, PiecewiseFunction
from .problem import ProblemSpec, SchemaError, parse_problem
from .rs_calculus import (
    BVFunction,
    CheckResult,
    check_fubini,
    check_minkowski,
    check_sharp_estimate,
    check_shifted_fubini,
    rs_convolution,
    rs_integral,
    variation_function,
    volterra,
)
from .solver import SolverConfig, fundamental_matrix, solve_classical, solve_forced_dde, solve_mild
from .trajectory import Trajectory

__version__ = "0.1.0"

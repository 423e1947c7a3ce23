"""Momentum solvers with certified descent, proximal path diagnostics,
and sample-based regularity checks for structured test problems."""

from .certify import (
    CertReport,
    HolderFunction,
    certify_growth_direct,
    certify_growth_via_ppa,
    check_growth_implies_kl,
    check_kl,
    check_moreau_exponent,
    fit_growth_exponent,
    fit_rate_from_trace,
    verify_recursive_rate,
)
from .errors import (
    CapabilityError,
    DeskScaleLimitError,
    EmptyRegionError,
    InnerSolveError,
    InvalidInputError,
    InvalidSpecError,
    NumericalFailureError,
    ToolkitError,
    TraceParseError,
)
from .objective import (
    Objective,
    PowerIterationWarning,
    ProblemSpec,
    lipschitz_estimate,
    make_abs_value,
    make_least_squares,
    make_power,
    make_quadratic,
    make_radon,
)
from .prox import (
    GridSpec,
    PpaRun,
    moreau_gradient,
    moreau_value,
    ppa_run,
    ppa_run_nonconvex,
    prox_point,
)
from .solvers import (
    SolverConfig,
    SolverState,
    ahb_alpha,
    ahb_beta,
    ahb_step,
    alrhb_step,
    gd_step,
    initial_state,
    nesterov_step,
    run_solver,
    update_gamma_tilde,
)
from .trace import IterationRecord, Trace, read_csv, summarize, write_csv

__version__ = "0.1.0"

__all__ = [
    "CapabilityError",
    "CertReport",
    "DeskScaleLimitError",
    "EmptyRegionError",
    "GridSpec",
    "HolderFunction",
    "InnerSolveError",
    "InvalidInputError",
    "InvalidSpecError",
    "IterationRecord",
    "NumericalFailureError",
    "Objective",
    "PowerIterationWarning",
    "PpaRun",
    "ProblemSpec",
    "SolverConfig",
    "SolverState",
    "ToolkitError",
    "Trace",
    "TraceParseError",
    "ahb_alpha",
    "ahb_beta",
    "ahb_step",
    "alrhb_step",
    "certify_growth_direct",
    "certify_growth_via_ppa",
    "check_growth_implies_kl",
    "check_kl",
    "check_moreau_exponent",
    "fit_growth_exponent",
    "fit_rate_from_trace",
    "gd_step",
    "initial_state",
    "lipschitz_estimate",
    "make_abs_value",
    "make_least_squares",
    "make_power",
    "make_quadratic",
    "make_radon",
    "moreau_gradient",
    "moreau_value",
    "nesterov_step",
    "ppa_run",
    "ppa_run_nonconvex",
    "prox_point",
    "read_csv",
    "run_solver",
    "summarize",
    "update_gamma_tilde",
    "verify_recursive_rate",
    "write_csv",
]

"""Numerical laboratory for two-peak solutions of a perturbed fractional critical equation."""

from .bubbles import (
    Bubble,
    ContractError,
    DomainError,
    FracParams,
    bubble_amplitude_C0,
    bubble_dcenter,
    bubble_dlambda,
    eval_bubble,
    frac_laplacian_exact,
    geometric_constants,
    sobolev_constant,
)
from .quadrature import (
    Feature,
    IntegralResult,
    QuadratureError,
    QuadratureSpec,
    hgamma_inner,
    integrate_rn,
    pv_frac_laplacian,
)

from .kprofile import CriticalPoint, KProfile, demo_profile, eval_K, load_profile, validate_profile
from .interaction import InteractionConfig, EstimateReport, two_bubble_config, reference_constants
from .energy import PeakAnsatz, alpha_hat, functional_terms, single_bubble_level
from .reduction import ReducedProblem, brouwer_degree, solve_reduced
from .galerkin import Configuration, coercivity_sweep, min_eigen_quadratic_form
from .ansatz import ansatz_at_scales, build_ansatz, residual_norm

__version__ = "0.1.0"

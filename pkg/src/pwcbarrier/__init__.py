"""Piecewise-constant stochastic barrier synthesis for systems with Gaussian noise."""

from .ambiguity import AmbiguityRow, WorstCaseResult, brute_force_oracle, worst_case_expectation
from .barrier import CegisSettings, CertificateResult, Engine, GdSettings, PwcBarrier
from .certificate import ValidationReport, barrier_value, evaluate_certificate, psafe, validate_monte_carlo
from .dynamics import (
    GaussianNoise,
    LinearDynamics,
    MeanIntervalVector,
    PwaInclusionDynamics,
    image_interval_linear,
    image_interval_pwa,
    lift_linear_to_inclusion,
    linear_dynamics,
)
from .engines import synthesize, synthesize_cegis, synthesize_dual, synthesize_gd
from .geometry import Hyperrectangle, Partition, generate_partition, make_hyperrectangle, mark_regions
from .transition_bounds import TransitionBounds, compute_transition_bounds, factor_bounds, gaussian_mass

__version__ = "0.1.0"

"""Simulator and verification harness for disconnection-driven grain-boundary
motion with a nonlocal Hilbert-type interaction stress."""

__version__ = "0.1.0"

from .core import (
    Field,
    Grid,
    ModelParams,
    Trajectory,
    derivative_x,
    make_grid,
    second_derivative_x,
    validate_initial_data,
)
from .evolution import StepperConfig, rhs, run, stable_dt, step_explicit, step_semi_implicit
from .initial_data import make_initial
from .monitors import (
    EstimateReport,
    build_report,
    flux_time_derivative_norm,
    lp_norm,
    weak_residual,
)
from .regularization import abs_kappa, abs_kappa_mean, flux_kappa, flux_kappa_error_bound
from .stress import (
    SigmaMethod,
    lp_boundedness_probe,
    sigma_i1_images,
    sigma_i2_direct,
    sigma_i2_truncated,
    sigma_spectral_oracle,
    sigma_total,
)
from .studies import SweepResult, b_sweep, kappa_sweep, twin_stability

__all__ = [
    "__version__",
    "Field",
    "Grid",
    "ModelParams",
    "Trajectory",
    "derivative_x",
    "make_grid",
    "second_derivative_x",
    "validate_initial_data",
    "StepperConfig",
    "rhs",
    "run",
    "stable_dt",
    "step_explicit",
    "step_semi_implicit",
    "make_initial",
    "EstimateReport",
    "build_report",
    "flux_time_derivative_norm",
    "lp_norm",
    "weak_residual",
    "abs_kappa",
    "abs_kappa_mean",
    "flux_kappa",
    "flux_kappa_error_bound",
    "SigmaMethod",
    "lp_boundedness_probe",
    "sigma_i1_images",
    "sigma_i2_direct",
    "sigma_i2_truncated",
    "sigma_spectral_oracle",
    "sigma_total",
    "SweepResult",
    "b_sweep",
    "kappa_sweep",
    "twin_stability",
]

"""Driven collective-spin ensembles with squeezed collective decay.

Exact Liouvillian steady states on the Dicke sector, quantum Fisher
information for steady-state and perturbed-state estimation schemes,
and the closed-form Gaussian analytics of the ferromagnetic phase.
"""

from .errors import (
    ConvergenceError,
    DegenerateSteadyStateError,
    PhaseDomainError,
    SolverError,
    SpincritError,
    StepSizeWarning,
    SupportLeakWarning,
    ValidationError,
)
from .harness import ScalingFit, SweepSpec, fit_power_law, run_selftest, run_sweep
from .liouvillian import (
    LindbladGenerator,
    SolverConfig,
    SpectrumReport,
    SteadyState,
    Trajectory,
    build_generator,
    evolve,
    liouvillian_spectrum,
    solve_steady_state,
)
from .meanfield import (
    GaussianSteadyState,
    HPCoefficients,
    ScalingExponents,
    SignalPrediction,
    analytic_qfi_chi,
    bound_omega,
    bound_theta,
    gaussian_steady_state,
    hp_coefficients,
    magnetization,
    optimal_theta,
    predict_signals,
    scaling_exponents,
)
from .metrology import (
    EstimationReport,
    SpinSqueezing,
    chi_squared,
    default_fd_step,
    error_propagation,
    qfi_perturbed,
    qfi_steady,
    sld,
    steady_derivative,
    steady_solver,
    xi_squared,
)
from .operators import (
    ModelParams,
    SpinOperatorSet,
    build_operators,
    expectation,
    spin_direction_operator,
    trace_distance,
    variance,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DegenerateSteadyStateError",
    "EstimationReport",
    "GaussianSteadyState",
    "HPCoefficients",
    "LindbladGenerator",
    "ModelParams",
    "PhaseDomainError",
    "ScalingExponents",
    "ScalingFit",
    "SignalPrediction",
    "SolverConfig",
    "SolverError",
    "SpectrumReport",
    "SpinOperatorSet",
    "SpinSqueezing",
    "SpincritError",
    "SteadyState",
    "StepSizeWarning",
    "SupportLeakWarning",
    "SweepSpec",
    "Trajectory",
    "ValidationError",
    "analytic_qfi_chi",
    "bound_omega",
    "bound_theta",
    "build_generator",
    "build_operators",
    "chi_squared",
    "default_fd_step",
    "error_propagation",
    "evolve",
    "expectation",
    "fit_power_law",
    "gaussian_steady_state",
    "hp_coefficients",
    "liouvillian_spectrum",
    "magnetization",
    "optimal_theta",
    "predict_signals",
    "qfi_perturbed",
    "qfi_steady",
    "run_selftest",
    "run_sweep",
    "scaling_exponents",
    "sld",
    "solve_steady_state",
    "spin_direction_operator",
    "steady_derivative",
    "steady_solver",
    "trace_distance",
    "variance",
    "xi_squared",
]

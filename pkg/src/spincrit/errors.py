"""Exception and warning types shared across the package."""


class SpincritError(Exception):
    """Base class for all package errors."""


class ValidationError(SpincritError, ValueError):
    """Invalid parameters, operators, or states."""


class PhaseDomainError(ValidationError):
    """Closed-form result requested outside its phase of validity."""


class SolverError(SpincritError, RuntimeError):
    """Numerical solver failed to produce a usable result."""


class ConvergenceError(SolverError):
    """Iterative solver did not reach the requested tolerance."""


class DegenerateSteadyStateError(SolverError):
    """The generator has more than one steady state within tolerance."""


class StepSizeWarning(UserWarning):
    """Finite-difference step looks too large for the requested quantity."""


class SupportLeakWarning(UserWarning):
    """A state derivative has weight outside the kept eigenvalue support."""

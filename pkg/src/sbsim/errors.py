"""Exception and warning types shared across the package."""


class SbsimError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(SbsimError):
    """Fock-space truncation too small for the requested operator."""


class InvalidParameterError(SbsimError):
    """Physically inadmissible parameter values."""


class UnstableSystemError(SbsimError):
    """Quadratic form not positive definite; no stable normal modes."""


class NoConvergenceError(SbsimError):
    """Iterative solve did not converge within the iteration cap."""

    def __init__(self, message, residuals=None, last_value=None):
        super().__init__(message)
        self.residuals = residuals
        self.last_value = last_value


class NearResonanceError(SbsimError):
    """Detuning below the perturbative floor; formulas not trusted."""


class AccuracyError(SbsimError):
    """Integrator accuracy budget exceeded (reduce dt)."""


class BracketError(SbsimError):
    """Optimum fell on the edge of the search grid."""


class PoorFitError(SbsimError):
    """Fit residual above threshold; estimate not trustworthy."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NonUniqueSteadyStateError(SbsimError):
    """Liouvillian null space is degenerate."""


class IdentifiabilityError(SbsimError):
    """Singular Jacobian: some parameters are not identifiable."""

    def __init__(self, message, parameter_pair=None):
        super().__init__(message)
        self.parameter_pair = parameter_pair


class ConfigError(SbsimError):
    """Invalid run configuration."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class TruncationLeakageWarning(UserWarning):
    """Truncated Fock space too small; top-level leakage above tolerance."""


class PerturbativityWarning(UserWarning):
    """Predicted shift is a sizable fraction of the detuning."""

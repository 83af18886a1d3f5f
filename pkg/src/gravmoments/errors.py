"""Exception types shared across the package."""


class GravMomentsError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(GravMomentsError, ValueError):
    """Missing or inconsistent configuration (scales, CLI parameters, ...)."""


class DomainError(GravMomentsError, ValueError):
    """Evaluation outside the domain of a potential."""


class DegenerateStateError(GravMomentsError, ValueError):
    """A moment state has no positive width where one is required."""


class UncertaintyViolationError(GravMomentsError, ValueError):
    """Uncertainty volume below lambda*hbar^2/4 by more than the clamp window."""


class UnsupportedOrderError(GravMomentsError, ValueError):
    """A moment of higher order than the supplied data was requested."""


class NoRepresentingDistributionError(GravMomentsError, ValueError):
    """The Hankel positivity test rejects the supplied moment sequence."""


class PhaseDomainError(GravMomentsError, ValueError):
    """Phase derivative evaluated where the density is at or below its floor."""


class SingularityError(GravMomentsError, ValueError):
    """Equations of motion evaluated at a singular point (s <= 0, r <= 0)."""


class SingularityAbort(GravMomentsError, RuntimeError):
    """Integration stepped into a singularity guard; carries the partial result."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class NoReturnError(GravMomentsError, RuntimeError):
    """A return-time integration escaped or ran out its horizon."""

    def __init__(self, message, status="no-return", trajectory=None):
        super().__init__(message)
        self.status = status
        self.trajectory = trajectory


class QuadratureError(GravMomentsError, RuntimeError):
    """Adaptive quadrature failed to converge."""

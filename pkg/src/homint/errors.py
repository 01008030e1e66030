"""Exception types shared across the package."""


class HomintError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(HomintError):
    """Invalid drift or experiment configuration."""


class QuadratureFailure(HomintError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class CoefficientMismatch(HomintError):
    """The two routes to the effective diffusion coefficient disagree."""


class SpecMismatch(HomintError):
    """Objects built from different drift specifications were combined."""


class DomainError(HomintError):
    """Argument outside the mathematical domain of an operation."""


class SingularSystem(HomintError):
    """The resolvent matching system is numerically singular."""


class RootFindFailure(HomintError):
    """CDF inversion failed to converge (indicates a bug)."""


class DegenerateFit(HomintError):
    """Rate fit requested on data containing exact zeros."""

"""Exception hierarchy.

Every numeric failure derives from :class:`NumericFailure`; configuration
problems from :class:`ConfigError`. The CLI maps these to exit codes.
"""


class MinkowskiError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(MinkowskiError, ValueError):
    """Invalid user input (norm spec, CLI flags, file schema)."""


class InvalidParameter(ConfigError):
    pass


class NonConvexProfile(ConfigError):
    """A radial profile does not bound a centrally symmetric convex body."""


class NumericFailure(MinkowskiError, ArithmeticError):
    pass


class DegenerateNorm(NumericFailure):
    pass


class QuadratureFailure(NumericFailure):
    pass


class PhaseNotFound(NumericFailure):
    pass


class SingularFrame(NumericFailure):
    pass


class ScheduleTooCoarse(NumericFailure):
    pass


class LevelOutOfRange(NumericFailure):
    pass


class DegenerateRho(NumericFailure):
    pass


class BlowUp(NumericFailure):
    pass


class ResolutionError(NumericFailure):
    pass


class ReflectionAmbiguity(NumericFailure):
    pass


class CurvatureMismatch(MinkowskiError):
    """Two spheres have different curvature profiles under the given matching."""

    def __init__(self, message, rho_gap=float("nan"), tau_gap=float("nan")):
        super().__init__(message)
        self.rho_gap = rho_gap
        self.tau_gap = tau_gap

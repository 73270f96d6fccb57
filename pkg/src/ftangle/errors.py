"""Exception types raised across the package."""


class FtangleError(Exception):
    """Base class for all package errors."""


class NotHermitian(FtangleError, ValueError):
    pass


class NoConvergence(FtangleError, ArithmeticError):
    pass


class NotPSD(FtangleError, ValueError):
    pass


class ZeroState(FtangleError, ValueError):
    pass


class NotNormalized(FtangleError, ValueError):
    pass


class BadSubset(FtangleError, ValueError):
    pass


class ZeroVector(FtangleError, ValueError):
    pass


class AntipodalDegenerate(FtangleError, ValueError):
    pass


class NegativeRadicand(FtangleError, ArithmeticError):
    pass


class DomainError(FtangleError, ValueError):
    pass


class SingularState(FtangleError, ValueError):
    pass


class NotTangent(FtangleError, ValueError):
    pass


class DualComputationMismatch(FtangleError, AssertionError):
    """Two independent routes to the same quantity disagree."""


class IdentityViolation(FtangleError, AssertionError):
    """An exact identity between measures failed beyond tolerance."""


class VanishingTraceViolation(FtangleError, AssertionError):
    pass

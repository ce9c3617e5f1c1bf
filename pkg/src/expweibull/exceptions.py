"""Exception and warning classes raised across the package."""


class InvalidParameterError(ValueError):
    """A distribution parameter is outside the open positive octant."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested function."""


class DataError(ValueError):
    """Input lifetimes are malformed (non-numeric, nonpositive, empty)."""


class NumericalOverflowError(ArithmeticError):
    """An intermediate quantity left the representable range (F equal to 0 or 1)."""


class NonConvergenceError(RuntimeError):
    """An iterative solver stopped without meeting its tolerance."""


class SingularInformationError(ArithmeticError):
    """The information matrix is too ill-conditioned to invert."""


class IllConditionedWarning(RuntimeWarning):
    pass


class QuadratureWarning(RuntimeWarning):
    pass

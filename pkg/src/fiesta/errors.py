"""Exception and warning types raised by the fiesta package."""


class FiestaError(Exception):
    """Base class for all fiesta errors."""


class InvalidInputError(FiestaError, ValueError):
    """An argument violates the documented preconditions."""


class NumericError(FiestaError, ArithmeticError):
    """A numerical routine failed to converge or lost accuracy."""


class StepTooLargeError(FiestaError):
    """Branch tracking could not match modes between consecutive amplitudes."""


class BracketError(FiestaError, ValueError):
    """A root-finding target is not bracketed by the supplied interval."""


class WindowError(FiestaError, ValueError):
    """A search window does not contain an interior local minimum."""


class ConfigError(FiestaError, ValueError):
    """A run configuration is malformed."""


class IllConditionedWarning(UserWarning):
    """Result may be inaccurate close to a quasienergy degeneracy."""


class ConvergenceWarning(UserWarning):
    """A truncation or quadrature check did not meet its tolerance."""

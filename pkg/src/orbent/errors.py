"""Exception and warning types shared across the package."""


class OrbentError(Exception):
    """Base class for all package errors."""


class ParseError(OrbentError):
    """Malformed input text.

    Parameters
    ----------
    message : str
        Description of the problem.
    lineno : int, optional
        1-based line number of the offending line.
    """

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class ValidationError(OrbentError, ValueError):
    """Input violates a documented invariant."""


class CapacityError(OrbentError):
    """Requested object would exceed a configured size cap."""


class LogicError(OrbentError):
    """An operation was called with a violated precondition."""


class NumericalError(OrbentError, ArithmeticError):
    """A numerical result fell outside its admissible range."""


class ConvergenceError(OrbentError):
    """Iterative solver failed to converge.

    Attributes
    ----------
    best_residual : float
        Smallest residual norm reached before giving up.
    report : ConvergenceReport or None
    """

    def __init__(self, message, best_residual, report=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.report = report


class DegeneracyWarning(UserWarning):
    """Lowest roots are (near-)degenerate; entanglement measures are basis dependent."""


class DuplicateRecordWarning(UserWarning):
    """An integral file assigned the same canonical slot more than once."""

"""Exception hierarchy shared by the library and the command-line front end."""


class QkflowError(Exception):
    """Base class for all errors raised by qkflow."""


class DataFormatError(QkflowError, ValueError):
    """A file or array does not have the expected layout."""


class NumericalError(QkflowError, ArithmeticError):
    """A numerical routine failed (non-PD system, divergence, non-convergence)."""


class ConvergenceError(NumericalError):
    """An iterative solver hit its iteration cap before meeting its tolerance."""


class OptimizationError(QkflowError, RuntimeError):
    """An optimizer aborted because its objective failed or went non-finite."""

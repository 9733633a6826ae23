"""Exception hierarchy.

Numeric failures and configuration problems are kept apart so the command
line front end can map them onto distinct exit codes.
"""


class LassoSEError(Exception):
    """Base class for every error raised by this package."""


class DomainError(LassoSEError, ValueError):
    """An argument lies outside the domain of a function."""


class ConfigError(LassoSEError, ValueError):
    """Invalid experiment configuration or command line input."""


class NumericError(LassoSEError, ArithmeticError):
    """A numerical procedure failed or produced an inconsistent result."""


class NoFixedPointError(NumericError):
    """The scalar fixed-point equation for tau has no solution."""


class InfeasibleError(NumericError):
    """Requested sparsity lies outside the stable region."""


class DegenerateError(NumericError):
    """A denominator such as ``1 - ||theta||_0 / n`` vanishes."""


class ConvergenceError(NumericError):
    """An iterative solver exhausted its budget.

    ``diagnostics`` carries whatever the solver knew when it gave up.
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics

"""Lasso on Gaussian designs: state-evolution predictions, data-driven
tuning of the penalty, and Monte-Carlo checks of both."""

from .errors import (ConfigError, ConvergenceError, DegenerateError, DomainError,
                     InfeasibleError, LassoSEError, NoFixedPointError, NumericError)
from .lasso import DesignProblem, LassoFit, debias, fit, kkt_report, path
from .state_evolution import AtomDistribution, SEFixedPoint, se_path, solve_fixed_point

__version__ = "0.1.0"

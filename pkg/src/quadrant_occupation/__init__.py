"""Numerical laboratory for the occupation time of planar Brownian motion in quadrants."""

__version__ = "0.1.0"

from .errors import ConvergenceError, DomainError, IllConditionedError, PreconditionError
from .params import Params
from .regions import Region

__all__ = ["__version__", "Params", "Region", "ConvergenceError", "DomainError",
           "IllConditionedError", "PreconditionError"]

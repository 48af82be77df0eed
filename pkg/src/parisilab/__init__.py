"""Numerical laboratory for the Parisi functional of mixed p-spin spin glasses."""

__version__ = "0.1.0"

from .errors import ConfigurationError, DomainError, NumericalError, ParisiLabError, ValidationError
from .functional import FunctionalReport, free_energy, linear_term, parisi_functional
from .measure import AtomicMeasure, StepFunction, discretize, distribution, metric_d, mix
from .mixture import MixtureSpec
from .pde import GridParams, GridSolution, build_solution

__all__ = [
    "AtomicMeasure", "ConfigurationError", "DomainError", "FunctionalReport", "GridParams",
    "GridSolution", "MixtureSpec", "NumericalError", "ParisiLabError", "StepFunction",
    "ValidationError", "build_solution", "discretize", "distribution", "free_energy",
    "linear_term", "metric_d", "mix", "parisi_functional",
]

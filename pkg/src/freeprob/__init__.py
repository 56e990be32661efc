"""Computational free probability.

Non-crossing partition combinatorics, moment/free-cumulant calculus, free
additive convolution by subordination, and random-matrix checks.
"""

from .errors import ConvergenceError, FreeProbError, MassError, NumericalError, ValidationError
from .partitions import Partition
from .measures import Histogram, Measure, moments_of_measure
from .transforms import cauchy, convolution_power, free_convolve, stieltjes_invert, subordinate
from .rmt import SimulationConfig

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError", "FreeProbError", "MassError", "NumericalError", "ValidationError",
    "Partition", "Histogram", "Measure", "moments_of_measure",
    "cauchy", "convolution_power", "free_convolve", "stieltjes_invert", "subordinate",
    "SimulationConfig",
]

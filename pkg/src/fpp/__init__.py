"""First-passage percolation on sparse random graphs with signed weights."""

from .constants import ModelConstants
from .distributions import (
    CustomDistribution,
    Exponential,
    Gaussian,
    ShiftedExponential,
    Uniform,
    WeightDistribution,
    parse_distribution,
)
from .renewal import IntensityMeasure, Window

__all__ = [
    "CustomDistribution",
    "Exponential",
    "Gaussian",
    "IntensityMeasure",
    "ModelConstants",
    "ShiftedExponential",
    "Uniform",
    "WeightDistribution",
    "Window",
    "parse_distribution",
]

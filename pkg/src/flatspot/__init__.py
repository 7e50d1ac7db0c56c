"""High-precision experiments with circle maps that have a flat spot."""

from .bigreal import DEFAULT_PRECISION, working
from .errors import FlatSpotError
from .flatmap import (
    CriticalOrbit,
    FlatSpotMap,
    polynomial,
    backward_orbit,
    canonical,
    critical_orbit,
    rigid,
    validate,
    validated,
)
from .kernel import BACKEND
from .rotation import ContinuedFraction, RotationNumber, find_parameter, rotation_number

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ContinuedFraction",
    "CriticalOrbit",
    "DEFAULT_PRECISION",
    "FlatSpotError",
    "FlatSpotMap",
    "RotationNumber",
    "polynomial",
    "backward_orbit",
    "canonical",
    "critical_orbit",
    "find_parameter",
    "rigid",
    "rotation_number",
    "validate",
    "validated",
    "working",
]

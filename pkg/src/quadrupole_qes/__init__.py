"""Quasi-exactly-solvable bound states of a neutral atom with a magnetic
quadrupole moment in a rotating frame, subject to a 1/r scalar potential."""

__version__ = "0.1.0"

from .errors import QESError
from .model import DerivedScales, PhysicalParams
from .quantize import QuantizedMode, solve_level, solve_xi

__all__ = ["DerivedScales", "PhysicalParams", "QESError", "QuantizedMode", "solve_level", "solve_xi"]

"""Exact and numeric verification of Lax pairs, Darboux and Schlesinger
transformations for Painleve II and a related second-order equation."""

from .errors import LaxforgeError
from .symcore import RationalExpr, ReductionSystem, parse

__version__ = "0.1.0"

__all__ = ["LaxforgeError", "RationalExpr", "ReductionSystem", "parse", "__version__"]

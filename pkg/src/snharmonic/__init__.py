"""Harmonic analysis on small symmetric groups: characters, isotypic
decompositions, the box-space coupling, globalness audits and experiments."""

from .algebra import GroupFunction
from .permcore import Permutation

__version__ = "0.1.0"
__all__ = ["GroupFunction", "Permutation", "__version__"]

"""Exact Weyl algebra arithmetic, Ore fractions and linear systems over them."""

from .kernel import GF, QQ, Field, ModP, ScalarMatrix, field_from_tag
from .weyl import WeylAlgebra, WeylOp

__version__ = "0.1.0"

__all__ = ["GF", "QQ", "Field", "ModP", "ScalarMatrix", "field_from_tag",
           "WeylAlgebra", "WeylOp", "__version__"]

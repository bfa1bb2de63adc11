"""Text syntax: parsing, shape-checked lowering and rendering."""
from .ast import ExprSyntaxError, ShapeError
from .lower import DeclError, build_registry, lower, shape_of
from .parser import parse, parse_expr

__all__ = ["DeclError", "ExprSyntaxError", "ShapeError", "build_registry", "lower", "parse", "parse_expr", "shape_of"]

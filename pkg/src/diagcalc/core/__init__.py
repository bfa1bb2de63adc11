from .diagram import (
    Box, Cap, Cup, Diagram, DiagramSum, ScalarFn, Spider, Swap,
    assemble, close_trace, compose_par, compose_seq, legs_of, remove_nodes, replace_node,
    rotate180, sum_par, sum_rotate, sum_seq, sum_trace,
)
from .equality import diagram_hash, structural_equal, sums_equal
from .errors import BoundaryMismatch, DiagramError, IllFormed, NotEndomorphism, ParseError
from .registry import Entry, RegistryError, VarRegistry
from .serialize import deserialize, serialize

__all__ = [
    "Box", "BoundaryMismatch", "Cap", "Cup", "Diagram", "DiagramError", "DiagramSum", "Entry", "IllFormed",
    "NotEndomorphism", "ParseError", "RegistryError", "ScalarFn", "Spider", "Swap", "VarRegistry", "assemble",
    "close_trace", "compose_par", "compose_seq", "deserialize", "diagram_hash", "legs_of", "remove_nodes",
    "replace_node", "rotate180", "serialize", "structural_equal", "sum_par", "sum_rotate", "sum_seq", "sum_trace",
    "sums_equal",
]

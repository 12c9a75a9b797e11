"""Link prediction for sparse undirected networks: a two-layer GCN with
class-weighted loss and side information, plus classical baselines."""

from .errors import FormatError, InputError, InternalError
from .graph import Graph, NormAdj, build_graph, normalize_adjacency, spmm

__all__ = [
    "FormatError", "Graph", "InputError", "InternalError", "NormAdj",
    "build_graph", "normalize_adjacency", "spmm",
]
__version__ = "0.1.0"

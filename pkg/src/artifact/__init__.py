"""Dynamic expander decompositions of directed and undirected multigraphs."""

from .graph import DynGraph, DeleteEdge, InsertSelfLoop, SplitVertex, GraphError

__version__ = "0.1.0"

__all__ = ["DynGraph", "DeleteEdge", "InsertSelfLoop", "SplitVertex", "GraphError"]

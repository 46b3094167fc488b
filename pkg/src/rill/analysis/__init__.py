"""Static analyses: naming, value types, pacing types, dependencies, memory."""
from .codes import REGISTRY
from .depgraph import DependencyGraph, Edge, EdgeKind, build_graph, well_formedness
from .export import graph_dot, graph_json
from .memory import MemoryBounds, memory_analysis, window_occurrences
from .naming import NameTable, naming_analysis
from .pacing import pacing_type_analysis
from .report import AnalysisReport, Hint, run_all
from .values import ValueTypes, value_type_analysis

__all__ = [
    "REGISTRY",
    "DependencyGraph",
    "Edge",
    "EdgeKind",
    "build_graph",
    "well_formedness",
    "graph_dot",
    "graph_json",
    "MemoryBounds",
    "memory_analysis",
    "window_occurrences",
    "NameTable",
    "naming_analysis",
    "pacing_type_analysis",
    "AnalysisReport",
    "Hint",
    "run_all",
    "ValueTypes",
    "value_type_analysis",
]

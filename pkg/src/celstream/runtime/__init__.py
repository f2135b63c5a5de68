"""Streaming evaluation with constant update time and constant-delay enumeration."""

from .engines import (
    DetEngine,
    Engine,
    MaxEngine,
    NaiveEngine,
    OrderEngine,
    StrictEngine,
    SubsetEngine,
    engine_new,
    normalize_strategy,
    run_query,
)
from .structures import BOTTOM, BlackWhiteStack, Cell, EnumTrace, Node, NodeList, enum_paths, trace_events

__all__ = [
    "BOTTOM",
    "BlackWhiteStack",
    "Cell",
    "DetEngine",
    "Engine",
    "EnumTrace",
    "MaxEngine",
    "NaiveEngine",
    "Node",
    "NodeList",
    "OrderEngine",
    "StrictEngine",
    "SubsetEngine",
    "engine_new",
    "enum_paths",
    "normalize_strategy",
    "run_query",
    "trace_events",
]

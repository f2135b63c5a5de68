"""Complex event queries over streams: parsing, rewriting, automata and streaming evaluation."""

from .automata import Cea, compile_formula, io_determinize, is_io_deterministic
from .events import EventTuple, Schema, StreamPrefix, load_schema, load_stream
from .oracle import ComplexEvent, apply_selection, oracle_eval, oracle_eval_at
from .parser import parse_formula
from .pipeline import CompiledQuery, compile_query, evaluate
from .runtime import engine_new, run_query
from .selection import compile_selection

__version__ = "0.1.0"

__all__ = [
    "CELQuery",
    "Cea",
    "CompiledQuery",
    "ComplexEvent",
    "EventTuple",
    "Schema",
    "StreamPrefix",
    "apply_selection",
    "compile_formula",
    "compile_query",
    "compile_selection",
    "engine_new",
    "evaluate",
    "io_determinize",
    "is_io_deterministic",
    "load_schema",
    "load_stream",
    "oracle_eval",
    "oracle_eval_at",
    "parse_formula",
    "run_query",
]


def __getattr__(name):
    # scikit-learn is only imported when the estimator is asked for
    if name == "CELQuery":
        from .estimator import CELQuery

        return CELQuery
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")

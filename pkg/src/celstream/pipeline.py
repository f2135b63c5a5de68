"""From query text to a runnable automaton, and evaluation over a stream.

The stages are: parse, analysis, safe rewriting, LP-normal form, automaton
construction, epsilon removal, then the selection strategies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from . import formula as F
from .analysis import AnalysisReport, analyze, binary_atoms
from .automata import Cea, compile_formula, io_determinize, is_io_deterministic
from .events import EventTuple, Schema, StreamPrefix
from .oracle import ComplexEvent, NotWellFormedError, oracle_eval_at
from .parser import parse_formula
from .predicates import to_text
from .rewrite import split_selection, to_lp_normal_form, to_safe, wrap_selection
from .runtime.engines import Engine, engine_new, normalize_strategy
from .selection import compile_selection

ENGINES = ("auto", "det", "ndet", "oracle", "naive", "compiled")


class NotUnaryError(ValueError):
    """The query filters on a relation between several variables."""


@dataclass
class CompiledQuery:
    source: F.Formula
    report: AnalysisReport
    safe: F.Formula
    rewritten: F.Formula
    strategies: tuple[str, ...]
    core: Cea
    automaton: Cea = field(repr=False)

    @property
    def strategy(self) -> str | None:
        """The outermost strategy, evaluated by a dedicated engine."""
        return self.strategies[0] if self.strategies else None

    def compiled(self, determinize: bool = False, max_states: int | None = None) -> Cea:
        """Every strategy compiled into the automaton."""
        a = self.core
        for s in reversed(self.strategies):
            a = compile_selection(s, a, max_states)
        if determinize and not is_io_deterministic(a):
            a = io_determinize(a, max_states=max_states)
        return a

    def engine(self, mode: str = "auto", max_states: int | None = 5000) -> Engine:
        if mode == "compiled":
            return engine_new(self.compiled(True, max_states), None, mode="det")
        return engine_new(self.automaton, self.strategy, mode=mode, max_states=max_states)

    def stats(self) -> dict:
        a = self.automaton.with_alphabet()
        return {
            "formula_size": F.formula_size(self.source),
            "rewritten_size": F.formula_size(self.rewritten),
            "strategies": list(self.strategies),
            "states": a.n_states,
            "transitions": len(a.transitions),
            "minterms": len(a.alphabet),
            "io_deterministic": is_io_deterministic(a),
        }


def compile_query(query: str | F.Formula, schema: Schema | None = None) -> CompiledQuery:
    """Run the full compilation pipeline.

    Raises ``CelSyntaxError`` for bad text, ``NotWellFormedError`` when a
    filtered variable is not bound, and ``NotUnaryError`` when a filter
    relates several variables.
    """
    f = parse_formula(query, schema) if isinstance(query, str) else query
    report = analyze(f)
    if not report.well_formed:
        raise NotWellFormedError("formula is not well-formed: a filtered variable is not bound")
    if not report.unary:
        atoms = ", ".join(to_text(a) for a in binary_atoms(f))
        raise NotUnaryError(f"formula is not unary: binary predicate {atoms}")
    chain, core = split_selection(f)
    safe = to_safe(core)
    lp = to_lp_normal_form(safe)
    a = compile_formula(lp)
    outer = chain[0] if chain else None
    automaton = a
    for s in reversed(chain[1:]):
        automaton = compile_selection(s, automaton)
    return CompiledQuery(
        source=f,
        report=report,
        safe=wrap_selection(chain, safe),
        rewritten=wrap_selection(chain, lp),
        strategies=tuple(chain),
        core=a,
        automaton=automaton,
    )


def evaluate(
    query: CompiledQuery | str | F.Formula,
    stream: Iterable[EventTuple],
    *,
    engine: str = "auto",
    strategy: str | None = None,
    consumption_policy: bool = False,
) -> dict[int, set[ComplexEvent]]:
    """Outputs per position. ``strategy`` wraps the query in one more selection."""
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}")
    if isinstance(query, CompiledQuery):
        f = query.source
    else:
        f = parse_formula(query) if isinstance(query, str) else query
    strategy = normalize_strategy(strategy)
    if strategy is not None:
        f = F.Select(strategy, f)
    if engine == "oracle":
        if consumption_policy:
            raise ValueError("the consumption policy is not part of the reference semantics")
        return oracle_eval_at(f, StreamPrefix(list(stream)))
    cq = query if isinstance(query, CompiledQuery) and strategy is None else compile_query(f)
    return cq.engine(engine).run(stream, consumption_policy)

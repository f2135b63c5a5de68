"""CEL abstract syntax trees and the canonical pretty-printer."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

from .predicates import Pred, count_atoms, to_text

STRATEGIES = ("STRICT", "NXT", "LAST", "MAX")


@dataclass(frozen=True)
class Assign:
    """``R AS x``"""

    relation: str
    var: str


@dataclass(frozen=True)
class Filter:
    body: "Formula"
    pred: Pred


@dataclass(frozen=True)
class Or:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Seq:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Plus:
    body: "Formula"


@dataclass(frozen=True)
class Select:
    strategy: str
    body: "Formula"

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown selection strategy {self.strategy!r}")


@dataclass(frozen=True)
class Empty:
    """The unsatisfiable formula; produced when rewriting proves no output exists."""


Formula = Union[Assign, Filter, Or, Seq, Plus, Select, Empty]
EMPTY = Empty()


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (Or, Seq)):
        return (f.lhs, f.rhs)
    if isinstance(f, (Filter, Plus, Select)):
        return (f.body,)
    return ()


def walk(f: Formula) -> Iterator[Formula]:
    """Pre-order traversal."""
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(reversed(children(g)))


def formula_size(f: Formula) -> int:
    """Node count, counting every predicate atom as a node."""
    n = 0
    for g in walk(f):
        n += 1
        if isinstance(g, Filter):
            n += count_atoms(g.pred)
    return n


def or_all(parts: list[Formula]) -> Formula:
    """Left-nested disjunction; the empty list gives EMPTY."""
    if not parts:
        return EMPTY
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def disjuncts(f: Formula) -> list[Formula]:
    """Top-level OR operands, left to right."""
    if isinstance(f, Or):
        return disjuncts(f.lhs) + disjuncts(f.rhs)
    return [f]


# binding strength used by the printer: OR < ; < postfix < primary
_OR, _SEQ, _POST, _PRIM = 1, 2, 3, 4


def _prec(f: Formula) -> int:
    if isinstance(f, Or):
        return _OR
    if isinstance(f, Seq):
        return _SEQ
    if isinstance(f, (Filter, Plus)):
        return _POST
    return _PRIM


def _wrap(f: Formula, need: int) -> str:
    s = pretty(f)
    return f"({s})" if _prec(f) < need else s


def pretty(f: Formula) -> str:
    """Canonical concrete syntax; ``parse_formula(pretty(f))`` gives back ``f``."""
    if isinstance(f, Assign):
        return f"{f.relation} AS {f.var}"
    if isinstance(f, Filter):
        return f"{_wrap(f.body, _POST)} FILTER {to_text(f.pred)}"
    if isinstance(f, Plus):
        return f"({pretty(f.body)})+"
    if isinstance(f, Seq):
        return f"{_wrap(f.lhs, _SEQ)} ; {_wrap(f.rhs, _POST)}"
    if isinstance(f, Or):
        return f"{_wrap(f.lhs, _OR)} OR {_wrap(f.rhs, _SEQ)}"
    if isinstance(f, Select):
        return f"{f.strategy}({pretty(f.body)})"
    if isinstance(f, Empty):
        return "EMPTY"
    raise TypeError(f"not a formula: {f!r}")

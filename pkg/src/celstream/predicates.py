"""Predicate expressions over event variables.

Atoms compare an attribute with a constant or with another attribute, or
test the relation type of a variable. Comparisons between values of
mismatched kinds, or on attributes a tuple lacks, evaluate to false; the
negation of such an atom is therefore true.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Callable, Iterator, Mapping, Union

from .events import EventTuple

OPS = ("=", "!=", "<", "<=", ">", ">=")

_PY_OPS: dict[str, Callable[[Any, Any], bool]] = {
    "=": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}

# op with its operands swapped: a < b  <=>  b > a
SWAPPED = {"=": "=", "!=": "!=", "<": ">", "<=": ">=", ">": "<", ">=": "<="}


def kind_class(value: Any) -> str:
    """Comparison class of a Python value: numeric, string or bool."""
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, (int, float)):
        return "numeric"
    if isinstance(value, str):
        return "string"
    return type(value).__name__


def compare(a: Any, op: str, b: Any) -> bool:
    if a is None or b is None:
        return False
    if kind_class(a) != kind_class(b):
        return False
    try:
        return bool(_PY_OPS[op](a, b))
    except TypeError:
        return False


@dataclass(frozen=True)
class AttrRef:
    var: str
    attr: str

    def __str__(self):
        return f"{self.var}.{self.attr}"


@dataclass(frozen=True)
class Const:
    value: bool

    def __str__(self):
        return "TRUE" if self.value else "FALSE"


@dataclass(frozen=True)
class Compare:
    """``left op right`` where right is an AttrRef or a literal value."""

    left: AttrRef
    op: str
    right: Any

    def __post_init__(self):
        if self.op not in OPS:
            raise ValueError(f"unknown comparison operator {self.op!r}")

    def __str__(self):
        r = self.right
        if isinstance(r, AttrRef):
            rs = str(r)
        elif isinstance(r, bool):
            rs = "true" if r else "false"
        elif isinstance(r, str):
            rs = "'" + r.replace("\\", "\\\\").replace("'", "\\'") + "'"
        else:
            rs = repr(r)
        return f"{self.left} {self.op} {rs}"


@dataclass(frozen=True)
class TypeTest:
    var: str
    relation: str

    def __str__(self):
        return f"type({self.var}) = {self.relation}"


@dataclass(frozen=True)
class And:
    items: tuple["Pred", ...]


@dataclass(frozen=True)
class Or:
    items: tuple["Pred", ...]


@dataclass(frozen=True)
class Not:
    item: "Pred"


Atom = Union[Const, Compare, TypeTest]
Pred = Union[Const, Compare, TypeTest, And, Or, Not]
PredicateExpr = Pred

TRUE = Const(True)
FALSE = Const(False)


def is_atom(p: Pred) -> bool:
    return isinstance(p, (Const, Compare, TypeTest))


def atoms(p: Pred) -> Iterator[Atom]:
    if isinstance(p, (And, Or)):
        for it in p.items:
            yield from atoms(it)
    elif isinstance(p, Not):
        yield from atoms(p.item)
    else:
        yield p


def atom_vars(a: Atom) -> frozenset[str]:
    if isinstance(a, Compare):
        vs = {a.left.var}
        if isinstance(a.right, AttrRef):
            vs.add(a.right.var)
        return frozenset(vs)
    if isinstance(a, TypeTest):
        return frozenset((a.var,))
    return frozenset()


def pred_vars(p: Pred) -> frozenset[str]:
    out: set[str] = set()
    for a in atoms(p):
        out |= atom_vars(a)
    return frozenset(out)


def arity(p: Pred) -> int:
    return len(pred_vars(p))


def count_atoms(p: Pred) -> int:
    return sum(1 for _ in atoms(p))


def conj(*items: Pred) -> Pred:
    """Conjunction with flattening and constant folding."""
    flat: list[Pred] = []
    for it in items:
        parts = it.items if isinstance(it, And) else (it,)
        for p in parts:
            if p == TRUE:
                continue
            if p == FALSE:
                return FALSE
            if p not in flat:
                flat.append(p)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(*items: Pred) -> Pred:
    """Disjunction with flattening and constant folding."""
    flat: list[Pred] = []
    for it in items:
        parts = it.items if isinstance(it, Or) else (it,)
        for p in parts:
            if p == FALSE:
                continue
            if p == TRUE:
                return TRUE
            if p not in flat:
                flat.append(p)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def neg(p: Pred) -> Pred:
    if isinstance(p, Const):
        return Const(not p.value)
    if isinstance(p, Not):
        return p.item
    return Not(p)


def nnf(p: Pred, positive: bool = True) -> Pred:
    """Negation normal form: negations only directly above atoms."""
    if isinstance(p, Not):
        return nnf(p.item, not positive)
    if isinstance(p, And):
        parts = [nnf(i, positive) for i in p.items]
        return conj(*parts) if positive else disj(*parts)
    if isinstance(p, Or):
        parts = [nnf(i, positive) for i in p.items]
        return disj(*parts) if positive else conj(*parts)
    return p if positive else neg(p)


def rename_vars(p: Pred, mapping: Mapping[str, str]) -> Pred:
    if isinstance(p, Compare):
        left = AttrRef(mapping.get(p.left.var, p.left.var), p.left.attr)
        right = p.right
        if isinstance(right, AttrRef):
            right = AttrRef(mapping.get(right.var, right.var), right.attr)
        return Compare(left, p.op, right)
    if isinstance(p, TypeTest):
        return TypeTest(mapping.get(p.var, p.var), p.relation)
    if isinstance(p, And):
        return And(tuple(rename_vars(i, mapping) for i in p.items))
    if isinstance(p, Or):
        return Or(tuple(rename_vars(i, mapping) for i in p.items))
    if isinstance(p, Not):
        return Not(rename_vars(p.item, mapping))
    return p


def substitute_atom(p: Pred, target: Pred, value: bool) -> Pred:
    """Replace every occurrence of ``target`` inside ``p`` by a constant."""
    if p == target:
        return Const(value)
    if isinstance(p, And):
        return conj(*(substitute_atom(i, target, value) for i in p.items))
    if isinstance(p, Or):
        return disj(*(substitute_atom(i, target, value) for i in p.items))
    if isinstance(p, Not):
        return neg(substitute_atom(p.item, target, value))
    return p


def evaluate(p: Pred, env: Mapping[str, EventTuple | None]) -> bool:
    """Evaluate ``p`` with variables bound to tuples; unbound means false atoms."""
    if isinstance(p, Const):
        return p.value
    if isinstance(p, TypeTest):
        t = env.get(p.var)
        return t is not None and t.type_name == p.relation
    if isinstance(p, Compare):
        t = env.get(p.left.var)
        if t is None:
            return False
        a = t.attrs.get(p.left.attr)
        r = p.right
        if isinstance(r, AttrRef):
            u = env.get(r.var)
            if u is None:
                return False
            b = u.attrs.get(r.attr)
        else:
            b = r
        return compare(a, p.op, b)
    if isinstance(p, And):
        return all(evaluate(i, env) for i in p.items)
    if isinstance(p, Or):
        return any(evaluate(i, env) for i in p.items)
    if isinstance(p, Not):
        return not evaluate(p.item, env)
    raise TypeError(f"not a predicate: {p!r}")


def holds(p: Pred, t: EventTuple) -> bool:
    """Evaluate a predicate of arity at most one on a single tuple."""
    return compile_unary(p)(t)


@lru_cache(maxsize=65536)
def compile_unary(p: Pred) -> Callable[[EventTuple], bool]:
    """Closure evaluating ``p`` with every variable bound to the argument."""
    if isinstance(p, Const):
        v = p.value
        return lambda t: v
    if isinstance(p, TypeTest):
        rel = p.relation
        return lambda t: t.type_name == rel
    if isinstance(p, Compare):
        attr, fn = p.left.attr, _PY_OPS[p.op]
        r = p.right
        if isinstance(r, AttrRef):
            rattr, op = r.attr, p.op
            return lambda t: compare(t.attrs.get(attr), op, t.attrs.get(rattr))
        rcls = kind_class(r)

        def cmp_const(t, attr=attr, fn=fn, r=r, rcls=rcls):
            a = t.attrs.get(attr)
            if a is None or kind_class(a) != rcls:
                return False
            return fn(a, r)

        return cmp_const
    if isinstance(p, And):
        fns = tuple(compile_unary(i) for i in p.items)
        return lambda t: all(f(t) for f in fns)
    if isinstance(p, Or):
        fns = tuple(compile_unary(i) for i in p.items)
        return lambda t: any(f(t) for f in fns)
    if isinstance(p, Not):
        f = compile_unary(p.item)
        return lambda t: not f(t)
    raise TypeError(f"not a predicate: {p!r}")


def canonical_unary(p: Pred, var: str = "e") -> Pred:
    """Rename the single variable of a unary predicate to ``var``."""
    return rename_vars(p, {v: var for v in pred_vars(p)})


def to_text(p: Pred) -> str:
    """Concrete syntax; every AND/OR group is parenthesized."""
    if isinstance(p, (Const, Compare, TypeTest)):
        return str(p)
    if isinstance(p, Not):
        return f"NOT {to_text(p.item)}"
    word = " AND " if isinstance(p, And) else " OR "
    return "(" + word.join(to_text(i) for i in p.items) + ")"

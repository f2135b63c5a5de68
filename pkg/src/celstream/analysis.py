"""Variable sets and the well-formed / safe / unary checks."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from . import formula as F
from . import predicates as P


@dataclass(frozen=True)
class AnalysisReport:
    var_all: frozenset[str]
    vdef: frozenset[str]
    vdef_plus: frozenset[str]
    bound: frozenset[str]
    well_formed: bool
    safe: bool
    unary: bool

    @property
    def problems(self) -> list[str]:
        out = []
        if not self.well_formed:
            out.append("not well-formed")
        if not self.safe:
            out.append("not safe")
        if not self.unary:
            out.append("not unary")
        return out


@lru_cache(maxsize=None)
def var_all(f: F.Formula) -> frozenset[str]:
    if isinstance(f, F.Assign):
        return frozenset((f.var,))
    if isinstance(f, F.Filter):
        return var_all(f.body) | P.pred_vars(f.pred)
    out: frozenset[str] = frozenset()
    for c in F.children(f):
        out |= var_all(c)
    return out


@lru_cache(maxsize=None)
def vdef(f: F.Formula) -> frozenset[str]:
    if isinstance(f, F.Assign):
        return frozenset((f.var,))
    out: frozenset[str] = frozenset()
    for c in F.children(f):
        out |= vdef(c)
    return out


@lru_cache(maxsize=None)
def vdef_plus(f: F.Formula) -> frozenset[str]:
    """Variables defined outside every ``+``."""
    if isinstance(f, F.Assign):
        return frozenset((f.var,))
    if isinstance(f, F.Plus):
        return frozenset()
    out: frozenset[str] = frozenset()
    for c in F.children(f):
        out |= vdef_plus(c)
    return out


@lru_cache(maxsize=None)
def bound_vars(f: F.Formula) -> frozenset[str]:
    """Variables bound in every output of ``f`` (the vi recursion)."""
    if isinstance(f, F.Assign):
        return frozenset((f.var,))
    if isinstance(f, (F.Filter, F.Select)):
        return bound_vars(f.body)
    if isinstance(f, F.Or):
        return bound_vars(f.lhs) & bound_vars(f.rhs)
    if isinstance(f, F.Seq):
        return bound_vars(f.lhs) | bound_vars(f.rhs)
    return frozenset()  # Plus, Empty


def _well_formed(f: F.Formula, scope: frozenset[str]) -> bool:
    """``scope`` holds the variables bound by some enclosing subformula."""
    scope = scope | bound_vars(f)
    if isinstance(f, F.Filter) and not P.pred_vars(f.pred) <= scope:
        return False
    return all(_well_formed(c, scope) for c in F.children(f))


def is_well_formed(f: F.Formula) -> bool:
    return _well_formed(f, frozenset())


def is_safe(f: F.Formula) -> bool:
    """Every ``;`` (under ``+`` too) has disjoint vdef+ on its two sides."""
    for g in F.walk(f):
        if isinstance(g, F.Seq) and vdef_plus(g.lhs) & vdef_plus(g.rhs):
            return False
    return True


def is_unary(f: F.Formula) -> bool:
    """Every filter atom mentions at most one variable.

    Filter conjunctions and disjunctions are sugar for nested filters and
    formula-level OR, so arity is judged per atom.
    """
    for g in F.walk(f):
        if isinstance(g, F.Filter):
            for a in P.atoms(g.pred):
                if len(P.atom_vars(a)) > 1:
                    return False
    return True


def analyze(f: F.Formula) -> AnalysisReport:
    return AnalysisReport(
        var_all=var_all(f),
        vdef=vdef(f),
        vdef_plus=vdef_plus(f),
        bound=bound_vars(f),
        well_formed=is_well_formed(f),
        safe=is_safe(f),
        unary=is_unary(f),
    )


def binary_atoms(f: F.Formula) -> list[P.Atom]:
    out = []
    for g in F.walk(f):
        if isinstance(g, F.Filter):
            out.extend(a for a in P.atoms(g.pred) if len(P.atom_vars(a)) > 1)
    return out


def rename_var(f: F.Formula, old: str, new: str) -> F.Formula:
    """Rename free occurrences of ``old``; a ``+`` whose body redefines it shadows it."""
    if isinstance(f, F.Assign):
        return F.Assign(f.relation, new) if f.var == old else f
    if isinstance(f, F.Filter):
        return F.Filter(rename_var(f.body, old, new), P.rename_vars(f.pred, {old: new}))
    if isinstance(f, F.Plus):
        if old in vdef_plus(f.body):
            return f
        return F.Plus(rename_var(f.body, old, new))
    if isinstance(f, F.Or):
        return F.Or(rename_var(f.lhs, old, new), rename_var(f.rhs, old, new))
    if isinstance(f, F.Seq):
        return F.Seq(rename_var(f.lhs, old, new), rename_var(f.rhs, old, new))
    if isinstance(f, F.Select):
        return F.Select(f.strategy, rename_var(f.body, old, new))
    return f


def rename_apart(f: F.Formula) -> F.Formula:
    """Give each ``+`` body fresh names for the variables it redefines.

    Inside ``ρ+`` the variables of vdef+(ρ) get a new value on every
    iteration, so they are distinct from any same-named variable outside.
    Renaming them makes every name refer to one binding scope.
    """
    used = set(var_all(f))
    counter = itertools.count(1)

    def fresh(base: str) -> str:
        while True:
            cand = f"{base}_{next(counter)}"
            if cand not in used:
                used.add(cand)
                return cand

    def go(g: F.Formula, outside: frozenset[str]) -> F.Formula:
        # outside: names that occur anywhere outside g
        if isinstance(g, F.Plus):
            body = g.body
            for v in sorted(vdef_plus(body)):
                if v in outside:
                    body = rename_var(body, v, fresh(v))
            return F.Plus(go(body, outside | _names_shadow(body)))
        if isinstance(g, (F.Or, F.Seq)):
            lhs = go(g.lhs, outside | var_all(g.rhs))
            rhs = go(g.rhs, outside | var_all(lhs))
            return type(g)(lhs, rhs)
        if isinstance(g, F.Filter):
            return F.Filter(go(g.body, outside | P.pred_vars(g.pred)), g.pred)
        if isinstance(g, F.Select):
            return F.Select(g.strategy, go(g.body, outside))
        return g

    return go(f, frozenset())


def _names_shadow(body: F.Formula) -> frozenset[str]:
    # variables of the enclosing body visible to nested pluses
    return vdef_plus(body)

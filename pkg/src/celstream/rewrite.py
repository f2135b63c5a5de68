"""Equivalence-preserving rewrites: disjunctive normal form, safe form, LP-normal form.

Selection operators are only supported as an outermost chain; the passes
rewrite the body and re-wrap it.
"""

from __future__ import annotations

from typing import Callable, Iterator

from . import formula as F
from . import predicates as P
from .minterms import satisfiable
from .analysis import bound_vars, is_safe, is_well_formed, rename_apart, vdef_plus

Path = tuple[int, ...]


class RewriteError(ValueError):
    pass


def split_selection(f: F.Formula) -> tuple[list[str], F.Formula]:
    """Peel the outermost chain of selection operators, outermost first."""
    chain = []
    while isinstance(f, F.Select):
        chain.append(f.strategy)
        f = f.body
    if any(isinstance(g, F.Select) for g in F.walk(f)):
        raise RewriteError("selection operators are supported only at the outermost level")
    return chain, f


def wrap_selection(chain: list[str], f: F.Formula) -> F.Formula:
    if isinstance(f, F.Empty):
        return f
    for s in reversed(chain):
        f = F.Select(s, f)
    return f


def _on_core(fn: Callable[[F.Formula], F.Formula]) -> Callable[[F.Formula], F.Formula]:
    def run(f: F.Formula) -> F.Formula:
        chain, core = split_selection(f)
        return wrap_selection(chain, fn(core))

    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


# ---------------------------------------------------------------- DNF


def dnf_terms(f: F.Formula) -> list[F.Formula]:
    """Disjuncts of ``f`` with OR pushed to the top (or under a ``+``)."""
    if isinstance(f, F.Assign):
        return [f]
    if isinstance(f, F.Empty):
        return []
    if isinstance(f, F.Or):
        return dnf_terms(f.lhs) + dnf_terms(f.rhs)
    if isinstance(f, F.Filter):
        return [F.Filter(t, f.pred) for t in dnf_terms(f.body)]
    if isinstance(f, F.Seq):
        rhs = dnf_terms(f.rhs)
        return [F.Seq(a, b) for a in dnf_terms(f.lhs) for b in rhs]
    if isinstance(f, F.Plus):
        body = dnf_terms(f.body)
        return [F.Plus(F.or_all(body))] if body else []
    raise RewriteError(f"cannot normalize {type(f).__name__} inside a formula")


@_on_core
def to_dnf(f: F.Formula) -> F.Formula:
    """Disjunctive normal form; ``+`` bodies are normalized recursively."""
    return F.or_all(dnf_terms(f))


def is_dnf(f: F.Formula) -> bool:
    _, core = split_selection(f)
    for term in F.disjuncts(core):
        stack = [term]
        while stack:
            g = stack.pop()
            if isinstance(g, F.Or):
                return False
            if isinstance(g, F.Plus):
                if not is_dnf(g.body):
                    return False
                continue
            stack.extend(F.children(g))
    return True


# ---------------------------------------------------------------- safe form


def _clean_term(term: F.Formula) -> F.Formula | None:
    """Drop unsatisfiable disjuncts under every ``+`` of a DNF term; None if the term dies."""
    if isinstance(term, F.Assign):
        return term
    if isinstance(term, F.Filter):
        body = _clean_term(term.body)
        return None if body is None else F.Filter(body, term.pred)
    if isinstance(term, F.Seq):
        lhs = _clean_term(term.lhs)
        rhs = _clean_term(term.rhs)
        if lhs is None or rhs is None or vdef_plus(lhs) & vdef_plus(rhs):
            return None
        return F.Seq(lhs, rhs)
    if isinstance(term, F.Plus):
        kept = [t for t in (_clean_term(d) for d in F.disjuncts(term.body)) if t is not None]
        return F.Plus(F.or_all(kept)) if kept else None
    raise RewriteError(f"unexpected {type(term).__name__} in a normalized term")


@_on_core
def to_safe(f: F.Formula) -> F.Formula:
    """Safe equivalent of ``f``, or EMPTY when every disjunct is unsatisfiable.

    In a term without OR, a variable defined outside every ``+`` occurs in
    each output, so a sequence whose sides share such a variable can never
    produce anything and the whole term is dropped. Formulas that are
    already safe come back unchanged.
    """
    if is_safe(f):
        return f
    kept = [t for t in (_clean_term(d) for d in dnf_terms(f)) if t is not None]
    return F.or_all(kept)


# ---------------------------------------------------------------- tree paths


def get_at(f: F.Formula, path: Path) -> F.Formula:
    for i in path:
        f = F.children(f)[i]
    return f


def replace_at(f: F.Formula, path: Path, new: F.Formula) -> F.Formula:
    if not path:
        return new
    i, rest = path[0], path[1:]
    if isinstance(f, (F.Or, F.Seq)):
        if i == 0:
            return type(f)(replace_at(f.lhs, rest, new), f.rhs)
        return type(f)(f.lhs, replace_at(f.rhs, rest, new))
    if isinstance(f, F.Filter):
        return F.Filter(replace_at(f.body, rest, new), f.pred)
    if isinstance(f, F.Plus):
        return F.Plus(replace_at(f.body, rest, new))
    if isinstance(f, F.Select):
        return F.Select(f.strategy, replace_at(f.body, rest, new))
    raise IndexError("path leaves the tree")


def post_order(f: F.Formula, path: Path = ()) -> Iterator[tuple[Path, F.Formula]]:
    for i, c in enumerate(F.children(f)):
        yield from post_order(c, path + (i,))
    yield path, f


def simplify_empty(f: F.Formula) -> F.Formula:
    """Propagate EMPTY: it absorbs ``;``, FILTER and ``+`` and is the unit of OR."""
    if isinstance(f, F.Or):
        lhs, rhs = simplify_empty(f.lhs), simplify_empty(f.rhs)
        if isinstance(lhs, F.Empty):
            return rhs
        if isinstance(rhs, F.Empty):
            return lhs
        return F.Or(lhs, rhs)
    if isinstance(f, F.Seq):
        lhs, rhs = simplify_empty(f.lhs), simplify_empty(f.rhs)
        if isinstance(lhs, F.Empty) or isinstance(rhs, F.Empty):
            return F.EMPTY
        return F.Seq(lhs, rhs)
    if isinstance(f, (F.Filter, F.Plus, F.Select)):
        body = simplify_empty(f.body)
        if isinstance(body, F.Empty):
            return F.EMPTY
        if isinstance(f, F.Filter):
            return F.Filter(body, f.pred)
        if isinstance(f, F.Plus):
            return F.Plus(body)
        return F.Select(f.strategy, body)
    return f


# ---------------------------------------------------------------- LP-normal form


def _is_unary_pred(p: P.Pred) -> bool:
    return len(P.pred_vars(p)) <= 1


def desugar_filters(f: F.Formula) -> F.Formula:
    """Split compound filter predicates into single-variable units.

    A conjunction becomes stacked filters and a disjunction becomes a
    formula-level OR; parts mentioning at most one variable stay whole.
    """
    if isinstance(f, F.Filter):
        return _desugar(desugar_filters(f.body), P.nnf(f.pred))
    if isinstance(f, (F.Or, F.Seq)):
        return type(f)(desugar_filters(f.lhs), desugar_filters(f.rhs))
    if isinstance(f, F.Plus):
        return F.Plus(desugar_filters(f.body))
    if isinstance(f, F.Select):
        return F.Select(f.strategy, desugar_filters(f.body))
    return f


def _desugar(body: F.Formula, p: P.Pred) -> F.Formula:
    if _is_unary_pred(p):
        return F.Filter(body, p)
    if isinstance(p, P.And):
        # keep each variable's atoms together so they fuse into one predicate later
        for part in _group_by_var(p.items):
            body = _desugar(body, part)
        return body
    if isinstance(p, P.Or):
        return F.or_all([_desugar(body, q) for q in _group_by_var(p.items, conj=False)])
    return F.Filter(body, p)


def _group_by_var(items, conj: bool = True) -> list[P.Pred]:
    groups: dict[frozenset, list[P.Pred]] = {}
    order: list[frozenset] = []
    for it in items:
        vs = P.pred_vars(it)
        key = vs if len(vs) <= 1 else frozenset({("#", id(it))})
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(it)
    join = P.conj if conj else P.disj
    return [join(*groups[k]) for k in order]


def is_lp_normal_form(f: F.Formula) -> bool:
    """Every filter made of single-variable atoms sits directly on the definition of its variable.

    Compound predicates over several variables count as sugar for stacked
    filters, so they must be split first. Filters with a binary atom are exempt.
    """
    for g in F.walk(f):
        if isinstance(g, F.Filter) and _atoms_unary(g.pred) and not _good_filter(g):
            return False
    return True


def _atoms_unary(p: P.Pred) -> bool:
    return all(len(P.atom_vars(a)) <= 1 for a in P.atoms(p))


def _good_filter(g: F.Filter) -> bool:
    vs = P.pred_vars(g.pred)
    return isinstance(g.body, F.Assign) and len(vs) == 1 and g.body.var in vs


def _push_down(f: F.Formula, x: str, pred: P.Pred) -> F.Formula:
    """Attach ``pred`` to every definition of ``x`` that binds it in all outputs of ``f``."""
    if isinstance(f, F.Assign):
        return F.Filter(f, pred) if f.var == x else f
    if isinstance(f, F.Filter):
        if _good_filter(f) and f.body.var == x:
            fused = P.conj(f.pred, pred)
            return F.Filter(f.body, fused)
        return F.Filter(_push_down(f.body, x, pred), f.pred)
    if isinstance(f, F.Or):
        return F.Or(_push_down(f.lhs, x, pred), _push_down(f.rhs, x, pred))
    if isinstance(f, F.Seq):
        lhs, rhs = f.lhs, f.rhs
        if x in bound_vars(lhs):
            lhs = _push_down(lhs, x, pred)
        if x in bound_vars(rhs):
            rhs = _push_down(rhs, x, pred)
        return F.Seq(lhs, rhs)
    raise RewriteError(f"cannot push a filter into {type(f).__name__}")


def _lp_step(f: F.Formula) -> F.Formula | None:
    """Fix the deepest misplaced single-variable filter; None when there is none."""
    for path, g in post_order(f):
        if not isinstance(g, F.Filter) or not _is_unary_pred(g.pred):
            continue
        pvars = P.pred_vars(g.pred)
        if not pvars:
            if g.pred == P.TRUE:
                return replace_at(f, path, g.body)
            if g.pred == P.FALSE:
                return replace_at(f, path, F.EMPTY)
            continue
        if _good_filter(g):
            continue
        (x,) = pvars
        if x in bound_vars(g.body):
            return replace_at(f, path, _push_down(g.body, x, g.pred))
        # pop up to the nearest ancestor that binds x and split on the predicate
        for k in range(len(path) - 1, -1, -1):
            anc = get_at(f, path[:k])
            if x in bound_vars(anc):
                rel = path[k:]
                taken = F.Filter(replace_at(anc, rel, g.body), g.pred)
                skipped = F.Filter(replace_at(anc, rel, F.EMPTY), P.nnf(P.neg(g.pred)))
                return replace_at(f, path[:k], F.Or(taken, skipped))
        raise RewriteError(f"variable {x} is never bound; the formula is not well-formed")
    return None


def _fuse(f: F.Formula) -> F.Formula:
    """Merge stacked single-variable filters on one definition and fold constants."""
    if isinstance(f, F.Filter):
        body = _fuse(f.body)
        if isinstance(body, F.Empty):
            return body
        if _is_unary_pred(f.pred) and isinstance(body, F.Filter) and _good_filter(body):
            vs = P.pred_vars(f.pred)
            if vs == {body.body.var}:
                pred = P.conj(body.pred, f.pred)
                return F.EMPTY if pred == P.FALSE else (body.body if pred == P.TRUE else F.Filter(body.body, pred))
        if f.pred == P.TRUE:
            return body
        if f.pred == P.FALSE or (isinstance(body, F.Assign) and not satisfiable(f.pred)):
            return F.EMPTY
        return F.Filter(body, f.pred)
    if isinstance(f, (F.Or, F.Seq)):
        return simplify_empty(type(f)(_fuse(f.lhs), _fuse(f.rhs)))
    if isinstance(f, F.Plus):
        return simplify_empty(F.Plus(_fuse(f.body)))
    return f


@_on_core
def to_lp_normal_form(f: F.Formula, max_steps: int = 100_000) -> F.Formula:
    """Equivalent formula in which single-variable filters apply directly to definitions.

    Filters whose variable is bound below are pushed down to its definition.
    Otherwise the filter is lifted to the nearest enclosing subformula that
    binds the variable, which is split into a branch where the predicate
    holds and one where it fails. Filters over several variables stay put.
    """
    if not is_well_formed(f):
        raise RewriteError("formula is not well-formed")
    g = to_safe(desugar_filters(rename_apart(f)))
    for _ in range(max_steps):
        nxt = _lp_step(g)
        if nxt is None:
            break
        g = simplify_empty(nxt)
    else:
        raise RewriteError("LP-normal form rewriting did not converge")
    return _fuse(g)

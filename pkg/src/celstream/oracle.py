"""Brute-force reference semantics.

Evaluation is by structural recursion. Each subformula yields pairs
``(C, mu)`` where ``mu`` is a partial valuation over the variables the
subformula constrains; a variable missing from ``mu`` may take any value.
A ``+`` forgets the variables its body redefines, since every iteration
picks them afresh.
"""

from __future__ import annotations

from typing import Iterable

from . import formula as F
from . import predicates as P
from .analysis import is_well_formed, vdef_plus
from .events import StreamPrefix


class ComplexEvent(frozenset):
    """A nonempty set of stream positions."""

    def __new__(cls, positions: Iterable[int] = ()):
        self = super().__new__(cls, positions)
        if not self:
            raise ValueError("a complex event is nonempty")
        return self

    @property
    def first(self) -> int:
        return min(self)

    @property
    def last(self) -> int:
        return max(self)

    def ordered(self) -> tuple[int, ...]:
        return tuple(sorted(self))

    def concat(self, other: "ComplexEvent") -> "ComplexEvent | None":
        """Union when every position of ``self`` precedes ``other``, else None."""
        if max(self) < min(other):
            return ComplexEvent(self | other)
        return None

    def is_interval(self) -> bool:
        return max(self) - min(self) + 1 == len(self)

    def __repr__(self):
        return "{" + ",".join(map(str, sorted(self))) + "}"


Valuation = frozenset  # of (variable, position) pairs


class NotWellFormedError(ValueError):
    pass


def leq_next(c1: frozenset[int], c2: frozenset[int]) -> bool:
    if c1 == c2:
        return True
    return min(c1 ^ c2) in c2


def leq_last(c1: frozenset[int], c2: frozenset[int]) -> bool:
    if c1 == c2:
        return True
    return max(c1 ^ c2) in c2


def apply_selection(strategy: str, outs: Iterable[frozenset[int]]) -> set[ComplexEvent]:
    """Filter outputs by a selection strategy, comparing only events with the same end."""
    outs = {ComplexEvent(c) for c in outs}
    if strategy == "STRICT":
        return {c for c in outs if c.is_interval()}
    if strategy not in ("NXT", "LAST", "MAX"):
        raise ValueError(f"unknown selection strategy {strategy!r}")
    groups: dict[int, list[ComplexEvent]] = {}
    for c in outs:
        groups.setdefault(c.last, []).append(c)
    kept: set[ComplexEvent] = set()
    for group in groups.values():
        if strategy == "MAX":
            kept.update(c for c in group if not any(c < d for d in group))
            continue
        leq = leq_next if strategy == "NXT" else leq_last
        best = group[0]
        for c in group[1:]:
            if leq(best, c):
                best = c
        kept.add(best)
    return kept


def _compatible(m1: dict, m2: dict) -> bool:
    if len(m2) < len(m1):
        m1, m2 = m2, m1
    for k, v in m1.items():
        w = m2.get(k)
        if w is not None and w != v:
            return False
    return True


def _freeze(mu: dict) -> Valuation:
    return frozenset(mu.items())


class _Evaluator:
    def __init__(self, s: StreamPrefix):
        self.s = s
        self.n = len(s)
        self.memo: dict[F.Formula, set] = {}

    def run(self, f: F.Formula) -> set[tuple[frozenset[int], Valuation]]:
        got = self.memo.get(f)
        if got is None:
            got = self._eval(f)
            self.memo[f] = got
        return got

    def _eval(self, f: F.Formula):
        s, n = self.s, self.n
        if isinstance(f, F.Assign):
            return {
                (frozenset((i,)), frozenset(((f.var, i),)))
                for i in range(n)
                if s[i].type_name == f.relation
            }
        if isinstance(f, F.Empty):
            return set()
        if isinstance(f, F.Or):
            return self.run(f.lhs) | self.run(f.rhs)
        if isinstance(f, F.Filter):
            return self._filter(self.run(f.body), f.pred)
        if isinstance(f, F.Seq):
            right = [(c, dict(m)) for c, m in self.run(f.rhs)]
            out = set()
            for c1, m1 in self.run(f.lhs):
                top = max(c1)
                d1 = dict(m1)
                for c2, d2 in right:
                    if top < min(c2) and _compatible(d1, d2):
                        out.add((c1 | c2, _freeze({**d1, **d2})))
            return out
        if isinstance(f, F.Plus):
            return self._plus(f)
        if isinstance(f, F.Select):
            inner = self.run(f.body)
            keep = apply_selection(f.strategy, {c for c, _ in inner})
            return {(c, m) for c, m in inner if c in keep}
        raise TypeError(f"not a formula: {f!r}")

    def _filter(self, inner, pred: P.Pred):
        pvars = sorted(P.pred_vars(pred))
        out = set()
        for c, m in inner:
            mu = dict(m)
            free = [v for v in pvars if v not in mu]
            for ext in _assignments(free, self.n):
                env = {v: self.s[i] for v, i in mu.items()}
                env.update((v, self.s[i]) for v, i in ext.items())
                if P.evaluate(pred, env):
                    out.add((c, _freeze({**mu, **ext})))
        return out

    def _plus(self, f: F.Plus):
        redefined = vdef_plus(f.body)
        base = {
            (c, frozenset(kv for kv in m if kv[0] not in redefined))
            for c, m in self.run(f.body)
        }
        steps = [(c, max(c), min(c), dict(m)) for c, m in base]
        result = set(base)
        frontier = list(base)
        while frontier:
            nxt = []
            for c, m in frontier:
                top = max(c)
                d = dict(m)
                for c2, _, lo2, d2 in steps:
                    if top < lo2 and _compatible(d, d2):
                        item = (c | c2, _freeze({**d, **d2}))
                        if item not in result:
                            result.add(item)
                            nxt.append(item)
            frontier = nxt
        return result


def _assignments(variables: list[str], n: int):
    if not variables:
        yield {}
        return
    head, rest = variables[0], variables[1:]
    for i in range(n):
        for tail in _assignments(rest, n):
            yield {head: i, **tail}


def oracle_eval(f: F.Formula, s: StreamPrefix, *, check: bool = True) -> set[ComplexEvent]:
    """All complex events produced by ``f`` over ``s`` under some valuation."""
    if check and not is_well_formed(f):
        raise NotWellFormedError("formula is not well-formed")
    return {ComplexEvent(c) for c, _ in _Evaluator(s).run(f)}


def oracle_eval_at(f: F.Formula, s: StreamPrefix) -> dict[int, set[ComplexEvent]]:
    """Outputs grouped by their last position."""
    out: dict[int, set[ComplexEvent]] = {}
    for c in oracle_eval(f, s):
        out.setdefault(c.last, set()).add(c)
    return out

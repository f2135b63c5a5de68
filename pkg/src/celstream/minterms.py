"""Minterm partitions of finite sets of single-variable predicates.

A minterm fixes, for every base predicate, whether it holds. Every tuple
satisfies exactly one sign assignment. Assignments that a lightweight
checker proves unsatisfiable are pruned; the checker errs on the side of
keeping, since an unsatisfiable minterm simply never fires.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from . import predicates as P
from .events import EventTuple

# DNF expansions larger than this are not examined; the input counts as satisfiable.
DNF_CAP = 256


def _dnf(p: P.Pred, cap: int = DNF_CAP) -> list[list[tuple[P.Atom, bool]]] | None:
    """Clauses of signed atoms for an NNF predicate; None past the cap."""
    if isinstance(p, P.Not):
        return [[(p.item, False)]]
    if isinstance(p, P.Or):
        out = []
        for it in p.items:
            sub = _dnf(it, cap)
            if sub is None:
                return None
            out.extend(sub)
            if len(out) > cap:
                return None
        return out
    if isinstance(p, P.And):
        out = [[]]
        for it in p.items:
            sub = _dnf(it, cap)
            if sub is None:
                return None
            out = [a + b for a in out for b in sub]
            if len(out) > cap:
                return None
        return out
    return [[(p, True)]]


_FLIP = {"=": "!=", "!=": "=", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}


class _Range:
    """Constraints on one attribute within one comparison class."""

    __slots__ = ("lo", "lo_strict", "hi", "hi_strict", "eq", "ne")

    def __init__(self):
        self.lo = self.hi = None
        self.lo_strict = self.hi_strict = False
        self.eq: set = set()
        self.ne: set = set()

    def add(self, op: str, v: Any) -> None:
        if op == "=":
            self.eq.add(v)
        elif op == "!=":
            self.ne.add(v)
        elif op in (">", ">="):
            strict = op == ">"
            if self.lo is None or v > self.lo or (v == self.lo and strict):
                self.lo, self.lo_strict = v, strict
        else:
            strict = op == "<"
            if self.hi is None or v < self.hi or (v == self.hi and strict):
                self.hi, self.hi_strict = v, strict

    def _inside(self, v: Any) -> bool:
        if self.lo is not None and (v < self.lo or (v == self.lo and self.lo_strict)):
            return False
        if self.hi is not None and (v > self.hi or (v == self.hi and self.hi_strict)):
            return False
        return True

    def feasible(self) -> bool:
        if len(self.eq) > 1:
            return False
        if self.eq:
            (v,) = self.eq
            return v not in self.ne and self._inside(v)
        if self.lo is not None and self.hi is not None:
            if self.lo > self.hi:
                return False
            if self.lo == self.hi:
                return not (self.lo_strict or self.hi_strict) and self.lo not in self.ne
        # the domain is treated as dense, which can only over-approximate
        return True


def clause_satisfiable(lits: Iterable[tuple[P.Atom, bool]]) -> bool:
    """Sound check of a conjunction of signed atoms: False only when provably empty."""
    lits = list(lits)
    seen = set()
    for a, sign in lits:
        if (a, not sign) in seen:
            return False
        seen.add((a, sign))
    pos_types: set[str] = set()
    neg_types: set[str] = set()
    # attribute -> class fixed by a positive comparison against a constant
    anchor: dict[str, str] = {}
    const_lits: list[tuple[str, str, Any, bool]] = []
    for a, sign in lits:
        if isinstance(a, P.Const):
            if a.value != sign:
                return False
        elif isinstance(a, P.TypeTest):
            (pos_types if sign else neg_types).add(a.relation)
        elif isinstance(a, P.Compare) and not isinstance(a.right, P.AttrRef):
            cls = P.kind_class(a.right)
            attr = a.left.attr
            const_lits.append((attr, a.op, a.right, sign))
            if sign:
                if anchor.setdefault(attr, cls) != cls:
                    return False
    if len(pos_types) > 1 or pos_types & neg_types:
        return False
    ranges: dict[str, _Range] = {}
    for attr, op, v, sign in const_lits:
        cls = anchor.get(attr)
        if cls is None:
            continue  # only negative literals: the attribute may be absent
        if P.kind_class(v) != cls:
            if sign:
                return False
            continue  # a negated mismatched comparison always holds
        ranges.setdefault(attr, _Range()).add(op if sign else _FLIP[op], v)
    return all(r.feasible() for r in ranges.values())


def satisfiable(p: P.Pred) -> bool:
    """Sound satisfiability test for single-variable predicates."""
    clauses = _dnf(P.nnf(p))
    if clauses is None:
        return True
    return any(clause_satisfiable(c) for c in clauses)


def mutually_exclusive(p: P.Pred, q: P.Pred) -> bool:
    return not satisfiable(P.conj(p, q))


@dataclass(frozen=True)
class Minterm:
    signs: tuple[bool, ...]
    base: tuple[P.Pred, ...] = field(repr=False)

    @property
    def predicate(self) -> P.Pred:
        return P.conj(*(b if s else P.neg(b) for b, s in zip(self.base, self.signs)))

    def implies(self, i: int) -> bool:
        return self.signs[i]

    def __str__(self):
        return P.to_text(self.predicate)


class MintermPartition:
    """The satisfiable sign assignments over ``base``, indexed 0..len-1."""

    def __init__(self, base: Sequence[P.Pred], minterms: Sequence[tuple[bool, ...]]):
        self.base = tuple(base)
        self.minterms = tuple(Minterm(tuple(s), self.base) for s in minterms)
        self.index = {m.signs: i for i, m in enumerate(self.minterms)}
        self._tests = tuple(P.compile_unary(b) for b in self.base)
        self._cache: dict[EventTuple, int] = {}

    def __len__(self):
        return len(self.minterms)

    def __iter__(self):
        return iter(self.minterms)

    def __getitem__(self, i: int) -> Minterm:
        return self.minterms[i]

    def base_index(self, p: P.Pred) -> int:
        return self.base.index(p)

    def letters_of(self, p: P.Pred) -> frozenset[int]:
        """Letters whose minterm implies base predicate ``p``."""
        i = self.base.index(p)
        return frozenset(k for k, m in enumerate(self.minterms) if m.signs[i])

    def classify(self, t: EventTuple) -> int:
        """Index of the unique minterm satisfied by ``t``."""
        got = self._cache.get(t)
        if got is None:
            signs = tuple(f(t) for f in self._tests)
            got = self.index.get(signs)
            if got is None:
                raise AssertionError(f"minterm {signs} was pruned but is satisfied by {t!r}")
            if len(self._cache) < 100_000:
                self._cache[t] = got
        return got

    def __repr__(self):
        return f"MintermPartition({len(self.base)} predicates, {len(self.minterms)} minterms)"


def minterm_partition(preds: Iterable[P.Pred]) -> MintermPartition:
    """Enumerate satisfiable sign assignments depth-first, pruning dead prefixes."""
    base: list[P.Pred] = []
    for p in preds:
        if P.arity(p) > 1:
            raise ValueError(f"predicate {P.to_text(p)} mentions more than one variable")
        if p not in base:
            base.append(p)
    out: list[tuple[bool, ...]] = []

    def go(i: int, signs: tuple[bool, ...], acc: P.Pred) -> None:
        if i == len(base):
            out.append(signs)
            return
        for sign in (True, False):
            lit = base[i] if sign else P.neg(base[i])
            nxt = P.conj(acc, lit)
            if nxt != P.FALSE and satisfiable(nxt):
                go(i + 1, signs + (sign,), nxt)

    go(0, (), P.TRUE)
    return MintermPartition(base, out)

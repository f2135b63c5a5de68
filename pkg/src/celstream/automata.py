"""Complex event automata: model, construction from formulas, boolean closure.

Transitions read one tuple, test a single-variable predicate on it and
either mark the position (include it in the output) or skip it. States are
integers; their numeric order is the fixed state order that the
selection constructions rely on.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import formula as F
from . import predicates as P
from .analysis import analyze
from .events import EventTuple, StreamPrefix
from .minterms import Minterm, MintermPartition, minterm_partition
from .rewrite import is_lp_normal_form


class Mark(enum.Enum):
    MARK = "●"
    SKIP = "○"

    def __str__(self):
        return self.value


MARK, SKIP = Mark.MARK, Mark.SKIP


class CompileError(ValueError):
    """The formula violates a precondition of automaton construction."""


class DeterminizationLimit(RuntimeError):
    pass


@dataclass(frozen=True)
class Transition:
    source: int
    predicate: P.Pred
    mark: Mark
    target: int

    def __str__(self):
        return f"{self.source} -[{P.to_text(self.predicate)} | {self.mark}]-> {self.target}"


@dataclass(frozen=True, eq=False)
class Cea:
    """States ``0..n_states-1``.

    When ``alphabet`` is set, ``letters[k]`` lists the minterms under which
    transition ``k`` fires; runtimes use it to avoid evaluating predicates.
    """

    n_states: int
    transitions: tuple[Transition, ...]
    initial: frozenset[int]
    final: frozenset[int]
    alphabet: MintermPartition | None = None
    letters: tuple[frozenset[int], ...] | None = None
    labels: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        n = self.n_states
        for t in self.transitions:
            if not (0 <= t.source < n and 0 <= t.target < n):
                raise ValueError(f"transition {t} leaves the state range")
            if P.arity(t.predicate) > 1:
                raise ValueError(f"transition predicate {P.to_text(t.predicate)} is not unary")
        if not (self.initial <= frozenset(range(n)) and self.final <= frozenset(range(n))):
            raise ValueError("initial and final states must be states")
        if self.letters is not None and len(self.letters) != len(self.transitions):
            raise ValueError("letters must parallel transitions")

    @property
    def states(self) -> range:
        return range(self.n_states)

    @property
    def size(self) -> int:
        return self.n_states + len(self.transitions)

    def outgoing(self) -> list[list[Transition]]:
        out: list[list[Transition]] = [[] for _ in range(self.n_states)]
        for t in self.transitions:
            out[t.source].append(t)
        return out

    def with_alphabet(self) -> "Cea":
        """Same automaton with a minterm alphabet over its own predicates."""
        if self.alphabet is not None:
            return self
        part = minterm_partition(t.predicate for t in self.transitions)
        letters = tuple(part.letters_of(t.predicate) for t in self.transitions)
        return Cea(self.n_states, self.transitions, self.initial, self.final, part, letters, self.labels)

    def table(self) -> tuple[list[list[tuple[int, ...]]], list[list[tuple[int, ...]]]]:
        """``marked[q][letter]`` and ``skipped[q][letter]`` target tuples."""
        a = self.with_alphabet()
        k = len(a.alphabet)
        marked = [[set() for _ in range(k)] for _ in range(a.n_states)]
        skipped = [[set() for _ in range(k)] for _ in range(a.n_states)]
        for t, ls in zip(a.transitions, a.letters):
            dest = marked if t.mark is MARK else skipped
            for l in ls:
                dest[t.source][l].add(t.target)
        freeze = lambda rows: [[tuple(sorted(c)) for c in row] for row in rows]
        return freeze(marked), freeze(skipped)

    def __repr__(self):
        return (
            f"Cea(states={self.n_states}, transitions={len(self.transitions)}, "
            f"initial={sorted(self.initial)}, final={sorted(self.final)})"
        )


@dataclass(frozen=True)
class EpsilonCea:
    n_states: int
    transitions: tuple[Transition, ...]
    epsilons: tuple[tuple[int, int], ...]
    initial: frozenset[int]
    final: frozenset[int]


def empty_cea() -> Cea:
    """An automaton with no accepting runs."""
    return Cea(1, (), frozenset({0}), frozenset())


# ---------------------------------------------------------------- construction


class _Builder:
    def __init__(self):
        self.n = 0
        self.trans: list[Transition] = []
        self.eps: list[tuple[int, int]] = []

    def state(self) -> int:
        self.n += 1
        return self.n - 1

    def build(self, f: F.Formula) -> tuple[int, int]:
        if isinstance(f, (F.Assign, F.Filter)):
            assign, pred = _unwrap_definition(f)
            qi, qf = self.state(), self.state()
            guard = P.canonical_unary(P.conj(P.TypeTest(assign.var, assign.relation), pred))
            self.trans.append(Transition(qi, P.TRUE, SKIP, qi))
            self.trans.append(Transition(qi, guard, MARK, qf))
            return qi, qf
        if isinstance(f, F.Or):
            a = self.build(f.lhs)
            b = self.build(f.rhs)
            qi, qf = self.state(), self.state()
            self.eps += [(qi, a[0]), (qi, b[0]), (a[1], qf), (b[1], qf)]
            return qi, qf
        if isinstance(f, F.Seq):
            a = self.build(f.lhs)
            b = self.build(f.rhs)
            self.eps.append((a[1], b[0]))
            return a[0], b[1]
        if isinstance(f, F.Plus):
            qi, qf = self.build(f.body)
            self.eps.append((qf, qi))
            return qi, qf
        raise CompileError(f"cannot compile {type(f).__name__}")


def _unwrap_definition(f: F.Formula) -> tuple[F.Assign, P.Pred]:
    preds = []
    while isinstance(f, F.Filter):
        preds.append(f.pred)
        f = f.body
    if not isinstance(f, F.Assign):
        raise CompileError("a filter is not attached to a variable definition (not in LP-normal form)")
    for p in preds:
        if not P.pred_vars(p) <= {f.var}:
            raise CompileError(
                f"filter {P.to_text(p)} on {f.relation} AS {f.var} refers to another variable"
            )
    return f, P.conj(*reversed(preds))


def check_compilable(f: F.Formula) -> None:
    """Raise CompileError naming the first failed precondition."""
    if any(isinstance(g, F.Select) for g in F.walk(f)):
        raise CompileError("selection operators are compiled separately")
    if isinstance(f, F.Empty):
        return
    rep = analyze(f)
    if not rep.well_formed:
        raise CompileError("formula is not well-formed")
    if not rep.safe:
        raise CompileError("formula is not safe")
    if not rep.unary:
        raise CompileError("formula uses a predicate over several variables")
    if not is_lp_normal_form(f):
        raise CompileError("formula is not in LP-normal form")


def compile_core(f: F.Formula) -> EpsilonCea:
    """Thompson-style construction with one initial and one final state."""
    check_compilable(f)
    if isinstance(f, F.Empty):
        return EpsilonCea(1, (), (), frozenset({0}), frozenset())
    b = _Builder()
    qi, qf = b.build(f)
    return EpsilonCea(b.n, tuple(b.trans), tuple(b.eps), frozenset({qi}), frozenset({qf}))


def _closure(n: int, eps: Sequence[tuple[int, int]]) -> list[frozenset[int]]:
    succ: list[list[int]] = [[] for _ in range(n)]
    for p, q in eps:
        succ[p].append(q)
    out = []
    for q in range(n):
        seen = {q}
        stack = [q]
        while stack:
            for r in succ[stack.pop()]:
                if r not in seen:
                    seen.add(r)
                    stack.append(r)
        out.append(frozenset(seen))
    return out


def remove_epsilon(a: EpsilonCea | Cea) -> Cea:
    """Redirect each transition into every state ε-reachable from its target, then trim."""
    if isinstance(a, Cea):
        return trim(a)
    clo = _closure(a.n_states, a.epsilons)
    trans = []
    seen = set()
    for t in a.transitions:
        for q in sorted(clo[t.target]):
            nt = Transition(t.source, t.predicate, t.mark, q)
            if nt not in seen:
                seen.add(nt)
                trans.append(nt)
    initial = frozenset().union(*(clo[q] for q in a.initial)) if a.initial else frozenset()
    return trim(Cea(a.n_states, tuple(trans), initial, a.final))


def trim(a: Cea) -> Cea:
    """Keep states that are reachable and can reach a final state; renumber in order."""
    succ: list[set[int]] = [set() for _ in range(a.n_states)]
    pred: list[set[int]] = [set() for _ in range(a.n_states)]
    for t in a.transitions:
        succ[t.source].add(t.target)
        pred[t.target].add(t.source)

    def reach(start: Iterable[int], nbr) -> set[int]:
        seen = set(start)
        stack = list(seen)
        while stack:
            for r in nbr[stack.pop()]:
                if r not in seen:
                    seen.add(r)
                    stack.append(r)
        return seen

    live = reach(a.initial, succ) & reach(a.final, pred)
    if not live:
        return empty_cea()
    order = sorted(live)
    ren = {q: i for i, q in enumerate(order)}
    keep = [k for k, t in enumerate(a.transitions) if t.source in live and t.target in live]
    trans = tuple(
        Transition(ren[a.transitions[k].source], a.transitions[k].predicate, a.transitions[k].mark, ren[a.transitions[k].target])
        for k in keep
    )
    letters = tuple(a.letters[k] for k in keep) if a.letters is not None else None
    labels = tuple(a.labels[q] for q in order) if a.labels is not None else None
    return Cea(
        len(order),
        trans,
        frozenset(ren[q] for q in a.initial if q in live),
        frozenset(ren[q] for q in a.final if q in live),
        a.alphabet if letters is not None else None,
        letters,
        labels,
    )


def compile_formula(f: F.Formula) -> Cea:
    return remove_epsilon(compile_core(f))


# ---------------------------------------------------------------- semantics by brute force


def enumerate_runs(a: Cea, s: StreamPrefix, n: int) -> set[frozenset[int]]:
    """Match sets of accepting runs over ``s[0..n]`` whose last transition marks."""
    if not 0 <= n < len(s):
        raise IndexError(f"position {n} outside a stream of length {len(s)}")
    out_by = a.outgoing()
    configs = {(q, frozenset()) for q in a.initial}
    for j in range(n):
        t = s[j]
        nxt = set()
        for q, c in configs:
            for tr in out_by[q]:
                if P.holds(tr.predicate, t):
                    nxt.add((tr.target, c | {j} if tr.mark is MARK else c))
        configs = nxt
    t = s[n]
    result = set()
    for q, c in configs:
        for tr in out_by[q]:
            if tr.mark is MARK and tr.target in a.final and P.holds(tr.predicate, t):
                result.add(c | {n})
    return result


def all_runs(a: Cea, s: StreamPrefix) -> dict[int, set[frozenset[int]]]:
    """``enumerate_runs`` at every position, computed in one pass."""
    out_by = a.outgoing()
    configs = {(q, frozenset()) for q in a.initial}
    result: dict[int, set[frozenset[int]]] = {}
    for j, t in enumerate(s):
        nxt = set()
        here = set()
        for q, c in configs:
            for tr in out_by[q]:
                if P.holds(tr.predicate, t):
                    if tr.mark is MARK:
                        c2 = c | {j}
                        if tr.target in a.final:
                            here.add(c2)
                    else:
                        c2 = c
                    nxt.add((tr.target, c2))
        if here:
            result[j] = here
        configs = nxt
    return result


def extended_delta(a: Cea, states: Iterable[int], mark: Mark, letter: EventTuple | Minterm) -> frozenset[int]:
    """Targets of ``mark`` transitions from ``states`` enabled by a tuple or implied by a minterm."""
    states = set(states)
    out = set()
    if isinstance(letter, Minterm):
        base = letter.base
        for t in a.transitions:
            if t.source in states and t.mark is mark and t.predicate in base:
                if letter.signs[base.index(t.predicate)]:
                    out.add(t.target)
        return frozenset(out)
    for t in a.transitions:
        if t.source in states and t.mark is mark and P.holds(t.predicate, letter):
            out.add(t.target)
    return frozenset(out)


# ---------------------------------------------------------------- closure properties


def union(a1: Cea, a2: Cea) -> Cea:
    k = a1.n_states
    trans = a1.transitions + tuple(Transition(t.source + k, t.predicate, t.mark, t.target + k) for t in a2.transitions)
    return Cea(
        k + a2.n_states,
        trans,
        a1.initial | frozenset(q + k for q in a2.initial),
        a1.final | frozenset(q + k for q in a2.final),
    )


def intersection(a1: Cea, a2: Cea) -> Cea:
    """Product automaton; transitions pair up when their marks agree."""
    k = a2.n_states
    trans = []
    for t1 in a1.transitions:
        for t2 in a2.transitions:
            if t1.mark is t2.mark:
                trans.append(Transition(t1.source * k + t2.source, P.conj(t1.predicate, t2.predicate), t1.mark, t1.target * k + t2.target))
    return trim(
        Cea(
            a1.n_states * k,
            tuple(trans),
            frozenset(p * k + q for p in a1.initial for q in a2.initial),
            frozenset(p * k + q for p in a1.final for q in a2.final),
        )
    )


def complement(a: Cea) -> Cea:
    """Outputs, at each position, exactly the complex events ending there that ``a`` rejects."""
    d = io_determinize(a, complete=True)
    return Cea(d.n_states, d.transitions, d.initial, frozenset(d.states) - d.final, d.alphabet, d.letters, d.labels)


def io_determinize(a: Cea, *, complete: bool = False, max_states: int | None = None) -> Cea:
    """Subset construction over (minterm, mark) letters, reachable part only.

    With ``complete`` the empty set is kept as a sink, so every state has a
    transition for every letter and mark.
    """
    a = a.with_alphabet()
    part = a.alphabet
    k = len(part)
    step: list[list[list[set[int]]]] = [[[set(), set()] for _ in range(k)] for _ in range(a.n_states)]
    for t, ls in zip(a.transitions, a.letters):
        for l in ls:
            step[t.source][l][0 if t.mark is MARK else 1].add(t.target)
    start = frozenset(a.initial)
    ids = {start: 0}
    order = [start]
    queue = deque([start])
    trans: list[Transition] = []
    letters: list[frozenset[int]] = []
    while queue:
        T = queue.popleft()
        src = ids[T]
        for l in range(k):
            for mi, mark in ((0, MARK), (1, SKIP)):
                U: set[int] = set()
                for p in T:
                    U |= step[p][l][mi]
                if not U and not complete:
                    continue
                U = frozenset(U)
                if U not in ids:
                    if max_states is not None and len(ids) >= max_states:
                        raise DeterminizationLimit(f"more than {max_states} subset states")
                    ids[U] = len(order)
                    order.append(U)
                    queue.append(U)
                trans.append(Transition(src, part[l].predicate, mark, ids[U]))
                letters.append(frozenset({l}))
    final = frozenset(i for i, T in enumerate(order) if T & a.final)
    labels = tuple("{" + ",".join(map(str, sorted(T))) + "}" for T in order)
    return Cea(len(order), tuple(trans), frozenset({0}), final, part, tuple(letters), labels)


def is_io_deterministic(a: Cea) -> bool:
    """One initial state, and same-mark transitions leaving a state are mutually exclusive."""
    if len(a.initial) != 1:
        return False
    a = a.with_alphabet()
    by_key: dict[tuple[int, Mark], list[frozenset[int]]] = {}
    for t, ls in zip(a.transitions, a.letters):
        by_key.setdefault((t.source, t.mark), []).append(ls)
    for group in by_key.values():
        seen: set[int] = set()
        for ls in group:
            if seen & ls:
                return False
            seen |= ls
    return True


def to_dot(a: Cea, name: str = "cea") -> str:
    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    for q in a.states:
        shape = "doublecircle" if q in a.final else "circle"
        label = a.labels[q] if a.labels else str(q)
        lines.append(f'  q{q} [shape={shape}, label="{_esc(label)}"];')
    for i, q in enumerate(sorted(a.initial)):
        lines.append(f"  start{i} [shape=point];")
        lines.append(f"  start{i} -> q{q};")
    for t in a.transitions:
        lines.append(f'  q{t.source} -> q{t.target} [label="{_esc(P.to_text(t.predicate))} | {t.mark}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _esc(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')

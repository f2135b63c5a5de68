"""Automata for the selection strategies.

Each construction reads minterm letters of the input automaton and builds
only the reachable part with a worklist.
"""

from __future__ import annotations

from collections import deque
from typing import Callable, Hashable, Iterable, Sequence

from .automata import MARK, SKIP, Cea, Mark, Transition, trim

Blocks = tuple[frozenset[int], ...]


def tpo(blocks: Iterable[Iterable[int]]) -> Blocks:
    """Remove from each set the states seen in earlier sets and drop empty sets."""
    seen: set[int] = set()
    out = []
    for b in blocks:
        u = frozenset(b) - seen
        if u:
            out.append(u)
            seen |= u
    return tuple(out)


def single_final(a: Cea) -> Cea:
    """Equivalent automaton with one final state entered only by marking transitions.

    The new final state receives a copy of every marking transition into an
    old final state and has no outgoing transitions. Old final states stay
    as ordinary states, so a run that merely passes through them no longer
    looks accepting.
    """
    qf = a.n_states
    extra = [Transition(t.source, t.predicate, t.mark, qf) for t in a.transitions if t.mark is MARK and t.target in a.final]
    trans = a.transitions + tuple(extra)
    letters = None
    if a.letters is not None:
        letters = a.letters + tuple(a.letters[k] for k, t in enumerate(a.transitions) if t.mark is MARK and t.target in a.final)
    labels = a.labels + ("final",) if a.labels is not None else None
    b = Cea(a.n_states + 1, trans, a.initial, frozenset({qf}), a.alphabet if letters is not None else None, letters, labels)
    return trim(b)


class _Steps:
    """``delta(T, letter, mark)`` over minterm letters of ``a``."""

    def __init__(self, a: Cea):
        a = a.with_alphabet()
        self.a = a
        self.k = len(a.alphabet)
        n = a.n_states
        self.table = [[[frozenset(), frozenset()] for _ in range(self.k)] for _ in range(n)]
        acc = [[[set(), set()] for _ in range(self.k)] for _ in range(n)]
        for t, ls in zip(a.transitions, a.letters):
            for l in ls:
                acc[t.source][l][0 if t.mark is MARK else 1].add(t.target)
        for q in range(n):
            for l in range(self.k):
                self.table[q][l] = [frozenset(acc[q][l][0]), frozenset(acc[q][l][1])]

    def delta(self, states: Iterable[int], letter: int, mark: Mark) -> frozenset[int]:
        mi = 0 if mark is MARK else 1
        out: set[int] = set()
        for p in states:
            out |= self.table[p][letter][mi]
        return frozenset(out)

    def edge(self, p: int, letter: int, mark: Mark, q: int) -> bool:
        return q in self.table[p][letter][0 if mark is MARK else 1]


def _explore(
    a: Cea,
    starts: Sequence[Hashable],
    successors: Callable[[Hashable, int], Iterable[tuple[Mark, Hashable]]],
    is_final: Callable[[Hashable], bool],
    label: Callable[[Hashable], str],
    max_states: int | None,
) -> Cea:
    part = a.alphabet
    ids: dict[Hashable, int] = {}
    order: list[Hashable] = []
    queue: deque = deque()

    def intern(s: Hashable) -> int:
        i = ids.get(s)
        if i is None:
            if max_states is not None and len(order) >= max_states:
                from .automata import DeterminizationLimit

                raise DeterminizationLimit(f"more than {max_states} states")
            i = ids[s] = len(order)
            order.append(s)
            queue.append(s)
        return i

    initial = frozenset(intern(s) for s in starts)
    trans: list[Transition] = []
    letters: list[frozenset[int]] = []
    while queue:
        s = queue.popleft()
        src = ids[s]
        for l in range(len(part)):
            for mark, nxt in successors(s, l):
                trans.append(Transition(src, part[l].predicate, mark, intern(nxt)))
                letters.append(frozenset({l}))
    final = frozenset(i for i, s in enumerate(order) if is_final(s))
    labels = tuple(label(s) for s in order)
    return trim(Cea(len(order), tuple(trans), initial, final, part, tuple(letters), labels))


def compile_strict(a: Cea) -> Cea:
    """Two copies: skipping transitions in the first, marking ones in the second."""
    n = a.n_states
    trans = []
    for t in a.transitions:
        if t.mark is SKIP:
            trans.append(t)
        else:
            trans.append(Transition(t.source + n, t.predicate, MARK, t.target + n))
            trans.append(Transition(t.source, t.predicate, MARK, t.target + n))
    labels = tuple(f"{q}○" for q in range(n)) + tuple(f"{q}●" for q in range(n))
    return trim(Cea(2 * n, tuple(trans), a.initial, frozenset(q + n for q in a.final), labels=labels))


def _blocks_label(blocks: Blocks) -> str:
    return " ".join("{" + ",".join(map(str, sorted(b))) + "}" for b in blocks)


def _compile_order(a: Cea, marked_first: bool, max_states: int | None) -> Cea:
    a = single_final(a).with_alphabet()
    st = _Steps(a)
    final = a.final

    def successors(state, l):
        blocks, p = state
        i = next(j for j, b in enumerate(blocks) if p in b)
        k = len(blocks)
        ups = {(j, m): st.delta(blocks[j], l, m) for j in range(k) for m in (MARK, SKIP)}
        if marked_first:
            ranked = [(j, m) for j in range(k) for m in (MARK, SKIP)]
        else:
            ranked = [(j, m) for m in (MARK, SKIP) for j in range(k)]
        new_blocks = tpo(ups[key] for key in ranked)
        lower_peers = [r for r in blocks[i] if r < p]
        out = []
        for mark in (MARK, SKIP):
            # targets already claimed by a run ranked above (block i, mark)
            better: set[int] = set()
            for key in ranked[: ranked.index((i, mark))]:
                better |= ups[key]
            for q in sorted(st.delta((p,), l, mark)):
                if q in better:
                    continue
                if any(st.edge(r, l, mark, q) for r in lower_peers):
                    continue
                out.append((mark, (new_blocks, q)))
        return out

    def is_final(state):
        blocks, p = state
        if p not in final:
            return False
        for b in blocks:
            if p in b:
                return True
            if b & final:
                return False
        return False

    starts = [((frozenset(a.initial),), q) for q in sorted(a.initial)] if a.initial else []
    return _explore(a, starts, successors, is_final, lambda s: f"({_blocks_label(s[0])}, {s[1]})", max_states)


def compile_next(a: Cea, max_states: int | None = None) -> Cea:
    """Per end position, keeps only the output that is greatest for the next-order."""
    return _compile_order(a, marked_first=True, max_states=max_states)


def compile_last(a: Cea, max_states: int | None = None) -> Cea:
    """Per end position, keeps only the output that is greatest for the last-order."""
    return _compile_order(a, marked_first=False, max_states=max_states)


def compile_max(a: Cea, max_states: int | None = None) -> Cea:
    """Keeps outputs with no strict superset ending at the same position.

    A state ``(kept, dominating)`` holds the states reached by runs producing
    the current candidate and the states reached by runs that marked a
    superset of it.
    """
    a = a.with_alphabet()
    st = _Steps(a)

    def successors(state, l):
        s1, t1 = state
        out = []
        t2 = st.delta(t1, l, MARK)
        s2 = st.delta(s1, l, MARK) - t2
        if s2:
            out.append((MARK, (s2, t2)))
        t2 = st.delta(t1, l, MARK) | st.delta(t1, l, SKIP) | st.delta(s1, l, MARK)
        s2 = st.delta(s1, l, SKIP) - t2
        if s2:
            out.append((SKIP, (s2, t2)))
        return out

    def is_final(state):
        s, t = state
        return bool(s & a.final) and not (t & a.final)

    def label(state):
        s, t = state
        return f"({_blocks_label((s,))}, {_blocks_label((t,)) if t else '{}'})"

    starts = [(frozenset(a.initial), frozenset())] if a.initial else []
    return _explore(a, starts, successors, is_final, label, max_states)


def compile_selection(strategy: str, a: Cea, max_states: int | None = None) -> Cea:
    if strategy == "STRICT":
        return compile_strict(a)
    if strategy == "NXT":
        return compile_next(a, max_states)
    if strategy == "LAST":
        return compile_last(a, max_states)
    if strategy == "MAX":
        return compile_max(a, max_states)
    raise ValueError(f"unknown selection strategy {strategy!r}")

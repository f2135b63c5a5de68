"""Streaming evaluation engines.

Every engine keeps one node list per automaton configuration. Stepping
costs time that depends on the automaton only, and enumeration walks the
node DAG from the final lists, touching only nodes created for the
current position at the top level.
"""

from __future__ import annotations

from typing import Iterable, Iterator

from ..automata import MARK, SKIP, Cea, io_determinize, is_io_deterministic
from ..events import EventTuple, StreamPrefix
from ..oracle import ComplexEvent, apply_selection
from ..selection import single_final
from .structures import BOTTOM, Cell, EnumTrace, Node, NodeList, count_paths, enum_paths, new_roots

STRATEGIES = (None, "STRICT", "NXT", "LAST", "MAX")

# Rough per-object footprints used by the memory metric.
NODE_BYTES = 64
CELL_BYTES = 56


def normalize_strategy(strategy: str | None) -> str | None:
    if strategy is None:
        return None
    s = strategy.upper()
    if s in ("NONE", ""):
        return None
    if s == "NEXT":
        s = "NXT"
    if s not in STRATEGIES:
        raise ValueError(f"unknown selection strategy {strategy!r}")
    return s


class Engine:
    """Shared bookkeeping: position counter, node accounting, enumeration."""

    algorithm = "base"
    strategy: str | None = None

    def __init__(self, a: Cea):
        self.automaton = a.with_alphabet()
        self._classify = self.automaton.alphabet.classify
        self.position = -1
        self.nodes_created = 0
        self.cells_created = 0
        self._reset_lists()

    # -- subclass hooks
    def _reset_lists(self) -> None:
        raise NotImplementedError

    def _advance(self, letter: int, pos: int) -> None:
        raise NotImplementedError

    def final_lists(self) -> list[NodeList]:
        raise NotImplementedError

    def live_lists(self) -> list[NodeList]:
        raise NotImplementedError

    # -- public interface
    def step(self, t: EventTuple) -> None:
        self.position += 1
        self._advance(self._classify(t), self.position)

    def reset(self) -> None:
        """Back to the initial configuration; the position counter keeps going."""
        self._reset_lists()

    def _new_node(self, pos: int, lst: NodeList) -> Node:
        self.nodes_created += 1
        return Node(pos, lst)

    def roots(self) -> list[Node]:
        if self.position < 0:
            return []
        return list(new_roots(self.final_lists(), self.position))

    def enumerate_raw(self) -> Iterator[tuple[int, ...]]:
        """Outputs for the current position, positions in descending order."""
        return enum_paths(self.roots())

    def enumerate(self) -> Iterator[ComplexEvent]:
        for path in self.enumerate_raw():
            yield ComplexEvent(path)

    def count(self) -> int:
        """Number of outputs at the current position, by enumerating them."""
        n = 0
        for _ in self.enumerate_raw():
            n += 1
        return n

    def count_fast(self) -> int:
        """Number of outputs at the current position without enumerating them."""
        return count_paths(self.roots())

    def trace(self, recorder: EnumTrace | None = None) -> Iterator[int | str]:
        """The ``#``-framed output symbols, each complex event in reverse order."""
        rec = recorder if recorder is not None else EnumTrace()
        return rec.run(self.roots())

    def snapshot_enumerate(self) -> Iterator[ComplexEvent]:
        """Enumerator for the current position that later steps cannot disturb."""
        roots = self.roots()

        def gen():
            for path in enum_paths(roots):
                yield ComplexEvent(path)

        return gen()

    @property
    def memory_bytes(self) -> int:
        return self.nodes_created * NODE_BYTES + self.cells_created * CELL_BYTES

    def checkpoint(self) -> int:
        """Rebuild the live lists from scratch, dropping unreachable nodes.

        Returns the number of nodes still reachable.
        """
        copies: dict[int, Node] = {BOTTOM_ID: BOTTOM}
        lists = self.live_lists()
        # collect every reachable node, children before parents
        order: list[Node] = []
        seen: set[int] = {BOTTOM_ID}
        stack: list[tuple[Node, bool]] = []
        for lst in lists:
            for n in lst:
                stack.append((n, False))
        while stack:
            n, done = stack.pop()
            if done:
                order.append(n)
                continue
            if id(n) in seen:
                continue
            seen.add(id(n))
            stack.append((n, True))
            for k in NodeList(n.start, n.end):
                if id(k) not in seen:
                    stack.append((k, False))
        cells = 0
        for n in order:
            fresh = Node(n.position)
            kids = [copies[id(k)] for k in NodeList(n.start, n.end)]
            lst = NodeList.of(*kids)
            cells += len(kids)
            fresh.start, fresh.end = lst.start, lst.end
            copies[id(n)] = fresh
        for lst in lists:
            kids = [copies[id(k)] for k in lst]
            fresh = NodeList.of(*kids)
            cells += len(kids)
            lst.start, lst.end = fresh.start, fresh.end
        self.nodes_created = len(order)
        self.cells_created = cells
        return len(order)

    def run(self, s: Iterable[EventTuple], consumption_policy: bool = False) -> dict[int, set[ComplexEvent]]:
        """Feed ``s`` and collect the outputs of every position that has some."""
        log: dict[int, set[ComplexEvent]] = {}
        for t in s:
            self.step(t)
            got = set(self.enumerate())
            if got:
                log[self.position] = got
                if consumption_policy:
                    self.reset()
        return log


BOTTOM_ID = id(BOTTOM)


def _add(lists: dict, key, node: Node, eng: Engine) -> None:
    lst = lists.get(key)
    if lst is None:
        lst = lists[key] = NodeList()
    lst.add(node)
    eng.cells_created += 1


def _append(lists: dict, key, other: NodeList) -> None:
    lst = lists.get(key)
    if lst is None:
        lists[key] = NodeList(other.start, other.end)
    else:
        lst.append(other)


class DetEngine(Engine):
    """One list per state of an I/O-deterministic automaton."""

    algorithm = "det"

    def __init__(self, a: Cea):
        if not is_io_deterministic(a):
            raise ValueError("the automaton is not I/O-deterministic")
        a = a.with_alphabet()
        marked, skipped = a.table()
        self._mark = [[row[0] if row else -1 for row in rows] for rows in marked]
        self._skip = [[row[0] if row else -1 for row in rows] for rows in skipped]
        (self._q0,) = a.initial
        self._final = sorted(a.final)
        super().__init__(a)

    def _reset_lists(self) -> None:
        self.lists: dict[int, NodeList] = {self._q0: NodeList.bottom()}
        self.cells_created += 1

    def _advance(self, letter: int, pos: int) -> None:
        old = self.lists
        new: dict[int, NodeList] = {}
        mark, skip = self._mark, self._skip
        for q, lst in old.items():
            p = mark[q][letter]
            if p >= 0:
                _add(new, p, self._new_node(pos, lst), self)
            p = skip[q][letter]
            if p >= 0:
                _append(new, p, lst)
        self.lists = new

    def final_lists(self) -> list[NodeList]:
        lists = self.lists
        return [lists[q] for q in self._final if q in lists]

    def live_lists(self) -> list[NodeList]:
        return list(self.lists.values())


class SubsetEngine(Engine):
    """One list per set of states, with the subset transitions built on demand."""

    algorithm = "ndet"

    def __init__(self, a: Cea):
        a = a.with_alphabet()
        marked, skipped = a.table()
        self._marked, self._skipped = marked, skipped
        self._final_states = a.final
        self._ids: dict[frozenset[int], int] = {}
        self._sets: list[frozenset[int]] = []
        self._is_final: list[bool] = []
        self._moves: dict[tuple[int, int], tuple[int, int]] = {}
        self._start = self._intern(frozenset(a.initial)) if a.initial else -1
        super().__init__(a)

    @property
    def n_subsets(self) -> int:
        return len(self._sets)

    def _intern(self, T: frozenset[int]) -> int:
        i = self._ids.get(T)
        if i is None:
            i = self._ids[T] = len(self._sets)
            self._sets.append(T)
            self._is_final.append(bool(T & self._final_states))
        return i

    def _move(self, i: int, letter: int) -> tuple[int, int]:
        got = self._moves.get((i, letter))
        if got is None:
            T = self._sets[i]
            um: set[int] = set()
            us: set[int] = set()
            for q in T:
                um.update(self._marked[q][letter])
                us.update(self._skipped[q][letter])
            got = (self._intern(frozenset(um)) if um else -1, self._intern(frozenset(us)) if us else -1)
            self._moves[(i, letter)] = got
        return got

    def _reset_lists(self) -> None:
        self.lists: dict[int, NodeList] = {}
        if self._start >= 0:
            self.lists[self._start] = NodeList.bottom()
            self.cells_created += 1

    def _advance(self, letter: int, pos: int) -> None:
        old = self.lists
        new: dict[int, NodeList] = {}
        for i, lst in old.items():
            um, us = self._move(i, letter)
            if um >= 0:
                _add(new, um, self._new_node(pos, lst), self)
            if us >= 0:
                _append(new, us, lst)
        self.lists = new

    @property
    def active(self) -> set[frozenset[int]]:
        return {self._sets[i] for i in self.lists}

    def final_lists(self) -> list[NodeList]:
        return [lst for i, lst in self.lists.items() if self._is_final[i]]

    def live_lists(self) -> list[NodeList]:
        return list(self.lists.values())


class OrderEngine(Engine):
    """Selection by an order on outputs: one node per state, states kept in a ranked queue.

    With ``marked_first`` the marking and skipping moves of a block are
    taken together before the next block (next-order); otherwise every
    block's marking move is taken before any skipping move (last-order).
    """

    algorithm = "order"

    def __init__(self, a: Cea, marked_first: bool):
        self.strategy = "NXT" if marked_first else "LAST"
        self.marked_first = marked_first
        a = single_final(a).with_alphabet()
        marked, skipped = a.table()
        self._targets = (marked, skipped)
        self._initial = tuple(sorted(a.initial))
        self._final = sorted(a.final)
        super().__init__(a)

    def _reset_lists(self) -> None:
        self.lists: dict[int, NodeList] = {}
        for q in self._initial:
            self.lists[q] = NodeList.bottom()
            self.cells_created += 1
        self.queue: list[tuple[int, ...]] = [self._initial] if self._initial else []

    def _update(self, block, letter, mi, pos, old, claimed, new_lists, new_queue) -> None:
        table = self._targets[mi]
        taken: list[int] = []
        for q in block:
            for p in table[q][letter]:
                if p in claimed:
                    continue
                claimed.add(p)
                taken.append(p)
                if mi == 0:
                    lst = NodeList()
                    lst.add(self._new_node(pos, old[q]))
                    self.cells_created += 1
                    new_lists[p] = lst
                else:
                    new_lists[p] = old[q]
        if taken:
            new_queue.append(tuple(sorted(taken)))

    def _advance(self, letter: int, pos: int) -> None:
        old = self.lists
        old_queue = self.queue
        new_lists: dict[int, NodeList] = {}
        new_queue: list[tuple[int, ...]] = []
        claimed: set[int] = set()
        if self.marked_first:
            for block in old_queue:
                self._update(block, letter, 0, pos, old, claimed, new_lists, new_queue)
                self._update(block, letter, 1, pos, old, claimed, new_lists, new_queue)
        else:
            for block in old_queue:
                self._update(block, letter, 0, pos, old, claimed, new_lists, new_queue)
            for block in old_queue:
                self._update(block, letter, 1, pos, old, claimed, new_lists, new_queue)
        self.lists = new_lists
        self.queue = new_queue

    def final_lists(self) -> list[NodeList]:
        lists = self.lists
        return [lists[q] for q in self._final if q in lists]

    def live_lists(self) -> list[NodeList]:
        return list(self.lists.values())


class MaxEngine(Engine):
    """Maximal outputs: lists indexed by pairs (current states, states of superset runs)."""

    algorithm = "max"
    strategy = "MAX"

    def __init__(self, a: Cea):
        a = a.with_alphabet()
        marked, skipped = a.table()
        self._marked, self._skipped = marked, skipped
        self._final_states = a.final
        self._ids: dict[tuple[frozenset[int], frozenset[int]], int] = {}
        self._pairs: list[tuple[frozenset[int], frozenset[int]]] = []
        self._is_final: list[bool] = []
        self._moves: dict[tuple[int, int], tuple[int, int]] = {}
        self._start = self._intern((frozenset(a.initial), frozenset())) if a.initial else -1
        super().__init__(a)

    def _intern(self, key) -> int:
        i = self._ids.get(key)
        if i is None:
            i = self._ids[key] = len(self._pairs)
            self._pairs.append(key)
            T, U = key
            self._is_final.append(bool(T & self._final_states) and not (U & self._final_states))
        return i

    def _delta(self, states, letter, table) -> frozenset[int]:
        out: set[int] = set()
        for q in states:
            out.update(table[q][letter])
        return frozenset(out)

    def _move(self, i: int, letter: int) -> tuple[int, int]:
        got = self._moves.get((i, letter))
        if got is None:
            T, U = self._pairs[i]
            t_mark = self._delta(T, letter, self._marked)
            t_skip = self._delta(T, letter, self._skipped)
            u_mark = self._delta(U, letter, self._marked)
            u_skip = self._delta(U, letter, self._skipped)
            # marking: superset runs must mark as well
            T1 = t_mark - u_mark
            marked = self._intern((T1, u_mark)) if T1 else -1
            # skipping: any run that marks here now produces a superset
            U2 = u_mark | u_skip | t_mark
            T2 = t_skip - U2
            skipped = self._intern((T2, U2)) if T2 else -1
            got = self._moves[(i, letter)] = (marked, skipped)
        return got

    def _reset_lists(self) -> None:
        self.lists: dict[int, NodeList] = {}
        if self._start >= 0:
            self.lists[self._start] = NodeList.bottom()
            self.cells_created += 1

    def _advance(self, letter: int, pos: int) -> None:
        old = self.lists
        new: dict[int, NodeList] = {}
        for i, lst in old.items():
            um, us = self._move(i, letter)
            if um >= 0:
                _add(new, um, self._new_node(pos, lst), self)
            if us >= 0:
                _append(new, us, lst)
        self.lists = new

    @property
    def active(self) -> set[tuple[frozenset[int], frozenset[int]]]:
        return {self._pairs[i] for i in self.lists}

    def final_lists(self) -> list[NodeList]:
        return [lst for i, lst in self.lists.items() if self._is_final[i]]

    def live_lists(self) -> list[NodeList]:
        return list(self.lists.values())


class StrictEngine(Engine):
    """Contiguous outputs over an I/O-deterministic automaton.

    Only marking moves extend lists. The run that has skipped everything so
    far is tracked separately and restarts an empty output at each step.
    """

    algorithm = "strict"
    strategy = "STRICT"

    def __init__(self, a: Cea, max_states: int | None = None):
        if not is_io_deterministic(a):
            a = io_determinize(a, max_states=max_states)
        a = a.with_alphabet()
        marked, skipped = a.table()
        self._mark = [[row[0] if row else -1 for row in rows] for rows in marked]
        self._skip = [[row[0] if row else -1 for row in rows] for rows in skipped]
        (self._q0,) = a.initial
        self._final = sorted(a.final)
        super().__init__(a)

    def _reset_lists(self) -> None:
        self.lists: dict[int, NodeList] = {self._q0: NodeList.bottom()}
        self.cells_created += 1
        self.q_init = self._q0

    def _advance(self, letter: int, pos: int) -> None:
        old = self.lists
        new: dict[int, NodeList] = {}
        mark = self._mark
        for q, lst in old.items():
            p = mark[q][letter]
            if p >= 0:
                _add(new, p, self._new_node(pos, lst), self)
        if self.q_init >= 0:
            self.q_init = self._skip[self.q_init][letter]
            if self.q_init >= 0:
                _append(new, self.q_init, NodeList.bottom())
                self.cells_created += 1
        self.lists = new

    def final_lists(self) -> list[NodeList]:
        lists = self.lists
        return [lists[q] for q in self._final if q in lists]

    def live_lists(self) -> list[NodeList]:
        return list(self.lists.values())


class NaiveEngine(Engine):
    """Keeps every partial output explicitly; a baseline whose steps slow down over time."""

    algorithm = "naive"

    def __init__(self, a: Cea, strategy: str | None = None, max_states: int | None = None):
        if not is_io_deterministic(a):
            a = io_determinize(a, max_states=max_states)
        a = a.with_alphabet()
        marked, skipped = a.table()
        self._mark = [[row[0] if row else -1 for row in rows] for rows in marked]
        self._skip = [[row[0] if row else -1 for row in rows] for rows in skipped]
        (self._q0,) = a.initial
        self._final_set = a.final
        self.strategy = normalize_strategy(strategy)
        self._out: list[tuple[int, ...]] = []
        self.peak_partial = 1
        super().__init__(a)

    @property
    def memory_bytes(self) -> int:
        return self.peak_partial * CELL_BYTES

    def _reset_lists(self) -> None:
        self.partial: dict[int, list[tuple[int, ...]]] = {self._q0: [()]}
        self._out = []

    def _advance(self, letter: int, pos: int) -> None:
        new: dict[int, list[tuple[int, ...]]] = {}
        out: list[tuple[int, ...]] = []
        for q, items in self.partial.items():
            p = self._mark[q][letter]
            if p >= 0:
                ext = [c + (pos,) for c in items]
                new.setdefault(p, []).extend(ext)
                self.cells_created += len(ext)
                if p in self._final_set:
                    out.extend(ext)
            p = self._skip[q][letter]
            if p >= 0:
                new.setdefault(p, []).extend(items)
        self.partial = new
        self.peak_partial = max(self.peak_partial, sum(len(v) for v in new.values()))
        if self.strategy is not None and out:
            out = [tuple(sorted(c)) for c in apply_selection(self.strategy, out)]
        self._out = out

    @property
    def partial_count(self) -> int:
        return sum(len(v) for v in self.partial.values())

    def enumerate_raw(self) -> Iterator[tuple[int, ...]]:
        return (tuple(reversed(c)) for c in self._out)

    def count_fast(self) -> int:
        return len(self._out)

    def roots(self) -> list[Node]:
        raise NotImplementedError("the naive engine keeps no node structure")

    def final_lists(self) -> list[NodeList]:
        return []

    def live_lists(self) -> list[NodeList]:
        return []

    def checkpoint(self) -> int:
        return 0

    def snapshot_enumerate(self) -> Iterator[ComplexEvent]:
        return iter([ComplexEvent(c) for c in self._out])

    def trace(self, recorder=None):
        raise NotImplementedError("the naive engine keeps no node structure")


def engine_new(
    a: Cea,
    strategy: str | None = None,
    *,
    mode: str = "auto",
    max_states: int | None = 5000,
) -> Engine:
    """Pick the evaluation algorithm for ``a`` under ``strategy``.

    ``mode`` applies when there is no strategy: ``auto`` uses the per-state
    lists when ``a`` is I/O-deterministic and subset lists otherwise, ``det``
    determinizes first, ``ndet`` always uses subset lists and ``naive``
    stores partial outputs explicitly.
    """
    strategy = normalize_strategy(strategy)
    if mode == "naive":
        return NaiveEngine(a, strategy, max_states)
    if strategy == "NXT":
        return OrderEngine(a, marked_first=True)
    if strategy == "LAST":
        return OrderEngine(a, marked_first=False)
    if strategy == "MAX":
        return MaxEngine(a)
    if strategy == "STRICT":
        return StrictEngine(a, max_states)
    if mode == "auto":
        return DetEngine(a) if is_io_deterministic(a) else SubsetEngine(a)
    if mode == "det":
        return DetEngine(a if is_io_deterministic(a) else io_determinize(a, max_states=max_states))
    if mode == "ndet":
        return SubsetEngine(a)
    raise ValueError(f"unknown engine mode {mode!r}")


def run_query(
    a: Cea,
    s: Iterable[EventTuple],
    strategy: str | None = None,
    *,
    mode: str = "auto",
    consumption_policy: bool = False,
) -> dict[int, set[ComplexEvent]]:
    """Outputs of ``a`` over ``s`` grouped by position; positions without output are absent."""
    return engine_new(a, strategy, mode=mode).run(s, consumption_policy)

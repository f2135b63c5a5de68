"""Persistent node lists, the black-white stack and constant-delay enumeration.

A node stores a stream position and a snapshot ``(start, end)`` of the list
of its continuations. Lists are chains of cells; a list only ever reads
cells from ``start`` up to and including ``end``. Prepending creates a new
cell, and concatenation links the current end cell to the other list's
start. A cell's ``next`` link is therefore written at most once, and every
snapshot keeps reading the same sequence regardless of later updates.
"""

from __future__ import annotations

from typing import Iterable, Iterator


class Node:
    __slots__ = ("position", "start", "end")

    def __init__(self, position: int, children: "NodeList | None" = None):
        self.position = position
        if children is None:
            self.start = self.end = None
        else:
            self.start = children.start
            self.end = children.end

    @property
    def children(self) -> "NodeList":
        return NodeList(self.start, self.end)

    def __repr__(self):
        return "⊥" if self is BOTTOM else f"Node({self.position})"


BOTTOM = Node(-1)


class Cell:
    __slots__ = ("node", "next")

    def __init__(self, node: Node, next: "Cell | None" = None):
        self.node = node
        self.next = next


class NodeList:
    """A list of nodes; ``add`` prepends, ``append`` concatenates in place."""

    __slots__ = ("start", "end")

    def __init__(self, start: Cell | None = None, end: Cell | None = None):
        self.start = start
        self.end = end

    @classmethod
    def of(cls, *nodes: Node) -> "NodeList":
        lst = cls()
        for n in reversed(nodes):
            lst.add(n)
        return lst

    @classmethod
    def bottom(cls) -> "NodeList":
        c = Cell(BOTTOM)
        return cls(c, c)

    def __bool__(self):
        return self.start is not None

    def add(self, node: Node) -> None:
        c = Cell(node, self.start)
        if self.start is None:
            self.end = c
        self.start = c

    def append(self, other: "NodeList") -> None:
        if other.start is None:
            return
        if self.start is None:
            self.start, self.end = other.start, other.end
            return
        end = self.end
        if end.next is not None:
            raise AssertionError("list cell linked twice")
        end.next = other.start
        self.end = other.end

    def lazycopy(self) -> "NodeList":
        return NodeList(self.start, self.end)

    def cells(self) -> Iterator[Cell]:
        c = self.start
        while c is not None:
            yield c
            if c is self.end:
                return
            c = c.next

    def __iter__(self) -> Iterator[Node]:
        for c in self.cells():
            yield c.node

    def __len__(self):
        return sum(1 for _ in self.cells())

    def __repr__(self):
        return "[" + ", ".join(map(repr, self)) + "]"


class BlackWhiteStack:
    """Stack whose entries are black or white.

    Each slot records the index of the nearest black slot at or below it,
    so ``pop_whites`` is one assignment. Slots are overwritten in place
    rather than deleted, which keeps every operation worst-case constant.
    """

    __slots__ = ("items", "black_below", "size")

    def __init__(self):
        self.items: list = []
        self.black_below: list[int] = []
        self.size = 0

    def _push(self, item, black: bool) -> None:
        i = self.size
        below = i if black else (self.black_below[i - 1] if i else -1)
        if i < len(self.items):
            self.items[i] = item
            self.black_below[i] = below
        else:
            self.items.append(item)
            self.black_below.append(below)
        self.size = i + 1

    def push_black(self, item) -> None:
        self._push(item, True)

    def push_white(self, item) -> None:
        self._push(item, False)

    def pop(self):
        if not self.size:
            raise IndexError("pop from an empty stack")
        self.size -= 1
        return self.items[self.size]

    def pop_whites(self) -> None:
        """Remove every white entry above the topmost black one."""
        if self.size:
            self.size = self.black_below[self.size - 1] + 1

    def top(self):
        return self.items[self.size - 1]

    def is_black(self, i: int) -> bool:
        return self.black_below[i] == i

    def empty(self) -> bool:
        return self.size == 0

    def __len__(self):
        return self.size

    def __iter__(self):
        return iter(self.items[: self.size])


def new_roots(lists: Iterable[NodeList], now: int) -> Iterator[Node]:
    """Nodes at the head of each list whose position is ``now``."""
    for lst in lists:
        c = lst.start
        end = lst.end
        while c is not None:
            node = c.node
            if node.position != now:
                break
            yield node
            if c is end:
                break
            c = c.next


def enum_paths(roots: Iterable[Node]) -> Iterator[tuple[int, ...]]:
    """Every root-to-⊥ path as a tuple of positions, largest first.

    Depth-first traversal on a black-white stack held in flat arrays: a
    frame is black while its node still has unvisited children. After a
    path is emitted, all exhausted frames go in one step.
    """
    nodes: list = []
    pos: list = []
    cur: list = []
    blk: list = []
    cap = 0
    bottom = BOTTOM
    for root in roots:
        if root is bottom:
            yield ()
            continue
        size = 0
        node = root
        while True:
            while node is not bottom:
                c = node.start
                end = node.end
                nxt = None if c is end else c.next
                if size == cap:
                    nodes.append(node)
                    pos.append(node.position)
                    cur.append(nxt)
                    blk.append(0)
                    cap += 1
                else:
                    nodes[size] = node
                    pos[size] = node.position
                    cur[size] = nxt
                if nxt is None:
                    blk[size] = blk[size - 1] if size else -1
                else:
                    blk[size] = size
                size += 1
                node = c.node
            yield tuple(pos[:size])
            b = blk[size - 1]
            if b < 0:
                break
            c = cur[b]
            nxt = None if c is nodes[b].end else c.next
            cur[b] = nxt
            if nxt is None:
                blk[b] = blk[b - 1] if b else -1
            size = b + 1
            node = c.node


def count_paths(roots: Iterable[Node]) -> int:
    """Number of root-to-⊥ paths, by memoized counting over the DAG."""
    memo: dict[int, int] = {}

    def count(node: Node) -> int:
        # iterative post-order to survive deep lists
        stack = [(node, False)]
        while stack:
            n, done = stack.pop()
            key = id(n)
            if key in memo:
                continue
            if n is BOTTOM:
                memo[key] = 1
                continue
            kids = list(NodeList(n.start, n.end))
            if done:
                memo[key] = sum(memo[id(k)] for k in kids)
            else:
                stack.append((n, True))
                stack.extend((k, False) for k in kids if id(k) not in memo)
        return memo[id(node)]

    return sum(count(r) for r in roots)


class EnumTrace:
    """Instrumented enumeration on an explicit ``BlackWhiteStack``.

    Produces the framed output symbols (positions and ``#``) and counts
    stack operations and link reads between consecutive symbols.
    """

    def __init__(self):
        self.max_gap = 0
        self.max_backtrack = 0
        self.ops = 0
        self.events = 0
        self.symbols = 0
        self._gap = 0

    def _op(self, k: int = 1) -> None:
        self.ops += k
        self._gap += k

    def _emit(self, sym) -> object:
        self.symbols += 1
        if self._gap > self.max_gap:
            self.max_gap = self._gap
        self._gap = 0
        return sym

    def run(self, roots: Iterable[Node]) -> Iterator[int | str]:
        first = True
        for root in roots:
            s = BlackWhiteStack()
            cursors: dict[int, Cell | None] = {}
            node = root
            if not first:
                yield self._emit("#")
            first = False
            while True:
                while node is not BOTTOM:
                    yield self._emit(node.position)
                    c = node.start
                    self._op()  # begin
                    nxt = None if c is node.end else c.next
                    self._op()  # link read
                    if nxt is None:
                        s.push_white(node)
                    else:
                        s.push_black(node)
                    self._op()  # push
                    cursors[s.size - 1] = nxt
                    node = c.node
                self.events += 1
                s.pop_whites()
                self._op()
                if s.empty():
                    break
                b = s.size - 1
                parent = s.pop()
                self._op()
                c = cursors[b]
                nxt = None if c is parent.end else c.next
                self._op()
                if nxt is None:
                    s.push_white(parent)
                else:
                    s.push_black(parent)
                self._op()
                cursors[b] = nxt
                self.max_backtrack = max(self.max_backtrack, self._gap)
                yield self._emit("#")
                # the shared prefix is printed again, one symbol per frame
                for i in range(s.size):
                    yield self._emit(s.items[i].position)
                node = c.node


def trace_events(symbols: Iterable[int | str]) -> list[tuple[int, ...]]:
    """Split a ``#``-framed symbol stream into position tuples."""
    out: list[tuple[int, ...]] = []
    cur: list[int] = []
    for sym in symbols:
        if sym == "#":
            out.append(tuple(cur))
            cur = []
        else:
            cur.append(sym)
    if cur:
        out.append(tuple(cur))
    return out

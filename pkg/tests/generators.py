"""Seeded random formulas, streams and automata for differential tests."""

from __future__ import annotations

import random

from hypothesis import strategies as st

from celstream import formula as F
from celstream import predicates as P
from celstream.analysis import bound_vars, is_well_formed
from celstream.automata import MARK, SKIP, Cea, Transition
from celstream.events import EventTuple, StreamPrefix

RELATIONS = ("R", "S", "T")
VARIABLES = ("x", "y", "z")
VALUES = (0, 1, 2)
OPS = ("=", "!=", "<", "<=", ">", ">=")


def random_atom(rng: random.Random, var: str) -> P.Pred:
    if rng.random() < 0.25:
        return P.TypeTest(var, rng.choice(RELATIONS))
    return P.Compare(P.AttrRef(var, "a"), rng.choice(OPS), rng.choice(VALUES))


def random_pred(rng: random.Random, variables: list[str], size: int = 3) -> P.Pred:
    """A combination of single-variable atoms; atoms may mention different variables."""
    if size <= 1 or rng.random() < 0.4:
        p = random_atom(rng, rng.choice(variables))
        return P.Not(p) if rng.random() < 0.2 else p
    left = random_pred(rng, variables, size - 1)
    right = random_pred(rng, variables, size - 1)
    return P.And((left, right)) if rng.random() < 0.6 else P.Or((left, right))


def random_formula(rng: random.Random, depth: int = 4) -> F.Formula:
    """Well-formed, unary formula of nesting depth at most ``depth``."""
    if depth <= 1 or rng.random() < 0.25:
        return F.Assign(rng.choice(RELATIONS), rng.choice(VARIABLES))
    kind = rng.choice(("seq", "seq", "or", "plus", "filter", "filter"))
    if kind == "seq":
        return F.Seq(random_formula(rng, depth - 1), random_formula(rng, depth - 1))
    if kind == "or":
        return F.Or(random_formula(rng, depth - 1), random_formula(rng, depth - 1))
    if kind == "plus":
        return F.Plus(random_formula(rng, depth - 1))
    body = random_formula(rng, depth - 1)
    bound = sorted(bound_vars(body))
    if not bound:
        return body
    return F.Filter(body, random_pred(rng, bound))


def random_stream(rng: random.Random, max_len: int = 8, min_len: int = 0) -> StreamPrefix:
    n = rng.randint(min_len, max_len)
    return StreamPrefix([EventTuple(rng.choice(RELATIONS), {"a": rng.choice(VALUES)}) for _ in range(n)])


def random_instance(seed: int, depth: int = 4, max_len: int = 8) -> tuple[F.Formula, StreamPrefix]:
    rng = random.Random(seed)
    f = random_formula(rng, depth)
    assert is_well_formed(f)
    return f, random_stream(rng, max_len, min_len=2)


def random_cea(rng: random.Random, max_states: int = 5, max_preds: int = 3) -> Cea:
    """Arbitrary small automaton over unary predicates of one variable."""
    n = rng.randint(1, max_states)
    preds = [random_pred(rng, ["e"], 2) for _ in range(rng.randint(1, max_preds))] + [P.TRUE]
    trans = set()
    for _ in range(rng.randint(1, 3 * n)):
        trans.add(Transition(rng.randrange(n), rng.choice(preds), rng.choice((MARK, SKIP)), rng.randrange(n)))
    initial = frozenset(rng.sample(range(n), rng.randint(1, min(2, n))))
    final = frozenset(rng.sample(range(n), rng.randint(1, n)))
    return Cea(n, tuple(sorted(trans, key=str)), initial, final)


seeds = st.integers(min_value=0, max_value=2**32 - 1)
instances = seeds.map(random_instance)

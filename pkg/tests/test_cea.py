import itertools
import random

import pytest

from celstream import predicates as P
from celstream.analysis import analyze
from celstream.automata import (
    MARK,
    SKIP,
    Cea,
    Transition,
    all_runs,
    compile_core,
    compile_formula,
    complement,
    empty_cea,
    enumerate_runs,
    extended_delta,
    intersection,
    io_determinize,
    is_io_deterministic,
    remove_epsilon,
    to_dot,
    union,
)
from celstream.events import EventTuple, StreamPrefix
from celstream.formula import EMPTY, formula_size
from celstream.minterms import minterm_partition
from celstream.oracle import apply_selection, oracle_eval
from celstream.parser import parse_formula
from celstream.pipeline import compile_query
from celstream.rewrite import to_lp_normal_form, to_safe
from celstream.selection import compile_last, compile_max, compile_next, compile_selection, compile_strict, tpo

from conftest import ces
from generators import random_cea, random_instance, random_stream

HOT = P.And((P.TypeTest("e", "T"), P.Compare(P.AttrRef("e", "tmp"), ">", 40)))
IS_H = P.TypeTest("e", "H")


def fig2():
    """Two humidity readings around any number of hot temperature readings."""
    trans = (
        Transition(0, P.TRUE, SKIP, 0),
        Transition(0, IS_H, MARK, 1),
        Transition(1, HOT, MARK, 1),
        Transition(1, P.TRUE, SKIP, 1),
        Transition(1, IS_H, MARK, 2),
    )
    return Cea(3, trans, frozenset({0}), frozenset({2}))


@pytest.fixture(scope="module")
def fire_lp(queries):
    return compile_formula(to_lp_normal_form(queries["fire"]))


def by_position(a, s):
    return {n: enumerate_runs(a, s, n) for n in range(len(s))}


def union_of(log):
    return set().union(*log.values()) if log else set()


def brute_runs(a, s, n):
    """Every sequence of transitions, tried one by one."""
    out = set()
    for path in itertools.product(a.transitions, repeat=n + 1):
        if path[0].source not in a.initial or path[-1].target not in a.final or path[-1].mark is not MARK:
            continue
        if any(path[k].target != path[k + 1].source for k in range(n)):
            continue
        if all(P.holds(t.predicate, s[k]) for k, t in enumerate(path)):
            out.add(frozenset(k for k, t in enumerate(path) if t.mark is MARK))
    return out


def all_sets_ending_at(n):
    return {frozenset(c) | {n} for k in range(n + 1) for c in itertools.combinations(range(n), k)}


def test_definition_gadget():
    e = compile_core(parse_formula("T AS x FILTER x.tmp > 40"))
    assert e.n_states == 2 and not e.epsilons
    assert set(e.transitions) == {Transition(0, P.TRUE, SKIP, 0), Transition(0, HOT, MARK, 1)}
    assert e.initial == {0} and e.final == {1}


def test_empty_marker_compiles_to_no_finals():
    assert remove_epsilon(compile_core(EMPTY)).final == frozenset()
    assert compile_formula(EMPTY).final == frozenset()


def test_fire_automaton(fire_lp, fig1):
    assert fire_lp.n_states == 3
    assert union_of(by_position(fire_lp, fig1)) == ces({1, 2}, {1, 8}, {5, 8})
    assert enumerate_runs(fire_lp, fig1, 2) == ces({1, 2})


def test_remove_epsilon_keeps_epsilon_free_input():
    e = compile_core(parse_formula("T AS x"))
    a = remove_epsilon(e)
    assert (a.n_states, set(a.transitions), a.initial, a.final) == (2, set(e.transitions), e.initial, e.final)


def test_plus_gadget_accepts_every_set_of_matches():
    a = compile_formula(parse_formula("(T AS x)+"))
    for seed in range(30):
        s = random_stream(random.Random(seed), 6, 1)
        s = StreamPrefix([EventTuple("T" if t.type_name == "R" else t.type_name, t.attrs) for t in s])
        ts = [i for i, t in enumerate(s) if t.type_name == "T"]
        want = {frozenset(c) for k in range(1, len(ts) + 1) for c in itertools.combinations(ts, k)}
        assert union_of(all_runs(a, s)) == want


def test_fig2_on_running_stream(fig1):
    assert enumerate_runs(fig2(), fig1, 8) == ces(
        {0, 8}, {0, 1, 8}, {0, 5, 8}, {0, 1, 5, 8}, {2, 8}, {2, 5, 8}, {3, 8}, {3, 5, 8}, {7, 8}
    )
    assert enumerate_runs(empty_cea(), fig1, 8) == set()


def test_fig2_matches_equivalent_formula(fig1):
    f = parse_formula("H AS x ; H AS z OR H AS x ; (T AS y FILTER y.tmp > 40)+ ; H AS z")
    assert union_of(all_runs(fig2(), fig1)) == oracle_eval(f, fig1)


def test_all_runs_agrees_with_enumerate_runs(fig1):
    a = fig2()
    assert {n: c for n, c in by_position(a, fig1).items() if c} == all_runs(a, fig1)
    with pytest.raises(IndexError):
        enumerate_runs(a, fig1, 9)


@pytest.mark.parametrize("seed", range(60))
def test_enumerate_runs_matches_explicit_paths(seed):
    rng = random.Random(seed)
    a = random_cea(rng, 3, 2)
    s = random_stream(rng, 4, 1)
    for n in range(len(s)):
        assert enumerate_runs(a, s, n) == brute_runs(a, s, n)


def test_minterms():
    t = P.TypeTest("e", "T")
    assert len(minterm_partition([t])) == 2
    gt5 = P.Compare(P.AttrRef("e", "a"), ">", 5)
    gt3 = P.Compare(P.AttrRef("e", "a"), ">", 3)
    part = minterm_partition([gt5, gt3])
    assert len(part) == 3
    assert (True, False) not in {m.signs for m in part}
    assert len(minterm_partition([])) == 1


@pytest.mark.parametrize("seed", range(40))
def test_every_tuple_satisfies_exactly_one_minterm(seed):
    rng = random.Random(seed)
    a = random_cea(rng, 4, 3)
    part = a.with_alphabet().alphabet
    for t in random_stream(rng, 12, 12):
        hits = [k for k, m in enumerate(part) if P.holds(m.predicate, t)]
        assert hits == [part.classify(t)]


def test_extended_delta(fire_lp):
    hot = EventTuple("T", {"id": 0, "tmp": 45})
    assert extended_delta(fire_lp, [], MARK, hot) == frozenset()
    assert extended_delta(fire_lp, [0], MARK, hot) == {1}
    assert extended_delta(fire_lp, [0], SKIP, hot) == {0}


def test_extended_delta_on_letters(fire_lp):
    a = fire_lp.with_alphabet()
    hot = EventTuple("T", {"id": 0, "tmp": 45})
    assert extended_delta(a, [0], MARK, a.alphabet[a.alphabet.classify(hot)]) == {1}


def test_tpo():
    assert tpo([{1, 2}, {2, 3}]) == (frozenset({1, 2}), frozenset({3}))
    assert tpo([set(), {1}]) == (frozenset({1}),)
    assert tpo([{1}, {2}]) == (frozenset({1}), frozenset({2}))


def test_union_with_empty(fig1):
    a = fig2()
    assert by_position(union(a, empty_cea()), fig1) == by_position(a, fig1)


@pytest.mark.parametrize("seed", range(60))
def test_boolean_closure(seed):
    rng = random.Random(seed)
    a1, a2 = random_cea(rng, 3, 2), random_cea(rng, 3, 2)
    s = random_stream(rng, 5, 1)
    u, i, c = union(a1, a2), intersection(a1, a2), complement(a1)
    cc = complement(c)
    for n in range(len(s)):
        r1, r2 = enumerate_runs(a1, s, n), enumerate_runs(a2, s, n)
        assert enumerate_runs(u, s, n) == r1 | r2
        assert enumerate_runs(i, s, n) == r1 & r2
        assert enumerate_runs(intersection(a1, a1), s, n) == r1
        assert enumerate_runs(c, s, n) == all_sets_ending_at(n) - r1
        assert enumerate_runs(cc, s, n) == r1


def test_io_determinism_examples(fire_lp, fig1):
    assert is_io_deterministic(Cea(1, (), frozenset({0}), frozenset()))
    assert is_io_deterministic(compile_formula(parse_formula("T AS x")))
    overlap = Cea(2, (Transition(0, P.TRUE, MARK, 0), Transition(0, IS_H, MARK, 1)), frozenset({0}), frozenset({1}))
    assert not is_io_deterministic(overlap)
    d = io_determinize(fire_lp)
    assert d.n_states == 3 and is_io_deterministic(d)
    assert by_position(d, fig1) == by_position(fire_lp, fig1)
    d2 = io_determinize(fig2())
    assert d2.n_states <= 8 and is_io_deterministic(d2)
    assert by_position(d2, fig1) == by_position(fig2(), fig1)
    assert is_io_deterministic(fig2())


@pytest.mark.parametrize("seed", range(50))
def test_determinized_automaton_fires_once_per_mark(seed):
    rng = random.Random(seed)
    d = io_determinize(random_cea(rng))
    out = d.outgoing()
    for t in random_stream(rng, 10, 10):
        for q in d.states:
            for mark in (MARK, SKIP):
                assert len([tr for tr in out[q] if tr.mark is mark and P.holds(tr.predicate, t)]) <= 1


def test_strict_examples(fire_lp, fig1):
    strict = compile_strict(fire_lp)
    assert strict.n_states <= 2 * fire_lp.n_states
    assert union_of(all_runs(strict, fig1)) == ces({1, 2})
    runs = union_of(all_runs(compile_strict(fig2()), fig1))
    assert runs == apply_selection("STRICT", union_of(all_runs(fig2(), fig1))) == ces({0, 1, 2}, {2, 3}, {7, 8})


def test_order_examples(fire_lp, fig1):
    assert union_of(all_runs(compile_next(fire_lp), fig1)) == ces({1, 2}, {1, 8})
    assert union_of(all_runs(compile_last(fire_lp), fig1)) == ces({1, 2}, {5, 8})


def test_max_examples(queries, fig1):
    for name, want in (("humidity_rise", ces({3, 4, 6, 7})), ("fire", ces({1, 2}, {1, 8}, {5, 8}))):
        a = compile_max(compile_query(queries[name]).core)
        assert union_of(all_runs(a, fig1)) == want


def test_single_run_automaton_is_unchanged(fig1):
    a = compile_formula(parse_formula("H AS x"))
    for build in (compile_next, compile_last, compile_max):
        assert all_runs(build(a), fig1) == all_runs(a, fig1)


@pytest.mark.parametrize("seed", range(120))
def test_selection_constructions_match_oracle_selection(seed):
    rng = random.Random(seed)
    a = random_cea(rng, 4, 3)
    s = random_stream(rng, 6, 1)
    raw = all_runs(a, s)
    for strategy in ("STRICT", "NXT", "LAST", "MAX"):
        got = all_runs(compile_selection(strategy, a), s)
        want = {}
        for n, outs in raw.items():
            kept = apply_selection(strategy, outs)
            if kept:
                want[n] = kept
        assert got == want, strategy
        if strategy in ("NXT", "LAST"):
            assert all(len(v) == 1 for v in got.values())


@pytest.mark.parametrize("seed", range(150))
def test_compiled_formula_matches_oracle(seed):
    f, s = random_instance(seed)
    lp = to_lp_normal_form(to_safe(f))
    e = compile_core(lp)
    assert e.n_states <= 2 * formula_size(lp) + 2
    assert union_of(all_runs(compile_formula(lp), s)) == oracle_eval(f, s)


def test_dot_export(fire_lp):
    dot = to_dot(fire_lp)
    assert dot.startswith("digraph") and "doublecircle" in dot and "●" in dot and "○" in dot

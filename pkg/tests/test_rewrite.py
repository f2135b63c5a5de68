import pytest
from hypothesis import given, settings

from celstream import formula as F
from celstream import predicates as P
from celstream.analysis import analyze, is_safe
from celstream.oracle import oracle_eval
from celstream.parser import parse_formula
from celstream.rewrite import RewriteError, is_dnf, is_lp_normal_form, split_selection, to_dnf, to_lp_normal_form, to_safe

from generators import instances, random_instance

P1 = P.Compare(P.AttrRef("x", "a"), ">", 1)


def test_dnf_distributes_sequence():
    f = parse_formula("(A AS x OR B AS y); C AS z")
    assert to_dnf(f) == parse_formula("(A AS x; C AS z) OR (B AS y; C AS z)")


def test_dnf_fixpoint():
    assert to_dnf(F.Assign("A", "x")) == F.Assign("A", "x")


def test_dnf_distributes_filter():
    a, b = F.Assign("A", "x"), F.Assign("B", "x")
    assert to_dnf(F.Filter(F.Or(a, b), P1)) == F.Or(F.Filter(a, P1), F.Filter(b, P1))


def test_dnf_keeps_disjunction_under_plus():
    f = parse_formula("(A AS x OR B AS y)+ ; C AS z")
    assert to_dnf(f) == f
    assert is_dnf(f)


def test_repeated_definition_becomes_unsatisfiable():
    assert to_safe(parse_formula("T AS x ; T AS x")) == F.Empty()


def test_safe_formula_is_untouched(queries):
    assert to_safe(queries["fire_any_order"]) == queries["fire_any_order"]


def test_unsafe_disjunct_is_dropped():
    f = parse_formula("(T AS x; T AS x) OR (T AS a; H AS b)")
    assert to_safe(f) == parse_formula("T AS a; H AS b")


def test_fire_lp_form(queries):
    want = parse_formula(
        "(T AS x FILTER (x.tmp > 40 AND x.id = 0)) ; (H AS y FILTER (y.hum <= 25 AND y.id = 0))"
    )
    lp = to_lp_normal_form(queries["fire"])
    assert lp == want
    assert is_lp_normal_form(lp)
    assert not is_lp_normal_form(queries["fire"])
    assert not is_lp_normal_form(queries["fire_any_order"])


def test_lp_leaves_definition_filter():
    f = parse_formula("T AS x FILTER x.tmp > 40")
    assert to_lp_normal_form(f) == f
    assert is_lp_normal_form(F.Assign("T", "x"))


def test_conditional_becomes_two_branches(queries, fig1):
    f = queries["conditional"]
    lp = to_lp_normal_form(f)
    assert is_lp_normal_form(lp)
    assert isinstance(lp, F.Or) and len(F.disjuncts(lp)) == 2
    assert oracle_eval(lp, fig1) == oracle_eval(f, fig1)


def test_selection_chain_is_split(queries):
    chain, core = split_selection(F.Select("NXT", F.Select("MAX", queries["fire"])))
    assert chain == ["NXT", "MAX"] and core == queries["fire"]


def test_inner_selection_is_rejected(queries):
    with pytest.raises(RewriteError):
        to_safe(F.Seq(F.Select("NXT", queries["fire"]), F.Assign("T", "z")))


def _size_bound_ok(f, g):
    return F.formula_size(g) <= 2 ** (2 * F.formula_size(f))


@settings(max_examples=250, deadline=None)
@given(instances)
def test_rewrites_preserve_semantics(inst):
    f, s = inst
    want = oracle_eval(f, s)
    dnf = to_dnf(f)
    safe = to_safe(f)
    lp = to_lp_normal_form(f)
    assert is_dnf(dnf) and is_safe(safe) and is_lp_normal_form(lp)
    assert analyze(lp).safe
    assert _size_bound_ok(f, dnf) and _size_bound_ok(f, lp)
    assert oracle_eval(dnf, s) == want
    assert oracle_eval(safe, s) == want
    assert oracle_eval(lp, s) == want


@pytest.mark.parametrize("seed", range(5000, 5050))
def test_rewrites_preserve_semantics_seeded(seed):
    f, s = random_instance(seed)
    want = oracle_eval(f, s)
    assert oracle_eval(to_lp_normal_form(to_safe(f)), s) == want

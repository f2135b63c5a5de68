import pytest
from hypothesis import given, settings

from celstream import formula as F
from celstream import predicates as P
from celstream.analysis import analyze, bound_vars, is_safe, is_well_formed, vdef, vdef_plus
from celstream.parser import CelSyntaxError, UnknownRelationError, parse_formula
from celstream.events import load_schema
from celstream.rewrite import post_order

from generators import instances

T_x = F.Assign("T", "x")
H_y = F.Assign("H", "y")


def test_fire_query_shape(queries):
    f = queries["fire"]
    assert isinstance(f, F.Filter)
    assert f.body == F.Seq(T_x, H_y)
    assert len(list(P.atoms(f.pred))) == 4


def test_single_assign():
    assert parse_formula("T AS x") == T_x


def test_q3_shape():
    a, b, c, d = (F.Assign(r, v) for r, v in zip("ABCD", "xyzw"))
    assert parse_formula("((A AS x OR B AS y) OR C AS z); D AS w") == F.Seq(F.Or(F.Or(a, b), c), d)


def test_precedence():
    f = parse_formula("A AS x OR B AS y ; C AS z+ FILTER z.a > 1")
    c = F.Filter(F.Plus(F.Assign("C", "z")), P.Compare(P.AttrRef("z", "a"), ">", 1))
    assert f == F.Or(F.Assign("A", "x"), F.Seq(F.Assign("B", "y"), c))


def test_keywords_are_case_insensitive():
    assert parse_formula("T as x filter x.a > 1") == parse_formula("T AS x FILTER x.a > 1")


@pytest.mark.parametrize("text", ["T AS", "T AS x FILTER", "FOO(T AS x)", "T AS x ;; H AS y", ""])
def test_syntax_errors(text):
    with pytest.raises(CelSyntaxError):
        parse_formula(text)


def test_unknown_relation():
    with pytest.raises(UnknownRelationError):
        parse_formula("Q AS x", load_schema("T(a:int)"))


def test_bound_vars_cases():
    assert bound_vars(F.Plus(T_x)) == frozenset()
    assert bound_vars(T_x) == {"x"}
    assert bound_vars(F.Or(T_x, F.Seq(T_x, H_y))) == {"x"}


def test_analysis_of_ill_formed_example():
    rep = analyze(parse_formula("(T AS x ; (H AS y)+) FILTER z.id = 1"))
    assert rep.var_all == {"x", "y", "z"}
    assert rep.vdef == {"x", "y"}
    assert rep.vdef_plus == {"x"}
    assert not rep.well_formed


def test_repeated_definition_is_unsafe():
    assert not analyze(parse_formula("T AS x ; T AS x")).safe


def test_correlated_query_is_not_unary(queries):
    assert not analyze(queries["same_sensor"]).unary
    assert analyze(queries["fire"]).unary


def test_formula_size(queries):
    assert F.formula_size(T_x) == 1
    assert F.formula_size(F.Seq(T_x, H_y)) == 3
    assert F.formula_size(queries["fire"]) == 8


def test_select_keeps_bound_vars(queries):
    f = queries["fire"]
    assert analyze(F.Select("NXT", f)).bound == analyze(f).bound


def naive_vdef_plus(f):
    """Definitions that no ``+`` encloses."""
    out = set()

    def go(g, under):
        if isinstance(g, F.Assign) and not under:
            out.add(g.var)
        for c in F.children(g):
            go(c, under or isinstance(g, F.Plus))

    go(f, False)
    return out


def naive_well_formed(f):
    """Each filtered variable is bound by the filter itself or one of its ancestors."""
    nodes = dict(post_order(f))
    for path, g in nodes.items():
        if not isinstance(g, F.Filter):
            continue
        for x in P.pred_vars(g.pred):
            if not any(x in bound_vars(nodes[path[:k]]) for k in range(len(path) + 1)):
                return False
    return True


def naive_safe(f):
    return all(
        not (naive_vdef_plus(g.lhs) & naive_vdef_plus(g.rhs)) for g in F.walk(f) if isinstance(g, F.Seq)
    )


@settings(max_examples=300, deadline=None)
@given(instances)
def test_analysis_agrees_with_naive_recomputation(inst):
    f, _ = inst
    assert vdef_plus(f) == naive_vdef_plus(f)
    assert bound_vars(f) <= vdef(f)
    assert vdef_plus(f) <= vdef(f)
    assert is_well_formed(f) == naive_well_formed(f)
    assert is_safe(f) == naive_safe(f)
    # a filter on an undefined variable breaks well-formedness
    g = F.Filter(f, P.Compare(P.AttrRef("unbound", "a"), "=", 1))
    assert not is_well_formed(g) and not naive_well_formed(g)


@settings(max_examples=300, deadline=None)
@given(instances)
def test_parse_pretty_round_trip(inst):
    f, _ = inst
    assert parse_formula(F.pretty(f)) == f
    for s in F.STRATEGIES:
        g = F.Select(s, f)
        assert parse_formula(F.pretty(g)) == g

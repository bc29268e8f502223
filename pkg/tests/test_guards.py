import pytest
from hypothesis import given, settings

from hlunfold import guards as G
from hlunfold.guards import EvalError, ParseError

from strategies import assignments, formulas, terms

D = G.FiniteRange(-2, 3)


def ev(e, a):
    return G.evaluate(e, a, D)


@given(formulas)
def test_show_parse_roundtrip(f):
    assert G.parse(G.show(f)) == f


@settings(max_examples=200)
@given(formulas, assignments)
def test_simplify_preserves_truth(f, a):
    assert ev(G.simplify(f), a) == ev(f, a)


@given(terms, assignments)
def test_substitute_constants_is_evaluation(t, a):
    s = G.substitute(t, {k: G.Const(v) for k, v in a.items()})
    assert not G.free_vars(s)
    assert G.evaluate(s, {}) == G.evaluate(t, a)


@given(formulas, assignments)
def test_rename_round_trip_preserves_meaning(f, a):
    m = {"x": "x'1", "y": "y'1"}
    back = {v: k for k, v in m.items()}
    # bound variables may be renamed apart, so compare truth values
    assert ev(G.rename(G.rename(f, m), back), a) == ev(f, a)


def test_substitute_avoids_capture():
    e = G.exists(["y"], G.eq("x", G.add("y", 1)))
    s = G.substitute(e, {"x": G.Var("y")})
    assert G.free_vars(s) == {"y"}
    assert G.evaluate(s, {"y": 2}, D) and not G.evaluate(s, {"y": -2}, D)


def test_parse_examples():
    e = G.parse("(and (= y (* 3 x)) (> x 0))")
    assert G.free_vars(e) == {"x", "y"}
    assert G.evaluate(e, {"x": 1, "y": 3})
    assert not G.evaluate(e, {"x": 0, "y": 0})
    assert G.parse("(!= x 1)") == G.ne("x", 1)
    assert G.parse("(- x)") == G.sub(0, "x")


@pytest.mark.parametrize("bad", ["", "(", "(and x)", "(foo 1 2)", "(= 1)", "(proj x y)", "x y", ")"])
def test_parse_errors(bad):
    with pytest.raises(ParseError):
        G.parse(bad)


def test_exists_needs_finite_domain():
    e = G.exists(["y"], G.eq("x", G.add("y", 1)))
    assert G.evaluate(e, {"x": 3}, D)
    assert not G.evaluate(e, {"x": -2}, D)
    with pytest.raises(EvalError):
        G.evaluate(e, {"x": 3}, G.Naturals())


def test_simplify_drops_unused_quantifier():
    e = G.exists(["y", "z"], G.and_(G.eq("x", "y"), G.TRUE))
    s = G.simplify(e)
    assert isinstance(s, G.Exists) and s.vars == ("y",)
    assert G.simplify(G.exists(["y"], G.eq("x", 1))) == G.eq("x", 1)
    assert G.simplify(G.and_(G.eq("x", 1), G.FALSE)) == G.FALSE


def test_tuple_lowering_matches_evaluation():
    dom = G.TupleOf((G.FiniteRange(0, 2), G.FiniteRange(0, 2)))
    e = G.and_(G.eq(G.proj("x", 0), G.add(G.proj("y", 1), 1)), G.ne("x", "y"))
    low = G.lower_tuples(e, 2)
    for x in G.domain_values(dom):
        for y in G.domain_values(dom):
            a = {"x": x, "y": y}
            assert G.evaluate(low, G.lower_assignment(a, 2)) == G.evaluate(e, a)


def test_domains():
    assert G.domain_values(G.FiniteRange(1, 3)) == [1, 2, 3]
    assert G.in_domain(0, G.Naturals()) and not G.in_domain(-1, G.Naturals())
    assert G.in_domain((1, 0), G.TupleOf((G.Naturals(), G.FiniteRange(0, 1))))
    assert not G.in_domain(True, G.Integers())
    assert G.is_finite(G.TupleOf((G.FiniteRange(0, 1),))) and not G.is_finite(G.Integers())
    with pytest.raises(ValueError):
        G.FiniteRange(2, 1)

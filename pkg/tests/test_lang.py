import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mapkit.compose import compose_sotgds, skolemize, to_plain
from mapkit.core import SemanticError, const, null
from mapkit.generate import random_mapping
from mapkit.invert import maximum_recovery
from mapkit.lang import (
    Eq,
    Func,
    Rel,
    ParseError,
    parse_instance,
    parse_mapping,
    parse_query,
    print_instance,
    print_mapping,
    print_query,
    validate,
)
from mapkit.lang.syntax import SOClause, SOtgd, Var
from mapkit.lang.validate import check_language

from conftest import FIXTURES, load_map
from strategies import instances

HEAD = "schema S { S/2, } schema T { T/1, }\n"
BACK = "schema T { T/1, } schema S { S/2, }\n"


def test_st_tgd_parses():
    m = parse_mapping(HEAD + "map M : S -> T { S(x,y) -> T(x); }")
    (d,) = m.body
    assert d.is_st_tgd
    assert d.class_tag == ("CQ", "CQ")
    assert d.frontier == ("x",)


def test_guarded_ts_dependency_parses():
    m = parse_mapping(BACK + "map M : T -> S [ts] { T(x) & C(x) -> exists y . S(x,y); }")
    (d,) = m.body
    assert d.direction == "ts"
    assert d.class_tag == ("CQ^C", "CQ")
    assert d.conclusion.disjuncts[0].exists == ("y",)


def test_syntax_error_has_location():
    with pytest.raises(ParseError) as err:
        parse_mapping(HEAD + "map M : S -> T { S(x y) -> T(x); }")
    assert (err.value.line, err.value.col) == (2, 22)


@pytest.mark.parametrize(
    "body, symbol",
    [
        ("S(x,y) -> X(x);", "X"),
        ("S(x) -> T(x);", "S"),
        ("S(x,y) -> T(z);", "z"),
    ],
)
def test_semantic_errors_name_symbol(body, symbol):
    with pytest.raises(SemanticError) as err:
        parse_mapping(HEAD + f"map M : S -> T {{ {body} }}")
    assert err.value.symbol == symbol


def test_zero_arity_rejected():
    with pytest.raises(ParseError):
        parse_mapping("schema S { S/0, } schema T { T/1, } map M : S -> T { }")


@pytest.mark.parametrize("path", sorted(p.name for p in FIXTURES.glob("*.map")))
def test_fixture_round_trip(path):
    m = load_map(path[:-4])
    assert parse_mapping(print_mapping(m)) == m
    assert validate(m) == []


def test_sotgd_prints_function_quantifier():
    text = print_mapping(load_map("takes13_expected"))
    assert "functions g/1\n" in text
    assert "Takes(n, c) -> Enrollment(g(n), c);" in text


def test_empty_body_prints_empty_block():
    m = parse_mapping(HEAD + "map M : S -> T { }")
    assert m.body == ()
    assert print_mapping(m).endswith("map M : S -> T {\n}\n")
    assert parse_mapping(print_mapping(m)) == m


@given(st.integers(0, 100_000))
@settings(max_examples=80, deadline=None)
def test_generated_specs_round_trip(seed):
    m = random_mapping(random.Random(seed))
    for spec in (m, skolemize(m), maximum_recovery(m)):
        assert parse_mapping(print_mapping(spec)) == spec


@given(st.integers(0, 100_000))
@settings(max_examples=30, deadline=None)
def test_composed_specs_round_trip(seed):
    m12 = random_mapping(random.Random(seed))
    m23 = parse_mapping(
        "schema T { T/2, U/1, } schema V { V/2, W/1, } map N : T -> V { T(x, y) -> V(x, y); U(x) -> exists z . V(x, z) & W(z); }"
    )
    composed = compose_sotgds(m12, m23)
    assert parse_mapping(print_mapping(composed)) == composed
    plain = to_plain(composed)
    assert parse_mapping(print_mapping(plain)) == plain


def test_instance_round_trip():
    schema = load_map("takes12").source
    text = 'instance I over R1 { Takes(Chris, logic). Takes("Ann Lee", 7). Takes(?x, logic). }'
    i = parse_instance(text, schema)
    assert null("x") in {a for f in i for a in f.args}
    assert const("Ann Lee") in {a for f in i for a in f.args}
    assert parse_instance(print_instance(i), schema) == i


@given(instances(load_map("swap").source))
def test_generated_instances_round_trip(i):
    assert parse_instance(print_instance(i), i.schema) == i


def test_query_round_trip():
    q = parse_query("query q(x): exists y . S(x, y) & x = 1 | S(x, x);")
    assert q.free == ("x",)
    assert len(q.disjuncts) == 2
    assert parse_query(print_query(q)) == q


def test_query_free_variable_must_occur_in_every_disjunct():
    from mapkit.core import Schema

    with pytest.raises(SemanticError):
        parse_query("query q(x): S(x, x) | S(y, y);", Schema.of("S", S=2))


def _sotgd_spec(clauses, functions):
    base = load_map("nested")
    return base.__class__(base.source, base.target, SOtgd(functions, clauses), name="N")


def test_condition_4_violation():
    x, z = Var("x"), Var("z")
    clause = SOClause((Rel("S", (x,)), Eq(z, x)), (Rel("T", (x, z)),))
    problems = validate(_sotgd_spec((clause,), ()))
    assert "condition 4" in [p.rule for p in problems]
    assert any(p.symbol == "z" for p in problems if p.rule == "condition 4")


def test_plain_flag_rejects_nesting():
    spec = load_map("nested")
    assert validate(spec) == []
    assert [p.rule for p in validate(spec, plain=True)] == ["plain: no nesting"]
    assert not spec.body.is_plain


def test_well_formed_tgds_have_no_violations():
    assert validate(load_map("efm")) == []


def test_plain_flag_rejects_equality():
    spec = load_map("emp_with_equality")
    assert not spec.body.is_plain
    assert [p.rule for p in validate(spec, plain=True)] == ["plain: no equality"]
    assert load_map("emp_plain").body.is_plain


def _terms(depth):
    x = st.just(Var("x"))
    if depth == 0:
        return x
    inner = _terms(depth - 1)
    return st.one_of(x, st.sampled_from("fg").flatmap(lambda f: inner.map(lambda t: Func(f, (t,)))))


@st.composite
def sotgds(draw):
    clauses = []
    for _ in range(draw(st.integers(1, 3))):
        premise = [Rel("S", (Var("x"),))]
        if draw(st.booleans()):
            premise.append(Eq(Var("x"), draw(_terms(2))))
        clauses.append(SOClause(tuple(premise), (Rel("T", (Var("x"), draw(_terms(3)))),)))
    return SOtgd((("f", 1), ("g", 1)), tuple(clauses))


def _depth(t):
    return 1 + max(map(_depth, t.args)) if isinstance(t, Func) else 0


@given(sotgds())
@settings(max_examples=100, deadline=None)
def test_plain_flag_matches_definition(sigma):
    has_eq = any(isinstance(a, Eq) for c in sigma.clauses for a in c.premise)
    deep = any(_depth(t) > 1 for c in sigma.clauses for a in c.premise + c.conclusion for t in getattr(a, "args", ()))
    deep = deep or any(_depth(a.right) > 1 for c in sigma.clauses for a in c.premise if isinstance(a, Eq))
    assert sigma.is_plain == (not has_eq and not deep)
    spec = _sotgd_spec(sigma.clauses, sigma.functions)
    assert parse_mapping(print_mapping(spec)) == spec
    plain = to_plain(spec)
    assert plain.body.is_plain
    assert validate(plain, plain=True) == []


def test_output_language_check():
    rec = maximum_recovery(load_map("efm"))
    assert check_language(rec, {"C"}, {"="}, union=True) == []
    assert check_language(rec, set(), set(), union=False) != []


def test_sotgd_one_line_rendering_quantifies_functions():
    from mapkit.lang.printer import print_sotgd

    sigma = load_map("takes13_expected").body
    assert print_sotgd(sigma) == "exists g/1 . (Takes(n, c) -> Enrollment(g(n), c))"

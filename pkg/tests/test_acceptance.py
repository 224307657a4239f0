"""End-to-end acceptance checks, one test per criterion.

Each test records a pass/fail line; the lines are printed in the terminal
summary (see conftest.py).
"""
import functools
import time
import warnings

import numpy as np
import pytest

from mapkit.cli import main
from mapkit.compose import IncompleteSearch, compose_sotgds, composition_member, to_plain
from mapkit.core import Fact, Instance, const
from mapkit.evaluation import certain_answers_many, eval_query
from mapkit.generate import corpus
from mapkit.invert import maximum_recovery, rewrite_over_source
from mapkit.lang import parse_mapping, parse_query, print_mapping
from mapkit.lang.validate import check_language
from mapkit.oracle import (
    FAIL,
    PASS,
    Composition,
    Empty,
    Extended,
    Full,
    Hom,
    InstancePool,
    Pools,
    Standard,
    Transposed,
    check_fagin_inverse,
    check_max_extended_recovery,
    check_max_recovery,
    check_quasi_inverse,
    check_recovery,
    compose_relations,
    cq_equivalent,
    extended_pair,
    materialize,
    pair_table,
    relations_equal,
)
from mapkit.oracle.tables import middle_pool, raw_composition_member

from conftest import FIXTURES, fixture_path, load_map

RESULTS: dict[int, tuple[str, bool, float, str]] = {}


def criterion(number: int, title: str, limit: float = None):
    """Time the test, record its outcome and enforce the time limit."""

    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            start = time.perf_counter()
            try:
                note = fn(*args, **kwargs)
            except BaseException as err:
                RESULTS[number] = (title, False, time.perf_counter() - start, type(err).__name__)
                raise
            took = time.perf_counter() - start
            ok = limit is None or took < limit
            RESULTS[number] = (title, ok, took, (note or "") + ("" if ok else f"; over the {limit:.0f}s limit"))
            assert ok, f"took {took:.1f}s, limit {limit}s"

        return wrapper

    return deco


ST_FIXTURES = ["copy", "projection", "invent", "uv", "swap", "join", "path", "efm", "takes12", "emp12", "emp23", "takes23"]
CANDIDATES = {
    "copy": ["copy_inverse"],
    "projection": ["projection_quasi"],
    "uv": ["uv_inverse_u", "uv_inverse_v"],
    "efm": ["efm_recovery"],
    "path": ["path_inverse"],
}


def candidates(name):
    """Reverse mappings to try against a fixture: hand-written ones and the computed one."""
    m = load_map(name)
    out = [(c, load_map(c)) for c in CANDIDATES.get(name, [])]
    out.append(("maximum_recovery", maximum_recovery(m)))
    return out


# -- 1 ------------------------------------------------------------------------------

@criterion(1, "composition of the course fixtures agrees pairwise with the expected SO-tgd", 60)
def test_acceptance_1_composition(tmp_path, capsys):
    out = tmp_path / "takes13.map"
    assert main(["compose", fixture_path("takes12.map"), fixture_path("takes23.map"), "-o", str(out)]) == 0
    composed = parse_mapping(out.read_text())
    expected = load_map("takes13_expected")
    m12, m23 = load_map("takes12"), load_map("takes23")
    total = bad = 0
    # ground source pool, target pool of 2 constants and 2 nulls: every pair
    pools = Pools(InstancePool.make(composed.source, 2), InstancePool.make(composed.target, 2, 2))
    middle = InstancePool.make(m12.target, 2, 2)
    a, b = Standard(composed, pools), Standard(expected, pools)
    # independent route: the relational composition over a middle pool
    c = Composition(Standard(m12, Pools(pools.source, middle)), Standard(m23, Pools(middle, pools.target)))
    for I in pools.source.members():
        ta, tb, tc = pair_table(a, I), pair_table(b, I), pair_table(c, I)
        total += len(ta)
        bad += int(np.count_nonzero(ta != tb)) + int(np.count_nonzero(ta != tc))
    # sources that also hold a null
    pools = Pools(InstancePool.make(composed.source, 2, 1), InstancePool.make(composed.target, 2, 2))
    a, b = Standard(composed, pools), Standard(expected, pools)
    for I in pools.source.members():
        ta, tb = pair_table(a, I), pair_table(b, I)
        total += len(ta)
        bad += int(np.count_nonzero(ta != tb))
    assert bad == 0, f"{bad} discrepancies"
    return f"{total} pairs, 0 discrepancies"


# -- 2 ------------------------------------------------------------------------------

@criterion(2, "Emp/Mgr composition equals the equality form; plain form is CQ-equivalent", 120)
def test_acceptance_2_equality_elimination():
    composed = compose_sotgds(load_map("emp12"), load_map("emp23"))
    with_eq = load_map("emp_with_equality")
    pools = Pools.for_mapping(composed, 2, 2, 1, others=[with_eq])
    assert relations_equal(Standard(composed, pools), Standard(with_eq, pools)) is None
    plain = to_plain(composed)
    assert plain.body.is_plain
    assert parse_mapping(print_mapping(plain)) == plain
    v = cq_equivalent(with_eq, plain, query_budget=3, constants=2)
    assert v.status == PASS, v
    # the equality form is not oracle-equal to its plain form
    assert relations_equal(Standard(with_eq, pools), Standard(plain, pools)) is not None
    return v.detail


# -- 3 ------------------------------------------------------------------------------

@criterion(3, "Fagin-inverse and quasi-inverse verdicts on the U/V and projection fixtures", 30)
def test_acceptance_3_fagin_inverse():
    for inverse in ("uv_inverse_u", "uv_inverse_v"):
        v = check_fagin_inverse(load_map("uv"), load_map(inverse))
        assert v.status == PASS and v.exact
    m, q = load_map("projection"), load_map("projection_quasi")
    v = check_fagin_inverse(m, q)
    assert v.status == FAIL and v.exact
    I1, I2 = v.counterexample
    # confirm the pair independently: it is in M . M' and outside Id-bar
    assert not I1.facts <= I2.facts
    assert composition_member(m, q, I1, I2) is not None
    assert check_quasi_inverse(m, q).status == PASS
    return f"counterexample {sorted(map(repr, I1.facts))} / {sorted(map(repr, I2.facts))}"


# -- 4 ------------------------------------------------------------------------------

@criterion(4, "E/F/M fixture: given and computed reverse mappings are maximum recoveries", 120)
def test_acceptance_4_maximum_recovery():
    m = load_map("efm")
    for rec in (load_map("efm_recovery"), maximum_recovery(m)):
        assert check_recovery(m, rec).status == PASS
        assert check_max_recovery(m, rec).status == PASS


# -- 5 ------------------------------------------------------------------------------

SEED = 2026
CORPUS_SIZE = 60


@criterion(5, "random corpus: computed maximum recoveries are in the target language and pass both checks")
def test_acceptance_5_corpus():
    n = 0
    for m in corpus(SEED, CORPUS_SIZE):
        rec = maximum_recovery(m)
        assert check_language(rec, {"C"}, {"="}, union=True) == [], print_mapping(rec)
        assert parse_mapping(print_mapping(rec)) == rec
        assert check_recovery(m, rec).status == PASS, print_mapping(m)
        assert check_max_recovery(m, rec).status == PASS, print_mapping(m)
        n += 1
    return f"{n}/{CORPUS_SIZE} mappings pass"


# -- 6 ------------------------------------------------------------------------------

EXTRA_QUERIES = [
    "query q(x): exists y . T(x, y) & T(y, x);",
    "query q(x, y): T(x, y) & U(y);",
    "query q(): exists x . T(x, x);",
]


def all_ground_sources(schema, constants=3):
    values = [const(str(i + 1)) for i in range(constants)]
    pool = InstancePool(schema, tuple(values), 0)
    for code in pool.members():
        yield Instance(schema, code)


@criterion(6, "rewritings over the source give exactly the certain answers on every ground instance")
def test_acceptance_6_rewriting():
    sources = None
    checks = 0
    for m in corpus(SEED, CORPUS_SIZE):
        queries = [d.conclusion for d in m.body] + [parse_query(q, m.target) for q in EXTRA_QUERIES]
        rewritten = [rewrite_over_source(m, q).rewritten for q in queries]
        if sources is None:
            sources = list(all_ground_sources(m.source))
        for I in sources:
            certain = certain_answers_many(m, queries, I)
            for r, c in zip(rewritten, certain):
                checks += 1
                assert eval_query(r, I) == c, (print_mapping(m), r, I)
    return f"{checks} query/instance checks over {len(sources)} instances, 0 mismatches"


# -- 7 ------------------------------------------------------------------------------

IMPLICATION_POOLS = [(1, 1), (2, 1), (2, 2)]


@criterion(7, "Fagin-inverse implies maximum recovery implies quasi-inverse on every fixture and pool")
def test_acceptance_7_orderings():
    cases = 0
    for name in ST_FIXTURES:
        m = load_map(name)
        for constants, nulls in IMPLICATION_POOLS:
            pairs = []
            for _, c in candidates(name):
                pools = Pools.for_mapping(m, constants, nulls, others=[c])
                pairs.append((Standard(m, pools), Standard(c, Pools(pools.target, pools.source))))
            pools = Pools.for_mapping(m, constants, nulls)
            for c in (Full(pools.target, pools.source), Empty(pools.target, pools.source)):
                pairs.append((Standard(m, pools), c))
            for rel, c in pairs:
                fagin = check_fagin_inverse(rel, c).status == PASS
                maxrec = check_max_recovery(rel, c).status == PASS
                quasi = check_quasi_inverse(rel, c).status == PASS
                assert not fagin or maxrec, (name, constants, nulls, c.name)
                assert not maxrec or quasi, (name, constants, nulls, c.name)
                cases += 1
    return f"{cases} mapping/candidate/pool cases, no violated implication"


# -- 8 ------------------------------------------------------------------------------

# path needs more nulls than the default pool has for its universal solutions
UNIVERSAL_FIXTURES = [n for n in ST_FIXTURES if n != "path"]


@criterion(8, "the transposed universal-solution relation is a maximum recovery of it")
def test_acceptance_8_universal_inverse():
    assert len(UNIVERSAL_FIXTURES) >= 10
    for name in UNIVERSAL_FIXTURES:
        m = load_map(name).with_semantics("universal")
        u = materialize(m, Pools.for_mapping(m))
        v = check_max_recovery(u, Transposed(u))
        assert v.status == PASS, (name, v)
    return f"{len(UNIVERSAL_FIXTURES)} fixtures pass"


# -- 9 ------------------------------------------------------------------------------

# the course fixtures have wide target schemas; a one-constant pool keeps them quick
EXTENDED_POOLS = {"takes12": (1, 2), "takes23": (1, 2)}
ALL_FIXTURES = sorted(p.stem for p in FIXTURES.glob("*.map"))


@criterion(9, "extended-semantics check equals the maximum-recovery check on e(M), e(M'); e is idempotent")
def test_acceptance_9_extended():
    pairs = 0
    for name in ST_FIXTURES:
        m = load_map(name)
        constants, nulls = EXTENDED_POOLS.get(name, (2, 2))
        for _, c in candidates(name):
            direct = check_max_extended_recovery(m, c, constants=constants, nulls=nulls)
            reduced = check_max_recovery(*extended_pair(m, c, constants=constants, nulls=nulls))
            assert (direct.status, direct.counterexample) == (reduced.status, reduced.counterexample), (name, c.name)
            pairs += 1
    # a candidate that needs room for every chase null in the target pool
    path, path_inverse = load_map("path"), load_map("path_inverse")
    direct = check_max_extended_recovery(path, path_inverse, constants=1, nulls=3)
    reduced = check_max_recovery(*extended_pair(path, path_inverse, constants=1, nulls=3))
    assert direct.status == reduced.status == PASS
    pairs += 1
    for name in ALL_FIXTURES:
        m = load_map(name)
        pools = Pools.for_mapping(m, 1, 2, 1)
        e = Extended(m, pools)
        assert relations_equal(compose_relations(Hom(pools.source), e, Hom(pools.target)), e) is None, name
    return f"{pairs} pairs agree; e-idempotence on {len(ALL_FIXTURES)} fixtures"


# -- 10 -----------------------------------------------------------------------------

CHAINS = [
    ("takes12", "takes23"),
    ("emp12", "emp23"),
    ("copy", "copy_inverse"),
    ("projection", "projection_quasi"),
    ("uv", "uv_inverse_u"),
    ("uv", "uv_inverse_v"),
    ("efm", "efm_recovery"),
    ("path", "path_inverse"),
    ("copy_inverse", "copy"),
    ("projection_quasi", "projection"),
    ("uv_inverse_u", "uv"),
    ("efm_recovery", "efm"),
    ("path_inverse", "path"),
] + [(name, None) for name in ST_FIXTURES]


@criterion(10, "composition membership agrees with raw enumeration of middle instances")
def test_acceptance_10_membership():
    checked = 0
    for first, second in CHAINS:
        m12 = load_map(first)
        m23 = load_map(second) if second else maximum_recovery(m12)
        consts = tuple(sorted({const("1")} | set(m12.constants()) | set(m23.constants())))
        src = InstancePool(m12.source, consts, 0)
        tgt = InstancePool(m23.target, consts, 1)
        for middle_nulls in (1, 2):
            middle = middle_pool(m12, consts, middle_nulls)
            for I1 in src.members():
                for I3 in tgt.members():
                    a, b = src.instance(I1), tgt.instance(I3)
                    raw = raw_composition_member(m12, m23, a, b, middle) is not None
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore", IncompleteSearch)
                        found = composition_member(m12, m23, a, b) is not None
                    assert raw == found, (first, second, a, b)
                    checked += 1
    return f"{checked} instance pairs over {len(CHAINS)} chains agree"

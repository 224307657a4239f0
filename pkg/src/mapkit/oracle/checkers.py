"""Checkers for the inverse notions and for equivalence, restricted to pools.

Every checker returns a Verdict. Counterexamples are the least failing pair
in pool enumeration order, so verdicts are deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..chase import canonical_solution
from ..core import Instance, SchemaMismatch, SemanticError, Value
from ..lang.syntax import MappingSpec
from .pools import Facts, InstancePool, Pools
from .queries import CQ, assignments, constant_rows, cq_bodies, free_subsets, project
from .relations import (
    Composition,
    Extended,
    Hom,
    IdBar,
    MappingRelation,
    Standard,
    compose_relations,
    extended_sol_subseteq,
    materialize,
    upset_covers,
)

PASS = "pass"
FAIL = "fail"
INAPPLICABLE = "inapplicable"


@dataclass
class Verdict:
    property: str
    status: str
    counterexample: Optional[tuple[Instance, Instance]] = None
    detail: str = ""
    exact: bool = True
    query: Optional[CQ] = None
    answer: Optional[tuple[Value, ...]] = None
    stats: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.status == PASS

    @property
    def passed(self) -> bool:
        return self.status == PASS


Relational = Union[MappingSpec, MappingRelation]


def _pair(left: MappingRelation, I: Facts, right_pool: InstancePool, J: Facts) -> tuple[Instance, Instance]:
    return left.source.instance(I), right_pool.instance(J)


def build_pair(
    m: Relational, m2: Relational, constants: int = 2, nulls: int = 2, source_nulls: int = 0
) -> tuple[MappingRelation, MappingRelation]:
    """Relations for a mapping and a candidate reverse mapping over matching pools."""
    if isinstance(m, MappingRelation):
        if not isinstance(m2, MappingRelation):
            m2 = materialize(m2, Pools(m.target, m.source))
        return m, m2
    if isinstance(m2, MappingSpec):
        if not (m2.source.same_relations(m.target) and m2.target.same_relations(m.source)):
            raise SchemaMismatch(f"{m2.name} does not go from the target of {m.name} back to its source")
        pools = Pools.for_mapping(m, constants, nulls, source_nulls, others=[m2])
        return materialize(m, pools), materialize(m2, Pools(pools.target, pools.source))
    pools = Pools.for_mapping(m, constants, nulls, source_nulls)
    return materialize(m, pools), m2


def _recovery_failure(a: MappingRelation, comp: MappingRelation) -> Optional[Facts]:
    for I in a.source.members():
        if a.in_domain(I) and not comp.contains(I, I):
            return I
    return None


def check_recovery(m: Relational, m2: Relational, **pool_args) -> Verdict:
    """(I, I) is in M . M' for every pool instance I that has a solution."""
    a, b = build_pair(m, m2, **pool_args)
    comp = Composition(a, b)
    bad = _recovery_failure(a, comp)
    if bad is not None:
        return Verdict(
            "recovery", FAIL, _pair(a, bad, a.source, bad), f"(I, I) is not in {a.name}.{b.name}"
        )
    return Verdict("recovery", PASS, detail=f"{len(a.source)} source instances")


def _composite_candidates(a: MappingRelation, comp: MappingRelation, I1: Facts) -> tuple[Facts, ...]:
    # containment only weakens for larger I2 when a is antitone, so minimal I2 suffice
    if comp.right_upclosed and a.left_antitone:
        return tuple(sorted(comp.minimal_image(I1), key=a.source.mask))
    return comp.image(I1)


def check_max_recovery(m: Relational, m2: Relational, **pool_args) -> Verdict:
    """Maximum recovery via the characterization for total mappings: M' is a
    recovery, and Sol(I2) is contained in Sol(I1) for all (I1, I2) in M . M'."""
    a, b = build_pair(m, m2, **pool_args)
    for I in a.source.members():
        if not a.in_domain(I):
            return Verdict(
                "max-recovery",
                INAPPLICABLE,
                (a.source.instance(I), a.target.instance(frozenset())),
                f"{a.name} is not total on the pool: this source has no solution",
            )
    comp = Composition(a, b)
    bad = _recovery_failure(a, comp)
    if bad is not None:
        return Verdict(
            "max-recovery", FAIL, _pair(a, bad, a.source, bad), f"not a recovery: (I, I) is not in {comp.name}"
        )
    checked = 0
    for I1 in a.source.members():
        for I2 in _composite_candidates(a, comp, I1):
            checked += 1
            if not a.sol_subseteq(I2, I1):
                return Verdict(
                    "max-recovery",
                    FAIL,
                    _pair(a, I1, a.source, I2),
                    "(I1, I2) is in M . M' but Sol(I2) is not contained in Sol(I1)",
                    exact=a.exact_containment,
                )
    return Verdict(
        "max-recovery", PASS, detail=f"{checked} composite pairs checked", exact=a.exact_containment,
        stats={"pairs": checked},
    )


def check_fagin_inverse(m: Relational, m2: Relational, **pool_args) -> Verdict:
    """M . M' equals Id-bar on the pool."""
    a, b = build_pair(m, m2, **pool_args)
    comp = Composition(a, b)
    idb = IdBar(a.source)
    for I in a.source.members():
        if comp.right_upclosed:
            mins = comp.minimal_image(I)
            if mins == (I,):
                continue
            extra = [K for K in mins if not I <= K]
            if not upset_covers(mins, I):
                extra.append(I)
            K = min(extra, key=a.source.mask)
        else:
            diff = set(comp.image(I)) ^ set(idb.image(I))
            if not diff:
                continue
            K = min(diff, key=a.source.mask)
        where = "in M . M' but not in Id-bar" if comp.contains(I, K) else "in Id-bar but not in M . M'"
        return Verdict("fagin-inverse", FAIL, _pair(a, I, a.source, K), f"pair is {where}")
    return Verdict("fagin-inverse", PASS, detail=f"{len(a.source)} source instances")


def equivalence_classes(a: MappingRelation) -> list[list[Facts]]:
    """Classes of data-exchange equivalent pool instances (exact for st-tgds)."""
    classes: list[list[Facts]] = []
    for I in a.source.members():
        for cls in classes:
            rep = cls[0]
            if a.sol_subseteq(I, rep) and a.sol_subseteq(rep, I):
                cls.append(I)
                break
        else:
            classes.append([I])
    return classes


def check_quasi_inverse(m: Relational, m2: Relational, **pool_args) -> Verdict:
    """(M . M')[~, ~] equals Id-bar[~, ~] on the pool, ~ being data-exchange equivalence."""
    a, b = build_pair(m, m2, **pool_args)
    comp = Composition(a, b)
    classes = equivalence_classes(a)
    members = list(a.source.members())
    cls_of = {I: k for k, c in enumerate(classes) for I in c}
    lhs, rhs = set(), set()
    for I1 in members:
        for I2 in members:
            key = (cls_of[I1], cls_of[I2])
            if key not in lhs and comp.contains(I1, I2):
                lhs.add(key)
            if key not in rhs and I1 <= I2:
                rhs.add(key)
    diff = lhs ^ rhs
    if diff:
        for I1 in members:
            for I2 in members:
                key = (cls_of[I1], cls_of[I2])
                if key in diff:
                    side = "M . M'" if key in lhs else "Id-bar"
                    return Verdict(
                        "quasi-inverse",
                        FAIL,
                        _pair(a, I1, a.source, I2),
                        f"the classes of this pair are related only by the saturated {side}",
                        exact=a.exact_containment,
                    )
    return Verdict(
        "quasi-inverse", PASS, detail=f"{len(classes)} equivalence classes", exact=a.exact_containment
    )


def check_max_extended_recovery(
    m: MappingSpec, m2: MappingSpec, constants: int = 2, nulls: int = 2, source_nulls: int = 1
) -> Verdict:
    """e(M') is a maximum recovery of e(M), checked directly.

    The composite is built as hom . M . hom . M' . hom, and solution
    containment under e(M) is a homomorphism between chases.
    """
    if not (m2.source.same_relations(m.target) and m2.target.same_relations(m.source)):
        raise SchemaMismatch(f"{m2.name} does not go from the target of {m.name} back to its source")
    if not m.is_st_tgds:
        raise SemanticError("the extended-semantics check needs an st-tgd mapping")
    pools = Pools.for_mapping(m, constants, nulls, source_nulls, others=[m2])
    sp, tp = pools.source, pools.target
    hs, ht = Hom(sp), Hom(tp)
    fwd = Standard(m.with_semantics("standard"), pools)
    back = Standard(m2.with_semantics("standard"), Pools(tp, sp))
    solutions = compose_relations(hs, fwd)
    chain = compose_relations(hs, fwd, ht, back, hs)
    for I in sp.members():
        if not solutions.in_domain(I):
            return Verdict(
                "max-extended-recovery", INAPPLICABLE, (sp.instance(I), tp.instance(frozenset())),
                "e(M) is not total on the pool",
            )
    for I in sp.members():
        if not chain.contains(I, I):
            return Verdict("max-extended-recovery", FAIL, (sp.instance(I), sp.instance(I)), "not a recovery")
    for I1 in sp.members():
        for I2 in sorted(chain.minimal_image(I1), key=sp.mask):
            if not extended_sol_subseteq(m, sp.instance(I2), sp.instance(I1)):
                return Verdict(
                    "max-extended-recovery",
                    FAIL,
                    (sp.instance(I1), sp.instance(I2)),
                    "(I1, I2) is in e(M) . e(M') but the chase of I1 does not map into the chase of I2",
                )
    return Verdict("max-extended-recovery", PASS, detail=f"{len(sp)} source instances with nulls")


def extended_pair(m: MappingSpec, m2: MappingSpec, constants: int = 2, nulls: int = 2, source_nulls: int = 1):
    """e(M) and e(M') as relations, for checking through check_max_recovery."""
    pools = Pools.for_mapping(m, constants, nulls, source_nulls, others=[m2])
    return Extended(m, pools), Extended(m2, Pools(pools.target, pools.source))


def check_cq_recovery(m: Relational, m2: Relational, query_budget: int = 3, **pool_args) -> Verdict:
    """Pool-restricted certain answers over M . M' are answers on the source itself."""
    a, b = build_pair(m, m2, **pool_args)
    if not a.source.is_ground:
        raise SemanticError("CQ-recovery is checked on ground source pools")
    comp = Composition(a, b)
    if not comp.right_upclosed:
        raise SemanticError("CQ-recovery needs a superset-closed composite")
    pool = a.source
    members = list(pool.members())
    bodies = cq_bodies(pool.schema, query_budget)
    checked = 0
    for body in bodies:
        rows: dict[Facts, set] = {}

        def rows_of(X: Facts):
            if X not in rows:
                rows[X] = assignments(body, pool.instance(X))
            return rows[X]

        for I in members:
            for free in free_subsets(body):
                checked += 1
                certain = _composite_certain(comp, rows_of, body, free, I)
                extra = certain - project(rows_of(I), body, free)
                if extra:
                    t = min(extra)
                    q = CQ(body, free)
                    return Verdict(
                        "cq-recovery",
                        FAIL,
                        (pool.instance(I), pool.instance(I)),
                        f"{t} is a pool-certain answer of {q} over M . M' but not an answer on I",
                        exact=False,
                        query=q,
                        answer=t,
                    )
    return Verdict("cq-recovery", PASS, detail=f"{checked} query/instance combinations", stats={"checks": checked})


def _all_tuples(values, k):
    import itertools

    return set(itertools.product(values, repeat=k))


def _composite_certain(comp: MappingRelation, rows_of, body, free, I: Facts) -> set:
    """Pool-certain answers of (body, free) over the images of I under comp."""
    mins = comp.minimal_image(I)
    if not mins:
        return _all_tuples(comp.target.constants, len(free))
    certain = None
    for X in mins:
        ans = project(rows_of(X), body, free)
        certain = ans if certain is None else certain & ans
        if not certain:
            break
    return certain


def compare_cq_recoveries(m: MappingSpec, m2: MappingSpec, m3: MappingSpec, query_budget: int = 3, **pool_args) -> Verdict:
    """Pool-certain answers over M . M' are contained in those over M . M'' for
    every CQ within the budget: M' recovers no more than M''. Maximality of a
    CQ-recovery is checked one competitor at a time with this."""
    a, b = build_pair(m, m2, **pool_args)
    c = materialize(m3, Pools(a.target, a.source))
    if not a.source.is_ground:
        raise SemanticError("CQ comparisons are checked on ground source pools")
    first, second = Composition(a, b), Composition(a, c)
    if not (first.right_upclosed and second.right_upclosed):
        raise SemanticError("CQ comparisons need superset-closed composites")
    pool = a.source
    checked = 0
    for body in cq_bodies(pool.schema, query_budget):
        rows: dict[Facts, set] = {}

        def rows_of(X: Facts):
            if X not in rows:
                rows[X] = assignments(body, pool.instance(X))
            return rows[X]

        for I in pool.members():
            for free in free_subsets(body):
                checked += 1
                extra = _composite_certain(first, rows_of, body, free, I) - _composite_certain(
                    second, rows_of, body, free, I
                )
                if extra:
                    t = min(extra)
                    q = CQ(body, free)
                    return Verdict(
                        "cq-compare",
                        FAIL,
                        (pool.instance(I), pool.instance(I)),
                        f"{t} is a pool-certain answer of {q} over M . {m2.name} but not over M . {m3.name}",
                        exact=False,
                        query=q,
                        answer=t,
                    )
    return Verdict("cq-compare", PASS, detail=f"{checked} query/instance combinations", exact=False,
                   stats={"checks": checked})


def _certain_table(spec: MappingSpec, rel: Optional[MappingRelation], I: Facts, pools: Pools, exact: bool):
    """Returns a function (body, free) -> certain answers of spec on I."""
    if exact:
        K = canonical_solution(spec, pools.source.instance(I))
        cache = {}

        def answers(body, free):
            if body not in cache:
                cache[body] = assignments(body, K)
            return constant_rows(project(cache[body], body, free))

        return answers
    mins = rel.minimal_image(I)
    target = rel.target
    cache = {}

    def answers(body, free):
        if not mins:
            return _all_tuples(target.constants, len(free))
        out = None
        for X in mins:
            key = (body, X)
            if key not in cache:
                cache[key] = assignments(body, target.instance(X))
            ans = constant_rows(project(cache[key], body, free))
            out = ans if out is None else out & ans
        return out

    return answers


def _has_canonical(spec: MappingSpec) -> bool:
    return spec.semantics == "standard" and (spec.is_sotgd or spec.is_st_tgds)


def cq_equivalent(
    m: MappingSpec, m2: MappingSpec, query_budget: int = 3, constants: int = 2, nulls: int = 2, exact: Optional[bool] = None
) -> Verdict:
    """Both mappings give the same certain answers to every CQ of at most
    ``query_budget`` atoms on every ground pool instance."""
    if not (m.source.same_relations(m2.source) and m.target.same_relations(m2.target)):
        raise SchemaMismatch(f"{m.name} and {m2.name} are over different schemas")
    if exact is None:
        exact = _has_canonical(m) and _has_canonical(m2)
    pools = Pools.for_mapping(m, constants, nulls, 0, others=[m2])
    ra = rb = None
    if not exact:
        ra, rb = materialize(m, pools), materialize(m2, pools)
    bodies = cq_bodies(pools.target.schema, query_budget)
    checked = 0
    for I in pools.source.members():
        ca = _certain_table(m, ra, I, pools, exact)
        cb = _certain_table(m2, rb, I, pools, exact)
        for body in bodies:
            for free in free_subsets(body):
                checked += 1
                x, y = ca(body, free), cb(body, free)
                if x != y:
                    t = min(x ^ y)
                    q = CQ(body, free)
                    who = m.name if t in x else m2.name
                    return Verdict(
                        "cq-equivalent",
                        FAIL,
                        (pools.source.instance(I), pools.source.instance(I)),
                        f"{t} is a certain answer of {q} only under {who}",
                        exact=exact,
                        query=q,
                        answer=t,
                    )
    return Verdict(
        "cq-equivalent", PASS, detail=f"{checked} query/instance combinations", exact=exact, stats={"checks": checked}
    )

"""Mappings restricted to finite pools, as lazily evaluated binary relations.

Pools are far too large to list pair by pair (two binary relations over four
values already give 2^32 instances), so a relation is described per source
instance. Most relations here are closed upwards on the right (a superset of
a solution is a solution); such an image is determined by the antichain of
its minimal members, and composition, membership and equality reduce to
antichain operations.
"""
from __future__ import annotations

import itertools
from functools import cached_property
from typing import Iterable, Iterator, Optional

import numpy as np

from ..chase import chase, sol_subseteq
from ..core import Fact, Instance, SchemaMismatch, SemanticError, Value, active_domain, find_homomorphism
from ..evaluation import FunctionSearch, _filter_holds, match
from ..lang.syntax import Const, Eq, MappingSpec, Query, Rel, Var
from .pools import Facts, InstancePool, Pools

MAX_UPSET_FACTS = 24
MAX_UNIVERSAL_FACTS = 28


def fact_key(s: Facts):
    return (len(s), sorted(s))


def minimize(sets: Iterable[Facts]) -> tuple[Facts, ...]:
    """The subset-minimal members of ``sets``, in canonical order."""
    sets = set(sets)
    if len(sets) <= 1:
        return tuple(sets)
    # subset tests on local bitmasks, smallest sets first
    index = {f: 1 << i for i, f in enumerate(set().union(*sets))}
    coded = sorted(((len(s), sum(index[f] for f in s), s) for s in sets), key=lambda t: (t[0], t[1]))
    kept: list[tuple[int, Facts]] = []
    for _, m, s in coded:
        if not any(o & m == o for o, _ in kept):
            kept.append((m, s))
    return tuple(sorted((s for _, s in kept), key=fact_key))


def upset_covers(antichain: Iterable[Facts], facts: Facts) -> bool:
    return any(m <= facts for m in antichain)


def upset_subseteq(small: Iterable[Facts], big: Iterable[Facts]) -> bool:
    """upset(small) is contained in upset(big)."""
    big = tuple(big)
    return all(upset_covers(big, s) for s in small)


# -- minimal solutions of one source instance ----------------------------------

def _conclusion_options(q: Query, env: dict, values: tuple[Value, ...]) -> list[Facts]:
    opts = []
    for d in q.disjuncts:
        eqs = [a for a in d.atoms if not isinstance(a, Rel)]
        rels = [a for a in d.atoms if isinstance(a, Rel)]
        for combo in itertools.product(values, repeat=len(d.exists)):
            local = dict(env)
            local.update(zip(d.exists, combo))
            if not all(_filter_holds(a, local) for a in eqs):
                continue
            opts.append(
                frozenset(
                    Fact(a.name, tuple(t.value if isinstance(t, Const) else local[t.name] for t in a.args))
                    for a in rels
                )
            )
    return list(minimize(opts))


def dependency_minimal(spec: MappingSpec, I: Instance, values: tuple[Value, ...]) -> tuple[Facts, ...]:
    """Minimal right-hand instances over ``values`` satisfying every dependency with I."""
    current: tuple[Facts, ...] = (frozenset(),)
    for d in spec.body:
        seen = set()
        for env in match(d.premise, I):
            key = tuple(env[v] for v in d.conclusion.free)
            if key in seen:
                continue
            seen.add(key)
            opts = _conclusion_options(d.conclusion, env, values)
            grown = []
            for c in current:
                if any(o <= c for o in opts):
                    grown.append(c)
                else:
                    grown.extend(c | o for o in opts)
            current = minimize(grown)
            if not current:
                return ()
    return current


def sotgd_minimal(spec: MappingSpec, I: Instance, values: tuple[Value, ...]) -> tuple[Facts, ...]:
    search = FunctionSearch(spec.body, I, set(active_domain(I)) | set(values), values)
    found: list[Facts] = []

    def accept(fact, required):
        return required | {fact}

    def prune(required):
        return any(f <= required for f in found)

    for _, required in search.search(accept, frozenset(), prune):
        found = [f for f in found if not required <= f]
        found.append(required)
    return minimize(found)


def minimal_solutions(spec: MappingSpec, I: Instance, values: Iterable[Value], null_budget: int = 0) -> list[Instance]:
    """Minimal solutions of I over ``values`` plus ``null_budget`` extra nulls."""
    from .pools import pool_nulls

    vals = tuple(sorted(set(values) | set(pool_nulls(null_budget))))
    sets = sotgd_minimal(spec, I, vals) if spec.is_sotgd else dependency_minimal(spec, I, vals)
    return [Instance(spec.target, s) for s in sets]


# -- relations ----------------------------------------------------------------

class MappingRelation:
    """A binary relation between the members of two instance pools."""

    right_upclosed = True
    left_antitone = True
    exact_containment = False

    def __init__(self, source: InstancePool, target: InstancePool, name: str = "R"):
        self.source = source
        self.target = target
        self.name = name
        self._min: dict[Facts, tuple[Facts, ...]] = {}
        self._img: dict[Facts, tuple[Facts, ...]] = {}

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name})"

    def _minimal(self, I: Facts) -> tuple[Facts, ...]:
        raise NotImplementedError

    def _image(self, I: Facts) -> tuple[Facts, ...]:
        return upset_members(self.target, self.minimal_image(I))

    def minimal_image(self, I: Facts) -> tuple[Facts, ...]:
        if not self.right_upclosed:
            raise SemanticError(f"{self!r} is not closed under supersets; use image()")
        if I not in self._min:
            self._min[I] = self._minimal(I)
        return self._min[I]

    def image(self, I: Facts) -> tuple[Facts, ...]:
        if I not in self._img:
            self._img[I] = self._image(I)
        return self._img[I]

    def contains(self, I: Facts, J: Facts) -> bool:
        if self.right_upclosed:
            return upset_covers(self.minimal_image(I), J)
        return J in self.image(I)

    def in_domain(self, I: Facts) -> bool:
        return bool(self.minimal_image(I) if self.right_upclosed else self.image(I))

    def sol_subseteq(self, I2: Facts, I1: Facts) -> bool:
        """Solutions of I2 are solutions of I1, restricted to the target pool."""
        if self.right_upclosed:
            return upset_subseteq(self.minimal_image(I2), self.minimal_image(I1))
        return set(self.image(I2)) <= set(self.image(I1))

    def pairs(self) -> Iterator[tuple[Facts, Facts]]:
        for I in self.source.members():
            for J in self.image(I):
                yield I, J


def upset_members(pool: InstancePool, antichain: tuple[Facts, ...]) -> tuple[Facts, ...]:
    """Every pool member containing some set of ``antichain``, in mask order."""
    n = len(pool.facts)
    if n > MAX_UPSET_FACTS:
        raise SemanticError(f"pool of {n} facts is too large to list supersets")
    if not antichain:
        return ()
    masks = np.arange(1 << n, dtype=np.int64)
    hit = np.zeros(1 << n, dtype=bool)
    for m in antichain:
        mm = pool.mask(m)
        hit |= (masks & mm) == mm
    return tuple(pool.facts_of(int(k)) for k in np.flatnonzero(hit))


class Standard(MappingRelation):
    """Pairs satisfying the mapping's dependencies or SO-tgd."""

    def __init__(self, spec: MappingSpec, pools: Pools):
        pools.source.check(spec.source)
        pools.target.check(spec.target)
        super().__init__(pools.source, pools.target, spec.name)
        self.spec = spec
        self.exact_containment = spec.is_st_tgds

    def instance(self, I: Facts) -> Instance:
        return Instance(self.spec.source, I)

    def _minimal(self, I: Facts) -> tuple[Facts, ...]:
        inst = self.instance(I)
        if self.spec.is_sotgd:
            found = sotgd_minimal(self.spec, inst, self.target.values)
        else:
            found = dependency_minimal(self.spec, inst, self.target.values)
        # values copied from I stay; mapping constants missing from the pool do not
        allowed = set(self.target.values) | {v for f in I for v in f.args}
        return tuple(J for J in found if all(v in allowed for f in J for v in f.args))

    def sol_subseteq(self, I2: Facts, I1: Facts) -> bool:
        if self.exact_containment:
            return sol_subseteq(self.spec, self.instance(I2), self.instance(I1))
        return super().sol_subseteq(I2, I1)


class Hom(MappingRelation):
    """I -> I' when some constant-fixing homomorphism maps I into I'."""

    def __init__(self, pool: InstancePool):
        super().__init__(pool, pool, "hom")

    def _minimal(self, I: Facts) -> tuple[Facts, ...]:
        nulls = sorted({v for f in I for v in f.args if v.is_null})
        images = []
        for combo in itertools.product(self.target.values, repeat=len(nulls)):
            h = dict(zip(nulls, combo))
            images.append(frozenset(Fact(f.rel, tuple(h.get(v, v) for v in f.args)) for f in I))
        return minimize(images)


class Composition(MappingRelation):
    def __init__(self, first: MappingRelation, second: MappingRelation):
        if first.target != second.source:
            raise SchemaMismatch(f"cannot compose {first!r} with {second!r}: middle pools differ")
        super().__init__(first.source, second.target, f"{first.name}.{second.name}")
        self.first = first
        self.second = second
        self.right_upclosed = second.right_upclosed
        self.left_antitone = first.left_antitone

    def _middles(self, I: Facts) -> tuple[Facts, ...]:
        # with a superset-closed first step and an antitone second step, minimal middles suffice
        if self.first.right_upclosed and self.second.left_antitone:
            return self.first.minimal_image(I)
        return self.first.image(I)

    def _minimal(self, I: Facts) -> tuple[Facts, ...]:
        out: list[Facts] = []
        for J in self._middles(I):
            out.extend(self.second.minimal_image(J))
        return minimize(out)

    def _image(self, I: Facts) -> tuple[Facts, ...]:
        if self.right_upclosed:
            return super()._image(I)
        out: dict[Facts, None] = {}
        for J in self._middles(I):
            for K in self.second.image(J):
                out.setdefault(K, None)
        return tuple(sorted(out, key=self.target.mask))

    def contains(self, I: Facts, K: Facts) -> bool:
        if self.right_upclosed:
            return super().contains(I, K)
        return any(self.second.contains(J, K) for J in self._middles(I))


def compose_relations(*rels: MappingRelation) -> MappingRelation:
    out = rels[0]
    for r in rels[1:]:
        out = Composition(out, r)
    return out


class Universal(MappingRelation):
    """u(M): pairs (I, J) where J is a universal solution for I."""

    right_upclosed = False
    left_antitone = False

    def __init__(self, spec: MappingSpec, pools: Pools):
        if not spec.is_st_tgds:
            raise SemanticError("universal semantics is implemented for st-tgd mappings")
        self.standard = Standard(spec.with_semantics("standard"), pools)
        super().__init__(pools.source, pools.target, f"u({spec.name})")
        self.spec = spec

    @cached_property
    def _schema(self):
        return self.spec.target

    @cached_property
    def _canonical(self) -> dict[Facts, Instance]:
        return {}

    def canonical(self, I: Facts) -> Instance:
        if I not in self._canonical:
            self._canonical[I] = chase(self.spec, Instance(self.spec.source, I), self.target.values).result
        return self._canonical[I]

    def _image(self, I: Facts) -> tuple[Facts, ...]:
        K = self.canonical(I)
        kf = K.index()
        # facts that map into K one by one; a universal solution uses only these
        candidates = [f for f in self.target.facts if _fact_maps_into(f, kf)]
        if len(candidates) > MAX_UNIVERSAL_FACTS:
            raise SemanticError(f"{len(candidates)} candidate facts for u({self.spec.name}); shrink the pool")
        # J maps into K iff J lies inside A_h = {f : h(f) in K} for some map h of
        # the pool's nulls into K; universal solutions are the subsets of some
        # A_h that contain a minimal solution
        bit = {f: 1 << i for i, f in enumerate(candidates)}
        kfacts = K.facts
        nulls = sorted({v for f in candidates for v in f.args if v.is_null})
        targets = sorted(active_domain(K)) or [None]
        allowed = set()
        for combo in itertools.product(targets, repeat=len(nulls)):
            h = dict(zip(nulls, combo))
            mask = 0
            for f in candidates:
                if Fact(f.rel, tuple(h.get(v, v) for v in f.args)) in kfacts:
                    mask |= bit[f]
            allowed.add(mask)
        mins = [sum(bit[f] for f in m) for m in self.standard.minimal_image(I) if all(f in bit for f in m)]
        found: set[int] = set()
        for a in allowed:
            for m in mins:
                if m & a != m:
                    continue
                free = a & ~m
                sub = free
                while True:
                    found.add(m | sub)
                    if sub == 0:
                        break
                    sub = (sub - 1) & free
        out = [frozenset(f for f in candidates if code & bit[f]) for code in found]
        return tuple(sorted(out, key=self.target.mask))

    def contains(self, I: Facts, J: Facts) -> bool:
        if not self.standard.contains(I, J):
            return False
        return find_homomorphism(Instance(self._schema, J), self.canonical(I)) is not None


def _fact_maps_into(f: Fact, index) -> bool:
    for row in index.get(f.rel, ()):
        h = {}
        ok = True
        for v, w in zip(f.args, row):
            if v.is_constant:
                ok = v == w
            elif h.setdefault(v, w) != w:
                ok = False
            if not ok:
                break
        if ok:
            return True
    return False


class Transposed(MappingRelation):
    right_upclosed = False
    left_antitone = False

    def __init__(self, rel: MappingRelation):
        super().__init__(rel.target, rel.source, f"{rel.name}^-1")
        self.rel = rel

    @cached_property
    def _inverse(self) -> dict[Facts, list[Facts]]:
        inv: dict[Facts, list[Facts]] = {}
        for I in self.rel.source.members():
            for J in self.rel.image(I):
                inv.setdefault(J, []).append(I)
        return inv

    def _image(self, J: Facts) -> tuple[Facts, ...]:
        if self.rel.right_upclosed:
            return tuple(I for I in self.target.members() if self.rel.contains(I, J))
        # finite forward images: invert them once
        return tuple(self._inverse.get(J, ()))

    def contains(self, J: Facts, I: Facts) -> bool:
        return self.rel.contains(I, J)


class Full(MappingRelation):
    def __init__(self, source: InstancePool, target: InstancePool):
        super().__init__(source, target, "full")

    def _minimal(self, I: Facts) -> tuple[Facts, ...]:
        return (frozenset(),)


class Empty(MappingRelation):
    def __init__(self, source: InstancePool, target: InstancePool):
        super().__init__(source, target, "empty")

    def _minimal(self, I: Facts) -> tuple[Facts, ...]:
        return ()


class IdBar(MappingRelation):
    """Pairs (I1, I2) with I1 a subset of I2."""

    def __init__(self, pool: InstancePool):
        super().__init__(pool, pool, "idbar")

    def _minimal(self, I: Facts) -> tuple[Facts, ...]:
        return (I,)


def id_bar(pool: InstancePool) -> IdBar:
    return IdBar(pool)


class Extended(Composition):
    """e(M) = hom . M . hom over pools whose source side may contain nulls."""

    def __init__(self, spec: MappingSpec, pools: Pools):
        std = Standard(spec.with_semantics("standard"), pools)
        inner = Composition(Hom(pools.source), std)
        super().__init__(inner, Hom(pools.target))
        self.spec = spec
        self.name = f"e({spec.name})"
        self.exact_containment = spec.is_st_tgds

    def sol_subseteq(self, I2: Facts, I1: Facts) -> bool:
        if self.exact_containment:
            return extended_sol_subseteq(self.spec, Instance(self.spec.source, I2), Instance(self.spec.source, I1))
        return super().sol_subseteq(I2, I1)


def extended_sol_subseteq(spec: MappingSpec, I2: Instance, I1: Instance) -> bool:
    """Under e(M) the solutions of I are the instances its chase maps into, so
    containment is a homomorphism between chases, nulls of the sources included."""
    K2 = chase(spec, I2, active_domain(I1)).result
    K1 = chase(spec, I1, active_domain(K2)).result
    return find_homomorphism(K1, K2) is not None


def materialize(spec: MappingSpec, pools: Pools) -> MappingRelation:
    if spec.semantics == "universal":
        return Universal(spec, pools)
    if spec.semantics == "extended":
        return Extended(spec, pools)
    return Standard(spec, pools)


def relations_equal(a: MappingRelation, b: MappingRelation) -> Optional[tuple[Facts, Facts]]:
    """None when equal on the pools, otherwise the least pair in one but not the other."""
    if a.source != b.source or a.target != b.target:
        raise SchemaMismatch("relations are over different pools")
    for I in a.source.members():
        if a.right_upclosed and b.right_upclosed:
            ma, mb = a.minimal_image(I), b.minimal_image(I)
            if ma == mb:
                continue
            for m in sorted(set(ma) | set(mb), key=a.target.mask):
                if a.contains(I, m) != b.contains(I, m):
                    return I, m
            raise AssertionError("distinct antichains with equal upsets")
        ia, ib = set(a.image(I)), set(b.image(I))
        if ia != ib:
            return I, min(ia ^ ib, key=a.target.mask)
    return None

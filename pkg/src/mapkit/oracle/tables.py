"""Exhaustive, vectorized tables over every member of a target pool.

Each pool member is a bitmask over the pool's fact universe; a table is a
boolean numpy array indexed by that mask.
"""
from __future__ import annotations

import itertools
from typing import Optional

import numpy as np

from ..core import Fact, Instance, SemanticError, active_domain
from ..evaluation import _filter_holds, holds, match
from ..lang.syntax import Const, MappingSpec, Rel
from .pools import Facts, InstancePool, pool_nulls
from .relations import MAX_UPSET_FACTS, MappingRelation


def all_masks(pool: InstancePool) -> np.ndarray:
    n = len(pool.facts)
    if n > MAX_UPSET_FACTS:
        raise SemanticError(f"pool of {n} facts is too large for an exhaustive table")
    return np.arange(1 << n, dtype=np.int64)


def upset_table(pool: InstancePool, antichain, masks: Optional[np.ndarray] = None) -> np.ndarray:
    masks = all_masks(pool) if masks is None else masks
    hit = np.zeros(len(masks), dtype=bool)
    for m in antichain:
        mm = pool.mask(m)
        hit |= (masks & mm) == mm
    return hit


def pair_table(rel: MappingRelation, I: Facts, masks: Optional[np.ndarray] = None) -> np.ndarray:
    """Membership of (I, J) for every J of the target pool."""
    if not rel.right_upclosed:
        raise SemanticError("pair tables need a superset-closed relation")
    return upset_table(rel.target, rel.minimal_image(I), masks)


# -- raw composition membership ----------------------------------------------------

def _sat_forward(spec: MappingSpec, I: Instance, pool: InstancePool, masks: np.ndarray) -> np.ndarray:
    """Middle masks M with (I, M) satisfying the dependencies: AND over triggers of OR over options."""
    ok = np.ones(len(masks), dtype=bool)
    for d in spec.body:
        for env in match(d.premise, I):
            any_opt = np.zeros(len(masks), dtype=bool)
            for dj in d.conclusion.disjuncts:
                filters = [a for a in dj.atoms if not isinstance(a, Rel)]
                rels = [a for a in dj.atoms if isinstance(a, Rel)]
                for combo in itertools.product(pool.values, repeat=len(dj.exists)):
                    local = dict(env)
                    local.update(zip(dj.exists, combo))
                    if not all(_filter_holds(a, local) for a in filters):
                        continue
                    facts = [Fact(a.name, tuple(t.value if isinstance(t, Const) else local[t.name] for t in a.args)) for a in rels]
                    if not pool.holds(facts):
                        continue
                    mm = pool.mask(facts)
                    any_opt |= (masks & mm) == mm
            ok &= any_opt
    return ok


def _sat_backward(spec: MappingSpec, pool: InstancePool, K: Instance, masks: np.ndarray) -> np.ndarray:
    """Middle masks M with (M, K) satisfying the dependencies.

    Every assignment of premise variables into the pool values is a potential
    trigger; one whose conclusion fails in K rules out every middle holding its
    premise facts.
    """
    bad = np.zeros(len(masks), dtype=bool)
    for d in spec.body:
        rels = [a for a in d.premise if isinstance(a, Rel)]
        filters = [a for a in d.premise if not isinstance(a, Rel)]
        vs = sorted({t.name for a in rels for t in a.args if not isinstance(t, Const)})
        for combo in itertools.product(pool.values, repeat=len(vs)):
            env = dict(zip(vs, combo))
            if not all(_filter_holds(a, env) for a in filters):
                continue
            if holds(d.conclusion, K, env):
                continue
            facts = [Fact(a.name, tuple(t.value if isinstance(t, Const) else env[t.name] for t in a.args)) for a in rels]
            if not pool.holds(facts):
                continue
            mm = pool.mask(facts)
            bad |= (masks & mm) == mm
    return ~bad


def raw_composition_member(
    m12: MappingSpec, m23: MappingSpec, I1: Instance, I3: Instance, middle: InstancePool
) -> Optional[Instance]:
    """Least middle instance of the pool linking I1 and I3, by brute force over all masks."""
    for spec in (m12, m23):
        if spec.is_sotgd or spec.semantics != "standard":
            raise SemanticError("the raw composition oracle handles dependency bodies under standard semantics")
    masks = all_masks(middle)
    both = _sat_forward(m12, I1, middle, masks) & _sat_backward(m23, middle, I3, masks)
    hits = np.flatnonzero(both)
    if len(hits) == 0:
        return None
    return middle.instance(middle.facts_of(int(hits[0])))


def middle_pool(m12: MappingSpec, constants, nulls: int) -> InstancePool:
    return InstancePool(m12.target, tuple(sorted(constants)), nulls)

"""Canonical universal solutions and the tests built on them."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .core import Fact, Instance, Schema, SemanticError, Value, active_domain, find_homomorphism, null
from .evaluation import match, satisfies
from .lang.syntax import Const, Dependency, Eq, Func, MappingSpec, Rel, SOtgd, Term, Var, atoms_vars

Trigger = tuple[tuple[str, Value], ...]


@dataclass(frozen=True)
class ChaseResult:
    """The chased target instance and where each fact and null came from.

    ``provenance`` maps every fact to the first (dependency index, trigger)
    that produced it; ``null_origin`` maps every invented null to
    (dependency index, trigger, existential variable).
    """

    result: Instance
    provenance: dict[Fact, tuple[int, Trigger]] = field(default_factory=dict)
    null_origin: dict[Value, tuple[int, Trigger, str]] = field(default_factory=dict)


class NullFactory:
    """Sequential labels n1, n2, ... skipping labels already in use."""

    def __init__(self, avoid: Iterable[Value] = (), prefix: str = "n"):
        self.taken = {v.label for v in avoid if v.is_null}
        self.prefix = prefix
        self.count = 0

    def __call__(self) -> Value:
        while True:
            self.count += 1
            label = f"{self.prefix}{self.count}"
            if label not in self.taken:
                self.taken.add(label)
                return null(label)


def _require_st(spec: MappingSpec) -> None:
    if spec.is_sotgd or spec.direction != "st":
        raise SemanticError("the chase needs a mapping given by st-tgds")
    for d in spec.body:
        if not d.conclusion.is_cq or d.conclusion.feature_tag:
            raise SemanticError("the chase needs tgd conclusions (single conjunctions, no equalities)")


def triggers(d: Dependency, I: Instance) -> list[dict[str, Value]]:
    """Premise assignments of ``d`` into ``I`` in a deterministic order."""
    order = atoms_vars(d.premise)
    envs = {tuple(env[v] for v in order): env for env in match(d.premise, I)}
    return [envs[k] for k in sorted(envs)]


def chase(spec: MappingSpec, I: Instance, avoid: Iterable[Value] = ()) -> ChaseResult:
    """Single-pass oblivious chase of ``I`` with the st-tgds of ``spec``.

    One fresh null per existential variable per trigger. Nulls of ``I`` (and
    of ``avoid``) are treated as ordinary values and never reused as labels.
    """
    _require_st(spec)
    fresh = NullFactory(list(active_domain(I)) + list(avoid))
    facts: dict[Fact, tuple[int, Trigger]] = {}
    origin: dict[Value, tuple[int, Trigger, str]] = {}
    for i, d in enumerate(spec.body):
        disjunct = d.conclusion.disjuncts[0]
        for env in triggers(d, I):
            trig = tuple(sorted(env.items()))
            local = dict(env)
            for y in disjunct.exists:
                n = fresh()
                local[y] = n
                origin[n] = (i, trig, y)
            for atom in disjunct.atoms:
                args = tuple(t.value if isinstance(t, Const) else local[t.name] for t in atom.args)
                facts.setdefault(Fact(atom.name, args), (i, trig))
    return ChaseResult(Instance(spec.target, frozenset(facts)), facts, origin)


def is_universal_solution(spec: MappingSpec, I: Instance, J: Instance) -> bool:
    if not satisfies(spec, I, J):
        return False
    return find_homomorphism(J, chase(spec, I, active_domain(J)).result) is not None


def sol_subseteq(spec: MappingSpec, I2: Instance, I1: Instance) -> bool:
    """Sol(I2) is contained in Sol(I1).

    Every solution of I2 is a homomorphic image of its chase that fixes the
    values of I2, and solutions are closed under such images, so the chase of
    I2 is a solution of I1 exactly when all solutions of I2 are.
    """
    K = chase(spec, I2, active_domain(I1)).result
    return satisfies(spec, I1, K)


def data_exchange_equivalent(spec: MappingSpec, I1: Instance, I2: Instance) -> bool:
    return sol_subseteq(spec, I1, I2) and sol_subseteq(spec, I2, I1)


# -- Skolem chase for SO-tgds ----------------------------------------------

GroundTerm = Union[Value, tuple]


def _ground(term: Term, env: dict[str, Value]) -> GroundTerm:
    if isinstance(term, Var):
        return env[term.name]
    if isinstance(term, Const):
        return term.value
    return (term.name,) + tuple(_ground(a, env) for a in term.args)


def skolem_chase(spec: MappingSpec, I: Instance, avoid: Iterable[Value] = ()) -> Instance:
    """Canonical solution of an SO-tgd: functions are free term constructors.

    Equalities hold only between syntactically identical ground terms, and each
    distinct function application becomes its own null.
    """
    if not spec.is_sotgd:
        return chase(spec, I, avoid).result
    sigma: SOtgd = spec.body
    fresh = NullFactory(list(active_domain(I)) + list(avoid), prefix="s")
    names: dict[tuple, Value] = {}
    facts = set()

    def as_value(g: GroundTerm) -> Value:
        if isinstance(g, Value):
            return g
        if g not in names:
            names[g] = fresh()
        return names[g]

    for clause in sigma.clauses:
        rels = [a for a in clause.premise if isinstance(a, Rel)]
        eqs = [a for a in clause.premise if isinstance(a, Eq)]
        order = atoms_vars(rels)
        envs = sorted({tuple(e[v] for v in order) for e in match(rels, I)})
        for row in envs:
            env = dict(zip(order, row))
            if all(_ground(e.left, env) == _ground(e.right, env) for e in eqs):
                for atom in clause.conclusion:
                    facts.add(Fact(atom.name, tuple(as_value(_ground(t, env)) for t in atom.args)))
    return Instance(spec.target, frozenset(facts))


def canonical_solution(spec: MappingSpec, I: Instance) -> Instance:
    """Universal solution for st-tgd and SO-tgd bodies under standard semantics."""
    return skolem_chase(spec, I) if spec.is_sotgd else chase(spec, I).result

"""Composition: Skolemization, SO-tgd composition, plain normal form, membership."""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .chase import chase
from .core import Instance, SchemaMismatch, SemanticError, Value, active_domain
from .evaluation import FunctionTable, satisfies, sotgd_witness
from .lang.syntax import (
    Atom,
    Const,
    Dependency,
    Eq,
    Func,
    MappingSpec,
    Rel,
    SOClause,
    SOtgd,
    Term,
    Var,
    atom_terms,
    atoms_vars,
    subterms,
    term_vars,
)


class IncompleteSearch(UserWarning):
    """A bounded search found nothing; the answer may still be positive."""


# -- substitution helpers ---------------------------------------------------

def subst_term(t: Term, s: dict[str, Term]) -> Term:
    if isinstance(t, Var):
        return s.get(t.name, t)
    if isinstance(t, Func):
        return Func(t.name, tuple(subst_term(a, s) for a in t.args))
    return t


def subst_atom(a: Atom, s: dict[str, Term]) -> Atom:
    if isinstance(a, Rel):
        return Rel(a.name, tuple(subst_term(t, s) for t in a.args))
    if isinstance(a, Eq):
        return Eq(subst_term(a.left, s), subst_term(a.right, s))
    raise SemanticError("SO-tgds contain relational and equality atoms only")


def _rename_clause(c: SOClause, suffix: str) -> SOClause:
    s = {v: Var(f"{v}{suffix}") for v in atoms_vars(c.premise + c.conclusion)}
    return SOClause(tuple(subst_atom(a, s) for a in c.premise), tuple(subst_atom(a, s) for a in c.conclusion))


def _dedupe(atoms) -> tuple:
    return tuple(dict.fromkeys(atoms))


# -- Skolemization ------------------------------------------------------------

def skolemize(spec: MappingSpec) -> MappingSpec:
    """Replace each existential y of each tgd by f_y applied to all universals of the tgd."""
    if spec.is_sotgd:
        return spec
    if not spec.is_st_tgds:
        raise SemanticError("only st-tgds can be Skolemized")
    counts: dict[str, int] = {}
    for d in spec.body:
        for y in d.existentials:
            counts[y] = counts.get(y, 0) + 1
    functions: list[tuple[str, int]] = []
    clauses = []
    for i, d in enumerate(spec.body):
        universals = atoms_vars(d.premise)
        s: dict[str, Term] = {}
        for y in d.existentials:
            name = f"f_{y}" if counts[y] == 1 else f"f{i + 1}_{y}"
            functions.append((name, len(universals)))
            s[y] = Func(name, tuple(Var(x) for x in universals))
        conclusion = tuple(subst_atom(a, s) for a in d.conclusion.disjuncts[0].atoms)
        clauses.append(SOClause(d.premise, conclusion))
    return MappingSpec(spec.source, spec.target, SOtgd(tuple(functions), tuple(clauses)), name=spec.name)


# -- composition --------------------------------------------------------------

def _occurs(name: str, t: Term) -> bool:
    return name in set(term_vars(t))


def _eliminate(premise: list[Atom], conclusion: list[Rel], removable) -> Optional[tuple[list[Atom], list[Rel]]]:
    """Substitute away equalities var = term for variables accepted by ``removable``.

    Returns None when an equality between distinct constants makes the clause void.
    """
    changed = True
    while changed:
        changed = False
        for k, a in enumerate(premise):
            if not isinstance(a, Eq):
                continue
            if a.left == a.right:
                premise = premise[:k] + premise[k + 1:]
                changed = True
                break
            if isinstance(a.left, Const) and isinstance(a.right, Const):
                return None
            for x, t in ((a.left, a.right), (a.right, a.left)):
                if isinstance(x, Var) and removable(x.name, t) and not _occurs(x.name, t):
                    s = {x.name: t}
                    rest = premise[:k] + premise[k + 1:]
                    premise = [subst_atom(b, s) for b in rest]
                    conclusion = [subst_atom(b, s) for b in conclusion]
                    changed = True
                    break
            if changed:
                break
    return premise, conclusion


def _rename_functions(sigma: SOtgd, taken: set[str]) -> SOtgd:
    s = {}
    for f, _ in sigma.functions:
        if f in taken:
            k = 2
            while f"{f}_{k}" in taken:
                k += 1
            s[f] = f"{f}_{k}"
            taken.add(s[f])
    if not s:
        return sigma

    def rt(t: Term) -> Term:
        if isinstance(t, Func):
            return Func(s.get(t.name, t.name), tuple(rt(a) for a in t.args))
        return t

    def ra(a: Atom) -> Atom:
        if isinstance(a, Rel):
            return Rel(a.name, tuple(rt(t) for t in a.args))
        return Eq(rt(a.left), rt(a.right))

    return SOtgd(
        tuple((s.get(f, f), n) for f, n in sigma.functions),
        tuple(SOClause(tuple(map(ra, c.premise)), tuple(map(ra, c.conclusion))) for c in sigma.clauses),
    )


def _used_functions(clauses, declared) -> tuple[tuple[str, int], ...]:
    used = set()
    for c in clauses:
        for a in c.premise + c.conclusion:
            for t in atom_terms(a):
                used |= {s.name for s in subterms(t) if isinstance(s, Func)}
    return tuple((f, n) for f, n in declared if f in used)


def compose_sotgds(m12: MappingSpec, m23: MappingSpec) -> MappingSpec:
    """An SO-tgd from R1 to R3 defining exactly the composition of m12 and m23.

    Each R2 atom of each clause of the second SO-tgd is resolved against a
    conclusion atom of a renamed clause of the first; the second clause's
    variables are then substituted away, which can nest function terms.
    """
    if not m12.target.same_relations(m23.source):
        raise SchemaMismatch(f"target {m12.target.name} of {m12.name} is not the source of {m23.name}")
    s12 = skolemize(m12).body
    s23 = _rename_functions(skolemize(m23).body, {f for f, _ in s12.functions})
    out = []
    for clause in s23.clauses:
        rel_atoms = [a for a in clause.premise if isinstance(a, Rel)]
        other = [a for a in clause.premise if not isinstance(a, Rel)]
        choices = []
        for a in rel_atoms:
            opts = [
                (ci, bi)
                for ci, c in enumerate(s12.clauses)
                for bi, b in enumerate(c.conclusion)
                if b.name == a.name
            ]
            choices.append(opts)
        inner = set(atoms_vars(clause.premise + clause.conclusion))
        for combo in itertools.product(*choices):
            premise: list[Atom] = []
            for j, ((ci, bi), a) in enumerate(zip(combo, rel_atoms)):
                renamed = _rename_clause(s12.clauses[ci], f"_{j + 1}")
                premise.extend(renamed.premise)
                b = renamed.conclusion[bi]
                premise.extend(Eq(x, y) for x, y in zip(a.args, b.args))
            premise.extend(other)
            # first the second mapping's variables, then var = var / var = const among the rest
            result = _eliminate(premise, list(clause.conclusion), lambda v, t: v in inner)
            if result is None:
                continue
            result = _eliminate(*result, lambda v, t: not isinstance(t, Func))
            if result is None:
                continue
            p, c = result
            rels = [a for a in p if isinstance(a, Rel)]
            eqs = [a for a in p if isinstance(a, Eq)]
            out.append(SOClause(_dedupe(rels + eqs), _dedupe(c)))
    out = list(dict.fromkeys(_canonical_clause(c) for c in out))
    functions = _used_functions(out, s12.functions + s23.functions)
    return MappingSpec(m12.source, m23.target, SOtgd(functions, tuple(out)), name=f"{m12.name}_{m23.name}")


def _canonical_clause(c: SOClause) -> SOClause:
    """Rename variables to x1, x2, ... in order of first occurrence."""
    order = atoms_vars(c.premise + c.conclusion)
    s = {v: Var(f"x{i + 1}") for i, v in enumerate(order)}
    return SOClause(tuple(subst_atom(a, s) for a in c.premise), tuple(subst_atom(a, s) for a in c.conclusion))


# -- plain normal form ----------------------------------------------------------

class _Void(Exception):
    pass


def _unify(eqs: list[tuple[Term, Term]], s: dict[str, Term]) -> dict[str, Term]:
    """Solve equalities over free term constructors whose variables denote constants."""
    while eqs:
        l, r = eqs.pop()
        l, r = subst_term(l, s), subst_term(r, s)
        if l == r:
            continue
        if isinstance(l, Func) and isinstance(r, Func):
            if l.name != r.name or len(l.args) != len(r.args):
                raise _Void
            eqs.extend(zip(l.args, r.args))
            continue
        if isinstance(l, Func) or isinstance(r, Func):
            # a function value is a null, variables and constants are constants
            raise _Void
        if isinstance(l, Const) and isinstance(r, Const):
            raise _Void
        x, t = (l, r) if isinstance(l, Var) else (r, l)
        s = {k: subst_term(v, {x.name: t}) for k, v in s.items()}
        s[x.name] = t
    return s


def _shape(t: Term, leaves: list[Var]) -> Term:
    """``t`` with its variables replaced by holes; the variables go to ``leaves``."""
    if isinstance(t, Var):
        leaves.append(t)
        return Var("_")
    if isinstance(t, Func):
        return Func(t.name, tuple(_shape(a, leaves) for a in t.args))
    return t


def to_plain(spec: MappingSpec) -> MappingSpec:
    """A plain SO-tgd with the same certain answers for every conjunctive query.

    Premise equalities are solved by unification, reading function applications
    as distinct nulls: a clause whose equalities cannot hold that way never
    fires on the canonical solution and is dropped. Every remaining nested
    term is then replaced by a fresh function of its variable leaves, one fresh
    symbol per term shape, so distinct terms stay distinct.
    """
    sigma = skolemize(spec).body
    if sigma.is_plain:
        return MappingSpec(spec.source, spec.target, sigma, name=spec.name)
    clauses = []
    for c in sigma.clauses:
        eqs = [(a.left, a.right) for a in c.premise if isinstance(a, Eq)]
        try:
            s = _unify(eqs, {})
        except _Void:
            continue
        premise = _dedupe(subst_atom(a, s) for a in c.premise if isinstance(a, Rel))
        conclusion = _dedupe(subst_atom(a, s) for a in c.conclusion)
        clauses.append(SOClause(premise, conclusion))

    taken = {f for f, _ in sigma.functions}
    shapes: dict[Term, tuple[str, int]] = {}

    def flatten(t: Term) -> Term:
        if not isinstance(t, Func):
            return t
        if not any(isinstance(a, Func) for a in t.args):
            return t
        leaves: list[Var] = []
        shape = _shape(t, leaves)
        if shape not in shapes:
            k = len(shapes) + 1
            while f"h{k}" in taken:
                k += 1
            taken.add(f"h{k}")
            shapes[shape] = (f"h{k}", len(leaves))
        name, _ = shapes[shape]
        return Func(name, tuple(leaves))

    plain = [
        SOClause(c.premise, tuple(Rel(a.name, tuple(flatten(t) for t in a.args)) for a in c.conclusion))
        for c in clauses
    ]
    functions = _used_functions(plain, sigma.functions + tuple(shapes.values()))
    return MappingSpec(spec.source, spec.target, SOtgd(functions, tuple(plain)), name=spec.name)


# -- membership -------------------------------------------------------------------

@dataclass(frozen=True)
class CompositionWitness:
    middle: Instance
    function_tables: dict = field(default_factory=dict)


def _witness_tables(spec: MappingSpec, I: Instance, J: Instance) -> Optional[FunctionTable]:
    if spec.is_sotgd:
        return sotgd_witness(I, J, spec.body)
    return {} if satisfies(spec, I, J) else None


def composition_member(
    m12: MappingSpec, m23: MappingSpec, I1: Instance, I3: Instance, null_budget: int = 2
) -> Optional[CompositionWitness]:
    """A middle instance I2 with (I1, I2) in m12 and (I2, I3) in m23, if one exists.

    For st-tgd m12 the candidates are the images of the chase of I1 under every
    map of its nulls into the values of I1, I3, the mappings' constants and the
    chase's own nulls; this is complete because the second mapping only gains
    obligations from larger middles. Other bodies use a bounded search over
    minimal middles and warn with ``IncompleteSearch`` on a miss.
    """
    if not m12.target.same_relations(m23.source):
        raise SchemaMismatch(f"target {m12.target.name} of {m12.name} is not the source of {m23.name}")
    if not I1.schema.same_relations(m12.source) or not I3.schema.same_relations(m23.target):
        raise SchemaMismatch("instances do not match the mappings")
    for cand, tables12 in _middle_candidates(m12, I1, I3, null_budget):
        tables23 = _witness_tables(m23, cand, I3)
        if tables23 is not None:
            return CompositionWitness(cand, {**tables12, **tables23})
    if not (m12.semantics == "standard" and m12.is_st_tgds):
        warnings.warn("no middle instance found within the search budget", IncompleteSearch)
    return None


def _middle_candidates(m12: MappingSpec, I1: Instance, I3: Instance, null_budget: int) -> Iterator:
    values = sorted(active_domain(I1) | active_domain(I3) | m12.constants())
    if m12.semantics == "standard" and m12.is_st_tgds:
        K = chase(m12, I1, active_domain(I3)).result
        nulls = sorted(K.nulls() - active_domain(I1))
        targets = values + [n for n in nulls if n not in values]
        seen = set()
        for image in itertools.product(targets, repeat=len(nulls)):
            cand = K.rename(dict(zip(nulls, image)))
            if cand.facts not in seen:
                seen.add(cand.facts)
                yield cand, {}
        return
    from .oracle.relations import minimal_solutions

    for cand in minimal_solutions(m12, I1, values, null_budget):
        tables = _witness_tables(m12, I1, cand)
        if tables is not None:
            yield cand, tables

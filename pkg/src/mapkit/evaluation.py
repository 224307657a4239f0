"""Query evaluation and satisfaction of dependencies and SO-tgds."""
from __future__ import annotations

from typing import Iterable, Iterator, Optional, Sequence

from .core import Fact, Instance, SchemaMismatch, SemanticError, Value, active_domain
from .lang.syntax import (
    Atom,
    Const,
    Dependency,
    Eq,
    Func,
    IsConst,
    MappingSpec,
    Neq,
    Query,
    Rel,
    SOtgd,
    Term,
    Var,
    atoms_vars,
)

Assignment = dict[str, Value]


def _value(term: Term, env: Assignment) -> Optional[Value]:
    if isinstance(term, Const):
        return term.value
    if isinstance(term, Var):
        return env.get(term.name)
    raise SemanticError(f"function term {term.name} outside an SO-tgd", term.name)


def _filter_holds(atom: Atom, env: Assignment) -> Optional[bool]:
    """Truth value of a non-relational atom, None while a variable is unbound."""
    if isinstance(atom, IsConst):
        v = _value(atom.term, env)
        return None if v is None else v.is_constant
    left, right = _value(atom.left, env), _value(atom.right, env)
    if left is None or right is None:
        return None
    return (left == right) if isinstance(atom, Eq) else (left != right)


def _propagate(filters: list[Atom], env: Assignment) -> Optional[Assignment]:
    """Bind variables through equalities with one bound side; None on a violated filter."""
    env = dict(env)
    pending = list(filters)
    progress = True
    while progress:
        progress = False
        rest = []
        for atom in pending:
            if isinstance(atom, Eq):
                left, right = _value(atom.left, env), _value(atom.right, env)
                if left is None and right is not None and isinstance(atom.left, Var):
                    env[atom.left.name] = right
                    progress = True
                    continue
                if right is None and left is not None and isinstance(atom.right, Var):
                    env[atom.right.name] = left
                    progress = True
                    continue
            truth = _filter_holds(atom, env)
            if truth is False:
                return None
            if truth is None:
                rest.append(atom)
        pending = rest
    return env


def match(atoms: Sequence[Atom], instance: Instance, env: Optional[Assignment] = None) -> Iterator[Assignment]:
    """All extensions of ``env`` satisfying the conjunction ``atoms`` in ``instance``.

    Relational atoms are joined most-bound-first; filters are applied as soon as
    their variables are bound, and equalities may bind variables.
    """
    index = instance.index()
    rels = [a for a in atoms if isinstance(a, Rel)]
    filters = [a for a in atoms if not isinstance(a, Rel)]
    for a in rels:
        if a.name not in instance.schema:
            raise SchemaMismatch(f"relation {a.name} is not in schema {instance.schema.name}", a.name)
    start = _propagate(filters, dict(env or {}))
    if start is None:
        return

    # per atom: its rows and an argument pattern of (is_var, name or value)
    compiled = []
    for a in rels:
        pattern = []
        for t in a.args:
            if isinstance(t, Var):
                pattern.append((True, t.name))
            elif isinstance(t, Const):
                pattern.append((False, t.value))
            else:
                raise SemanticError(f"function term {t.name} outside an SO-tgd", t.name)
        compiled.append((index.get(a.name, ()), tuple(pattern), {n for is_var, n in pattern if is_var}))

    def search(remaining: list, env: Assignment) -> Iterator[Assignment]:
        if not remaining:
            for f in filters:
                if _filter_holds(f, env) is None:
                    raise SemanticError("unsafe variable in filter atom")
            yield env
            return
        # most-bound atom first, then the smaller relation
        pos = min(
            range(len(remaining)),
            key=lambda i: (sum(1 for v in remaining[i][2] if v not in env), len(remaining[i][0])),
        )
        rows, pattern, _ = remaining[pos]
        rest = remaining[:pos] + remaining[pos + 1:]
        for row in rows:
            ext = dict(env)
            for (is_var, n), v in zip(pattern, row):
                if is_var:
                    bound = ext.get(n)
                    if bound is None:
                        ext[n] = v
                    elif bound != v:
                        break
                elif n != v:
                    break
            else:
                if filters:
                    ext = _propagate(filters, ext)
                    if ext is None:
                        continue
                yield from search(rest, ext)

    yield from search(compiled, start)


def eval_query(q: Query, instance: Instance) -> set[tuple[Value, ...]]:
    out = set()
    for d in q.disjuncts:
        for env in match(d.atoms, instance):
            out.add(tuple(env[v] for v in q.free))
    return out


def holds(q: Query, instance: Instance, env: Assignment) -> bool:
    """Whether the tuple ``env`` (over q's free variables) is an answer of q."""
    for d in q.disjuncts:
        for _ in match(d.atoms, instance, {v: env[v] for v in q.free}):
            return True
    return False


def violations(left: Instance, right: Instance, d: Dependency) -> Iterator[Assignment]:
    """Premise assignments over ``left`` with no conclusion witness over ``right``."""
    seen = set()
    for env in match(d.premise, left):
        key = tuple(env[v] for v in d.conclusion.free)
        if key in seen:
            continue
        seen.add(key)
        if not holds(d.conclusion, right, env):
            yield env


def satisfies_dependency(I: Instance, J: Instance, d: Dependency) -> bool:
    """(I, J) |= d. For ts-dependencies the premise is read in J and the conclusion in I."""
    left, right = (I, J) if d.direction == "st" else (J, I)
    return next(violations(left, right, d), None) is None


def satisfies(spec: MappingSpec, left: Instance, right: Instance) -> bool:
    """(left, right) satisfies the body of ``spec``; ``left`` is over spec.source."""
    if not left.schema.same_relations(spec.source) or not right.schema.same_relations(spec.target):
        raise SchemaMismatch(f"instances do not match mapping {spec.name}")
    if spec.is_sotgd:
        return satisfies_sotgd(left, right, spec.body)
    return all(next(violations(left, right, d), None) is None for d in spec.body)


# -- SO-tgds --------------------------------------------------------------

FunctionTable = dict[tuple[str, tuple[Value, ...]], Value]


def fresh_value(i: int) -> Value:
    """A value that can never occur in a parsed instance."""
    return Value(True, f"~{i}")


class FunctionSearch:
    """Backtracking search over interpretations of an SO-tgd's function symbols.

    Function values are decided lazily, the first time a ground application is
    evaluated. A value used in a required conclusion fact is drawn from
    ``conclusion_values``; any other value is drawn from ``inner_values``, the
    fresh values already introduced, or one new fresh value. Values outside
    both sets are interchangeable, so this is complete.

    ``accept(fact, required)`` decides whether a required conclusion fact is
    admissible and returns the new required set (or None to reject).
    """

    def __init__(self, sigma: SOtgd, I: Instance, inner_values: Iterable[Value], conclusion_values: Iterable[Value]):
        self.sigma = sigma
        self.inner = sorted(set(inner_values))
        self.concl = sorted(set(conclusion_values))
        self.triggers: list[tuple[int, Assignment]] = []
        for i, clause in enumerate(sigma.clauses):
            rels = [a for a in clause.premise if isinstance(a, Rel)]
            for env in sorted(match(rels, I), key=lambda e: sorted(e.items())):
                self.triggers.append((i, env))

    def _apply(self, term: Term, env, table: FunctionTable, fresh: int, top: bool):
        """Yield (value, table, fresh) for each way of evaluating ``term``."""
        if isinstance(term, Var):
            yield env[term.name], table, fresh
            return
        if isinstance(term, Const):
            yield term.value, table, fresh
            return

        def args_from(k, acc, table, fresh):
            if k == len(term.args):
                yield tuple(acc), table, fresh
                return
            for v, t2, f2 in self._apply(term.args[k], env, table, fresh, False):
                yield from args_from(k + 1, acc + [v], t2, f2)

        for args, table, fresh in args_from(0, [], table, fresh):
            key = (term.name, args)
            if key in table:
                yield table[key], table, fresh
                continue
            if top:
                options = [(v, fresh) for v in self.concl]
            else:
                options = [(v, fresh) for v in self.inner]
                options += [(fresh_value(i), fresh) for i in range(fresh)]
                options.append((fresh_value(fresh), fresh + 1))
            for v, f2 in options:
                t2 = dict(table)
                t2[key] = v
                yield v, t2, f2

    def _eval_list(self, terms, env, table, fresh, top):
        if not terms:
            yield (), table, fresh
            return
        for v, t2, f2 in self._apply(terms[0], env, table, fresh, top):
            for rest, t3, f3 in self._eval_list(terms[1:], env, t2, f2, top):
                yield (v,) + rest, t3, f3

    def _premise(self, eqs, env, table, fresh):
        """Yield (fires, table, fresh) over evaluations of the premise equalities."""
        if not eqs:
            yield True, table, fresh
            return
        eq = eqs[0]
        for (l, r), t2, f2 in self._eval_list((eq.left, eq.right), env, table, fresh, False):
            if l != r:
                yield False, t2, f2
            else:
                yield from self._premise(eqs[1:], env, t2, f2)

    def _conclusion(self, atoms, env, table, fresh, required, accept):
        if not atoms:
            yield table, fresh, required
            return
        atom = atoms[0]
        for args, t2, f2 in self._eval_list(atom.args, env, table, fresh, True):
            nxt = accept(Fact(atom.name, args), required)
            if nxt is not None:
                yield from self._conclusion(atoms[1:], env, t2, f2, nxt, accept)

    def search(self, accept, required=frozenset(), prune=None):
        """Yield (table, required) for every complete interpretation branch."""

        def go(k, table, fresh, required):
            if prune is not None and prune(required):
                return
            if k == len(self.triggers):
                yield table, required
                return
            ci, env = self.triggers[k]
            clause = self.sigma.clauses[ci]
            eqs = [a for a in clause.premise if isinstance(a, Eq)]
            for fires, t2, f2 in self._premise(eqs, env, table, fresh):
                if not fires:
                    yield from go(k + 1, t2, f2, required)
                    continue
                for t3, f3, req in self._conclusion(clause.conclusion, env, t2, f2, required, accept):
                    yield from go(k + 1, t3, f3, req)

        yield from go(0, {}, 0, required)


def sotgd_witness(I: Instance, J: Instance, sigma: SOtgd) -> Optional[FunctionTable]:
    """The first satisfying function interpretation in lexicographic order, or None."""
    values = active_domain(I) | active_domain(J)
    search = FunctionSearch(sigma, I, values, active_domain(J))
    facts = J.facts

    def accept(fact, required):
        return required if fact in facts else None

    for table, _ in search.search(accept):
        return table
    return None


def satisfies_sotgd(I: Instance, J: Instance, sigma: SOtgd) -> bool:
    return sotgd_witness(I, J, sigma) is not None


def certain_answers_st(spec: MappingSpec, q: Query, I: Instance) -> set[tuple[Value, ...]]:
    """Certain answers of a UCQ over the target, via the canonical universal solution."""
    (out,) = certain_answers_many(spec, [q], I)
    return out


def certain_answers_many(spec: MappingSpec, queries: Sequence[Query], I: Instance) -> list[set[tuple[Value, ...]]]:
    """Certain answers of several UCQs, sharing one chase of ``I``."""
    from .chase import chase

    if spec.semantics != "standard" or not spec.is_st_tgds:
        raise SemanticError("certain answers need a mapping given by st-tgds under standard semantics")
    for q in queries:
        for d in q.disjuncts:
            for a in d.atoms:
                if not isinstance(a, (Rel, Eq)):
                    raise SemanticError("certain answers are computed for unions of conjunctive queries")
    if not I.is_ground:
        raise SemanticError("certain answers need a ground source instance")
    J = chase(spec, I).result
    return [{t for t in eval_query(q, J) if all(v.is_constant for v in t)} for q in queries]

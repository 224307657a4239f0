"""Query rewriting over the source and the maximum-recovery construction."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Optional, Union

from .core import Fact, Instance, Schema, SemanticError, const, null
from .evaluation import match
from .lang.syntax import (
    Atom,
    Const,
    Dependency,
    Disjunct,
    Eq,
    IsConst,
    MappingSpec,
    Query,
    Rel,
    Term,
    Var,
    atoms_vars,
)


@dataclass(frozen=True)
class Rewriting:
    original: Query
    rewritten: Query


def _partitions(n: int) -> Iterator[tuple[int, ...]]:
    def go(prefix, top):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for k in range(top + 2):
            yield from go(prefix + [k], max(top, k))

    yield from go([], -1)


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra

    def classes(self) -> dict:
        out: dict = {}
        for x in list(self.parent):
            out.setdefault(self.find(x), []).append(x)
        return out


# node kinds inside the union-find: ("q", name), ("c", value), ("u", group, name), ("e", group, name)

def _node(term: Term, group: Optional[int] = None, existentials=frozenset()):
    if isinstance(term, Const):
        return ("c", term.value)
    if group is None:
        return ("q", term.name)
    return ("e" if term.name in existentials else "u", group, term.name)


def _cover(
    q_atoms: list[Rel],
    free: tuple[str, ...],
    tgds: list[Dependency],
    groups: list[int],
    choice: list[tuple[int, int]],
) -> Optional[tuple[tuple[str, ...], tuple[Atom, ...]]]:
    """One disjunct of the rewriting for a fixed covering, or None if inconsistent.

    ``groups[k]`` is the tgd copy covering atom k and ``choice[k]`` the pair
    (tgd index, conclusion atom index) used for it.
    """
    uf = _UnionFind()
    copy_tgd: dict[int, int] = {}
    for k, atom in enumerate(q_atoms):
        g = groups[k]
        ti, ai = choice[k]
        copy_tgd[g] = ti
        d = tgds[ti]
        ex = frozenset(d.existentials)
        target = d.conclusion.disjuncts[0].atoms[ai]
        for s, t in zip(atom.args, target.args):
            uf.union(_node(s), _node(t, g, ex))
    for g, ti in copy_tgd.items():
        for v in atoms_vars(tgds[ti].premise):
            uf.find(("u", g, v))

    rep: dict = {}
    equalities: list[Eq] = []
    for root, members in uf.classes().items():
        consts = {m[1] for m in members if m[0] == "c"}
        frees = [v for v in free if ("q", v) in members]
        exist = [m for m in members if m[0] == "e"]
        universals = sorted(m for m in members if m[0] == "u")
        if len(consts) > 1:
            return None
        if exist:
            # a fresh null: only existential query variables may meet it
            if len(exist) > 1 or consts or frees or universals:
                return None
            continue
        if consts:
            term: Term = Const(next(iter(consts)))
            equalities.extend(Eq(Var(v), term) for v in frees)
        elif frees:
            term = Var(frees[0])
            equalities.extend(Eq(Var(v), term) for v in frees[1:])
        else:
            g, name = universals[0][1], universals[0][2]
            term = Var(f"{name}_{g + 1}")
        for m in members:
            rep[m] = term

    atoms: list[Atom] = []
    for g in sorted(copy_tgd):
        d = tgds[copy_tgd[g]]
        for a in d.premise:
            args = tuple(t if isinstance(t, Const) else rep[("u", g, t.name)] for t in a.args)
            atoms.append(Rel(a.name, args))
    atoms = list(dict.fromkeys(atoms))
    atoms.extend(dict.fromkeys(equalities))
    exists = tuple(v for v in atoms_vars(atoms) if v not in free)
    return exists, tuple(atoms)


def _canonical_disjunct(exists, atoms, free) -> tuple:
    """A key equal for disjuncts that differ only by renaming of existentials."""
    def masked(a):
        if isinstance(a, Rel):
            return (0, a.name, tuple(("?" if isinstance(t, Var) and t.name in exists else repr(t)) for t in a.args))
        return (1, repr(a))

    order = sorted(atoms, key=masked)
    names: dict[str, str] = {}
    out = []
    for a in order:
        if isinstance(a, Rel):
            args = []
            for t in a.args:
                if isinstance(t, Var) and t.name in exists:
                    args.append(Var(names.setdefault(t.name, f"_{len(names)}")))
                else:
                    args.append(t)
            out.append(Rel(a.name, tuple(args)))
        else:
            out.append(a)
    return tuple(sorted(out, key=repr))


def rewrite_over_source(spec: MappingSpec, q: Query) -> Rewriting:
    """A union of CQs with equalities over the source whose answers on any
    ground source instance are exactly the certain answers of ``q``."""
    if not spec.is_st_tgds:
        raise SemanticError("rewriting needs a mapping given by st-tgds")
    if not q.is_cq:
        raise SemanticError("the query to rewrite must be a single conjunctive query")
    (d0,) = q.disjuncts
    if not all(isinstance(a, Rel) for a in d0.atoms):
        raise SemanticError("the query to rewrite must use relational atoms only")
    for a in d0.atoms:
        if a.name not in spec.target:
            raise SemanticError(f"relation {a.name} is not in the target schema", a.name)
    tgds = list(spec.body)
    q_atoms = list(d0.atoms)
    free = q.free
    disjuncts: list[Disjunct] = []
    seen = set()
    for groups in _partitions(len(q_atoms)):
        ngroups = max(groups, default=-1) + 1
        for tgd_of_group in itertools.product(range(len(tgds)), repeat=ngroups):
            per_atom = []
            for k, atom in enumerate(q_atoms):
                d = tgds[tgd_of_group[groups[k]]]
                opts = [
                    (tgd_of_group[groups[k]], ai)
                    for ai, b in enumerate(d.conclusion.disjuncts[0].atoms)
                    if b.name == atom.name and len(b.args) == len(atom.args)
                ]
                per_atom.append(opts)
            for choice in itertools.product(*per_atom):
                found = _cover(q_atoms, free, tgds, list(groups), list(choice))
                if found is None:
                    continue
                exists, atoms = found
                key = _canonical_disjunct(set(exists), atoms, free)
                if key in seen:
                    continue
                seen.add(key)
                disjuncts.append(_rename_away(Disjunct(exists, atoms), set(free)))
    return Rewriting(q, Query(free, _prune(spec.source, free, disjuncts)))


def _frozen(schema: Schema, free: tuple[str, ...], d: Disjunct):
    """The disjunct as an instance with its variables as nulls, equalities applied;
    None when the equalities identify two constants."""
    parent: dict = {}

    def key(t):
        return ("c", t.value) if isinstance(t, Const) else ("v", t.name)

    def find(k):
        while parent.get(k, k) != k:
            k = parent[k]
        return k

    for a in d.atoms:
        if isinstance(a, Eq):
            l, r = find(key(a.left)), find(key(a.right))
            if l == r:
                continue
            if l[0] == "c" and r[0] == "c":
                return None
            if l[0] == "c":
                l, r = r, l
            parent[l] = r

    def value(t):
        kind, name = find(key(t))
        return const(name) if kind == "c" else null(name)

    facts = frozenset(Fact(a.name, tuple(value(t) for t in a.args)) for a in d.atoms if isinstance(a, Rel))
    return Instance(schema, facts), tuple(value(Var(v)) for v in free)


def _contained(schema: Schema, free: tuple[str, ...], small, big: Disjunct) -> bool:
    """Answers of the frozen disjunct ``small`` are answers of ``big``."""
    inst, head = small
    env = {}
    for v, val in zip(free, head):
        if env.setdefault(v, val) != val:
            return False
    return next(match(big.atoms, inst, env), None) is not None


def _prune(schema: Schema, free: tuple[str, ...], disjuncts: list[Disjunct]) -> tuple[Disjunct, ...]:
    """Drop unsatisfiable disjuncts and those contained in another one."""
    kept: list[tuple[Disjunct, tuple]] = []
    for d in disjuncts:
        fr = _frozen(schema, free, d)
        if fr is None or any(_contained(schema, free, fr, e) for e, _ in kept):
            continue
        kept = [(e, efr) for e, efr in kept if not _contained(schema, free, efr, d)]
        kept.append((d, fr))
    return tuple(d for d, _ in kept)


def _rename_away(d: Disjunct, taken: set[str]) -> Disjunct:
    """Give existentials fresh plain names that avoid ``taken``."""
    s: dict[str, Term] = {}
    used = set(taken)
    for v in d.exists:
        base = v.split("_")[0]
        k = 1
        name = base
        while name in used:
            k += 1
            name = f"{base}{k}"
        used.add(name)
        s[v] = Var(name)

    def sub(t):
        return s.get(t.name, t) if isinstance(t, Var) else t

    atoms = []
    for a in d.atoms:
        if isinstance(a, Rel):
            atoms.append(Rel(a.name, tuple(sub(t) for t in a.args)))
        else:
            atoms.append(Eq(sub(a.left), sub(a.right)))
    return Disjunct(tuple(s[v].name for v in d.exists), tuple(atoms))


def maximum_recovery(spec: MappingSpec) -> MappingSpec:
    """One reverse dependency per tgd: the tgd's conclusion with its frontier
    guarded by C(.) implies the rewriting of that conclusion over the source."""
    if not spec.is_st_tgds or spec.semantics != "standard":
        raise SemanticError("the maximum-recovery construction needs st-tgds under standard semantics")
    deps = []
    for d in spec.body:
        concl = d.conclusion.disjuncts[0]
        frontier = d.conclusion.free
        q = Query(frontier, (concl,))
        rewriting = rewrite_over_source(spec, q).rewritten
        premise = tuple(concl.atoms) + tuple(IsConst(Var(x)) for x in frontier)
        taken = set(atoms_vars(premise))
        disjuncts = tuple(_rename_away(dj, taken) for dj in rewriting.disjuncts)
        order: dict[str, None] = {}
        for dj in disjuncts:
            for v in atoms_vars(dj.atoms):
                if v in taken:
                    order.setdefault(v, None)
        deps.append(Dependency(premise, Query(tuple(order), disjuncts), "ts"))
    return MappingSpec(spec.target, spec.source, tuple(deps), name=f"{spec.name}_rec", direction="ts")

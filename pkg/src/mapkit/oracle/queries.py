"""Enumeration of conjunctive queries up to a size budget, and their answers."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

from ..core import Instance, Schema, Value
from ..evaluation import match
from ..lang.syntax import Query, Rel, Var, atoms_vars


def _growth_strings(n: int) -> Iterator[tuple[int, ...]]:
    """Restricted growth strings of length n: all set partitions of n positions."""

    def go(prefix, top):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for k in range(top + 2):
            yield from go(prefix + [k], max(top, k))

    yield from go([], -1)


def _canonical(body: tuple[Rel, ...]) -> tuple:
    best = None
    for perm in itertools.permutations(body):
        names: dict[str, int] = {}
        key = tuple((a.name, tuple(names.setdefault(t.name, len(names)) for t in a.args)) for a in perm)
        if best is None or key < best:
            best = key
    return best


@lru_cache(maxsize=None)
def cq_bodies(schema: Schema, budget: int) -> tuple[tuple[Rel, ...], ...]:
    """Bodies of 1..budget atoms without repeated atoms, one per isomorphism class."""
    rels = sorted(schema.relations)
    seen = set()
    out = []
    for size in range(1, budget + 1):
        for combo in itertools.combinations_with_replacement(rels, size):
            positions = sum(n for _, n in combo)
            for rgs in _growth_strings(positions):
                it = iter(rgs)
                body = tuple(Rel(r, tuple(Var(f"v{next(it)}") for _ in range(n))) for r, n in combo)
                if len(set(body)) < len(body):
                    continue
                key = _canonical(body)
                if key not in seen:
                    seen.add(key)
                    out.append(body)
    return tuple(out)


@dataclass(frozen=True)
class CQ:
    body: tuple[Rel, ...]
    free: tuple[str, ...]

    @property
    def query(self) -> Query:
        return Query.cq(self.free, self.body)

    def __str__(self) -> str:
        from ..lang.printer import print_conjunction

        return f"q({', '.join(self.free)}) :- {print_conjunction(self.body)}"


def free_subsets(body: tuple[Rel, ...]) -> list[tuple[str, ...]]:
    vs = atoms_vars(body)
    return [tuple(v for v, keep in zip(vs, bits) if keep) for bits in itertools.product((0, 1), repeat=len(vs))]


def assignments(body: tuple[Rel, ...], instance: Instance) -> set[tuple[Value, ...]]:
    vs = atoms_vars(body)
    return {tuple(env[v] for v in vs) for env in match(body, instance)}


def project(rows: set[tuple[Value, ...]], body: tuple[Rel, ...], free: tuple[str, ...]) -> set[tuple[Value, ...]]:
    vs = atoms_vars(body)
    idx = [vs.index(v) for v in free]
    return {tuple(r[i] for i in idx) for r in rows}


def constant_rows(rows: set[tuple[Value, ...]]) -> set[tuple[Value, ...]]:
    return {r for r in rows if all(v.is_constant for v in r)}

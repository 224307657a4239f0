"""Seeded random st-tgd mappings for sweeps and corpus tests."""
from __future__ import annotations

import random
from typing import Iterator

from .core import Schema
from .lang.syntax import Dependency, Disjunct, MappingSpec, Query, Rel, Var, atoms_vars

SOURCE = Schema("S", (("S", 2), ("P", 1)))
TARGET = Schema("T", (("T", 2), ("U", 1)))

_UNIVERSAL = ("x", "y", "z", "w")
_EXISTENTIAL = ("u", "v")


def _atoms(rng: random.Random, schema: Schema, names: tuple[str, ...], size: int) -> list[Rel]:
    rels = sorted(schema.relations)
    size = min(size, sum(len(names) ** arity for _, arity in rels))
    out: list[Rel] = []
    while len(out) < size:
        name, arity = rng.choice(rels)
        atom = Rel(name, tuple(Var(rng.choice(names)) for _ in range(arity)))
        if atom not in out:
            out.append(atom)
    return out


def random_tgd(rng: random.Random, max_atoms: int = 3) -> Dependency:
    premise = _atoms(rng, SOURCE, _UNIVERSAL[: rng.randint(1, 3)], rng.randint(1, max_atoms))
    universals = tuple(atoms_vars(premise))
    existentials = _EXISTENTIAL[: rng.randint(0, 2)]
    conclusion = _atoms(rng, TARGET, universals + existentials, rng.randint(1, max_atoms))
    used = atoms_vars(conclusion)
    exists = tuple(v for v in existentials if v in used)
    free = tuple(v for v in used if v in universals)
    return Dependency(tuple(premise), Query(free, (Disjunct(exists, tuple(conclusion)),)))


def random_mapping(rng: random.Random, max_tgds: int = 3, max_atoms: int = 3, name: str = "M") -> MappingSpec:
    body = tuple(random_tgd(rng, max_atoms) for _ in range(rng.randint(1, max_tgds)))
    return MappingSpec(SOURCE, TARGET, body, name=name)


def corpus(seed: int, size: int, max_tgds: int = 3, max_atoms: int = 3) -> Iterator[MappingSpec]:
    """``size`` random mappings, identical for identical seeds."""
    rng = random.Random(seed)
    for i in range(size):
        yield random_mapping(rng, max_tgds, max_atoms, name=f"M{i}")

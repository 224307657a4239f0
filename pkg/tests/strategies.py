"""Hypothesis strategies for small instances and mappings."""
from hypothesis import strategies as st

from mapkit.core import Fact, Instance, Schema, const, null
from mapkit.generate import random_mapping

CONSTANTS = tuple(const(str(i)) for i in range(1, 4))
NULLS = tuple(null(f"n{i}") for i in range(1, 3))


def facts_over(schema: Schema, values, max_size: int = 5):
    fact = st.sampled_from(sorted(schema.relations)).flatmap(
        lambda ra: st.tuples(*[st.sampled_from(values)] * ra[1]).map(lambda args, r=ra[0]: Fact(r, args))
    )
    return st.frozensets(fact, max_size=max_size)


def instances(schema: Schema, values=CONSTANTS + NULLS, max_size: int = 5):
    return facts_over(schema, values, max_size).map(lambda fs: Instance(schema, fs))


def ground_instances(schema: Schema, max_size: int = 5):
    return instances(schema, CONSTANTS, max_size)


@st.composite
def st_mappings(draw, max_tgds: int = 2, max_atoms: int = 2):
    import random

    seed = draw(st.integers(0, 10_000))
    return random_mapping(random.Random(seed), max_tgds, max_atoms)

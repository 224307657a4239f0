"""Brute-force semantics over finite instance pools."""
from .checkers import (
    FAIL,
    INAPPLICABLE,
    PASS,
    Verdict,
    check_cq_recovery,
    check_fagin_inverse,
    check_max_extended_recovery,
    check_max_recovery,
    check_quasi_inverse,
    check_recovery,
    compare_cq_recoveries,
    cq_equivalent,
    equivalence_classes,
    extended_pair,
)
from .pools import InstancePool, Pools
from .relations import (
    Composition,
    Empty,
    Extended,
    Full,
    Hom,
    IdBar,
    MappingRelation,
    Standard,
    Transposed,
    Universal,
    compose_relations,
    id_bar,
    materialize,
    minimize,
    relations_equal,
)
from .tables import pair_table, raw_composition_member

__all__ = [
    "FAIL",
    "INAPPLICABLE",
    "PASS",
    "Composition",
    "Empty",
    "Extended",
    "Full",
    "Hom",
    "IdBar",
    "InstancePool",
    "MappingRelation",
    "Pools",
    "Standard",
    "Transposed",
    "Universal",
    "Verdict",
    "check_cq_recovery",
    "check_fagin_inverse",
    "check_max_extended_recovery",
    "check_max_recovery",
    "check_quasi_inverse",
    "check_recovery",
    "compare_cq_recoveries",
    "compose_relations",
    "cq_equivalent",
    "equivalence_classes",
    "extended_pair",
    "id_bar",
    "materialize",
    "minimize",
    "pair_table",
    "raw_composition_member",
    "relations_equal",
]

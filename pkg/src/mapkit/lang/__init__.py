from .parser import ParseError, parse_instance, parse_mapping, parse_query, tokenize
from .printer import print_instance, print_mapping, print_query, print_value
from .syntax import (
    SEMANTICS,
    Atom,
    Const,
    Dependency,
    Disjunct,
    Eq,
    Func,
    IsConst,
    MappingSpec,
    Neq,
    Query,
    Rel,
    SOClause,
    SOtgd,
    Term,
    Var,
)
from .validate import Violation, validate

__all__ = [
    "SEMANTICS",
    "Atom",
    "Const",
    "Dependency",
    "Disjunct",
    "Eq",
    "Func",
    "IsConst",
    "MappingSpec",
    "Neq",
    "ParseError",
    "Query",
    "Rel",
    "SOClause",
    "SOtgd",
    "Term",
    "Var",
    "Violation",
    "parse_instance",
    "parse_mapping",
    "parse_query",
    "print_instance",
    "print_mapping",
    "print_query",
    "print_value",
    "tokenize",
    "validate",
]

"""Workbench for nominal subtyping with declaration-site variance.

Decides subtyping in the decidable fragments, classifies class tables by
contravariance, expansive inheritance and multiple instantiation, converts
between tree grammars and class tables, and generates fluent-API subtyping
machines from context-free grammars.
"""

from .core import (CONTRA, COV, INV, BudgetExceeded, ClassDecl, ClassTable, ClosedSet, Diagnostic,
                   FeatureSet, IllFormedTable, TableError, UndeclaredClass, Variance,
                   check_well_formed, classify, closure, supertypes_of)
from .pipeline import Machine, build_machine
from .subtyping import (EQ, SUB, SUP, AlphabetSplit, CycleRejected, Fails, FragmentRefused, Holds,
                        ProofTrace, Query, Relation, SubtypingCache, Undecided, check_trace, decide,
                        decide_non_contravariant, decide_non_expansive, parse_query)
from .tableio import TableFile, format_table, load_table, parse_table_text
from .terms import Param, Term, apply_subst, format_term, match_pattern, parse_term

__all__ = [
    "AlphabetSplit", "BudgetExceeded", "CONTRA", "COV", "ClassDecl", "ClassTable", "ClosedSet",
    "CycleRejected", "Diagnostic", "EQ", "Fails", "FeatureSet", "FragmentRefused", "Holds", "INV",
    "IllFormedTable", "Machine", "Param", "ProofTrace", "Query", "Relation", "SUB", "SUP",
    "SubtypingCache", "TableError", "TableFile", "Term", "UndeclaredClass", "Undecided", "Variance",
    "apply_subst", "build_machine", "check_trace", "check_well_formed", "classify", "closure",
    "decide", "decide_non_contravariant", "decide_non_expansive", "format_table", "format_term",
    "load_table", "match_pattern", "parse_query", "parse_table_text", "parse_term", "supertypes_of",
]

"""starquery: code search over program-analysis graphs.

A restricted Datalog core with stratified negation, an indexed fact store,
a delta-driven evaluator, a query surface language with a standard library
of templates, a toy-language frontend for building analysis graphs, and an
interactive query service with autocompletion.
"""

__version__ = "0.1.0"

from .facts import (
    Database,
    DbStats,
    FactsError,
    Matcher,
    RegexError,
    db_stats,
    literal_relation,
    load_database,
    load_database_file,
    serialize_database,
)
from .engine import MatchSet, evaluate, match_set_json, run_strata

__all__ = [
    "Database",
    "DbStats",
    "FactsError",
    "Matcher",
    "MatchSet",
    "RegexError",
    "db_stats",
    "evaluate",
    "literal_relation",
    "load_database",
    "load_database_file",
    "match_set_json",
    "run_strata",
    "serialize_database",
]

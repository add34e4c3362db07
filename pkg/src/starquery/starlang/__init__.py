"""Rule language kernel: syntax, validation, stratification, rewriting."""

from .syntax import (
    Citation,
    Invocation,
    InvocationCite,
    Program,
    Rule,
    Span,
    SyntaxErr,
    TemplateDef,
    format_program,
    format_rule,
    load_program,
    parse_invocation,
    parse_program,
)
from .validate import (
    NegativeCycleError,
    Stratification,
    Violation,
    is_flat,
    stratify,
    validate_flat,
    validate_rules,
)
from .transform import (
    ExpansionError,
    InvalidRuleError,
    NameAllocator,
    expand_templates,
    flatten_rule,
)

__all__ = [
    "Citation",
    "ExpansionError",
    "InvalidRuleError",
    "Invocation",
    "InvocationCite",
    "NameAllocator",
    "NegativeCycleError",
    "Program",
    "Rule",
    "Span",
    "Stratification",
    "SyntaxErr",
    "TemplateDef",
    "Violation",
    "expand_templates",
    "flatten_rule",
    "format_program",
    "format_rule",
    "is_flat",
    "load_program",
    "parse_invocation",
    "parse_program",
    "stratify",
    "validate_flat",
    "validate_rules",
]

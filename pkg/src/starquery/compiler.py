"""Compile surface queries into rule programs.

Conjunctions become conjoined citations on one head, disjunctions become
several rules with the same head, and `not` becomes a negative citation.
Literals turn into dynamically bound node sets over the attribute index,
template invocations expand (memoized) through the standard library, and
`PRED:` citations resolve through the session's predicate configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .codesearch import (
    QAnd,
    QLiteral,
    QNot,
    QOr,
    QPred,
    QTemplate,
    format_query,
    parse_query,
)
from .facts import Matcher
from .starlang import (
    Citation,
    Invocation,
    NegativeCycleError,
    Program,
    Rule,
    expand_templates,
    format_program,
    validate_rules,
)
from .stdlib import ARG_NAME, DECL, FUNCTION, PredicateConfig, default_registry

ANY = "__any"
NONE = "__none"


class CompileError(ValueError):
    pass


@dataclass
class CompiledQuery:
    program: Program
    query_text: str
    warnings: list[str] = field(default_factory=list)

    def star_text(self) -> str:
        """The compiled program as rule-language text, for inspection."""
        program = self.program.copy()
        program.templates = {}
        return format_program(program)


class _Compiler:
    def __init__(self, registry, config: PredicateConfig):
        self.registry = registry
        self.config = config
        self.program = Program(templates=dict(registry.template_defs))
        self.warnings: list[str] = []
        self._literal_memo: dict = {}
        self._predicate_memo: dict[str, str] = {}
        self._resolving: list[str] = []
        self._builtins: set[str] = set()

    def fresh(self, prefix: str) -> str:
        self.program.fresh_counter += 1
        return f"__{prefix}{self.program.fresh_counter}"

    def ensure_any(self) -> str:
        if ANY not in self._builtins:
            self._builtins.add(ANY)
            self.program.rules.append(Rule(ANY, "X", ()))
        return ANY

    def ensure_none(self) -> str:
        if NONE not in self._builtins:
            self.ensure_any()
            self._builtins.add(NONE)
            self.program.rules.append(
                Rule(NONE, "X", (Citation(ANY, ("X",), negated=True),)))
        return NONE

    def literal_symbol(self, attribute: str, literal: QLiteral) -> str:
        if literal.kind == "wildcard":
            return self.ensure_any()
        matcher = (Matcher.exact(literal.text) if literal.kind == "exact"
                   else Matcher.regex(literal.text))
        key = (attribute, matcher)
        symbol = self._literal_memo.get(key)
        if symbol is None:
            symbol = self.fresh("lit")
            self._literal_memo[key] = symbol
            self.program.literals[symbol] = (attribute, matcher)
        return symbol

    def declaration_symbol(self, literal: QLiteral) -> str:
        """A bare name in declaration position: functions declared as it."""
        name_symbol = self.literal_symbol("name", literal)
        memoized = self._literal_memo.get(("decl", name_symbol))
        if memoized is None:
            memoized = self.fresh("q")
            self._literal_memo[("decl", name_symbol)] = memoized
            self.program.rules.append(Rule(
                memoized, "X",
                (Citation("kind_functiondecl", ("X",)),
                 Citation(name_symbol, ("X",)))))
        return memoized

    def compile_node(self, node) -> str:
        if isinstance(node, QLiteral):
            return self.literal_symbol("name", node)
        if isinstance(node, QPred):
            return self.compile_predicate(node)
        if isinstance(node, QTemplate):
            return self.compile_template(node)
        if isinstance(node, (QAnd, QOr, QNot)):
            return self.compile_connective(node)
        raise CompileError(f"cannot compile {node!r}")

    def compile_connective(self, node) -> str:
        head = self.fresh("q")
        if isinstance(node, QAnd):
            body = [self.citation_for(conjunct)
                    for conjunct in _flatten(node, QAnd)]
            self.program.rules.append(Rule(head, "X", tuple(body)))
        elif isinstance(node, QOr):
            for branch in _flatten(node, QOr):
                self.program.rules.append(
                    Rule(head, "X", (self.citation_for(branch),)))
        else:
            self.program.rules.append(Rule(head, "X", (self.citation_for(node),)))
        return head

    def citation_for(self, node) -> Citation:
        if isinstance(node, QNot):
            return Citation(self.compile_node(node.child), ("X",), negated=True)
        return Citation(self.compile_node(node), ("X",))

    def compile_predicate(self, node: QPred) -> str:
        name = node.name
        if name == "Any":
            return self.ensure_any()
        if name == "None":
            return self.ensure_none()
        memoized = self._predicate_memo.get(name)
        if memoized is not None:
            return memoized
        binding = self.config.binding(name)
        if binding is None:
            if not self.registry.is_predicate(name):
                self.warnings.append(
                    f"predicate {name!r} is not in the standard library and "
                    f"has no configuration; it matches nothing")
            else:
                self.warnings.append(
                    f"predicate {name!r} has no configuration for this "
                    f"session; it matches nothing")
            symbol = f"__unbound_{name}"
        elif "tag" in binding:
            symbol = binding["tag"]
        else:
            if name in self._resolving:
                cycle = " -> ".join(self._resolving + [name])
                raise CompileError(f"predicate configuration cycle: {cycle}")
            self._resolving.append(name)
            try:
                sub = parse_query(binding["query"], self.registry)
                symbol = self.compile_node(sub)
            finally:
                self._resolving.pop()
        self._predicate_memo[name] = symbol
        return symbol

    def compile_template(self, node: QTemplate) -> str:
        entry = self.registry.lookup(node.name)
        if entry is None or entry.kind != "template":
            raise CompileError(f"unknown template {node.name!r}")
        if len(node.args) != entry.arity:
            raise CompileError(
                f"template {node.name!r} takes {entry.arity} argument(s), "
                f"got {len(node.args)}")
        symbols = []
        for param, arg in zip(entry.params, node.args):
            if isinstance(arg, QLiteral):
                if param == FUNCTION:
                    # a bare name in call-site position means calls to it
                    symbols.append(self.compile_template(
                        QTemplate("CallExpression", (arg,))))
                elif param == DECL:
                    symbols.append(self.declaration_symbol(arg))
                elif param == ARG_NAME:
                    symbols.append(self.literal_symbol("arg_name", arg))
                else:
                    symbols.append(self.literal_symbol("name", arg))
            else:
                symbols.append(self.compile_node(arg))
        self.program, symbol = expand_templates(
            self.program, Invocation(node.name, tuple(symbols)))
        return symbol


def _flatten(node, kind):
    if isinstance(node, kind):
        yield from _flatten(node.left, kind)
        yield from _flatten(node.right, kind)
    else:
        yield node


def compile_query(query, registry=None, config: PredicateConfig | None = None,
                  query_text: str | None = None) -> CompiledQuery:
    """Compile query text (or a parsed AST) into an evaluable program."""
    registry = registry or default_registry()
    config = config or PredicateConfig()
    if isinstance(query, str):
        query_text = query
        query = parse_query(query, registry)
    compiler = _Compiler(registry, config)
    compiler.program.query = compiler.compile_node(query)
    program = compiler.program

    violations = validate_rules(program)
    if violations:  # compilation output is valid by construction
        raise CompileError("; ".join(str(v) for v in violations))
    try:
        from .starlang import stratify

        stratify(program)
    except NegativeCycleError as exc:
        raise CompileError(str(exc)) from exc
    return CompiledQuery(
        program=program,
        query_text=query_text if query_text is not None else format_query(query),
        warnings=compiler.warnings,
    )

"""Concrete syntax and AST for the rule language.

Rules are written `head(X) :- cit1, cit2.` with `!` for negation and `.`
as the delimiter; an empty body is written `head(X) :- .`.  Identifiers
starting with an uppercase letter are variables, everything else is a
predicate symbol.  Template definitions use a block form:

    template around(p) {
      t(X) :- p(X).
      t(X) :- e(X, Y), around(p)(Y).
    }

where `around(p)(Y)` cites an instantiation of the template applied to
variable Y.  A `query name.` statement marks the distinguished predicate.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace


class SyntaxErr(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} at line {line}, column {col}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Span:
    line: int
    col: int


@dataclass(frozen=True)
class Citation:
    predicate: str
    vars: tuple[str, ...]
    negated: bool = False
    span: Span | None = field(default=None, compare=False)

    @property
    def arity(self) -> int:
        return len(self.vars)

    @property
    def is_edge(self) -> bool:
        return len(self.vars) == 2


@dataclass(frozen=True)
class Invocation:
    """A template applied to argument symbols (or nested invocations)."""

    name: str
    args: tuple  # of str | Invocation


@dataclass(frozen=True)
class InvocationCite:
    """A template invocation cited in a rule body, applied to a variable."""

    invocation: Invocation
    var: str
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Rule:
    head: str
    head_var: str
    body: tuple  # of Citation | InvocationCite
    span: Span | None = field(default=None, compare=False)

    def citations(self):
        return [c for c in self.body if isinstance(c, Citation)]


@dataclass(frozen=True)
class TemplateDef:
    name: str
    holes: tuple[str, ...]
    rules: tuple[Rule, ...]

    @property
    def result(self) -> str:
        """The predicate an invocation of this template denotes."""
        return self.rules[0].head


@dataclass
class Program:
    rules: list = field(default_factory=list)
    templates: dict = field(default_factory=dict)
    query: str | None = None
    # symbol -> (attribute name, Matcher); filled in by the query compiler
    literals: dict = field(default_factory=dict)
    # (template name, resolved arg symbols) -> result symbol
    expansions: dict = field(default_factory=dict)
    fresh_counter: int = 0

    def head_predicates(self) -> set[str]:
        return {rule.head for rule in self.rules}

    def copy(self) -> "Program":
        return Program(
            rules=list(self.rules),
            templates=dict(self.templates),
            query=self.query,
            literals=dict(self.literals),
            expansions=dict(self.expansions),
            fresh_counter=self.fresh_counter,
        )


_TOKEN = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<comment>#[^\n]*)"
    r"|(?P<implies>:-)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<punct>[(),.!{}])"
)


def _is_var(name: str) -> bool:
    return name[0].isupper()


class _Tokens:
    def __init__(self, text: str):
        self.tokens = []
        line, col = 1, 1
        pos = 0
        while pos < len(text):
            match = _TOKEN.match(text, pos)
            if not match:
                raise SyntaxErr(f"unexpected character {text[pos]!r}", line, col)
            value = match.group(0)
            kind = match.lastgroup
            if kind not in ("ws", "comment"):
                self.tokens.append((kind, value, line, col))
            newlines = value.count("\n")
            if newlines:
                line += newlines
                col = len(value) - value.rfind("\n")
            else:
                col += len(value)
            pos = match.end()
        self.tokens.append(("eof", "", line, col))
        self.index = 0

    def peek(self):
        return self.tokens[self.index]

    def next(self):
        token = self.tokens[self.index]
        if token[0] != "eof":
            self.index += 1
        return token

    def expect(self, kind: str, value: str | None = None):
        token = self.next()
        if token[0] != kind or (value is not None and token[1] != value):
            want = value if value is not None else kind
            raise SyntaxErr(f"expected {want!r}, found {token[1] or 'end of input'!r}",
                            token[2], token[3])
        return token

    def at_punct(self, value: str) -> bool:
        token = self.peek()
        return token[0] == "punct" and token[1] == value


def parse_program(text: str) -> Program:
    """Parse a full program: rules, template blocks, optional query mark."""
    tokens = _Tokens(text)
    program = Program()
    while tokens.peek()[0] != "eof":
        kind, value, line, col = tokens.peek()
        if kind == "ident" and value == "template":
            template = _parse_template(tokens)
            if template.name in program.templates:
                raise SyntaxErr(f"template {template.name!r} redefined", line, col)
            program.templates[template.name] = template
        elif kind == "ident" and value == "query":
            tokens.next()
            name = tokens.expect("ident")
            tokens.expect("punct", ".")
            program.query = name[1]
        else:
            program.rules.append(_parse_rule(tokens))
    return program


def _parse_template(tokens: _Tokens) -> TemplateDef:
    tokens.expect("ident", "template")
    name = tokens.expect("ident")
    tokens.expect("punct", "(")
    holes = []
    while True:
        hole = tokens.expect("ident")
        if _is_var(hole[1]):
            raise SyntaxErr("template holes are predicate symbols, not variables",
                            hole[2], hole[3])
        holes.append(hole[1])
        if tokens.at_punct(","):
            tokens.next()
            continue
        break
    tokens.expect("punct", ")")
    tokens.expect("punct", "{")
    rules = []
    while not tokens.at_punct("}"):
        rules.append(_parse_rule(tokens))
    tokens.expect("punct", "}")
    if not rules:
        name_line = name[2]
        raise SyntaxErr(f"template {name[1]!r} has no rules", name_line, name[3])
    return TemplateDef(name[1], tuple(holes), tuple(rules))


def _parse_rule(tokens: _Tokens) -> Rule:
    head = tokens.expect("ident")
    if _is_var(head[1]):
        raise SyntaxErr("rule head must be a predicate symbol", head[2], head[3])
    tokens.expect("punct", "(")
    head_var = tokens.expect("ident")
    if not _is_var(head_var[1]):
        raise SyntaxErr("head variable must start with an uppercase letter",
                        head_var[2], head_var[3])
    if tokens.at_punct(","):
        token = tokens.peek()
        raise SyntaxErr("rule heads take exactly one variable", token[2], token[3])
    tokens.expect("punct", ")")
    tokens.expect("implies")
    body = []
    if tokens.at_punct("."):
        tokens.next()
        return Rule(head[1], head_var[1], tuple(body), Span(head[2], head[3]))
    while True:
        body.append(_parse_citation(tokens))
        if tokens.at_punct(","):
            tokens.next()
            continue
        tokens.expect("punct", ".")
        break
    return Rule(head[1], head_var[1], tuple(body), Span(head[2], head[3]))


def _parse_citation(tokens: _Tokens):
    negated = False
    if tokens.at_punct("!"):
        tokens.next()
        negated = True
    name = tokens.expect("ident")
    if _is_var(name[1]):
        raise SyntaxErr("citation predicate must be a symbol, not a variable",
                        name[2], name[3])
    span = Span(name[2], name[3])
    tokens.expect("punct", "(")
    items = []
    while True:
        items.append(tokens.expect("ident"))
        if tokens.at_punct(","):
            tokens.next()
            continue
        break
    tokens.expect("punct", ")")
    if tokens.at_punct("("):
        # second parenthesis group: template invocation applied to a variable
        if negated:
            raise SyntaxErr("template invocations cannot be negated", span.line, span.col)
        tokens.next()
        var = tokens.expect("ident")
        if not _is_var(var[1]):
            raise SyntaxErr("invocation must be applied to a variable", var[2], var[3])
        tokens.expect("punct", ")")
        args = tuple(_invocation_arg(item) for item in items)
        return InvocationCite(Invocation(name[1], args), var[1], span)
    if all(_is_var(item[1]) for item in items):
        if len(items) > 2:
            raise SyntaxErr(
                f"predicates of arity {len(items)} are not supported (maximum is 2)",
                name[2], name[3])
        if negated and len(items) == 2:
            raise SyntaxErr("edge citations cannot be negated", span.line, span.col)
        return Citation(name[1], tuple(item[1] for item in items), negated, span)
    bad = next(item for item in items if not _is_var(item[1]))
    raise SyntaxErr(
        "citation arguments must be variables (template invocations need "
        "an applied variable, e.g. name(p)(X))", bad[2], bad[3])


def _invocation_arg(item):
    if _is_var(item[1]):
        raise SyntaxErr("template arguments are predicate symbols, not variables",
                        item[2], item[3])
    return item[1]


def load_program(path) -> Program:
    """Parse a program from a `.star` file."""
    with open(path, "r", encoding="utf-8") as handle:
        return parse_program(handle.read())


def parse_invocation(text: str) -> Invocation:
    """Parse a standalone invocation like `wrap(p, q)` or nested forms."""
    tokens = _Tokens(text)
    invocation = _parse_invocation_inner(tokens)
    tail = tokens.peek()
    if tail[0] != "eof":
        raise SyntaxErr(f"unexpected {tail[1]!r} after invocation", tail[2], tail[3])
    return invocation


def _parse_invocation_inner(tokens: _Tokens) -> Invocation:
    name = tokens.expect("ident")
    tokens.expect("punct", "(")
    args = []
    while True:
        item = tokens.peek()
        if item[0] != "ident":
            raise SyntaxErr("expected argument", item[2], item[3])
        # lookahead for nested invocation
        tokens.next()
        if tokens.at_punct("("):
            tokens.index -= 1
            args.append(_parse_invocation_inner(tokens))
        else:
            if _is_var(item[1]):
                raise SyntaxErr("template arguments are predicate symbols",
                                item[2], item[3])
            args.append(item[1])
        if tokens.at_punct(","):
            tokens.next()
            continue
        break
    tokens.expect("punct", ")")
    return Invocation(name[1], tuple(args))


def format_citation(citation) -> str:
    if isinstance(citation, InvocationCite):
        return f"{format_invocation(citation.invocation)}({citation.var})"
    bang = "!" if citation.negated else ""
    return f"{bang}{citation.predicate}({', '.join(citation.vars)})"


def format_invocation(invocation: Invocation) -> str:
    args = ", ".join(
        format_invocation(a) if isinstance(a, Invocation) else a
        for a in invocation.args
    )
    return f"{invocation.name}({args})"


def format_rule(rule: Rule) -> str:
    if not rule.body:
        return f"{rule.head}({rule.head_var}) :- ."
    body = ", ".join(format_citation(c) for c in rule.body)
    return f"{rule.head}({rule.head_var}) :- {body}."


def format_program(program: Program) -> str:
    """Canonical text form; parse_program round-trips it."""
    lines = []
    for template in program.templates.values():
        lines.append(f"template {template.name}({', '.join(template.holes)}) {{")
        for rule in template.rules:
            lines.append(f"  {format_rule(rule)}")
        lines.append("}")
    for rule in program.rules:
        lines.append(format_rule(rule))
    if program.query:
        lines.append(f"query {program.query}.")
    return "\n".join(lines) + "\n"


def rename_rule(rule: Rule, mapping: dict) -> Rule:
    """Rewrite predicate symbols in a rule according to `mapping`."""
    body = []
    for citation in rule.body:
        if isinstance(citation, Citation):
            body.append(replace(citation, predicate=mapping.get(citation.predicate,
                                                               citation.predicate)))
        else:
            body.append(citation)
    return replace(rule, head=mapping.get(rule.head, rule.head), body=tuple(body))

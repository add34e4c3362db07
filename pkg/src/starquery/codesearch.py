"""The query surface language: disjunctions of conjunctions over citations.

A query cites predicates (`PRED:AnySource`), invokes templates
(`CallExpression<"read">`, arguments are themselves queries), or names
literals (bare words, quoted strings, `~"regex"` patterns, or the `*`
wildcard).  `not` binds tighter than `and`, which binds tighter than
`or`; parentheses group.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

KEYWORDS = {"and", "or", "not"}

_BARE_WORD = re.compile(r"[^\s<>(),~\"]+")
_SAFE_BARE = re.compile(r"^[A-Za-z_*][A-Za-z0-9_.*]*$")


class QuerySyntaxError(ValueError):
    def __init__(self, message: str, offset: int, line: int, col: int,
                 expected: tuple = ()):
        super().__init__(f"{message} at line {line}, column {col}")
        self.offset = offset
        self.line = line
        self.col = col
        self.expected = expected


@dataclass(frozen=True)
class QLiteral:
    kind: str  # "exact" | "regex" | "wildcard"
    text: str
    span: int = field(default=0, compare=False)


@dataclass(frozen=True)
class QPred:
    name: str
    span: int = field(default=0, compare=False)


@dataclass(frozen=True)
class QTemplate:
    name: str
    args: tuple
    span: int = field(default=0, compare=False)


@dataclass(frozen=True)
class QNot:
    child: object


@dataclass(frozen=True)
class QAnd:
    left: object
    right: object


@dataclass(frozen=True)
class QOr:
    left: object
    right: object


@dataclass(frozen=True)
class _Token:
    kind: str  # word, string, regex, punct, eof
    value: str
    offset: int


def _line_col(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    start = text.rfind("\n", 0, offset) + 1
    return line, offset - start + 1


def tokenize(text: str, lenient: bool = False) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    length = len(text)
    while pos < length:
        char = text[pos]
        if char.isspace():
            pos += 1
            continue
        if char in "<>(),":
            tokens.append(_Token("punct", char, pos))
            pos += 1
            continue
        if char == '"' or (char == "~" and text[pos:pos + 2] == '~"'):
            kind = "string" if char == '"' else "regex"
            start = pos
            pos += 1 if kind == "string" else 2
            value = []
            closed = False
            while pos < length:
                current = text[pos]
                if current == "\\" and pos + 1 < length:
                    value.append(text[pos + 1])
                    pos += 2
                    continue
                if current == '"':
                    closed = True
                    pos += 1
                    break
                value.append(current)
                pos += 1
            if not closed and not lenient:
                line, col = _line_col(text, start)
                raise QuerySyntaxError("unterminated string literal",
                                       start, line, col)
            tokens.append(_Token("open_string" if not closed else kind,
                                 "".join(value), start))
            continue
        match = _BARE_WORD.match(text, pos)
        if match:
            tokens.append(_Token("word", match.group(0), pos))
            pos = match.end()
            continue
        line, col = _line_col(text, pos)
        if lenient:
            pos += 1
            continue
        raise QuerySyntaxError(f"unexpected character {char!r}", pos, line, col)
    tokens.append(_Token("eof", "", length))
    return tokens


class _Parser:
    def __init__(self, text: str, registry=None):
        self.text = text
        self.tokens = tokenize(text)
        self.index = 0
        self.registry = registry

    def error(self, message: str, token: _Token, expected=()):
        line, col = _line_col(self.text, token.offset)
        shown = token.value or "end of input"
        raise QuerySyntaxError(f"{message} (found {shown!r})",
                               token.offset, line, col, tuple(expected))

    def peek(self) -> _Token:
        return self.tokens[self.index]

    def next(self) -> _Token:
        token = self.tokens[self.index]
        if token.kind != "eof":
            self.index += 1
        return token

    def at_punct(self, value: str) -> bool:
        token = self.peek()
        return token.kind == "punct" and token.value == value

    def parse(self):
        node = self.parse_or()
        tail = self.peek()
        if tail.kind != "eof":
            self.error("unexpected trailing input", tail,
                       expected=("and", "or"))
        return node

    def parse_or(self):
        node = self.parse_and()
        while self.peek().kind == "word" and self.peek().value == "or":
            self.next()
            node = QOr(node, self.parse_and())
        return node

    def parse_and(self):
        node = self.parse_not()
        while self.peek().kind == "word" and self.peek().value == "and":
            self.next()
            node = QAnd(node, self.parse_not())
        return node

    def parse_not(self):
        if self.peek().kind == "word" and self.peek().value == "not":
            self.next()
            return QNot(self.parse_not())
        return self.parse_atom()

    def parse_atom(self):
        token = self.peek()
        if self.at_punct("("):
            self.next()
            node = self.parse_or()
            if not self.at_punct(")"):
                self.error("expected ')'", self.peek(), expected=(")",))
            self.next()
            return node
        if token.kind == "string":
            self.next()
            return QLiteral("exact", token.value, token.offset)
        if token.kind == "regex":
            self.next()
            return QLiteral("regex", token.value, token.offset)
        if token.kind == "word":
            self.next()
            word = token.value
            if word in KEYWORDS:
                self.error("expected a citation", token,
                           expected=("literal", "template", "PRED:name"))
            if word.startswith("PRED:"):
                name = word[len("PRED:"):]
                if not name:
                    self.error("missing predicate name after PRED:", token)
                return QPred(name, token.offset)
            if self.at_punct("<"):
                return self.parse_template(word, token)
            if word == "*":
                return QLiteral("wildcard", word, token.offset)
            if self.registry is not None and self.registry.is_predicate(word):
                # bare standard-library predicate names cite the predicate
                return QPred(word, token.offset)
            return QLiteral("exact", word, token.offset)
        self.error("expected a citation", token,
                   expected=("literal", "template", "PRED:name", "(", "not"))

    def parse_template(self, name: str, token: _Token):
        if self.registry is not None:
            arity = self.registry.template_arity(name)
            if arity is None:
                self.error(f"unknown template {name!r}", token)
        self.next()  # consume '<'
        args = [self.parse_or()]
        while self.at_punct(","):
            self.next()
            args.append(self.parse_or())
        if not self.at_punct(">"):
            self.error("expected '>'", self.peek(), expected=(">", ","))
        self.next()
        if self.registry is not None and len(args) != arity:
            self.error(f"template {name!r} takes {arity} argument(s), "
                       f"got {len(args)}", token)
        return QTemplate(name, tuple(args), token.offset)


def parse_query(text: str, registry=None):
    """Parse query text; with a registry, template names and arities are
    checked as well."""
    return _Parser(text, registry).parse()


def format_query(node, _level: int = 0) -> str:
    """Canonical text for a query AST; parse_query round-trips it."""
    # levels: 0 = or, 1 = and, 2 = not/atom
    if isinstance(node, QOr):
        text = f"{format_query(node.left, 0)} or {format_query(node.right, 1)}"
        return f"({text})" if _level > 0 else text
    if isinstance(node, QAnd):
        text = f"{format_query(node.left, 1)} and {format_query(node.right, 2)}"
        return f"({text})" if _level > 1 else text
    if isinstance(node, QNot):
        return f"not {format_query(node.child, 2)}"
    if isinstance(node, QTemplate):
        args = ", ".join(format_query(a, 0) for a in node.args)
        return f"{node.name}<{args}>"
    if isinstance(node, QPred):
        return f"PRED:{node.name}"
    if isinstance(node, QLiteral):
        if node.kind == "wildcard":
            return "*"
        escaped = node.text.replace("\\", "\\\\").replace('"', '\\"')
        if node.kind == "regex":
            return f'~"{escaped}"'
        if (_SAFE_BARE.match(node.text) and node.text not in KEYWORDS
                and not node.text.startswith("PRED:")):
            return node.text
        return f'"{escaped}"'
    raise TypeError(f"not a query node: {node!r}")


@dataclass(frozen=True)
class CursorContext:
    """Where the cursor sits in a partially written query."""

    kind: str             # "literal" | "citation" | "connective"
    template: str | None  # innermost open template invocation, if any
    arg_index: int        # which of its arguments the cursor is in
    prefix: str           # fragment being completed (no quotes)
    replace_from: int     # offset the completion replaces from
    quoted: bool          # the fragment started with an opening quote


def probe_context(text: str, cursor: int) -> CursorContext:
    """Classify the cursor position with an error-tolerant scan.

    Template invocations opened before the cursor and not yet closed form
    the context stack; the last complete token decides whether a citation
    may start here or a connective is expected.
    """
    cursor = max(0, min(cursor, len(text)))
    tokens = [t for t in tokenize(text[:cursor], lenient=True)
              if t.kind != "eof"]

    stack: list[tuple[str, int]] = []  # (template name, argument index)
    previous: _Token | None = None
    last: _Token | None = None
    for token in tokens:
        if token.kind == "punct":
            if token.value == "<" and previous is not None \
                    and previous.kind == "word" \
                    and previous.value not in KEYWORDS:
                stack.append((previous.value, 0))
            elif token.value == ">" and stack:
                stack.pop()
            elif token.value == "," and stack:
                name, arg = stack[-1]
                stack[-1] = (name, arg + 1)
        previous = token
        last = token

    template, arg_index = (stack[-1] if stack else (None, 0))

    # the fragment being completed, if the cursor touches one
    prefix = ""
    replace_from = cursor
    quoted = False
    if last is not None:
        if last.kind == "open_string":
            prefix = last.value
            replace_from = last.offset
            quoted = True
            return CursorContext("literal", template, arg_index, prefix,
                                 replace_from, quoted)
        if last.kind == "word" and last.offset + len(last.value) == cursor:
            if last.value not in KEYWORDS:
                prefix = last.value
                replace_from = last.offset
                last = tokens[-2] if len(tokens) >= 2 else None

    starts_citation = last is None or (
        (last.kind == "word" and last.value in KEYWORDS)
        or (last.kind == "punct" and last.value in "(,<")
    )
    if starts_citation:
        if template is not None and not prefix.startswith("PRED:"):
            return CursorContext("literal", template, arg_index, prefix,
                                 replace_from, quoted)
        return CursorContext("citation", template, arg_index, prefix,
                             replace_from, quoted)
    return CursorContext("connective", template, arg_index, "", cursor, False)

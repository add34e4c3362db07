"""Standard library for the query language.

Structural templates expand to rule patterns over the graph's edge
vocabulary (`dataflow`, `taint`, `arg0`..`arg7`, `named_arg`,
`param1`..`param7`, `param_self`, `returns`, `returned_by`,
`annotated_by`, `in_file`, `same_object`) and the per-kind node sets
(`kind_callexpression`, ...).  Security predicates are name-registered
only: their meaning comes from a per-session predicate configuration
mapping each name to a sub-query or to a tag relation shipped with the
graph; unconfigured ones match nothing.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .starlang import parse_program

QUERY = "query"        # argument is a sub-query (literals match node names)
FUNCTION = "function"  # bare literal arguments coerce to CallExpression<...>
DECL = "declaration"   # bare literal arguments match function declarations
ARG_NAME = "arg_name"  # literal arguments match this attribute instead


@dataclass(frozen=True)
class StdlibEntry:
    name: str
    kind: str  # "template" | "predicate"
    arity: int
    doc: str
    params: tuple = ()


_TEMPLATE_SOURCE = """
template CallExpression(v) { t(X) :- kind_callexpression(X), v(X). }
template Identifier(p) { t(X) :- kind_identifier(X), p(X). }
template StringLiteral(v) { t(X) :- kind_stringliteral(X), v(X). }
template NumberLiteral(v) { t(X) :- kind_numberliteral(X), v(X). }
template BooleanLiteral(v) { t(X) :- kind_booleanliteral(X), v(X). }
template Literal(v) {
  t(X) :- kind_stringliteral(X), v(X).
  t(X) :- kind_numberliteral(X), v(X).
  t(X) :- kind_booleanliteral(X), v(X).
}
template InPath(p) { t(X) :- in_file(X, Y), p(Y). }
template HasAnnotation(a) { t(X) :- annotated_by(X, Y), a(Y). }
template ForSameObject(p) { t(X) :- same_object(X, Y), p(Y). }

template DataFlowAfter(p) {
  t(X) :- dataflow(Y, X), p(Y).
  t(X) :- dataflow(Y, X), t(Y).
}
template DataFlowsFrom(s) {
  t(X) :- taint(Y, X), s(Y).
  t(X) :- taint(Y, X), t(Y).
}
template DataFlowsInto(k) {
  t(X) :- taint(X, Y), k(Y).
  t(X) :- taint(X, Y), t(Y).
}
template Taint(src, san, snk) {
  found(X) :- snk(X), reach(X).
  reach(X) :- src(X).
  reach(X) :- taint(Y, X), pass(Y).
  pass(X) :- reach(X), !san(X).
}

template HasNamedArg(n, v) { t(X) :- named_arg(X, Y), n(Y), v(Y). }
template NamedArgIn(n, f) { t(X) :- named_arg(Y, X), n(X), f(Y). }
template ExplicitSelfParamIn(f) { t(X) :- param_self(Y, X), f(Y). }
template Returns(v) { t(X) :- returns(X, Y), v(Y). }
template ReturnedBy(f) { t(X) :- returned_by(X, Y), f(Y). }

template And(a, b) { t(X) :- a(X), b(X). }
template Or(a, b) {
  t(X) :- a(X).
  t(X) :- b(X).
}
template Not(a) { t(X) :- !a(X). }
"""

ARG_EDGES = [f"arg{i}" for i in range(8)]
PARAM_EDGES = [f"param{i}" for i in range(1, 8)]


def _generated_template_source() -> str:
    pieces = [_TEMPLATE_SOURCE]
    for index, edge in enumerate(ARG_EDGES):
        pieces.append(
            f"template HasArg{index}(v) {{ t(X) :- {edge}(X, Y), v(Y). }}")
        pieces.append(
            f"template Arg{index}In(f) {{ t(X) :- {edge}(Y, X), f(Y). }}")
    any_arg = [f"  t(X) :- {edge}(X, Y), v(Y)." for edge in ARG_EDGES]
    any_arg.append("  t(X) :- named_arg(X, Y), v(Y).")
    pieces.append("template HasAnyArg(v) {\n" + "\n".join(any_arg) + "\n}")
    for index, edge in enumerate(PARAM_EDGES, start=1):
        pieces.append(
            f"template Param{index}In(f) {{ t(X) :- {edge}(Y, X), f(Y). }}")
    any_param = [f"  t(X) :- {edge}(Y, X), f(Y)." for edge in PARAM_EDGES]
    any_param.append("  t(X) :- param_self(Y, X), f(Y).")
    pieces.append("template AnyParamIn(f) {\n" + "\n".join(any_param) + "\n}")
    return "\n".join(pieces)


_TEMPLATE_DOCS = {
    "And": ("Both arguments must match.", (QUERY, QUERY)),
    "AnyParamIn": ("Every declared parameter of the matching function.",
                   (DECL,)),
    "BooleanLiteral": ("Boolean literals with the given value.", (QUERY,)),
    "CallExpression": ("Calls of the given function, method or constructor.",
                       (QUERY,)),
    "DataFlowAfter": ("Everything downstream of the argument in the dataflow "
                      "graph, over one or more steps.", (QUERY,)),
    "DataFlowsFrom": ("Places tainted data can flow from.", (QUERY,)),
    "DataFlowsInto": ("Places tainted data can flow into.", (QUERY,)),
    "ExplicitSelfParamIn": ("The explicit receiver parameter of the matching "
                            "function.", (DECL,)),
    "ForSameObject": ("Entities operating on the same object as the argument.",
                      (QUERY,)),
    "HasAnnotation": ("Entities carrying the given annotation.", (QUERY,)),
    "HasAnyArg": ("Entities passing the given value in any argument position.",
                  (QUERY,)),
    "HasNamedArg": ("Entities passing the given value through the named "
                    "argument.", (ARG_NAME, QUERY)),
    "Identifier": ("Identifiers matching the argument.", (QUERY,)),
    "InPath": ("Entities inside source files with the given path.", (QUERY,)),
    "Literal": ("String, number or boolean literals with the given value.",
                (QUERY,)),
    "NamedArgIn": ("The named argument passed to the matching function.",
                   (ARG_NAME, FUNCTION)),
    "NumberLiteral": ("Number literals with the given value.", (QUERY,)),
    "Not": ("Matches when the argument does not.", (QUERY,)),
    "Or": ("Either argument may match.", (QUERY, QUERY)),
    "ReturnedBy": ("Values returned by the matching function.", (DECL,)),
    "Returns": ("Functions returning the given value.", (QUERY,)),
    "StringLiteral": ("String literals with the given value.", (QUERY,)),
    "Taint": ("Flows from the sources to the sinks that avoid the "
              "sanitizers.", (QUERY, QUERY, QUERY)),
}

for _i in range(8):
    _TEMPLATE_DOCS[f"HasArg{_i}"] = (
        f"Entities taking the given value as argument {_i}"
        + (" (the call receiver)." if _i == 0 else "."), (QUERY,))
    _TEMPLATE_DOCS[f"Arg{_i}In"] = (
        f"Argument {_i}"
        + (" (the call receiver)" if _i == 0 else "")
        + " of calls to the matching function.", (FUNCTION,))
for _i in range(1, 8):
    _TEMPLATE_DOCS[f"Param{_i}In"] = (
        f"Parameter {_i} of the matching function declaration.", (DECL,))


_SPECIAL_PREDICATE_DOCS = {
    "Any": "Matches every node.",
    "None": "Matches no node at all.",
    "AnySource": "Any location reading data an attacker may control.",
    "AnySink": "Any location exporting or displaying data.",
    "ErrorMessageOutput": "Places where error details are written out.",
}

_SOURCE_PREDICATES = [
    "ApexPageReferenceSource", "SourceArchive", "SourceCLI",
    "SourceClientFramework", "SourceContainsSensitiveData", "SourceCookie",
    "SourceDatabase", "SourceEnvironmentVariable", "SourceFile",
    "SourceHttpBody", "SourceHttpFileUpload", "SourceHttpHeader",
    "SourceHttpParam", "SourceLocalEnv", "SourceNetworkRequest",
    "SourceNonServer", "SourceRequestUrl", "SourceResourceAccess",
    "SourceRpcApiParam", "SourceServer", "SourceStdin",
    "SourceUnrestrictedArchiveFilePath", "SourceWebForm",
    "UnsafeSoqliConcatSource", "UnsafeSosliConcatSource",
]

_SINK_SANITIZER_FAMILIES = [
    "CleartextCookieStorage", "CleartextTransmission", "ClientXss",
    "CodeInjection", "CommandInjection", "Deserialization",
    "EmailContentInjection", "ErrorMessageOutput", "FileInclusion",
    "InformationDisclosure", "JndiInjection", "LdapInjection", "LogsForging",
    "NoSqli", "OpenRedirect", "Pt", "Redos", "Reflection", "Soqli", "Sosli",
    "Sqli", "Ssrf", "Ssti", "XPathInjection", "XamlInjection", "XmlInjection",
    "Xss", "Xxe", "ZipSlip",
]

_EXTRA_PREDICATES = [
    "MemoryCorruptionSanitizer", "PointerOperationSink", "PotentialXssSink",
    "PrototypePollutionAssignmentSanitizer", "PrototypePollutionAssignmentSink",
]


def _spaced(name: str) -> str:
    return re.sub(r"(?<=[a-z0-9])(?=[A-Z])", " ", name).lower()


def _predicate_entries():
    entries = {}

    def add(name: str, doc: str):
        entries[name] = StdlibEntry(name, "predicate", 0, doc)

    for name, doc in _SPECIAL_PREDICATE_DOCS.items():
        add(name, doc)
    for name in _SOURCE_PREDICATES:
        add(name, f"Configured source set: {_spaced(name)}.")
    for family in _SINK_SANITIZER_FAMILIES:
        add(f"{family}Sink", f"Configured sink set for {_spaced(family)}.")
        add(f"{family}Sanitizer",
            f"Configured sanitizer set for {_spaced(family)}.")
    for name in _EXTRA_PREDICATES:
        add(name, f"Configured node set: {_spaced(name)}.")
    return entries


class Registry:
    """Immutable name table for templates and predicates."""

    def __init__(self):
        templates = parse_program(_generated_template_source()).templates
        self.template_defs = templates
        self._entries: dict[str, StdlibEntry] = {}
        for name, definition in templates.items():
            doc, params = _TEMPLATE_DOCS[name]
            self._entries[name] = StdlibEntry(
                name, "template", len(definition.holes), doc, params)
        self._entries.update(_predicate_entries())

    def entries(self) -> list[StdlibEntry]:
        return sorted(self._entries.values(), key=lambda e: e.name)

    def lookup(self, name: str) -> StdlibEntry | None:
        return self._entries.get(name)

    def template_arity(self, name: str) -> int | None:
        entry = self._entries.get(name)
        if entry is None or entry.kind != "template":
            return None
        return entry.arity

    def is_predicate(self, name: str) -> bool:
        entry = self._entries.get(name)
        return entry is not None and entry.kind == "predicate"

    def predicate_names(self) -> list[str]:
        return [e.name for e in self.entries() if e.kind == "predicate"]

    def template_names(self) -> list[str]:
        return [e.name for e in self.entries() if e.kind == "template"]


_DEFAULT: Registry | None = None


def default_registry() -> Registry:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = Registry()
    return _DEFAULT


@dataclass
class PredicateConfig:
    """Session bindings for security predicates.

    Each entry maps a predicate name either to a sub-query (compiled in
    place) or to a tag: the name of a unary relation shipped with the
    graph.
    """

    entries: dict = field(default_factory=dict)

    @staticmethod
    def from_document(document) -> "PredicateConfig":
        if isinstance(document, (str, bytes)):
            document = json.loads(document)
        raw = document.get("predicates", {})
        entries = {}
        for name, binding in raw.items():
            if not isinstance(binding, dict) or \
                    not ({"query", "tag"} & set(binding)):
                raise ValueError(
                    f"predicate {name!r}: binding must carry 'query' or 'tag'")
            entries[name] = binding
        return PredicateConfig(entries)

    @staticmethod
    def load(path) -> "PredicateConfig":
        with open(path, "r", encoding="utf-8") as handle:
            return PredicateConfig.from_document(handle.read())

    def binding(self, name: str) -> dict | None:
        return self.entries.get(name)

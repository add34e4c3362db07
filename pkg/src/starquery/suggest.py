"""Context-sensitive autocompletion over a prebuilt per-graph index.

The index caches what a graph can actually match: call names with their
occurrence counts, annotation names, file paths, node-kind counts and
relation sizes.  Suggestions never evaluate queries; candidate ranking
reads only these cached counts, so completion stays fast regardless of
query complexity.  Candidates are ranked by how much evidence the graph
offers (occurrence counts for literals, cheap structural probes for
template names), with zero-evidence names trailing and ties broken
alphabetically.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field

from .codesearch import CursorContext, probe_context
from .facts import Database
from .stdlib import ARG_NAME, FUNCTION, Registry, default_registry

_SAFE_BARE_TEXT = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")


@dataclass(frozen=True)
class Suggestion:
    text: str
    kind: str      # template | predicate | literal | keyword
    evidence: int  # occurrence count backing the suggestion
    rank: int


@dataclass(frozen=True)
class SuggestionList:
    query: str
    cursor: int
    context: str
    replace_from: int
    suggestions: tuple

    def texts(self) -> list[str]:
        return [s.text for s in self.suggestions]


@dataclass
class SuggestionIndex:
    call_names: Counter = field(default_factory=Counter)
    annotation_names: Counter = field(default_factory=Counter)
    file_names: Counter = field(default_factory=Counter)
    name_counts: Counter = field(default_factory=Counter)
    kind_counts: Counter = field(default_factory=Counter)
    relation_sizes: dict = field(default_factory=dict)

    @staticmethod
    def build(db: Database) -> "SuggestionIndex":
        index = SuggestionIndex()
        for node in db.nodes:
            name = node.attr("name")
            index.kind_counts[node.kind] += 1
            if name:
                index.name_counts[name] += 1
                if node.kind == "CallExpression":
                    index.call_names[name] += 1
                elif node.kind == "Annotation":
                    index.annotation_names[name] += 1
                elif node.kind == "File":
                    index.file_names[name] += 1
        for name, relation in db.unary.items():
            index.relation_sizes[name] = len(relation)
        for name, relation in db.binary.items():
            index.relation_sizes[name] = len(relation)
        return index

    def relation(self, name: str) -> int:
        return self.relation_sizes.get(name, 0)

    def template_evidence(self, name: str) -> int:
        """Cheap non-emptiness estimate for a template's result here."""
        if name == "CallExpression":
            return self.kind_counts["CallExpression"]
        if name == "Identifier":
            return self.kind_counts["Identifier"]
        if name == "StringLiteral":
            return self.kind_counts["StringLiteral"]
        if name == "NumberLiteral":
            return self.kind_counts["NumberLiteral"]
        if name == "BooleanLiteral":
            return self.kind_counts["BooleanLiteral"]
        if name == "Literal":
            return (self.kind_counts["StringLiteral"]
                    + self.kind_counts["NumberLiteral"]
                    + self.kind_counts["BooleanLiteral"])
        if name == "InPath":
            return self.kind_counts["File"]
        if name == "HasAnnotation":
            return self.relation("annotated_by")
        if name == "ForSameObject":
            return self.relation("same_object")
        if name == "DataFlowAfter":
            return self.relation("dataflow")
        if name in ("DataFlowsFrom", "DataFlowsInto", "Taint"):
            return self.relation("taint")
        if name in ("HasNamedArg", "NamedArgIn"):
            return self.relation("named_arg")
        if name == "ExplicitSelfParamIn":
            return self.relation("param_self")
        if name == "Returns":
            return self.relation("returns")
        if name == "ReturnedBy":
            return self.relation("returned_by")
        if name == "HasAnyArg":
            return (sum(self.relation(f"arg{i}") for i in range(8))
                    + self.relation("named_arg"))
        if name == "AnyParamIn":
            return (sum(self.relation(f"param{i}") for i in range(1, 8))
                    + self.relation("param_self"))
        if name.startswith("HasArg") and name[len("HasArg"):].isdigit():
            return self.relation(f"arg{name[len('HasArg'):]}")
        if name.startswith("Arg") and name.endswith("In"):
            middle = name[3:-2]
            if middle.isdigit():
                return self.relation(f"arg{middle}")
        if name.startswith("Param") and name.endswith("In"):
            middle = name[5:-2]
            if middle.isdigit():
                return self.relation(f"param{middle}")
        return 0  # combinators and configured predicates: not decidable here


def _ranked(candidates) -> tuple:
    ordered = sorted(candidates, key=lambda c: (-c[2], c[0]))
    return tuple(Suggestion(text, kind, evidence, rank)
                 for rank, (text, kind, evidence) in enumerate(ordered, start=1))


def _literal_text(name: str, quoted: bool) -> str:
    if quoted or not _SAFE_BARE_TEXT.match(name):
        escaped = name.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    return name


def _literal_pool(index: SuggestionIndex, registry: Registry,
                  context: CursorContext) -> Counter:
    entry = registry.lookup(context.template) if context.template else None
    if entry is not None and entry.kind == "template":
        params = entry.params
        param = params[min(context.arg_index, len(params) - 1)] if params \
            else None
        if context.template == "CallExpression" or param == FUNCTION:
            return index.call_names
        if context.template == "HasAnnotation":
            return index.annotation_names
        if context.template == "InPath":
            return index.file_names
        if param == ARG_NAME:
            return index.name_counts
    return index.name_counts


def suggest(index: SuggestionIndex, text: str, cursor: int,
            registry: Registry | None = None) -> SuggestionList:
    """Rank completions for the cursor position in a partial query."""
    registry = registry or default_registry()
    context = probe_context(text, cursor)

    if context.kind == "connective":
        candidates = [("and", "keyword", 0), ("not", "keyword", 0),
                      ("or", "keyword", 0)]
        return SuggestionList(text, cursor, context.kind, context.replace_from,
                              _ranked(candidates))

    prefix = context.prefix
    if context.kind == "literal":
        pool = _literal_pool(index, registry, context)
        candidates = [
            (_literal_text(name, context.quoted), "literal", count)
            for name, count in pool.items()
            if name.startswith(prefix)
        ]
        return SuggestionList(text, cursor, context.kind, context.replace_from,
                              _ranked(candidates))

    # citation position: templates ranked by structural evidence, then
    # configured-predicate names
    if prefix.startswith("PRED:"):
        wanted = prefix[len("PRED:"):]
        candidates = [
            (f"PRED:{name}", "predicate", 0)
            for name in registry.predicate_names()
            if name.startswith(wanted)
        ]
        return SuggestionList(text, cursor, context.kind, context.replace_from,
                              _ranked(candidates))
    candidates = [
        (name, "template", index.template_evidence(name))
        for name in registry.template_names()
        if name.startswith(prefix)
    ]
    candidates += [
        (f"PRED:{name}", "predicate", 0)
        for name in registry.predicate_names()
        if name.startswith(prefix)
    ]
    return SuggestionList(text, cursor, context.kind, context.replace_from,
                          _ranked(candidates))


def suggestion_document(result: SuggestionList) -> dict:
    return {
        "query": result.query,
        "cursor": result.cursor,
        "context": result.context,
        "replace_from": result.replace_from,
        "suggestions": [
            {"text": s.text, "kind": s.kind, "evidence": s.evidence,
             "rank": s.rank}
            for s in result.suggestions
        ],
    }

"""Fact store: loading, indexing and querying program-analysis graphs.

A graph is a set of nodes (program entities with string attributes) plus
named unary relations (node sets) and named binary relations (edge sets,
indexed by both columns).  Databases are immutable once loaded and safe to
share between threads; the only mutable part is an insert-if-absent cache
of dynamically materialized attribute-match relations.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

NODE_KINDS = frozenset({
    "CallExpression",
    "Identifier",
    "StringLiteral",
    "NumberLiteral",
    "BooleanLiteral",
    "FunctionDecl",
    "Parameter",
    "File",
    "Annotation",
    "Other",
})


class FactsError(ValueError):
    """A facts document is malformed or internally inconsistent."""


class RegexError(ValueError):
    """A regex pattern failed to compile or uses unsupported constructs."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


@dataclass(frozen=True)
class Matcher:
    """How an attribute value is matched: exact string or regex search."""

    kind: str  # "exact" | "regex"
    pattern: str

    @staticmethod
    def exact(value: str) -> "Matcher":
        return Matcher("exact", value)

    @staticmethod
    def regex(pattern: str) -> "Matcher":
        return Matcher("regex", pattern)


@dataclass(frozen=True)
class NodeRecord:
    id: int
    kind: str
    attrs: tuple[tuple[str, str], ...]

    def attr(self, name: str, default: str = "") -> str:
        for key, value in self.attrs:
            if key == name:
                return value
        return default


@dataclass(frozen=True)
class UnaryRelation:
    name: str
    members: frozenset[int]

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class BinaryRelation:
    name: str
    pairs: frozenset[tuple[int, int]]
    fwd: dict[int, frozenset[int]] = field(compare=False)
    rev: dict[int, frozenset[int]] = field(compare=False)

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class DbStats:
    T: int  # active-domain size
    k: int  # number of named relations
    m: int  # largest relation cardinality


# Constructs outside the linear-time regex subset (backreferences and
# lookaround); patterns using them are rejected up front.
_REGEX_REJECT = re.compile(
    r"\\[1-9]"
    r"|\(\?P="
    r"|\\g<"
    r"|\(\?="
    r"|\(\?!"
    r"|\(\?<="
    r"|\(\?<!"
)


def _compile_regex(pattern: str) -> re.Pattern:
    bad = _REGEX_REJECT.search(pattern)
    if bad:
        raise RegexError(
            f"unsupported regex construct {bad.group(0)!r}", bad.start()
        )
    try:
        return re.compile(pattern)
    except re.error as exc:
        raise RegexError(str(exc.msg), exc.pos or 0) from exc


def _index_pairs(pairs) -> tuple[dict, dict]:
    fwd: dict[int, set[int]] = {}
    rev: dict[int, set[int]] = {}
    for a, b in pairs:
        fwd.setdefault(a, set()).add(b)
        rev.setdefault(b, set()).add(a)
    return (
        {a: frozenset(bs) for a, bs in fwd.items()},
        {b: frozenset(as_) for b, as_ in rev.items()},
    )


class Database:
    """An immutable, fully indexed fact store over dense node ids.

    File-level node ids may be sparse; the loader assigns dense ids
    0..n-1 in document order and keeps the original ids for reporting.
    """

    def __init__(self, nodes, unary, binary, original_ids):
        self.nodes: list[NodeRecord] = nodes
        self.unary: dict[str, UnaryRelation] = unary
        self.binary: dict[str, BinaryRelation] = binary
        self.original_ids: list[int] = original_ids
        self._dense_of = {orig: i for i, orig in enumerate(original_ids)}
        # attr name -> value -> node set
        attr_index: dict[str, dict[str, set[int]]] = {}
        for node in nodes:
            for key, value in node.attrs:
                attr_index.setdefault(key, {}).setdefault(value, set()).add(node.id)
        self.attr_index: dict[str, dict[str, frozenset[int]]] = {
            key: {value: frozenset(ids) for value, ids in values.items()}
            for key, values in attr_index.items()
        }
        self._literal_cache: dict[tuple[str, Matcher], UnaryRelation] = {}

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def original_id(self, dense: int) -> int:
        return self.original_ids[dense]

    def dense_id(self, original: int) -> int:
        return self._dense_of[original]

    def node(self, dense: int) -> NodeRecord:
        return self.nodes[dense]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Database):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.unary == other.unary
            and self.binary == other.binary
            and self.original_ids == other.original_ids
        )

    def __repr__(self) -> str:
        return (
            f"Database(nodes={len(self.nodes)}, unary={len(self.unary)}, "
            f"binary={len(self.binary)})"
        )


def load_database(document) -> Database:
    """Load a facts document (JSON text, bytes, or parsed dict).

    Raises FactsError naming the offending record on duplicate node ids,
    dangling edge endpoints, unknown node kinds, or non-integer line/col
    attributes.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise FactsError(f"not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise FactsError("facts document must be a JSON object")

    raw_nodes = document.get("nodes", [])
    original_ids: list[int] = []
    seen: set[int] = set()
    nodes: list[NodeRecord] = []
    for position, raw in enumerate(raw_nodes):
        if not isinstance(raw, dict) or "id" not in raw:
            raise FactsError(f"node #{position} has no id")
        orig = raw["id"]
        if not isinstance(orig, int):
            raise FactsError(f"node #{position}: id {orig!r} is not an integer")
        if orig in seen:
            raise FactsError(f"duplicate node id {orig}")
        seen.add(orig)
        kind = raw.get("kind", "Other")
        if kind not in NODE_KINDS:
            raise FactsError(f"node {orig}: unknown kind {kind!r}")
        attrs = raw.get("attrs", {})
        if not isinstance(attrs, dict):
            raise FactsError(f"node {orig}: attrs must be an object")
        for key in ("line", "col"):
            if key in attrs:
                text = str(attrs[key])
                if not text.isdigit() or int(text) <= 0:
                    raise FactsError(
                        f"node {orig}: attribute {key}={attrs[key]!r} "
                        f"is not a positive integer"
                    )
        dense = len(nodes)
        original_ids.append(orig)
        nodes.append(
            NodeRecord(
                id=dense,
                kind=kind,
                attrs=tuple(sorted((str(k), str(v)) for k, v in attrs.items())),
            )
        )
    dense_of = {orig: i for i, orig in enumerate(original_ids)}

    def to_dense(orig, context: str) -> int:
        if orig not in dense_of:
            raise FactsError(f"dangling node {orig} in {context}")
        return dense_of[orig]

    unary: dict[str, UnaryRelation] = {}
    for name, members in (document.get("unary") or {}).items():
        dense_members = frozenset(
            to_dense(m, f"unary relation {name!r}") for m in members
        )
        unary[name] = UnaryRelation(name, dense_members)

    binary: dict[str, BinaryRelation] = {}
    for name, raw_pairs in (document.get("binary") or {}).items():
        pairs = set()
        for pair in raw_pairs:
            if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                raise FactsError(f"binary relation {name!r}: malformed pair {pair!r}")
            a = to_dense(pair[0], f"binary relation {name!r}")
            b = to_dense(pair[1], f"binary relation {name!r}")
            pairs.add((a, b))
        fwd, rev = _index_pairs(pairs)
        binary[name] = BinaryRelation(name, frozenset(pairs), fwd, rev)

    return Database(nodes, unary, binary, original_ids)


def load_database_file(path) -> Database:
    with open(path, "r", encoding="utf-8") as handle:
        return load_database(handle.read())


def serialize_database(db: Database) -> str:
    """Canonical JSON for a database; load_database round-trips it."""
    document = {
        "nodes": [
            {
                "id": db.original_id(node.id),
                "kind": node.kind,
                "attrs": dict(node.attrs),
            }
            for node in db.nodes
        ],
        "unary": {
            name: sorted(db.original_id(i) for i in rel.members)
            for name, rel in sorted(db.unary.items())
        },
        "binary": {
            name: sorted(
                [db.original_id(a), db.original_id(b)] for a, b in rel.pairs
            )
            for name, rel in sorted(db.binary.items())
        },
    }
    return json.dumps(document, indent=1, sort_keys=False)


def literal_relation(db: Database, attribute: str, matcher: Matcher) -> UnaryRelation:
    """The set of nodes whose `attribute` value matches `matcher`.

    Exact matches are served straight from the attribute index; regexes
    scan the distinct values of the attribute once.  Results are cached
    per (attribute, matcher) on the database.
    """
    key = (attribute, matcher)
    cached = db._literal_cache.get(key)
    if cached is not None:
        return cached
    values = db.attr_index.get(attribute, {})
    if matcher.kind == "exact":
        members = values.get(matcher.pattern, frozenset())
    else:
        compiled = _compile_regex(matcher.pattern)
        ids: set[int] = set()
        for value, nodes in values.items():
            if compiled.search(value):
                ids |= nodes
        members = frozenset(ids)
    relation = UnaryRelation(f"{attribute}:{matcher.kind}:{matcher.pattern}", members)
    db._literal_cache[key] = relation
    return relation


def db_stats(db: Database) -> DbStats:
    sizes = [len(rel) for rel in db.unary.values()]
    sizes += [len(rel) for rel in db.binary.values()]
    return DbStats(
        T=db.node_count,
        k=len(db.unary) + len(db.binary),
        m=max(sizes, default=0),
    )

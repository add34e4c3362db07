"""Stratified, delta-driven bottom-up evaluation over indexed graphs.

Rules are evaluated by folding their variable tree from the leaves toward
the head variable.  Every join pairs one node set with one indexed edge
relation, so no intermediate edge relation is ever materialized; the fold
simply projects the satisfying set one hop at a time.  Negative citations
never materialize complements: they are membership filters against the
frozen totals of lower strata.  Citations whose variables do not connect
to the head variable gate the whole rule as existential constraints.

Within a stratum, rules fire round by round.  After the opening round a
rule only refires through positions whose predicate gained tuples in the
previous round, with that position restricted to the gained tuples.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field

from .facts import Database, literal_relation
from .starlang import (
    Citation,
    Program,
    Rule,
    stratify,
    validate_rules,
)
from .starlang.transform import InvalidRuleError

log = logging.getLogger("starquery.engine")

_EMPTY: frozenset[int] = frozenset()


@dataclass
class EvalMetrics:
    iterations: int = 0                 # productive rounds, all strata
    iterations_per_stratum: list[int] = field(default_factory=list)
    join_work: int = 0                  # index probes + scan steps
    rule_firings: int = 0
    citation_joins: int = 0             # one per edge projection
    join_shapes: dict = field(default_factory=dict)  # operand shape -> count
    wall_time: float = 0.0

    def note_join(self, shape: str, work: int):
        self.join_work += work
        self.citation_joins += 1
        self.join_shapes[shape] = self.join_shapes.get(shape, 0) + 1


@dataclass
class Match:
    id: int
    kind: str
    file: str
    line: int
    col: int


@dataclass
class MatchSet:
    query: str
    matches: list[Match]
    node_ids: frozenset[int]            # dense ids
    metrics: EvalMetrics
    warnings: list[str] = field(default_factory=list)


@dataclass
class RelationState:
    total: dict  # predicate -> set of dense node ids
    delta: dict  # predicate -> set added by the final productive round


class OutOfDomainError(ValueError):
    pass


class _Node:
    __slots__ = ("var", "positive", "negative", "children")

    def __init__(self, var: str):
        self.var = var
        self.positive = []   # (position, predicate)
        self.negative = []   # (position, predicate)
        self.children = []   # (position, predicate, far_is_second, child)


class _CompiledRule:
    """A rule decomposed into its head-variable tree plus gate trees."""

    def __init__(self, rule: Rule):
        self.rule = rule
        self.head = rule.head
        nodes: dict[str, _Node] = {rule.head_var: _Node(rule.head_var)}
        adjacency: dict[str, list] = {rule.head_var: []}

        def node_for(var: str) -> _Node:
            if var not in nodes:
                nodes[var] = _Node(var)
                adjacency[var] = []
            return nodes[var]

        self.positions: list[Citation] = list(rule.body)
        for position, citation in enumerate(self.positions):
            if citation.is_edge:
                a, b = citation.vars
                node_for(a)
                node_for(b)
                adjacency[a].append((position, citation, True, b))
                adjacency[b].append((position, citation, False, a))
            else:
                target = node_for(citation.vars[0])
                bucket = target.negative if citation.negated else target.positive
                bucket.append((position, citation.predicate))

        visited: set[str] = set()

        def build(var: str) -> _Node:
            visited.add(var)
            node = nodes[var]
            for position, citation, far_is_second, far in adjacency[var]:
                if far in visited:
                    continue
                child = build(far)
                node.children.append((position, citation.predicate,
                                      far_is_second, child))
            return node

        self.root = build(rule.head_var)
        self.gates: list[_Node] = []
        for var in nodes:
            if var not in visited:
                self.gates.append(build(var))

        # positions eligible for delta-driven refiring: positive unary citations
        self.positive_unary = [
            (position, citation.predicate)
            for position, citation in enumerate(self.positions)
            if not citation.is_edge and not citation.negated
        ]


class _Evaluation:
    def __init__(self, program: Program, db: Database):
        self.program = program
        self.db = db
        self.metrics = EvalMetrics()
        self.warnings: list[str] = []
        self._warned: set[str] = set()
        self.totals: dict[str, set[int]] = {}
        self.domain_size = db.node_count

    def warn(self, symbol: str, message: str):
        if symbol not in self._warned:
            self._warned.add(symbol)
            self.warnings.append(message)
            log.warning("%s", message)

    def unary_ext(self, predicate: str):
        if predicate in self.totals:
            return self.totals[predicate]
        spec = self.program.literals.get(predicate)
        if spec is not None:
            attribute, matcher = spec
            return literal_relation(self.db, attribute, matcher).members
        relation = self.db.unary.get(predicate)
        if relation is not None:
            return relation.members
        if predicate in self.db.binary:
            self.warn(predicate,
                      f"{predicate!r} is an edge relation but was cited as a node "
                      f"set; treating it as empty")
        else:
            self.warn(predicate, f"unknown node set {predicate!r}; treating it "
                                 f"as empty")
        return _EMPTY

    def edge_ext(self, predicate: str):
        relation = self.db.binary.get(predicate)
        if relation is None:
            self.warn(predicate, f"unknown edge relation {predicate!r}; treating "
                                 f"it as empty")
            return None
        return relation

    def run(self, stratification) -> list[RelationState]:
        for rule in self.program.rules:
            self.totals.setdefault(rule.head, set())
        snapshots = []
        for stratum in stratification.strata:
            rules = [_CompiledRule(rule) for rule in self.program.rules
                     if rule.head in stratum]
            delta = self._run_stratum(stratum, rules)
            snapshots.append(RelationState(
                total={p: frozenset(self.totals[p]) for p in sorted(stratum)},
                delta={p: frozenset(delta.get(p, ())) for p in sorted(stratum)},
            ))
        return snapshots

    def _run_stratum(self, stratum, rules) -> dict:
        rounds = 0
        delta: dict[str, set[int]] = {}
        last_delta: dict[str, set[int]] = {}

        def absorb(rule, facts) -> bool:
            new = facts - self.totals[rule.head]
            if not new:
                return False
            self.totals[rule.head] |= new
            delta.setdefault(rule.head, set()).update(new)
            return True

        produced = False
        for rule in rules:
            produced |= absorb(rule, self._fire(rule))
        if produced:
            rounds += 1

        refire = [(rule, position, predicate)
                  for rule in rules
                  for position, predicate in rule.positive_unary
                  if predicate in stratum]
        while delta:
            last_delta, delta = delta, {}
            produced = False
            for rule, position, predicate in refire:
                gained = last_delta.get(predicate)
                if not gained:
                    continue
                produced |= absorb(rule, self._fire(rule, position, gained))
            if produced:
                rounds += 1
        self.metrics.iterations_per_stratum.append(rounds)
        self.metrics.iterations += rounds
        return last_delta

    def _fire(self, rule: _CompiledRule, position: int = -1,
              restriction=None) -> set[int]:
        self.metrics.rule_firings += 1
        for gate in rule.gates:
            if not self._gate_open(gate, position, restriction):
                return set()
        base, filters = self._satisfy(rule.root, position, restriction)
        if base is None:
            base = range(self.domain_size)
        if filters:
            return {x for x in base if all(x not in f for f in filters)}
        return set(base)

    def _satisfy(self, node: _Node, position: int, restriction):
        """Set of values satisfying this subtree: (set | None, neg filters)."""
        parts = []
        for pos, predicate in node.positive:
            parts.append(restriction if pos == position
                         else self.unary_ext(predicate))
        for pos, predicate, far_is_second, child in node.children:
            projected = self._project(predicate, far_is_second, child,
                                      position, restriction)
            parts.append(projected)
        filters = [self.unary_ext(predicate) for _, predicate in node.negative]
        if not parts:
            return None, filters
        parts.sort(key=len)
        base = set(parts[0])
        for part in parts[1:]:
            base &= part if isinstance(part, (set, frozenset)) else set(part)
            if not base:
                break
        if filters and base:
            base = {x for x in base if all(x not in f for f in filters)}
            filters = []
        return base, filters

    def _project(self, predicate: str, far_is_second: bool, child: _Node,
                 position: int, restriction) -> set[int]:
        """One unary-against-indexed-edge join: far-side set pulled one hop in."""
        relation = self.edge_ext(predicate)
        if relation is None:
            self.metrics.note_join("unary*edge", 0)
            return set()
        far_set, far_filters = self._satisfy(child, position, restriction)
        near: set[int] = set()
        if far_set is None:
            # unconstrained far side: scan the edge once, filtering far values
            pairs = relation.pairs
            self.metrics.note_join("unary*edge", len(pairs))
            for a, b in pairs:
                far, mine = (b, a) if far_is_second else (a, b)
                if all(far not in f for f in far_filters):
                    near.add(mine)
            return near
        index = relation.rev if far_is_second else relation.fwd
        self.metrics.note_join("unary*edge", len(far_set))
        for far in far_set:
            bucket = index.get(far)
            if bucket:
                near |= bucket
        return near

    def _gate_open(self, gate: _Node, position: int, restriction) -> bool:
        base, filters = self._satisfy(gate, position, restriction)
        if base is None:
            if not filters:
                return self.domain_size > 0
            blocked = set().union(*filters)
            return len(blocked) < self.domain_size
        return bool(base)


def run_strata(program: Program, db: Database):
    """Evaluate stratum by stratum; returns (states, evaluation)."""
    violations = validate_rules(program)
    if violations:
        raise InvalidRuleError(violations)
    stratification = stratify(program)
    evaluation = _Evaluation(program, db)
    started = time.perf_counter()
    states = evaluation.run(stratification)
    evaluation.metrics.wall_time = time.perf_counter() - started
    return states, evaluation


def evaluate(program: Program, db: Database, query: str | None = None) -> MatchSet:
    """Evaluate a program and report the query predicate's matches."""
    target = query or program.query
    if target is None:
        raise ValueError("no query predicate: set program.query or pass query=")
    _, evaluation = run_strata(program, db)
    if target in evaluation.totals:
        ids = frozenset(evaluation.totals[target])
    else:
        ids = frozenset(evaluation.unary_ext(target))
    matches = []
    for dense in ids:
        if dense >= db.node_count:
            raise OutOfDomainError(f"node id {dense} outside the active domain")
        node = db.node(dense)
        matches.append(Match(
            id=db.original_id(dense),
            kind=node.kind,
            file=node.attr("file"),
            line=int(node.attr("line", "0") or 0),
            col=int(node.attr("col", "0") or 0),
        ))
    matches.sort(key=lambda m: (m.file, m.line, m.col, m.id))
    return MatchSet(
        query=target,
        matches=matches,
        node_ids=ids,
        metrics=evaluation.metrics,
        warnings=evaluation.warnings,
    )


def match_set_document(result: MatchSet, query_text: str | None = None) -> dict:
    """JSON-ready form with deterministic contents and ordering."""
    return {
        "query": query_text if query_text is not None else result.query,
        "matches": [
            {"id": m.id, "kind": m.kind, "file": m.file, "line": m.line,
             "col": m.col}
            for m in result.matches
        ],
        "metrics": {
            "iterations": result.metrics.iterations,
            "iterations_per_stratum": list(result.metrics.iterations_per_stratum),
            "join_work": result.metrics.join_work,
            "rule_firings": result.metrics.rule_firings,
            "citation_joins": result.metrics.citation_joins,
        },
        "warnings": list(result.warnings),
    }


def match_set_json(result: MatchSet, query_text: str | None = None) -> str:
    return json.dumps(match_set_document(result, query_text), indent=1)

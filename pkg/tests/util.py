"""Shared helpers for the test suite."""

from __future__ import annotations

from collections import Counter

from starquery.starlang import Citation, Rule, parse_program


def rules_of(text: str):
    return parse_program(text).rules


def _rule_shape(rule: Rule):
    body = Counter()
    for citation in rule.body:
        body[(citation.negated, citation.predicate, citation.vars)] += 1
    return rule.head, rule.head_var, body


def rules_isomorphic(rules_a, rules_b, fixed: set[str]) -> bool:
    """Structural equality of two rule sets modulo renaming of non-fixed
    predicate symbols.  Variables and fixed symbols must match exactly;
    rule bodies are compared as multisets of citations."""
    if len(rules_a) != len(rules_b):
        return False

    def try_match(remaining_a, remaining_b, mapping):
        if not remaining_a:
            return True
        rule_a, *rest_a = remaining_a
        for index, rule_b in enumerate(remaining_b):
            extended = _match_rule(rule_a, rule_b, fixed, dict(mapping))
            if extended is None:
                continue
            rest_b = remaining_b[:index] + remaining_b[index + 1:]
            if try_match(rest_a, rest_b, extended):
                return True
        return False

    return try_match(list(rules_a), list(rules_b), {})


def _match_symbol(a: str, b: str, fixed: set[str], mapping: dict):
    if a in fixed or b in fixed:
        return mapping if a == b else None
    bound = mapping.get(a)
    if bound is None:
        if b in mapping.values():
            return None
        mapping[a] = b
        return mapping
    return mapping if bound == b else None


def _match_rule(rule_a: Rule, rule_b: Rule, fixed: set[str], mapping: dict):
    if rule_a.head_var != rule_b.head_var or len(rule_a.body) != len(rule_b.body):
        return None
    mapping = _match_symbol(rule_a.head, rule_b.head, fixed, mapping)
    if mapping is None:
        return None

    def match_body(pending_a, pending_b, current):
        if not pending_a:
            return current
        cit_a, *rest_a = pending_a
        for index, cit_b in enumerate(pending_b):
            if (cit_a.negated != cit_b.negated or cit_a.vars != cit_b.vars):
                continue
            extended = _match_symbol(cit_a.predicate, cit_b.predicate,
                                     fixed, dict(current))
            if extended is None:
                continue
            result = match_body(rest_a, pending_b[:index] + pending_b[index + 1:],
                                extended)
            if result is not None:
                return result
        return None

    return match_body(list(rule_a.body), list(rule_b.body), mapping)


def chain_database(n: int):
    """Nodes 0..n-1 with edge relation e = {(i, i+1)} and p = {n-1}."""
    from starquery.facts import load_database

    return load_database({
        "nodes": [{"id": i, "kind": "Other", "attrs": {}} for i in range(n)],
        "unary": {"p": [n - 1]},
        "binary": {"e": [[i, i + 1] for i in range(n - 1)]},
    })


def reverse_reachable(pairs, sources):
    """All nodes with a path (length >= 0) along `pairs` into `sources`."""
    incoming = {}
    for a, b in pairs:
        incoming.setdefault(b, set()).add(a)
    seen = set(sources)
    frontier = list(sources)
    while frontier:
        node = frontier.pop()
        for prev in incoming.get(node, ()):  # walk edges backward
            if prev not in seen:
                seen.add(prev)
                frontier.append(prev)
    return seen


def forward_reachable(pairs, sources):
    """Nodes reachable from `sources` along `pairs` in one or more steps."""
    outgoing = {}
    for a, b in pairs:
        outgoing.setdefault(a, set()).add(b)
    seen = set()
    frontier = list(sources)
    while frontier:
        node = frontier.pop()
        for nxt in outgoing.get(node, ()):
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen


def taint_reach(pairs, sources, sanitizers):
    """Taint reachability: flow leaves a reached node only if unsanitized."""
    reached = set(sources)
    outgoing = {}
    for a, b in pairs:
        outgoing.setdefault(a, set()).add(b)
    frontier = [s for s in sources if s not in sanitizers]
    while frontier:
        node = frontier.pop()
        for nxt in outgoing.get(node, ()):
            if nxt not in reached:
                reached.add(nxt)
                if nxt not in sanitizers:
                    frontier.append(nxt)
    return reached


def run_query(query_text, db, config=None):
    """Compile and evaluate a surface query; returns dense-id match set."""
    from starquery.compiler import compile_query
    from starquery.engine import evaluate

    compiled = compile_query(query_text, config=config)
    return evaluate(compiled.program, db).node_ids


_NAME_POOL = ["alpha", "beta", "gamma", "delta", "read", "close", "write"]


def random_code_db(rng, size=None):
    """A small random analysis-ish graph with named calls and flow edges."""
    from starquery.facts import load_database

    count = size or rng.randint(2, 15)
    nodes = []
    kinds = {}
    for i in range(count):
        kind = rng.choice(["CallExpression", "Identifier", "Other"])
        nodes.append({"id": i, "kind": kind,
                      "attrs": {"name": rng.choice(_NAME_POOL)}})
        kinds.setdefault(f"kind_{kind.lower()}", []).append(i)
    def pairs(max_count):
        return sorted({(rng.randrange(count), rng.randrange(count))
                       for _ in range(rng.randint(0, max_count))})
    return load_database({
        "nodes": nodes,
        "unary": kinds,
        "binary": {
            "dataflow": [list(p) for p in pairs(2 * count)],
            "taint": [list(p) for p in pairs(2 * count)],
            "arg0": [list(p) for p in pairs(count)],
        },
    })


def random_surface_query(rng, depth=3):
    """A random surface-language AST within the given nesting depth."""
    from starquery.codesearch import QAnd, QLiteral, QNot, QOr, QPred, QTemplate
    from starquery.stdlib import default_registry

    registry = default_registry()
    unary_templates = [e.name for e in registry.entries()
                       if e.kind == "template" and e.arity == 1]
    predicates = ["AnySource", "SqliSink", "Any", "None"]

    def literal():
        roll = rng.random()
        if roll < 0.5:
            return QLiteral("exact", rng.choice(_NAME_POOL))
        if roll < 0.7:
            return QLiteral("exact", rng.choice(['we"ird', "with space",
                                                 "dotted.name", ""]))
        if roll < 0.9:
            return QLiteral("regex", rng.choice(["re.*", "a|b", "^x$"]))
        return QLiteral("wildcard", "*")

    def node(level):
        roll = rng.random()
        if level <= 0 or roll < 0.35:
            choice = rng.random()
            if choice < 0.55:
                return literal()
            if choice < 0.8:
                return QPred(rng.choice(predicates))
            return QTemplate(rng.choice(unary_templates), (literal(),))
        if roll < 0.55:
            return QTemplate(rng.choice(unary_templates), (node(level - 1),))
        if roll < 0.7:
            return QNot(node(level - 1))
        if roll < 0.85:
            return QAnd(node(level - 1), node(level - 1))
        return QOr(node(level - 1), node(level - 1))

    return node(depth)

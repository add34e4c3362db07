"""Reference evaluator and instance generators for differential testing.

The reference evaluator handles general stratified rules: any head arity,
arbitrary variable sharing and repetition, constants.  It recomputes every
rule from scratch each round until nothing changes, with no indexes and no
delta tracking, which keeps it slow and easy to trust.  Head variables not
bound by the body range over the whole active domain; a negative citation
over otherwise-unbound variables holds when at least one grounding avoids
the cited relation.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from .facts import Database, literal_relation
from .starlang import Citation, Program, Rule


@dataclass(frozen=True)
class Atom:
    predicate: str
    terms: tuple  # str entries are variables, int entries are constants
    negated: bool = False


@dataclass(frozen=True)
class GeneralRule:
    head: str
    head_terms: tuple
    body: tuple  # of Atom


class UnstratifiableError(ValueError):
    pass


def from_program(program: Program):
    """Monadic rules as general rules, plus their literal-symbol extensions.

    Returns (rules, extra_unary) where extra_unary maps dynamically bound
    symbols to a function of the database producing their member sets.
    """
    rules = []
    for rule in program.rules:
        body = tuple(
            Atom(c.predicate, tuple(c.vars), c.negated) for c in rule.body
        )
        rules.append(GeneralRule(rule.head, (rule.head_var,), body))
    extra = {
        symbol: (attribute, matcher)
        for symbol, (attribute, matcher) in program.literals.items()
    }
    return rules, extra


def _levels(rules) -> dict[str, int]:
    idb = {rule.head for rule in rules}
    level = {p: 0 for p in idb}
    for _ in range(len(idb) + 1):
        changed = False
        for rule in rules:
            for atom in rule.body:
                if atom.predicate not in idb:
                    continue
                needed = level[atom.predicate] + (1 if atom.negated else 0)
                if needed > level[rule.head]:
                    level[rule.head] = needed
                    changed = True
        if not changed:
            return level
    raise UnstratifiableError(
        "no stratification exists: some predicate depends on its own negation")


class _Extensions:
    def __init__(self, db: Database, idb: dict, extra: dict | None):
        self.db = db
        self.idb = idb
        self.extra = extra or {}

    def tuples(self, predicate: str, arity: int) -> set[tuple]:
        if predicate in self.idb:
            return self.idb[predicate]
        if predicate in self.extra:
            attribute, matcher = self.extra[predicate]
            members = literal_relation(self.db, attribute, matcher).members
            return {(m,) for m in members}
        if arity == 1:
            relation = self.db.unary.get(predicate)
            return {(m,) for m in relation.members} if relation else set()
        relation = self.db.binary.get(predicate)
        return set(relation.pairs) if relation else set()


def evaluate_naive(rules, db: Database, extra_unary: dict | None = None) -> dict:
    """Exact stratified least-fixpoint extensions of all rule heads."""
    if isinstance(rules, Program):
        rules, extra = from_program(rules)
        extra_unary = {**extra, **(extra_unary or {})}
    rules = list(rules)
    level = _levels(rules)
    idb: dict[str, set[tuple]] = {rule.head: set() for rule in rules}
    ext = _Extensions(db, idb, extra_unary)
    domain = list(range(db.node_count))

    for current in sorted(set(level.values())):
        stratum_rules = [r for r in rules if level[r.head] == current]
        while True:
            changed = False
            for rule in stratum_rules:
                for fact in _derive(rule, ext, domain):
                    if fact not in idb[rule.head]:
                        idb[rule.head].add(fact)
                        changed = True
            if not changed:
                break
    return idb


def _derive(rule: GeneralRule, ext: _Extensions, domain) -> set[tuple]:
    positives = [a for a in rule.body if not a.negated]
    negatives = [a for a in rule.body if a.negated]

    substitutions = [{}]
    for atom in positives:
        tuples = ext.tuples(atom.predicate, len(atom.terms))
        extended = []
        for subst in substitutions:
            for row in tuples:
                candidate = _unify(atom.terms, row, subst)
                if candidate is not None:
                    extended.append(candidate)
        substitutions = extended
        if not substitutions:
            return set()

    # ground head variables the body left open before negative filtering
    open_head_vars = [t for t in rule.head_terms if isinstance(t, str)]
    grounded = []
    for subst in substitutions:
        missing = [v for v in dict.fromkeys(open_head_vars) if v not in subst]
        if not missing:
            grounded.append(subst)
            continue
        for values in itertools.product(domain, repeat=len(missing)):
            extended = dict(subst)
            extended.update(zip(missing, values))
            grounded.append(extended)

    results = set()
    for subst in grounded:
        if all(_negative_holds(atom, subst, ext, domain) for atom in negatives):
            results.add(tuple(
                subst[t] if isinstance(t, str) else t for t in rule.head_terms
            ))
    return results


def _unify(terms, row, subst):
    candidate = dict(subst)
    for term, value in zip(terms, row):
        if isinstance(term, str):
            bound = candidate.get(term)
            if bound is None:
                candidate[term] = value
            elif bound != value:
                return None
        elif term != value:
            return None
    return candidate


def _negative_holds(atom: Atom, subst, ext: _Extensions, domain) -> bool:
    """True when some grounding of the atom's free variables misses the relation."""
    free = [t for t in dict.fromkeys(atom.terms)
            if isinstance(t, str) and t not in subst]
    tuples = ext.tuples(atom.predicate, len(atom.terms))
    if not free:
        row = tuple(subst[t] if isinstance(t, str) else t for t in atom.terms)
        return row not in tuples
    matched = set()
    for row in tuples:
        assignment = _unify(atom.terms, row, subst)
        if assignment is not None:
            matched.add(tuple(assignment[v] for v in free))
    return len(matched) < len(domain) ** len(free)


# ---------------------------------------------------------------------------
# seeded instance generators


@dataclass
class InstanceBounds:
    max_nodes: int = 30
    max_unary: int = 3
    max_binary: int = 3
    max_predicates: int = 8
    max_rules: int = 6


_VAR_POOL = ["X", "Y", "Z", "W", "V", "U", "R", "S", "T2", "Q"]


def random_database(rng: random.Random, bounds: InstanceBounds) -> Database:
    node_count = rng.randint(1, bounds.max_nodes)
    nodes = [{"id": i, "kind": "Other", "attrs": {}} for i in range(node_count)]
    unary = {}
    for u in range(rng.randint(1, bounds.max_unary)):
        size = rng.randint(0, node_count)
        unary[f"u{u}"] = sorted(rng.sample(range(node_count), size))
    binary = {}
    for e in range(rng.randint(1, bounds.max_binary)):
        pair_count = rng.randint(0, 2 * node_count)
        pairs = {(rng.randrange(node_count), rng.randrange(node_count))
                 for _ in range(pair_count)}
        binary[f"e{e}"] = sorted(list(p) for p in pairs)
    from .facts import load_database

    return load_database({"nodes": nodes, "unary": unary, "binary": binary})


def _random_body(rng: random.Random, head: str, head_var: str,
                 unary_names, binary_names, positive_idb, negative_idb):
    """A random valid rule body (tree-structured, anchored, stratified)."""
    citations = []
    variables = [head_var]
    fresh = (v for v in _VAR_POOL if v != head_var)

    for _ in range(rng.randint(0, 3)):
        if rng.random() < 0.25:
            var = next(fresh)
            variables.append(var)  # a new anchor: starts a detached component
        else:
            var = rng.choice(variables)
        roll = rng.random()
        if roll < 0.55 or not (positive_idb or negative_idb):
            citations.append(Citation(rng.choice(unary_names), (var,)))
        elif roll < 0.8 and positive_idb:
            citations.append(Citation(rng.choice(positive_idb), (var,)))
        elif negative_idb:
            citations.append(Citation(rng.choice(negative_idb), (var,), negated=True))
        else:
            citations.append(Citation(rng.choice(unary_names), (var,), negated=True))

    for _ in range(rng.randint(0, 3)):
        anchor = rng.choice(variables)
        new = next(fresh, None)
        if new is None:
            break
        variables.append(new)
        pair = (anchor, new) if rng.random() < 0.5 else (new, anchor)
        citations.append(Citation(rng.choice(binary_names), pair))
        if rng.random() < 0.5:
            predicate = rng.choice(unary_names + positive_idb)
            citations.append(Citation(predicate, (new,)))

    rng.shuffle(citations)
    return tuple(citations)


def random_rule_instance(seed: int, bounds: InstanceBounds | None = None):
    """A single valid recursive-capable rule plus a database to run it on."""
    bounds = bounds or InstanceBounds()
    rng = random.Random(seed)
    db = random_database(rng, bounds)
    unary_names = [n for n in db.unary]
    binary_names = [n for n in db.binary]
    body = _random_body(rng, "r", "X", unary_names, binary_names,
                        positive_idb=["r"] if rng.random() < 0.4 else [],
                        negative_idb=[])
    rule = Rule("r", "X", body)
    return rule, db


def random_instance(seed: int, bounds: InstanceBounds | None = None):
    """A valid, stratifiable program plus a database, both seed-determined."""
    bounds = bounds or InstanceBounds()
    rng = random.Random(seed)
    db = random_database(rng, bounds)
    unary_names = [n for n in db.unary]
    binary_names = [n for n in db.binary]

    predicate_count = rng.randint(1, max(1, bounds.max_predicates - 4))
    levels = {f"p{i}": rng.randint(0, 2) for i in range(predicate_count)}
    predicates = sorted(levels)

    program = Program()
    rule_budget = bounds.max_rules
    for predicate in predicates:
        level = levels[predicate]
        same_or_lower = [p for p in predicates if levels[p] <= level]
        strictly_lower = [p for p in predicates if levels[p] < level]
        for _ in range(rng.randint(1, 2)):
            if rule_budget == 0:
                break
            rule_budget -= 1
            body = _random_body(rng, predicate, "X", unary_names, binary_names,
                                positive_idb=same_or_lower,
                                negative_idb=strictly_lower)
            program.rules.append(Rule(predicate, "X", body))
    defined = {rule.head for rule in program.rules}
    program.query = rng.choice(sorted(defined))
    return program, db

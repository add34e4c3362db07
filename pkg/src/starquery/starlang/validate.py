"""Rule validation and stratification.

A rule is accepted when it can be built by the four formation steps:

  1. start from a monadic rule with an empty body;
  2. append a positive unary citation (any variable);
  3. append a negative unary citation, provided the cited predicate does
     not depend, directly or transitively, on the rule's head;
  4. append a positive edge citation e(X, Y) or e(Y, X) where X already
     appears in the rule and Y is fresh.

Step 4 forces the variable graph of a rule (variables as nodes, edge
citations as links) to be a forest in which every connected component is
anchored by the head variable or by a variable named in a unary citation.
The checks below are order-independent restatements of those steps, so a
rule is judged by its structure rather than by the order its citations
were written in.

Flat rules are the evaluator-ready special case: all unary citations on
the head variable, at most one edge citation touching the head variable
exactly once, and any remaining unary citations acting as whole-rule
existential gates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .syntax import Citation, InvocationCite, Program, Rule, format_rule


@dataclass(frozen=True)
class Violation:
    rule_index: int
    item: int  # formation step 1..4 (0: not a plain rule at all)
    message: str
    rule: Rule | None = field(default=None, compare=False)
    citation: Citation | None = field(default=None, compare=False)

    def __str__(self) -> str:
        where = f"rule {self.rule_index}"
        if self.rule is not None:
            where += f" `{format_rule(self.rule)}`"
        return f"{where}: {self.message} (formation step {self.item})"


class NegativeCycleError(ValueError):
    def __init__(self, cycle: list[str]):
        loop = " -> ".join(cycle + cycle[:1])
        super().__init__(f"negation cycle through {loop}")
        self.cycle = cycle


@dataclass(frozen=True)
class Stratification:
    strata: tuple[frozenset[str], ...]
    level_of: dict = field(compare=False, default_factory=dict)

    def level(self, predicate: str) -> int:
        # extensional symbols sit at level 0
        return self.level_of.get(predicate, 0)


def _edge_components(rule: Rule):
    """Connected components of the rule's variable graph, as var sets."""
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        root = x
        while parent.setdefault(root, root) != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    variables = {rule.head_var}
    for citation in rule.citations():
        variables.update(citation.vars)
    for var in variables:
        parent.setdefault(var, var)
    for citation in rule.citations():
        if citation.is_edge:
            a, b = citation.vars
            parent[find(a)] = find(b)
    components: dict[str, set[str]] = {}
    for var in variables:
        components.setdefault(find(var), set()).add(var)
    return list(components.values())


def rule_shape_violations(rule: Rule, index: int = 0) -> list[Violation]:
    """Structural (single-rule) checks for the formation steps."""
    violations: list[Violation] = []
    for entry in rule.body:
        if isinstance(entry, InvocationCite):
            violations.append(Violation(
                index, 0, "template invocations must be expanded before validation",
                rule))
            return violations

    unary_vars: set[str] = set()
    edges: list[Citation] = []
    for citation in rule.body:
        if citation.arity > 2:
            violations.append(Violation(
                index, 4,
                f"citation {citation.predicate} has arity {citation.arity}; "
                f"only unary and edge predicates exist",
                rule, citation))
        elif citation.is_edge:
            if citation.negated:
                violations.append(Violation(
                    index, 4, f"edge citation {citation.predicate} is negated; "
                              f"edges may only be cited positively",
                    rule, citation))
            edges.append(citation)
        else:
            unary_vars.add(citation.vars[0])

    # self-loops and repeated variable pairs break the one-fresh-variable rule
    seen_pairs: set[frozenset] = set()
    for citation in edges:
        a, b = citation.vars
        if a == b:
            violations.append(Violation(
                index, 4,
                f"edge citation {citation.predicate}({a}, {b}) repeats its variable; "
                f"one side must be fresh",
                rule, citation))
            continue
        pair = frozenset((a, b))
        if pair in seen_pairs:
            violations.append(Violation(
                index, 4,
                f"edge citation {citation.predicate}({a}, {b}) reuses the variable "
                f"pair of an earlier edge citation, so neither {a} nor {b} is fresh",
                rule, citation))
        seen_pairs.add(pair)

    # cycles: a tree over v variables has at most v-1 edges per component
    components = _edge_components(rule)
    component_of = {}
    for component in components:
        for var in component:
            component_of[var] = frozenset(component)
    edge_count: dict[frozenset, int] = {}
    for citation in edges:
        if citation.vars[0] == citation.vars[1]:
            continue
        key = component_of[citation.vars[0]]
        edge_count[key] = edge_count.get(key, 0) + 1
    for component, count in edge_count.items():
        if count > len(component) - 1:
            distinct_pairs = {frozenset(c.vars) for c in edges
                              if component_of.get(c.vars[0]) == component
                              and c.vars[0] != c.vars[1]}
            if len(distinct_pairs) == count:
                # not just a duplicated pair (already reported): a genuine cycle
                violations.append(Violation(
                    index, 4,
                    f"edge citations over {sorted(component)} form a cycle; every "
                    f"edge citation must introduce a fresh variable",
                    rule))

    # every edge-connected component needs an anchor to grow from
    for component in components:
        if len(component) == 1:
            continue
        if rule.head_var in component:
            continue
        if component & unary_vars:
            continue
        first = next(c for c in edges if c.vars[0] in component)
        violations.append(Violation(
            index, 4,
            f"edge citation {first.predicate}({first.vars[0]}, {first.vars[1]}): "
            f"both {first.vars[0]} and {first.vars[1]} are fresh",
            rule, first))
    return violations


def _dependencies(program: Program) -> dict[str, set[str]]:
    """predicate -> predicates cited anywhere in its defining rules."""
    deps: dict[str, set[str]] = {}
    for rule in program.rules:
        bucket = deps.setdefault(rule.head, set())
        for citation in rule.citations():
            bucket.add(citation.predicate)
    return deps


def _reachable(start: str, deps: dict[str, set[str]]) -> set[str]:
    seen: set[str] = set()
    stack = [start]
    while stack:
        current = stack.pop()
        if current in seen:
            continue
        seen.add(current)
        stack.extend(deps.get(current, ()))
    return seen


def validate_rules(program: Program) -> list[Violation]:
    """All formation-step violations in a program; empty means valid."""
    violations: list[Violation] = []
    deps = _dependencies(program)
    reach_cache: dict[str, set[str]] = {}
    for index, rule in enumerate(program.rules):
        violations.extend(rule_shape_violations(rule, index))
        for citation in rule.citations():
            if citation.negated and not citation.is_edge:
                target = citation.predicate
                if target not in deps:
                    continue  # extensional: nothing to depend on
                if target not in reach_cache:
                    reach_cache[target] = _reachable(target, deps)
                if rule.head in reach_cache[target]:
                    violations.append(Violation(
                        index, 3,
                        f"negative citation of {target}, which is defined in "
                        f"terms of {rule.head}",
                        rule, citation))
    return violations


def is_flat(rule: Rule) -> bool:
    return not flat_rule_violations(rule, 0)


def flat_rule_violations(rule: Rule, index: int) -> list[Violation]:
    violations = []
    edges = []
    for entry in rule.body:
        if isinstance(entry, InvocationCite):
            return [Violation(index, 0, "template invocation in a flat rule", rule)]
        if entry.arity > 2:
            violations.append(Violation(
                index, 4, f"citation {entry.predicate} has arity {entry.arity}",
                rule, entry))
        elif entry.is_edge:
            edges.append(entry)
    if len(edges) > 1:
        violations.append(Violation(
            index, 4, f"{len(edges)} edge citations in one flat rule (at most one "
                      f"is allowed)", rule, edges[1]))
    for edge in edges[:1]:
        if edge.negated:
            violations.append(Violation(
                index, 4, "edge citations may only be cited positively", rule, edge))
        a, b = edge.vars
        if a == b or (rule.head_var not in (a, b)):
            violations.append(Violation(
                index, 4,
                f"the edge citation must connect the head variable to one other "
                f"variable, got {edge.predicate}({a}, {b})",
                rule, edge))
    return violations


def validate_flat(rules, program: Program | None = None) -> list[Violation]:
    """Shape violations for a flat rule set, plus the stratification check."""
    violations: list[Violation] = []
    for index, rule in enumerate(rules):
        violations.extend(flat_rule_violations(rule, index))
    check = program if program is not None else Program(rules=list(rules))
    try:
        stratify(check)
    except NegativeCycleError as exc:
        violations.append(Violation(0, 3, str(exc)))
    return violations


def stratify(program: Program) -> Stratification:
    """Order predicates so negative dependencies always cross strata upward.

    Implemented by condensing the predicate dependency graph into strongly
    connected components: a negative dependency inside a component is a
    negation cycle and is rejected; otherwise each predicate gets the
    smallest level compatible with its dependencies (positive edges keep
    the level, negative edges raise it by one, extensional symbols sit at
    level zero).
    """
    heads = [rule.head for rule in program.rules]
    idb = set(heads)
    positive: dict[str, set[str]] = {p: set() for p in idb}
    negative: dict[str, set[str]] = {p: set() for p in idb}
    negates_edb: set[str] = set()
    for rule in program.rules:
        for citation in rule.citations():
            if citation.predicate not in idb:
                if citation.negated:
                    negates_edb.add(rule.head)
                continue
            target = positive if not citation.negated else negative
            target[rule.head].add(citation.predicate)

    order = _scc_order(idb, positive, negative)
    component_of: dict[str, int] = {}
    for number, component in enumerate(order):
        for predicate in component:
            component_of[predicate] = number
    for head in idb:
        for dep in negative[head]:
            if component_of[dep] == component_of[head]:
                cycle = sorted(order[component_of[head]])
                raise NegativeCycleError(cycle)

    level_of: dict[str, int] = {}
    for component in order:  # already in dependency order
        level = 0
        for predicate in component:
            if predicate in negates_edb:
                level = max(level, 1)
            for dep in positive[predicate]:
                if dep not in component:
                    level = max(level, level_of[dep])
            for dep in negative[predicate]:
                level = max(level, level_of[dep] + 1)
        for predicate in component:
            level_of[predicate] = level

    by_level: dict[int, set[str]] = {}
    for predicate, level in level_of.items():
        by_level.setdefault(level, set()).add(predicate)
    strata = tuple(frozenset(by_level[level]) for level in sorted(by_level))
    return Stratification(strata, level_of)


def _scc_order(nodes, positive, negative):
    """Strongly connected components in reverse topological (dependency) order."""
    graph = {n: sorted(positive[n] | negative[n]) for n in nodes}
    index_counter = 0
    stack: list[str] = []
    on_stack: set[str] = set()
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    result: list[list[str]] = []

    for start in sorted(nodes):
        if start in index:
            continue
        work = [(start, iter(graph[start]))]
        index[start] = low[start] = index_counter
        index_counter += 1
        stack.append(start)
        on_stack.add(start)
        while work:
            node, children = work[-1]
            advanced = False
            for child in children:
                if child not in index:
                    index[child] = low[child] = index_counter
                    index_counter += 1
                    stack.append(child)
                    on_stack.add(child)
                    work.append((child, iter(graph[child])))
                    advanced = True
                    break
                if child in on_stack:
                    low[node] = min(low[node], index[child])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                component = []
                while True:
                    member = stack.pop()
                    on_stack.remove(member)
                    component.append(member)
                    if member == node:
                        break
                result.append(component)
    return result

"""Rule rewriting: flattening tree-shaped rules and expanding templates.

Flattening turns one valid rule into an equivalent set of flat rules by
walking the rule's variable tree outward from the head variable.  Each
visited variable that carries unary citations yields a `__t` rule holding
those citations; each edge citation yields a `__s` rule holding the edge
plus the continuation one hop further out.  Variables that carry nothing
are passed through without a rule of their own.  Components of the tree
not connected to the head variable are whole-rule constraints: their root
rules are cited from the head rule, where any non-head variable acts as
an existential gate.
"""

from __future__ import annotations

from collections import deque
from dataclasses import replace

from .syntax import Citation, Invocation, InvocationCite, Program, Rule, format_rule
from .validate import is_flat, rule_shape_violations


class InvalidRuleError(ValueError):
    def __init__(self, violations):
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = violations


class ExpansionError(ValueError):
    pass


class NameAllocator:
    """Monotone fresh-name source shared across one program's rewrites."""

    def __init__(self, counter: int = 0):
        self.counter = counter

    def fresh(self, prefix: str) -> str:
        self.counter += 1
        return f"__{prefix}{self.counter}"


class _OpenRule:
    def __init__(self, head: str, head_var: str, body=()):
        self.head = head
        self.head_var = head_var
        self.body = list(body)

    def close(self) -> Rule:
        return Rule(self.head, self.head_var, tuple(self.body))


def flatten_rule(rule: Rule, alloc: NameAllocator | None = None,
                 force: bool = False) -> list[Rule]:
    """Rewrite `rule` into an equivalent list of flat rules.

    Refuses rules that fail the formation checks unless `force` is set
    (forcing is only useful to demonstrate why such rules are excluded:
    the output is *not* equivalent for them).  Rules already flat are
    returned unchanged.
    """
    if not force:
        violations = rule_shape_violations(rule)
        if violations:
            raise InvalidRuleError(violations)
    if is_flat(rule):
        return [rule]
    if alloc is None:
        alloc = NameAllocator()

    unary: dict[str, list[Citation]] = {}
    adjacency: dict[str, list[tuple[Citation, str]]] = {}
    edges: list[Citation] = []
    var_order: list[str] = [rule.head_var]

    def note_var(name: str):
        if name not in adjacency:
            adjacency[name] = []
            if name not in var_order:
                var_order.append(name)

    note_var(rule.head_var)
    for citation in rule.body:
        assert isinstance(citation, Citation), "expand templates before flattening"
        if citation.is_edge:
            a, b = citation.vars
            note_var(a)
            note_var(b)
            adjacency[a].append((citation, b))
            adjacency[b].append((citation, a))
            edges.append(citation)
        else:
            note_var(citation.vars[0])
            unary.setdefault(citation.vars[0], []).append(citation)

    produced: list[_OpenRule] = []
    visited: set[str] = set()
    used_edges: set[int] = set()

    head_open = _OpenRule(alloc.fresh("t"), rule.head_var,
                          [replace(c, span=None) for c in unary.get(rule.head_var, [])])
    produced.append(head_open)

    def walk(root_var: str, root_rule: _OpenRule):
        # breadth-first over the component; attach points are the rule a
        # variable's constraints live in (its own rule, or the edge rule
        # that reached it when it carries no unary citations)
        attach: dict[str, _OpenRule] = {root_var: root_rule}
        queue = deque([root_var])
        visited.add(root_var)
        while queue:
            current = queue.popleft()
            holder = attach[current]
            for citation, far in adjacency[current]:
                if id(citation) in used_edges:
                    continue
                used_edges.add(id(citation))
                edge_rule = _OpenRule(alloc.fresh("s"), current,
                                      [replace(citation, span=None)])
                produced.append(edge_rule)
                holder.body.append(Citation(edge_rule.head, (current,)))
                if far in visited:
                    continue  # forced rewrites may revisit; tree walks never do
                visited.add(far)
                far_unary = unary.get(far, [])
                if far_unary:
                    far_rule = _OpenRule(alloc.fresh("t"), far,
                                         [replace(c, span=None) for c in far_unary])
                    produced.append(far_rule)
                    edge_rule.body.append(Citation(far_rule.head, (far,)))
                    attach[far] = far_rule
                else:
                    attach[far] = edge_rule
                queue.append(far)

    walk(rule.head_var, head_open)

    # remaining components are whole-rule constraints hung off the head rule
    for var in var_order:
        if var in visited:
            continue
        if var not in unary and not adjacency[var]:
            continue
        # grow from an anchored variable of the component when there is one
        root = var
        if var not in unary:
            component = _component_of(var, adjacency)
            anchored = [v for v in var_order if v in component and v in unary]
            if anchored:
                root = anchored[0]
        root_rule = _OpenRule(alloc.fresh("t"), root,
                              [replace(c, span=None) for c in unary.get(root, [])])
        produced.append(root_rule)
        head_open.body.append(Citation(root_rule.head, (root,)))
        walk(root, root_rule)

    rules = [open_rule.close() for open_rule in produced]
    rules.append(Rule(rule.head, rule.head_var,
                      (Citation(head_open.head, (rule.head_var,)),)))
    if not force:
        assert len(edges) == len(used_edges), format_rule(rule)
    return rules


def _component_of(start: str, adjacency) -> set[str]:
    seen = {start}
    stack = [start]
    while stack:
        node = stack.pop()
        for _, far in adjacency[node]:
            if far not in seen:
                seen.add(far)
                stack.append(far)
    return seen


def expand_templates(program: Program, invocation: Invocation | str):
    """Expand an invocation (and anything it pulls in) into plain rules.

    Returns (new program, result symbol).  Expansion is memoized per
    (template name, resolved argument symbols), both within a call and
    across calls on the same returned program, so recursive
    self-instantiation terminates and repeated invocations add nothing.
    """
    from .syntax import parse_invocation

    if isinstance(invocation, str):
        invocation = parse_invocation(invocation)

    result = program.copy()
    alloc = NameAllocator(result.fresh_counter)
    # expansion recurses per instantiation; cap well below the interpreter's
    # recursion limit so runaway self-instantiation reports cleanly
    budget = [400]

    def resolve(inv: Invocation) -> str:
        args = tuple(resolve(a) if isinstance(a, Invocation) else a for a in inv.args)
        key = (inv.name, args)
        memoized = result.expansions.get(key)
        if memoized is not None:
            return memoized
        template = result.templates.get(inv.name)
        if template is None:
            raise ExpansionError(f"unknown template {inv.name!r}")
        if len(args) != len(template.holes):
            raise ExpansionError(
                f"template {inv.name!r} takes {len(template.holes)} argument(s), "
                f"got {len(args)}")
        budget[0] -= 1
        if budget[0] <= 0:
            raise ExpansionError(
                f"expansion of {inv.name!r} does not terminate: every recursive "
                f"instantiation uses new arguments")
        base = alloc.fresh(f"x{inv.name}")
        locals_ = {rule.head for rule in template.rules}
        mapping = dict(zip(template.holes, args))
        mapping[template.result] = base
        for local in locals_:
            mapping.setdefault(local, f"{base}_{local}")
        # memoize before walking the body so self-instantiation closes the loop
        result.expansions[key] = base
        for rule in template.rules:
            body = []
            for citation in rule.body:
                if isinstance(citation, InvocationCite):
                    nested = _substitute(citation.invocation, mapping)
                    body.append(Citation(resolve(nested), (citation.var,)))
                else:
                    body.append(replace(
                        citation,
                        predicate=mapping.get(citation.predicate, citation.predicate),
                        span=None))
            result.rules.append(Rule(mapping[rule.head], rule.head_var, tuple(body)))
        return base

    symbol = resolve(invocation)
    result.fresh_counter = alloc.counter
    return result, symbol


def _substitute(invocation: Invocation, mapping: dict) -> Invocation:
    args = []
    for arg in invocation.args:
        if isinstance(arg, Invocation):
            args.append(_substitute(arg, mapping))
        else:
            args.append(mapping.get(arg, arg))
    return Invocation(invocation.name, tuple(args))

import pytest

from starquery.starlang import (
    NegativeCycleError,
    parse_program,
    stratify,
    validate_flat,
    validate_rules,
)
from util import rules_of

VALID_RULES = [
    "r(X) :- .",
    "r(X) :- f1(X), p1(X), f2(X), p2(X), p3(X), f3(Z).",
    "r(X) :- !p1(X), f1(X), p2(X).",
    "r(X) :- !p1(X), p1(X).",  # always false, still well formed
    "r(X) :- e1(X, Y), e1(X, Z), e2(Y, W), r(W), e2(V, Z), p2(V).",
]

INVALID_RULES = [
    ("r(X) :- e(Y, X), !r(Y).", 3),
    ("r(X) :- e(Y, Z).", 4),
    ("r(X) :- e1(X, Y), e2(X, Y).", 4),
]


@pytest.mark.parametrize("text", VALID_RULES)
def test_valid_rules_accepted(text):
    assert validate_rules(parse_program(text)) == []


@pytest.mark.parametrize("text,item", INVALID_RULES)
def test_invalid_rules_rejected_with_item(text, item):
    violations = validate_rules(parse_program(text))
    assert violations, text
    assert violations[0].item == item


def test_shared_nonhead_variable_is_rejected_not_rewritten():
    # equality between non-head variables of two edges is out of reach
    program = parse_program("p(X) :- q(X, Y), r(X, Y).")
    violations = validate_rules(program)
    assert violations and violations[0].item == 4

    from starquery.starlang import InvalidRuleError, flatten_rule

    with pytest.raises(InvalidRuleError):
        flatten_rule(program.rules[0])


def test_variable_graph_cycle_rejected():
    text = "r(X) :- e1(X, Y), e2(Y, Z), e3(Z, X)."
    violations = validate_rules(parse_program(text))
    assert violations and violations[0].item == 4


def test_self_loop_edge_rejected():
    violations = validate_rules(parse_program("r(X) :- e(X, X)."))
    assert violations and violations[0].item == 4


def test_transitive_negation_of_head_rejected():
    program = parse_program("""
r(X) :- !q(X).
q(X) :- s(X).
s(X) :- r(X).
""")
    violations = validate_rules(program)
    assert any(v.item == 3 for v in violations)


def test_detached_anchored_component_accepted():
    assert validate_rules(parse_program("r(X) :- d(U), e1(U, R).")) == []


def test_recursive_positive_program_single_stratum():
    program = parse_program("""
reach(X) :- start(X).
reach(X) :- e(X, Y), reach(Y).
query reach.
""")
    strat = stratify(program)
    assert len(strat.strata) == 1
    assert strat.strata[0] == frozenset({"reach"})


def test_negating_extensional_sits_above_base_level():
    program = parse_program("q1(Z) :- e2(V, Z), !p(V).")
    strat = stratify(program)
    assert strat.level("q1") >= 1
    assert strat.level("p") == 0  # extensional


def test_self_negation_is_a_cycle():
    with pytest.raises(NegativeCycleError) as info:
        stratify(parse_program("r(X) :- !r(X)."))
    assert "r" in info.value.cycle


def test_indirect_negative_cycle_lists_members():
    with pytest.raises(NegativeCycleError) as info:
        stratify(parse_program("a(X) :- !b(X).\nb(X) :- a(X)."))
    assert set(info.value.cycle) == {"a", "b"}


def test_negation_crosses_strata():
    program = parse_program("""
base(X) :- u(X).
upper(X) :- v(X), !base(X).
""")
    strat = stratify(program)
    assert strat.level("upper") > strat.level("base")
    for stratum in strat.strata:
        assert not ({"base", "upper"} <= stratum)


def test_flat_shape_checks():
    flat_ok = rules_of("r(X) :- q(X), d(Z).")
    assert validate_flat(flat_ok) == []

    two_edges = rules_of("r(X) :- e(X, Y), t(Y), f(X, Z), u(Z).")
    violations = validate_flat(two_edges)
    assert violations and "edge citations" in violations[0].message

    edge_without_head = rules_of("r(X) :- d(U), e1(U, R).")
    assert validate_flat(edge_without_head)  # detached edges are not flat

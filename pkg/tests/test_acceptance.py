"""Acceptance suite: one test per shipping criterion, with timing budgets.

Each test prints a PASS line naming its criterion (visible with -s or -rP).
"""

import json
import random
import time

import pytest

from starquery.cli import main
from starquery.codesearch import QNot, QOr, QAnd, format_query, parse_query
from starquery.compiler import compile_query
from starquery.engine import evaluate
from starquery.facts import load_database, load_database_file
from starquery.oracle import (
    Atom,
    GeneralRule,
    evaluate_naive,
    random_instance,
    random_rule_instance,
)
from starquery.starlang import (
    Program,
    expand_templates,
    flatten_rule,
    parse_program,
    validate_rules,
)
from starquery.stdlib import PredicateConfig, default_registry
from conftest import FIXTURES
from util import random_surface_query, rules_isomorphic, rules_of


TREE_RULE = ("r(X) :- e1(X, Y), e1(X, Z), e2(Y, W), r(W), e2(V, Z), !p(V), "
             "d(U), e1(U, R).")

TREE_RULE_FLATTENED = """
t1(X) :- s1(X), s2(X), t5(U).
s1(X) :- e1(X, Y), s3(Y).
s2(X) :- e1(X, Z), s4(Z).
s3(Y) :- e2(Y, W), t2(W).
s4(Z) :- e2(V, Z), t3(V).
t2(W) :- r(W).
t3(V) :- !p(V).
t5(U) :- d(U), s5(U).
s5(U) :- e1(U, R).
r(X) :- t1(X).
"""


def done(label):
    print(f"PASS {label}")


def test_c01_flattening_golden():
    started = time.perf_counter()
    produced = flatten_rule(rules_of(TREE_RULE)[0])
    expected = rules_of(TREE_RULE_FLATTENED)
    assert len(produced) == 10
    assert rules_isomorphic(produced, expected,
                            fixed={"r", "p", "d", "e1", "e2"})
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0
    done(f"criterion 1: ten-rule flattening golden match ({elapsed:.3f}s)")


def test_c02_shared_variable_counterexample():
    db = load_database({
        "nodes": [{"id": i, "kind": "Other", "attrs": {}} for i in (1, 2, 3, 7)],
        "binary": {"e1": [[1, 2], [3, 2]], "e2": [[1, 2], [3, 7]]},
    })
    program = parse_program("r(X) :- e1(X, Y), e2(X, Y).")
    original = evaluate_naive(program, db)["r"]
    assert {db.original_id(i) for (i,) in original} == {1}

    forced = Program(rules=flatten_rule(program.rules[0], force=True))
    rewritten = evaluate_naive(forced, db)["r"]
    assert {db.original_id(i) for (i,) in rewritten} == {1, 3}

    violations = validate_rules(program)
    assert violations and violations[0].item == 4
    done("criterion 2: shared-variable rule counterexample ({1} vs {1,3}, "
         "rejected citing item 4)")


VALID_RULES = [
    "r(X) :- .",
    "r(X) :- f1(X), p1(X), f2(X), p2(X), p3(X), f3(Z).",
    "r(X) :- !p1(X), f1(X), p2(X).",
    "r(X) :- !p1(X), p1(X).",
    "r(X) :- e1(X, Y), e1(X, Z), e2(Y, W), r(W), e2(V, Z), p2(V).",
]

INVALID_RULES = [
    ("r(X) :- e(Y, X), !r(Y).", 3),
    ("r(X) :- e(Y, Z).", 4),
    ("r(X) :- e1(X, Y), e2(X, Y).", 4),
]


def test_c03_validity_suite():
    for text in VALID_RULES:
        assert validate_rules(parse_program(text)) == [], text
    for text, item in INVALID_RULES:
        violations = validate_rules(parse_program(text))
        assert violations, text
        assert violations[0].item == item, text
    done("criterion 3: 5 valid rules accepted, 3 invalid rejected with "
         "correct items")


def test_c04_flattening_equivalence_1000():
    started = time.perf_counter()
    for seed in range(1000):
        rule, db = random_rule_instance(seed)
        flat = flatten_rule(rule)
        original = evaluate_naive(Program(rules=[rule]), db)["r"]
        rewritten = evaluate_naive(Program(rules=flat), db)["r"]
        fast = {(i,) for i in evaluate(Program(rules=flat), db,
                                       query="r").node_ids}
        assert original == rewritten == fast, seed
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    done(f"criterion 4: 1000-case flattening equivalence, 0 failures "
         f"({elapsed:.1f}s)")


def test_c05_engine_oracle_differential_1000():
    started = time.perf_counter()
    for seed in range(1000):
        program, db = random_instance(seed)
        naive = evaluate_naive(program, db)
        fast = evaluate(program, db)
        assert {(i,) for i in fast.node_ids} == naive[program.query], seed
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    done(f"criterion 5: 1000-program engine vs reference differential, "
         f"0 failures ({elapsed:.1f}s)")


def test_c06_read_after_close_end_to_end(tmp_path, capsys):
    started = time.perf_counter()
    query_file = FIXTURES / "read_after_close.query"
    expectations = {"snippet1.toy": 1, "snippet2.toy": 2}
    for snippet, expected_line in expectations.items():
        out = tmp_path / f"{snippet}.json"
        assert main(["analyze", str(FIXTURES / snippet),
                     "--out", str(out)]) == 0
        capsys.readouterr()
        assert main(["query", "--db", str(out),
                     "--query-file", str(query_file)]) == 0
        document = json.loads(capsys.readouterr().out)
        assert len(document["matches"]) == 1, snippet
        match = document["matches"][0]
        assert match["kind"] == "CallExpression"
        assert match["file"].endswith(snippet)
        assert match["line"] == expected_line
        db = load_database_file(out)
        assert db.node(db.dense_id(match["id"])).attr("name") == "read"
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0
    done(f"criterion 6: read-after-close matches once per snippet with one "
         f"query text ({elapsed:.2f}s)")


def test_c07_case_study_fixtures():
    manifest = json.loads((FIXTURES / "manifest.json").read_text())
    assert len(manifest["cases"]) == 5
    for case in manifest["cases"]:
        db = load_database_file(FIXTURES / case["db"])
        config = (PredicateConfig.load(FIXTURES / case["config"])
                  if case["config"] else None)
        compiled = compile_query(case["query"], config=config)
        result = evaluate(compiled.program, db)
        got = sorted((m.id, m.file, m.line) for m in result.matches)
        want = sorted((e["id"], e["file"], e["line"])
                      for e in case["expected"])
        assert got == want, case["name"]
    done("criterion 7: all 5 case-study fixtures match their recorded nodes")


def test_c08_scaling_bound():
    started = time.perf_counter()
    program = parse_program("r(X) :- p(X).\nr(X) :- e(X, Y), r(Y).\nquery r.")
    timings = {}
    for n in (10**3, 10**4, 10**5):
        db = load_database({
            "nodes": [{"id": i, "kind": "Other", "attrs": {}}
                      for i in range(n)],
            "unary": {"p": [n - 1]},
            "binary": {"e": [[i, i + 1] for i in range(n - 1)]},
        })
        t0 = time.perf_counter()
        result = evaluate(program, db)
        timings[n] = time.perf_counter() - t0
        assert len(result.node_ids) == n
        assert all(r <= n for r in result.metrics.iterations_per_stratum)
    ratio_a = timings[10**4] / timings[10**3]
    ratio_b = timings[10**5] / timings[10**4]
    assert ratio_a <= 20.0 and ratio_b <= 20.0, timings
    elapsed = time.perf_counter() - started
    assert elapsed < 30.0
    done(f"criterion 8: chain scaling ratios {ratio_a:.1f}x, {ratio_b:.1f}x "
         f"(limit 20x), total {elapsed:.1f}s")


def test_c09_grammar_conformance():
    registry = default_registry()
    precedence = parse_query("a or not b and c", registry)
    assert isinstance(precedence, QOr)
    assert isinstance(precedence.right, QAnd)
    assert isinstance(precedence.right.left, QNot)

    regex = parse_query('CallExpression<~"rea.*">', registry)
    assert regex.args[0].kind == "regex"

    preds = parse_query("Taint<PRED:AnySource, PRED:SqliSanitizer, "
                        "PRED:SqliSink>", registry)
    assert [a.name for a in preds.args] == ["AnySource", "SqliSanitizer",
                                            "SqliSink"]

    nested = parse_query(
        'HasArg0<DataFlowAfter<Arg0In<CallExpression<ForSameObject<"x">>>>>',
        registry)
    depth = 0
    node = nested
    while hasattr(node, "args"):
        depth += 1
        node = node.args[0]
    assert depth == 5

    rng = random.Random(424242)
    for _ in range(100):
        tree = random_surface_query(rng, depth=4)
        assert parse_query(format_query(tree), registry) == tree
    done("criterion 9: precedence, regex, PRED:, depth-5 nesting, 100-case "
         "round-trip")


def test_c10_template_memoization():
    program = parse_program("""
template walk(p) {
  t(X) :- p(X), e(X, Y), walk(p)(Y).
}
""")
    started = time.perf_counter()
    expanded, symbol = expand_templates(program, "walk(p)")
    elapsed = time.perf_counter() - started
    assert elapsed < 0.1
    assert len(expanded.rules) == 1
    assert len(expanded.expansions) == 1
    rule = expanded.rules[0]
    assert rule.head == symbol
    assert rule.body[-1].predicate == symbol  # self-instantiation closed
    done(f"criterion 10: recursive template expands exactly once "
         f"({elapsed * 1000:.1f}ms)")


def test_c11_ancestor_reference_evaluation():
    people = ["john", "mary", "joe", "kurt", "tine"]
    ids = {name: i for i, name in enumerate(people)}
    db = load_database({
        "nodes": [{"id": i, "kind": "Other", "attrs": {"name": name}}
                  for i, name in enumerate(people)],
        "binary": {
            "father": [[ids["john"], ids["mary"]], [ids["joe"], ids["kurt"]],
                       [ids["tine"], ids["kurt"]]],
            "mother": [[ids["mary"], ids["joe"]]],
        },
    })
    rules = [
        GeneralRule("parent", ("X", "Y"), (Atom("father", ("X", "Y")),)),
        GeneralRule("parent", ("X", "Y"), (Atom("mother", ("X", "Y")),)),
        GeneralRule("ancestor", ("X", "Y"), (Atom("parent", ("X", "Y")),)),
        GeneralRule("ancestor", ("X", "Y"),
                    (Atom("parent", ("X", "Z")), Atom("ancestor", ("Z", "Y")))),
    ]
    derived = evaluate_naive(rules, db)
    assert (ids["mary"], ids["joe"]) in derived["ancestor"]
    assert (ids["john"], ids["joe"]) in derived["ancestor"]

    parent_pairs = set(db.binary["father"].pairs) | set(db.binary["mother"].pairs)
    closure = set(parent_pairs)
    while True:
        extra = {(a, d) for a, b in closure for c, d in closure if b == c}
        if extra <= closure:
            break
        closure |= extra
    assert derived["ancestor"] == closure
    done("criterion 11: ancestor facts derived and equal to the closure "
         "reference")

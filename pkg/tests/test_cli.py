import json
from pathlib import Path

import pytest

from starquery.cli import main
from starquery.facts import load_database_file
from conftest import FIXTURES

READ_AFTER_CLOSE = ('CallExpression<"read"> and '
                    'HasArg0<DataFlowAfter<Arg0In<CallExpression<"close">>>>')


def analyze(tmp_path, source_name, out_name="facts.json"):
    out = tmp_path / out_name
    code = main(["analyze", str(FIXTURES / source_name), "--out", str(out)])
    assert code == 0
    return out


def test_analyze_writes_loadable_facts(tmp_path, capsys):
    out = analyze(tmp_path, "snippet1.toy")
    db = load_database_file(out)
    assert db.node_count > 0
    stdout = capsys.readouterr().out
    assert "nodes" in stdout and "edges" in stdout


def test_analyze_empty_directory_warns(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    out = tmp_path / "facts.json"
    assert main(["analyze", str(empty), "--out", str(out)]) == 0
    assert load_database_file(out).node_count == 0


def test_analyze_syntax_error_exits_without_output(tmp_path, capsys):
    bad = tmp_path / "bad.toy"
    bad.write_text("let = ;")
    out = tmp_path / "facts.json"
    assert main(["analyze", str(bad), "--out", str(out)]) == 1
    assert not out.exists()
    assert "error" in capsys.readouterr().err


def test_query_finds_read_after_close(tmp_path, capsys):
    out = analyze(tmp_path, "snippet2.toy")
    capsys.readouterr()
    code = main(["query", "--db", str(out), "--query", READ_AFTER_CLOSE])
    assert code == 0
    document = json.loads(capsys.readouterr().out)
    assert len(document["matches"]) == 1
    match = document["matches"][0]
    assert match["line"] == 2
    assert match["file"].endswith("snippet2.toy")


def test_query_not_any_is_empty(tmp_path, capsys):
    out = analyze(tmp_path, "snippet1.toy")
    capsys.readouterr()
    assert main(["query", "--db", str(out), "--query", "not Any"]) == 0
    document = json.loads(capsys.readouterr().out)
    assert document["matches"] == []


def test_query_parse_error_exit_code(tmp_path, capsys):
    out = analyze(tmp_path, "snippet1.toy")
    capsys.readouterr()
    assert main(["query", "--db", str(out), "--query", "Bogus<"]) == 1
    assert "error" in capsys.readouterr().err


def test_query_db_load_error_exit_code(tmp_path, capsys):
    missing = tmp_path / "missing.json"
    assert main(["query", "--db", str(missing), "--query", "Any"]) == 2


def test_query_file_and_explain(tmp_path, capsys):
    out = analyze(tmp_path, "snippet2.toy")
    query_file = tmp_path / "q.query"
    query_file.write_text(READ_AFTER_CLOSE)
    capsys.readouterr()
    code = main(["query", "--db", str(out), "--query-file", str(query_file),
                 "--explain"])
    assert code == 0
    captured = capsys.readouterr()
    assert "kind_callexpression" in captured.err  # compiled program shown
    assert "stratum 0" in captured.err
    assert json.loads(captured.out)["matches"]


def test_query_case_study_fixture(capsys):
    code = main([
        "query",
        "--db", str(FIXTURES / "resource_leak.json"),
        "--query", 'CallExpression<"java.io.FileInputStream"> '
                   'and not ForSameObject<Arg0In<"close">>',
    ])
    assert code == 0
    document = json.loads(capsys.readouterr().out)
    assert [m["id"] for m in document["matches"]] == [1]
    assert document["matches"][0]["line"] == 17


def test_suggest_command(tmp_path, capsys):
    out = analyze(tmp_path, "snippet1.toy")
    capsys.readouterr()
    code = main(["suggest", "--db", str(out),
                 "--query", "CallExpression<", "--cursor", "15"])
    assert code == 0
    document = json.loads(capsys.readouterr().out)
    texts = [s["text"] for s in document["suggestions"]]
    assert set(texts[:3]) == {"read", "close", "file"}

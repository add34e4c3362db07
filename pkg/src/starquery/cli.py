"""Command line entry points: analyze, query, suggest, serve."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .codesearch import QuerySyntaxError
from .compiler import CompileError, compile_query
from .engine import evaluate, match_set_document
from .facts import FactsError, RegexError, load_database_file
from .starlang import stratify
from .stdlib import PredicateConfig, default_registry
from .suggest import SuggestionIndex, suggest, suggestion_document
from .toy import ToySyntaxError, build_graph, parse_source

log = logging.getLogger("starquery")


def _configure_logging():
    level_name = os.environ.get("STARQUERY_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level_name, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _toy_files(paths) -> list[Path]:
    files: list[Path] = []
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            files.extend(sorted(path.rglob("*.toy")))
        else:
            files.append(path)
    return files


def cmd_analyze(args) -> int:
    files = _toy_files(args.paths)
    if not files:
        log.warning("no .toy sources under %s; writing an empty graph",
                    ", ".join(args.paths))
    modules = []
    failed = False
    for path in files:
        try:
            modules.append(parse_source(path.read_text(encoding="utf-8"),
                                        str(path)))
        except ToySyntaxError as exc:
            print(f"error: {exc}", file=sys.stderr)
            failed = True
    if failed:
        return 1
    output = build_graph(modules)
    for warning in output.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    Path(args.out).write_text(json.dumps(output.document, indent=1) + "\n",
                              encoding="utf-8")
    print(f"wrote {args.out}: {output.node_count} nodes, "
          f"{output.edge_count} edges")
    return 0


def _load_config(path) -> PredicateConfig:
    if path is None:
        return PredicateConfig()
    return PredicateConfig.load(path)


def cmd_query(args) -> int:
    if (args.query is None) == (args.query_file is None):
        print("error: provide exactly one of --query or --query-file",
              file=sys.stderr)
        return 1
    query_text = args.query if args.query is not None \
        else Path(args.query_file).read_text(encoding="utf-8").strip()
    try:
        db = load_database_file(args.db)
    except (FactsError, OSError) as exc:
        print(f"error: cannot load {args.db}: {exc}", file=sys.stderr)
        return 2
    try:
        compiled = compile_query(query_text, default_registry(),
                                 _load_config(args.config))
        result = evaluate(compiled.program, db)
    except (QuerySyntaxError, CompileError, RegexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.explain:
        print("# compiled program", file=sys.stderr)
        print(compiled.star_text(), file=sys.stderr)
        strat = stratify(compiled.program)
        for level, stratum in enumerate(strat.strata):
            print(f"# stratum {level}: {', '.join(sorted(stratum))}",
                  file=sys.stderr)
    document = match_set_document(result, query_text)
    document["warnings"] = compiled.warnings + document["warnings"]
    print(json.dumps(document, indent=1))
    return 0


def cmd_suggest(args) -> int:
    try:
        db = load_database_file(args.db)
    except (FactsError, OSError) as exc:
        print(f"error: cannot load {args.db}: {exc}", file=sys.stderr)
        return 2
    index = SuggestionIndex.build(db)
    cursor = args.cursor if args.cursor is not None else len(args.query)
    result = suggest(index, args.query, cursor, default_registry())
    print(json.dumps(suggestion_document(result), indent=1))
    return 0


def cmd_serve(args) -> int:
    from .service import AppState, serve

    try:
        db = load_database_file(args.db)
    except (FactsError, OSError) as exc:
        print(f"error: cannot load {args.db}: {exc}", file=sys.stderr)
        return 2
    state = AppState.create(
        db,
        config=_load_config(args.config),
        source_root=args.source_root,
        assets_dir=args.assets,
    )
    serve(state, args.bind)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="starquery",
        description="Search program-analysis graphs with compiled rule queries.")
    commands = parser.add_subparsers(dest="command", required=True)

    analyze = commands.add_parser(
        "analyze", help="parse .toy sources and write a facts file")
    analyze.add_argument("paths", nargs="+",
                         help=".toy files or directories to scan")
    analyze.add_argument("--out", default="facts.json",
                         help="output facts file (default: facts.json)")
    analyze.set_defaults(handler=cmd_analyze)

    query = commands.add_parser("query", help="run a query against a graph")
    query.add_argument("--db", required=True, help="facts file to load")
    query.add_argument("--query", help="query text")
    query.add_argument("--query-file", help="file holding the query text")
    query.add_argument("--config", help="predicate configuration JSON")
    query.add_argument("--explain", action="store_true",
                       help="print the compiled program and strata to stderr")
    query.set_defaults(handler=cmd_query)

    suggest_cmd = commands.add_parser(
        "suggest", help="complete a partially written query")
    suggest_cmd.add_argument("--db", required=True)
    suggest_cmd.add_argument("--query", required=True)
    suggest_cmd.add_argument("--cursor", type=int,
                             help="byte offset (default: end of query)")
    suggest_cmd.set_defaults(handler=cmd_suggest)

    serve_cmd = commands.add_parser(
        "serve", help="serve query/suggest/stats/source over HTTP")
    serve_cmd.add_argument("--db", required=True)
    serve_cmd.add_argument("--config", help="predicate configuration JSON")
    serve_cmd.add_argument("--bind", default="127.0.0.1:8973")
    serve_cmd.add_argument("--source-root", default=".",
                           help="directory /source serves files from")
    serve_cmd.add_argument("--assets",
                           help="directory with the web editor build")
    serve_cmd.set_defaults(handler=cmd_serve)
    return parser


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())

"""Local HTTP JSON service over one loaded graph.

Endpoints:

  POST /query    {"query": str}        -> match set JSON
  GET  /suggest  ?q=...&cursor=N       -> suggestion list JSON
  GET  /stats                          -> active-domain size and relation stats
  GET  /source   ?file=relative/path   -> raw source text
  GET  /...                            -> static editor assets, when configured

All shared state (database, suggestion index, registry, configuration) is
immutable after startup, so requests are served concurrently from a
threading server without coordination.  Request errors never take the
service down; failures come back as `{"error": ...}` with a fitting
status code.
"""

from __future__ import annotations

import json
import logging
import mimetypes
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .codesearch import QuerySyntaxError
from .compiler import CompileError, compile_query
from .engine import evaluate, match_set_document
from .facts import Database, RegexError, db_stats
from .stdlib import PredicateConfig, Registry, default_registry
from .suggest import SuggestionIndex, suggest, suggestion_document

log = logging.getLogger("starquery.service")


@dataclass
class AppState:
    db: Database
    index: SuggestionIndex
    registry: Registry
    config: PredicateConfig
    source_root: Path
    assets_dir: Path | None = None

    @staticmethod
    def create(db: Database, config: PredicateConfig | None = None,
               source_root=".", assets_dir=None) -> "AppState":
        return AppState(
            db=db,
            index=SuggestionIndex.build(db),
            registry=default_registry(),
            config=config or PredicateConfig(),
            source_root=Path(source_root).resolve(),
            assets_dir=Path(assets_dir).resolve() if assets_dir else None,
        )


def answer_query(state: AppState, query_text: str) -> dict:
    compiled = compile_query(query_text, state.registry, state.config)
    result = evaluate(compiled.program, state.db)
    document = match_set_document(result, query_text)
    document["warnings"] = compiled.warnings + document["warnings"]
    return document


def answer_suggest(state: AppState, query_text: str, cursor: int) -> dict:
    return suggestion_document(
        suggest(state.index, query_text, cursor, state.registry))


def answer_stats(state: AppState) -> dict:
    stats = db_stats(state.db)
    return {"T": stats.T, "k": stats.k, "m": stats.m}


class _Handler(BaseHTTPRequestHandler):
    state: AppState  # class attribute installed by create_server

    def log_message(self, fmt, *args):
        log.debug("%s " + fmt, self.address_string(), *args)

    def _send(self, status: int, payload: bytes, content_type: str):
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(payload)

    def _send_json(self, status: int, document: dict):
        self._send(status, (json.dumps(document, indent=1) + "\n").encode(),
                   "application/json; charset=utf-8")

    def _error(self, status: int, message: str, **extra):
        self._send_json(status, {"error": message, **extra})

    def do_POST(self):
        try:
            route = urlparse(self.path).path
            if route != "/query":
                self._error(404, f"no such endpoint: {route}")
                return
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length)
            try:
                body = json.loads(raw or b"{}")
            except json.JSONDecodeError as exc:
                self._error(400, f"request body is not JSON: {exc}")
                return
            query_text = body.get("query")
            if not isinstance(query_text, str):
                self._error(400, "body must carry a string 'query' field")
                return
            self._respond_query(query_text)
        except Exception as exc:  # per-request errors must not kill the server
            log.exception("request failed")
            self._error(500, f"internal error: {exc}")

    def _respond_query(self, query_text: str):
        try:
            self._send_json(200, answer_query(self.state, query_text))
        except QuerySyntaxError as exc:
            self._error(400, str(exc), line=exc.line, col=exc.col,
                        offset=exc.offset)
        except (CompileError, RegexError) as exc:
            self._error(400, str(exc))

    def do_GET(self):
        try:
            url = urlparse(self.path)
            params = parse_qs(url.query)
            if url.path == "/suggest":
                query_text = params.get("q", [""])[0]
                try:
                    cursor = int(params.get("cursor", [str(len(query_text))])[0])
                except ValueError:
                    self._error(400, "cursor must be an integer")
                    return
                self._send_json(200, answer_suggest(self.state, query_text,
                                                    cursor))
            elif url.path == "/stats":
                self._send_json(200, answer_stats(self.state))
            elif url.path == "/source":
                self._respond_source(params.get("file", [""])[0])
            else:
                self._respond_asset(url.path)
        except Exception as exc:
            log.exception("request failed")
            self._error(500, f"internal error: {exc}")

    def _respond_source(self, relative: str):
        if not relative:
            self._error(400, "missing 'file' parameter")
            return
        root = self.state.source_root
        target = (root / relative).resolve()
        if root != target and root not in target.parents:
            self._error(403, "file is outside the served source root")
            return
        if not target.is_file():
            self._error(404, f"no such source file: {relative}")
            return
        self._send(200, target.read_bytes(), "text/plain; charset=utf-8")

    def _respond_asset(self, path: str):
        assets = self.state.assets_dir
        if assets is None:
            self._error(404, "no editor assets configured "
                             "(start with --assets <dir>)")
            return
        relative = path.lstrip("/") or "index.html"
        target = (assets / relative).resolve()
        if assets != target and assets not in target.parents:
            self._error(403, "asset path is outside the assets directory")
            return
        if not target.is_file():
            self._error(404, f"no such asset: {relative}")
            return
        content_type = mimetypes.guess_type(str(target))[0] or \
            "application/octet-stream"
        self._send(200, target.read_bytes(), content_type)


def create_server(state: AppState, bind: str = "127.0.0.1:8973") \
        -> ThreadingHTTPServer:
    host, _, port_text = bind.partition(":")
    handler = type("BoundHandler", (_Handler,), {"state": state})
    server = ThreadingHTTPServer((host or "127.0.0.1", int(port_text or 8973)),
                                 handler)
    return server


def serve(state: AppState, bind: str = "127.0.0.1:8973"):
    server = create_server(state, bind)
    host, port = server.server_address[:2]
    log.info("serving on http://%s:%s/", host, port)
    print(f"serving on http://{host}:{port}/", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()

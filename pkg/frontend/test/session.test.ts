import assert from "node:assert/strict";
import { test } from "node:test";

import { ApiClient, FetchLike } from "../src/api.js";
import { EditorSession } from "../src/session.js";

/** A scripted service: maps endpoint paths to canned handlers. */
function fakeService(handlers: Record<string, (url: URL, init?: RequestInit)
    => Response | Promise<Response>>): FetchLike {
  return async (input, init) => {
    const url = new URL(input);
    const handler = handlers[url.pathname];
    if (!handler) {
      throw new TypeError(`fetch failed: ${url.pathname}`);
    }
    return handler(url, init);
  };
}

function json(document: unknown, status = 200): Response {
  return new Response(JSON.stringify(document), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

const SUGGESTIONS = {
  query: "", cursor: 0, context: "literal", replace_from: 15,
  suggestions: [
    { text: "read", kind: "literal", evidence: 1, rank: 1 },
  ],
};

function makeSession(handlers: Parameters<typeof fakeService>[0]) {
  const client = new ApiClient("http://svc.test", fakeService(handlers));
  const states: string[] = [];
  const session = new EditorSession(
    client,
    (view) => states.push(view.stale ? "stale" : "fresh"),
    150,
    (() => 1) as unknown as typeof setTimeout,
    (() => {}) as unknown as typeof clearTimeout,
  );
  return { client, session, states };
}

test("edit pipeline: suggestions, matches, source panes", async () => {
  const { client, session } = makeSession({
    "/suggest": () => json(SUGGESTIONS),
    "/query": () => json({
      query: "q", warnings: [], metrics: {},
      matches: [{ id: 10, kind: "CallExpression", file: "s.toy",
                  line: 1, col: 30 }],
    }),
    "/source": () => new Response("let f = file();  f.read();"),
  });
  session.edit("CallExpression<", 15);
  assert.equal(session.view.stale, true);
  await session.flush();
  assert.equal(session.view.stale, false);
  assert.equal(session.view.suggestions?.suggestions[0]?.text, "read");
  assert.equal(session.view.matches?.matches.length, 1);
  assert.equal(session.view.panes[0]?.file, "s.toy");
  assert.deepEqual(session.view.panes[0]?.lines[0]?.marks, [30]);
  // thin client: nothing but the documented endpoints was touched
  assert.deepEqual([...new Set(client.issued)].sort(),
                   ["/query", "/source", "/suggest"]);
});

test("parse errors surface inline with their position", async () => {
  const { session } = makeSession({
    "/suggest": () => json(SUGGESTIONS),
    "/query": () => json({ error: "expected '>'", line: 1, col: 16 }, 400),
  });
  session.edit('CallExpression<"read"', 21);
  await session.flush();
  assert.equal(session.view.parseIssue?.line, 1);
  assert.equal(session.view.parseIssue?.col, 16);
  assert.equal(session.view.offline, false);
});

test("unreachable service raises the banner and keeps the editor alive",
     async () => {
  const { session } = makeSession({});
  session.edit("Any", 3);
  await session.flush();
  assert.equal(session.view.offline, true);
  assert.equal(session.view.queryText, "Any");
});

test("empty query clears matches without issuing an evaluation", async () => {
  const issuedQueries: string[] = [];
  const { session } = makeSession({
    "/suggest": () => json({ ...SUGGESTIONS, suggestions: [] }),
    "/query": (url) => {
      issuedQueries.push(url.pathname);
      return json({ query: "", warnings: [], metrics: {}, matches: [] });
    },
  });
  session.edit("", 0);
  await session.flush();
  assert.deepEqual(issuedQueries, []);
  assert.equal(session.view.matches, null);
  assert.deepEqual(session.view.panes, []);
});

test("superseded evaluations never overwrite newer state", async () => {
  let release: (() => void) | null = null;
  const slowFirst = new Promise<void>((resolve) => { release = resolve; });
  let calls = 0;
  const { session } = makeSession({
    "/suggest": () => json(SUGGESTIONS),
    "/query": async (_url, init) => {
      calls += 1;
      const body = JSON.parse(String(init?.body)) as { query: string };
      if (calls === 1) {
        await slowFirst;
        if (init?.signal?.aborted) {
          throw new DOMException("aborted", "AbortError");
        }
      }
      return json({ query: body.query, warnings: [], metrics: {},
                    matches: [{ id: calls, kind: "Other", file: "",
                                line: 0, col: 0 }] });
    },
  });
  session.edit("alpha", 5);
  const first = session.flush();
  session.edit("beta", 4);
  const second = session.flush();
  release!();
  await Promise.all([first, second]);
  assert.equal(session.view.matches?.matches[0]?.id, 2);
  assert.equal(session.view.matches?.query, "beta");
});

test("accepting a suggestion splices text and re-evaluates cleanly",
     async () => {
  const { session } = makeSession({
    "/suggest": () => json(SUGGESTIONS),
    "/query": () => json({ query: "", warnings: [], metrics: {},
                           matches: [] }),
  });
  session.edit("CallExpression<", 15);
  await session.flush();
  const edited = session.accept(session.view.suggestions!.suggestions[0]!);
  assert.equal(edited.text, "CallExpression<read");
  await session.flush();
  assert.equal(session.view.parseIssue, null);
});

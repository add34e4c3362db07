import assert from "node:assert/strict";
import { test } from "node:test";

import type { SuggestionList } from "../src/api.js";
import { Debouncer, applySuggestion } from "../src/edits.js";

function list(replaceFrom: number): SuggestionList {
  return {
    query: "",
    cursor: 0,
    context: "literal",
    replace_from: replaceFrom,
    suggestions: [],
  };
}

const read = { text: "read", kind: "literal", evidence: 1, rank: 1 };

test("suggestion replaces the typed fragment", () => {
  const text = "CallExpression<re";
  const edited = applySuggestion(text, text.length, list(15), read);
  assert.equal(edited.text, "CallExpression<read");
  assert.equal(edited.cursor, "CallExpression<read".length);
});

test("suggestion inserts at cursor when nothing was typed", () => {
  const text = "CallExpression<";
  const edited = applySuggestion(text, text.length, list(15), read);
  assert.equal(edited.text, "CallExpression<read");
});

test("suggestion replaces an open quoted fragment including the quote", () => {
  const text = 'CallExpression<"re';
  const quoted = { text: '"read"', kind: "literal", evidence: 1, rank: 1 };
  const edited = applySuggestion(text, text.length, list(15), quoted);
  assert.equal(edited.text, 'CallExpression<"read"');
});

test("splice keeps the tail after the cursor", () => {
  const text = "CallExpression<re> and x";
  const cursor = "CallExpression<re".length;
  const edited = applySuggestion(text, cursor, list(15), read);
  assert.equal(edited.text, "CallExpression<read> and x");
  assert.equal(edited.cursor, "CallExpression<read".length);
});

test("debouncer collapses bursts to the last task", () => {
  const scheduled: Array<() => void> = [];
  const debouncer = new Debouncer(
    150,
    ((task: () => void) => { scheduled.push(task); return scheduled.length; }) as
      unknown as typeof setTimeout,
    (() => {}) as unknown as typeof clearTimeout,
  );
  const runs: string[] = [];
  debouncer.run(() => runs.push("first"));
  debouncer.run(() => runs.push("second"));
  debouncer.run(() => runs.push("third"));
  assert.deepEqual(runs, []);
  scheduled.at(-1)!();
  assert.deepEqual(runs, ["third"]);
  // earlier timer callbacks that were cancelled logically do nothing
  scheduled[0]!();
  assert.deepEqual(runs, ["third"]);
});

test("flush runs the pending task immediately", () => {
  const debouncer = new Debouncer(
    150,
    (() => 1) as unknown as typeof setTimeout,
    (() => {}) as unknown as typeof clearTimeout,
  );
  const runs: string[] = [];
  debouncer.run(() => runs.push("only"));
  debouncer.flush();
  assert.deepEqual(runs, ["only"]);
  debouncer.flush(); // nothing pending: a no-op
  assert.deepEqual(runs, ["only"]);
});

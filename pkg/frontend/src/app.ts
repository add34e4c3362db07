/** DOM wiring: textarea editor, suggestion dropdown, match panes. */

import { ApiClient } from "./api.js";
import { EditorSession, ViewState } from "./session.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function renderSuggestions(view: ViewState, session: EditorSession,
                           editor: HTMLTextAreaElement): void {
  const list = el<HTMLUListElement>("suggestions");
  list.textContent = "";
  const suggestions = view.suggestions?.suggestions ?? [];
  for (const suggestion of suggestions.slice(0, 12)) {
    const item = document.createElement("li");
    const name = document.createElement("span");
    name.textContent = suggestion.text;
    name.className = `kind-${suggestion.kind}`;
    item.appendChild(name);
    if (suggestion.evidence > 0) {
      const evidence = document.createElement("span");
      evidence.className = "evidence";
      evidence.textContent = `${suggestion.evidence}`;
      item.appendChild(evidence);
    }
    item.addEventListener("mousedown", (event) => {
      event.preventDefault();
      const edited = session.accept(suggestion);
      editor.value = edited.text;
      editor.focus();
      editor.setSelectionRange(edited.cursor, edited.cursor);
    });
    list.appendChild(item);
  }
}

function renderMatches(view: ViewState): void {
  const status = el<HTMLDivElement>("status");
  const banner = el<HTMLDivElement>("banner");
  const panes = el<HTMLDivElement>("panes");

  banner.hidden = !view.offline;
  if (view.parseIssue) {
    const where = view.parseIssue.line
      ? ` (line ${view.parseIssue.line}, column ${view.parseIssue.col})`
      : "";
    status.textContent = `parse error${where}: ${view.parseIssue.message}`;
    status.className = "error";
  } else if (!view.matches) {
    status.textContent = "type a query to see matches";
    status.className = "";
  } else {
    const n = view.matches.matches.length;
    status.textContent = `${n} match${n === 1 ? "" : "es"}`
      + (view.stale ? " (updating...)" : "");
    status.className = view.stale ? "stale" : "";
  }

  panes.classList.toggle("stale", view.stale);
  panes.textContent = "";
  for (const pane of view.panes) {
    const section = document.createElement("section");
    const heading = document.createElement("h3");
    heading.textContent = `${pane.file} (${pane.matchCount})`;
    section.appendChild(heading);
    const pre = document.createElement("pre");
    for (const line of pane.lines) {
      const row = document.createElement("div");
      row.className = line.marks.length ? "line hit" : "line";
      const num = document.createElement("span");
      num.className = "num";
      num.textContent = String(line.number);
      row.appendChild(num);
      if (line.marks.length) {
        const mark = document.createElement("mark");
        mark.textContent = line.text;
        row.appendChild(mark);
      } else {
        row.appendChild(document.createTextNode(line.text));
      }
      pre.appendChild(row);
    }
    section.appendChild(pre);
    panes.appendChild(section);
  }
}

export function start(baseUrl: string): EditorSession {
  const editor = el<HTMLTextAreaElement>("editor");
  const client = new ApiClient(baseUrl);
  const session = new EditorSession(client, (view) => {
    renderSuggestions(view, session, editor);
    renderMatches(view);
  });

  const onEdit = () => {
    session.edit(editor.value, editor.selectionStart ?? editor.value.length);
  };
  editor.addEventListener("input", onEdit);
  editor.addEventListener("click", onEdit);
  editor.addEventListener("keyup", (event) => {
    if (["ArrowLeft", "ArrowRight", "ArrowUp", "ArrowDown", "Home", "End"]
        .includes(event.key)) {
      onEdit();
    }
  });

  client.stats().then((stats) => {
    el<HTMLSpanElement>("db-stats").textContent =
      `${stats.T} nodes, ${stats.k} relations`;
  }).catch(() => {
    el<HTMLDivElement>("banner").hidden = false;
  });
  return session;
}

declare global {
  interface Window {
    starqueryEditor?: EditorSession;
  }
}

if (typeof document !== "undefined" && document.getElementById("editor")) {
  const base = new URLSearchParams(window.location.search).get("service")
    ?? window.location.origin;
  window.starqueryEditor = start(base);
}

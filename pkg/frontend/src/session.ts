/**
 * Editor session: debounced edit pipeline from query text to rendered
 * state.  On every edit the session asks for suggestions at the cursor
 * and re-evaluates the query; results already on screen are flagged stale
 * until the newer evaluation lands.  Only one query request is in flight
 * at a time; superseding edits abort it.  A failing service leaves the
 * last view intact behind a banner instead of breaking the editor.
 */

import {
  ApiClient,
  MatchSet,
  ServiceError,
  Suggestion,
  SuggestionList,
} from "./api.js";
import { Debouncer, Edit, applySuggestion } from "./edits.js";
import { FilePane, buildPane, matchedFiles } from "./highlight.js";

export interface ParseIssue {
  message: string;
  line?: number;
  col?: number;
  offset?: number;
}

export interface ViewState {
  queryText: string;
  cursor: number;
  suggestions: SuggestionList | null;
  matches: MatchSet | null;
  panes: FilePane[];
  stale: boolean;
  parseIssue: ParseIssue | null;
  offline: boolean;
}

export class EditorSession {
  view: ViewState = {
    queryText: "",
    cursor: 0,
    suggestions: null,
    matches: null,
    panes: [],
    stale: false,
    parseIssue: null,
    offline: false,
  };

  private debouncer: Debouncer;
  private inFlight: AbortController | null = null;
  private generation = 0;
  private settled: Promise<void> = Promise.resolve();
  private sources = new Map<string, string>();

  constructor(
    private client: ApiClient,
    private onRender: (view: ViewState) => void = () => {},
    debounceMs = 150,
    schedule: typeof setTimeout = setTimeout,
    cancel: typeof clearTimeout = clearTimeout,
  ) {
    this.debouncer = new Debouncer(debounceMs, schedule, cancel);
  }

  /** Record an edit; the refresh fires after the debounce interval. */
  edit(text: string, cursor: number): void {
    this.view = { ...this.view, queryText: text, cursor, stale: true };
    this.render();
    this.debouncer.run(() => {
      this.settled = this.refresh();
    });
  }

  /** Splice a suggestion in and refresh immediately. */
  accept(suggestion: Suggestion): Edit {
    const list = this.view.suggestions;
    if (!list) {
      return { text: this.view.queryText, cursor: this.view.cursor };
    }
    const edited = applySuggestion(
      this.view.queryText, this.view.cursor, list, suggestion);
    this.view = { ...this.view, queryText: edited.text,
                  cursor: edited.cursor, stale: true };
    this.render();
    this.settled = this.refresh();
    return edited;
  }

  /** Run any pending debounced refresh and wait for it (test hook). */
  async flush(): Promise<void> {
    this.debouncer.flush();
    await this.settled;
  }

  private async refresh(): Promise<void> {
    const generation = ++this.generation;
    const { queryText, cursor } = this.view;

    try {
      const suggestions = await this.client.suggest(queryText, cursor);
      if (generation === this.generation) {
        this.view = { ...this.view, suggestions, offline: false };
        this.render();
      }
    } catch (error) {
      if (error instanceof ServiceError) {
        // a suggest failure is not a parse issue; just drop the dropdown
        if (generation === this.generation) {
          this.view = { ...this.view, suggestions: null };
          this.render();
        }
      } else {
        this.markOffline(generation);
      }
    }

    if (!queryText.trim()) {
      if (generation === this.generation) {
        this.view = {
          ...this.view, matches: null, panes: [], stale: false,
          parseIssue: null,
        };
        this.render();
      }
      return;
    }

    this.inFlight?.abort();
    const controller = new AbortController();
    this.inFlight = controller;
    try {
      const matches = await this.client.query(queryText, controller.signal);
      if (generation !== this.generation) {
        return; // a newer edit superseded this evaluation
      }
      const panes = await this.buildPanes(matches);
      if (generation !== this.generation) {
        return;
      }
      this.view = {
        ...this.view,
        matches,
        panes,
        stale: false,
        parseIssue: null,
        offline: false,
      };
      this.render();
    } catch (error) {
      if (controller.signal.aborted) {
        return;
      }
      if (error instanceof ServiceError && error.status === 400) {
        if (generation === this.generation) {
          this.view = {
            ...this.view,
            stale: false,
            parseIssue: {
              message: error.payload.error,
              line: error.payload.line,
              col: error.payload.col,
              offset: error.payload.offset,
            },
          };
          this.render();
        }
      } else {
        this.markOffline(generation);
      }
    } finally {
      if (this.inFlight === controller) {
        this.inFlight = null;
      }
    }
  }

  private async buildPanes(matches: MatchSet): Promise<FilePane[]> {
    const panes: FilePane[] = [];
    for (const file of matchedFiles(matches.matches)) {
      let text = this.sources.get(file);
      if (text === undefined) {
        try {
          text = await this.client.source(file);
        } catch {
          continue; // pane-less matches still show in the result list
        }
        this.sources.set(file, text);
      }
      panes.push(buildPane(file, text, matches.matches));
    }
    return panes;
  }

  private markOffline(generation: number): void {
    if (generation === this.generation) {
      this.view = { ...this.view, offline: true, stale: false };
      this.render();
    }
  }

  private render(): void {
    this.onRender(this.view);
  }
}

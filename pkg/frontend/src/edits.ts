/** Pure text-editing helpers shared by the session and the DOM layer. */

import type { Suggestion, SuggestionList } from "./api.js";

export interface Edit {
  text: string;
  cursor: number;
}

/**
 * Splice an accepted suggestion into the query: the suggestion replaces
 * everything from the completion anchor up to the cursor.
 */
export function applySuggestion(
  text: string,
  cursor: number,
  list: SuggestionList,
  suggestion: Suggestion,
): Edit {
  const from = Math.max(0, Math.min(list.replace_from, cursor));
  const spliced = text.slice(0, from) + suggestion.text + text.slice(cursor);
  return { text: spliced, cursor: from + suggestion.text.length };
}

export type Task = () => void;

/**
 * Trailing-edge debounce with injectable timers so tests can flush
 * synchronously.
 */
export class Debouncer {
  private handle: ReturnType<typeof setTimeout> | null = null;
  private pending: Task | null = null;

  constructor(
    private delayMs: number,
    private schedule: typeof setTimeout = setTimeout,
    private cancel: typeof clearTimeout = clearTimeout,
  ) {}

  run(task: Task): void {
    this.pending = task;
    if (this.handle !== null) {
      this.cancel(this.handle);
    }
    this.handle = this.schedule(() => {
      this.handle = null;
      this.fire();
    }, this.delayMs);
  }

  /** Run whatever is pending right now (test hook and teardown aid). */
  flush(): void {
    if (this.handle !== null) {
      this.cancel(this.handle);
      this.handle = null;
    }
    this.fire();
  }

  private fire(): void {
    const task = this.pending;
    this.pending = null;
    if (task) {
      task();
    }
  }
}

/** Build per-file panes with highlighted match lines from service data. */

import type { Match } from "./api.js";

export interface PaneLine {
  number: number;
  text: string;
  marks: number[]; // 1-based columns of match starts on this line
}

export interface FilePane {
  file: string;
  lines: PaneLine[];
  matchCount: number;
}

export function matchedFiles(matches: Match[]): string[] {
  const files: string[] = [];
  for (const match of matches) {
    if (match.file && !files.includes(match.file)) {
      files.push(match.file);
    }
  }
  return files;
}

export function buildPane(
  file: string,
  sourceText: string,
  matches: Match[],
): FilePane {
  const relevant = matches.filter((m) => m.file === file);
  const byLine = new Map<number, number[]>();
  for (const match of relevant) {
    const cols = byLine.get(match.line) ?? [];
    cols.push(match.col);
    byLine.set(match.line, cols);
  }
  const lines = sourceText.split("\n").map((text, index) => ({
    number: index + 1,
    text,
    marks: (byLine.get(index + 1) ?? []).sort((a, b) => a - b),
  }));
  return { file, lines, matchCount: relevant.length };
}

/** The highlighted spans of a pane, as line text, for assertions and UI. */
export function highlightedLines(pane: FilePane): string[] {
  return pane.lines.filter((line) => line.marks.length > 0)
    .map((line) => line.text);
}

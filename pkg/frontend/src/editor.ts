/**
 * Editor decorations: map analysis results onto the source text — error and
 * warning underlines with hover messages, and inferred-type hints rendered
 * inline at the end of each declaration's first line.
 */

import type { AnalyzeResult, DiagnosticJson, HintJson } from "./protocol.js";
import { escapeXml } from "./svg.js";

export interface LineHint {
  line: number; // 1-based
  text: string; // e.g. ": Float64 @1Hz"
}

export interface LineMark {
  line: number; // 1-based
  startCol: number; // 1-based, inclusive
  endCol: number; // exclusive; clamped to the line on multi-line spans
  severity: "error" | "warning";
  code: string;
  message: string;
}

/**
 * Attach each hint to the line of the declaration it describes: `input x` /
 * `output x` by name, triggers in declaration order.
 */
export function placeHints(source: string, hints: HintJson[]): LineHint[] {
  const lines = source.split("\n");
  const out: LineHint[] = [];
  const used = new Set<number>();

  const findDecl = (pattern: RegExp): number => {
    for (let i = 0; i < lines.length; i++) {
      if (!used.has(i) && pattern.test(lines[i] ?? "")) {
        used.add(i);
        return i + 1;
      }
    }
    return -1;
  };

  for (const hint of hints) {
    const line =
      hint.kind === "trigger"
        ? findDecl(/^\s*trigger\b/)
        : findDecl(
            new RegExp(`^\\s*${hint.kind}\\s+${escapeRegExp(hint.name)}\\b`),
          );
    if (line > 0) {
      out.push({ line, text: `: ${hint.valueType} ${hint.pacing}` });
    }
  }
  return out;
}

function escapeRegExp(text: string): string {
  return text.replace(/[.*+?^${}()|[\]\\]/g, "\\$&");
}

/** One underline mark per diagnostic, clamped to its first line. */
export function placeMarks(diagnostics: DiagnosticJson[]): LineMark[] {
  return diagnostics.map((diag) => ({
    line: diag.span.startLine,
    startCol: diag.span.startCol,
    endCol:
      diag.span.endLine === diag.span.startLine
        ? diag.span.endCol
        : diag.span.startCol + 1,
    severity: diag.severity,
    code: diag.code,
    message: `${diag.code}: ${diag.message}`,
  }));
}

/**
 * Render the overlay HTML mirrored behind the textarea: squiggles under
 * diagnosed spans (hover shows code + message) and dim hint text at the end
 * of each declaration line.
 */
export function overlayHtml(source: string, analysis: AnalyzeResult | null): string {
  const lines = source.split("\n");
  const marks = analysis ? placeMarks(analysis.diagnostics) : [];
  const hints = analysis ? placeHints(source, analysis.hints) : [];

  const marksByLine = new Map<number, LineMark[]>();
  for (const mark of marks) {
    const bucket = marksByLine.get(mark.line);
    if (bucket === undefined) {
      marksByLine.set(mark.line, [mark]);
    } else {
      bucket.push(mark);
    }
  }
  const hintByLine = new Map<number, string>();
  for (const hint of hints) {
    hintByLine.set(hint.line, hint.text);
  }

  const rendered = lines.map((text, index) => {
    const lineNo = index + 1;
    const lineMarks = (marksByLine.get(lineNo) ?? [])
      .slice()
      .sort((a, b) => a.startCol - b.startCol);
    let html = "";
    let cursor = 0; // 0-based column
    for (const mark of lineMarks) {
      const start = Math.max(cursor, mark.startCol - 1);
      const end = Math.max(start, Math.min(text.length, mark.endCol - 1));
      if (start > cursor) {
        html += escapeXml(text.slice(cursor, start));
      }
      html += `<span class="squiggle ${mark.severity}" title="${escapeXml(
        mark.message,
      )}">${escapeXml(text.slice(start, end)) || "&nbsp;"}</span>`;
      cursor = end;
    }
    html += escapeXml(text.slice(cursor));
    const hint = hintByLine.get(lineNo);
    if (hint !== undefined) {
      html += `<span class="hint">  ${escapeXml(hint)}</span>`;
    }
    return html;
  });
  return rendered.join("\n") + "\n";
}

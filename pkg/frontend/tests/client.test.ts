/**
 * Protocol client behavior (stale-response discarding, debounce) and the
 * editor decoration pipeline.
 */

import { afterEach, describe, expect, it, vi } from "vitest";

import {
  debounce,
  ProtocolClient,
  type AnalyzeResult,
  type ProtocolRequest,
  type ProtocolResponse,
  type Transport,
} from "../src/protocol.js";
import { overlayHtml, placeHints, placeMarks } from "../src/editor.js";

class ManualTransport implements Transport {
  pending: { request: ProtocolRequest; resolve: (r: ProtocolResponse) => void }[] =
    [];

  send(request: ProtocolRequest): Promise<ProtocolResponse> {
    return new Promise((resolve) => {
      this.pending.push({ request, resolve });
    });
  }

  release(index: number, result: unknown = {}): void {
    const entry = this.pending[index];
    if (entry === undefined) {
      throw new Error(`no pending request #${index}`);
    }
    entry.resolve({ id: entry.request.id, ok: true, result });
  }

  async close(): Promise<void> {
    /* nothing spawned */
  }
}

describe("stale response discarding", () => {
  it("marks the older of two analyze replies stale, regardless of arrival order", async () => {
    const transport = new ManualTransport();
    const client = new ProtocolClient(transport);

    const first = client.analyze("spec v1");
    const second = client.analyze("spec v2");

    // the *newer* result arrives first; the older one must come back stale
    transport.release(1, { ok: true, diagnostics: [], hints: [] });
    transport.release(0, { ok: false, diagnostics: [], hints: [] });

    const [replyOld, replyNew] = await Promise.all([first, second]);
    expect(replyNew.stale).toBe(false);
    expect(replyOld.stale).toBe(true);
  });

  it("tracks concerns independently", async () => {
    const transport = new ManualTransport();
    const client = new ProtocolClient(transport);

    const analyze = client.analyze("spec");
    const graph = client.graph("spec"); // different concern, newer id

    transport.release(0, {});
    transport.release(1, {});
    expect((await analyze).stale).toBe(false);
    expect((await graph).stale).toBe(false);
  });
});

describe("debounce", () => {
  afterEach(() => {
    vi.useRealTimers();
  });

  it("collapses a burst of edits into one trailing call", () => {
    vi.useFakeTimers();
    const calls: string[] = [];
    const analyze = debounce((text: string) => calls.push(text), 300);

    analyze("a");
    vi.advanceTimersByTime(100);
    analyze("ab");
    vi.advanceTimersByTime(100);
    analyze("abc");
    expect(calls).toEqual([]);

    vi.advanceTimersByTime(299);
    expect(calls).toEqual([]);
    vi.advanceTimersByTime(1);
    expect(calls).toEqual(["abc"]);
  });

  it("fires again for a later edit", () => {
    vi.useFakeTimers();
    const calls: string[] = [];
    const analyze = debounce((text: string) => calls.push(text), 300);
    analyze("x");
    vi.advanceTimersByTime(300);
    analyze("y");
    vi.advanceTimersByTime(300);
    expect(calls).toEqual(["x", "y"]);
  });
});

describe("editor decorations", () => {
  const source = "input a : Int64\noutput x := a + true\n";
  const analysis: AnalyzeResult = {
    ok: false,
    diagnostics: [
      {
        code: "E010",
        severity: "error",
        message: "type mismatch: expected Int64, found Bool",
        span: {
          startByte: 32,
          endByte: 36,
          startLine: 2,
          startCol: 17,
          endLine: 2,
          endCol: 21,
        },
        related: [],
      },
    ],
    hints: [
      {
        name: "a",
        kind: "input",
        valueType: "Int64",
        pacing: "@a",
        rendered: "a: Int64 @a",
      },
      {
        name: "x",
        kind: "output",
        valueType: "Int64",
        pacing: "@a",
        rendered: "x: Int64 @a",
      },
    ],
  };

  it("places hints on their declaration lines", () => {
    const hints = placeHints(source, analysis.hints);
    expect(hints).toEqual([
      { line: 1, text: ": Int64 @a" },
      { line: 2, text: ": Int64 @a" },
    ]);
  });

  it("underlines the diagnosed span with the message on hover", () => {
    const marks = placeMarks(analysis.diagnostics);
    expect(marks[0]).toMatchObject({
      line: 2,
      startCol: 17,
      endCol: 21,
      severity: "error",
    });

    const html = overlayHtml(source, analysis);
    expect(html).toContain('class="squiggle error"');
    expect(html).toContain("expected Int64, found Bool");
    // the squiggle wraps exactly the offending token
    expect(html).toMatch(/<span class="squiggle error"[^>]*>true<\/span>/);
  });

  it("renders hint text dimmed at the end of the line", () => {
    const html = overlayHtml(source, analysis);
    const lines = html.split("\n");
    expect(lines[0]).toContain('<span class="hint">  : Int64 @a</span>');
  });

  it("shows nothing for an empty editor", () => {
    expect(overlayHtml("", null)).toBe("\n");
    const empty: AnalyzeResult = { ok: true, diagnostics: [], hints: [] };
    expect(overlayHtml("", empty)).toBe("\n");
  });

  it("escapes markup in the source", () => {
    const html = overlayHtml('output s := "<b>"\n', null);
    expect(html).toContain("&lt;b&gt;");
    expect(html).not.toContain("<b>");
  });
});

// Pure renderer tests: no server, no DOM.

import { describe, expect, it } from "vitest";

import type { Candidate, ReviewRecord } from "../src/types.js";
import {
  escapeHtml,
  highlightSnippet,
  renderCandidates,
  renderErrorBanner,
  renderQueue,
  renderRecordDetail,
  validateEditedRow,
} from "../src/views.js";

function record(overrides: Partial<ReviewRecord> = {}): ReviewRecord {
  return {
    id: "rec-1",
    task: "counts",
    conference_key: "eswc2020",
    source_url: "https://src.example/",
    chunk_span: [0, 10],
    row: { track: "research", submitted: "119", accepted: "26" },
    grounding: { track: "grounded", submitted: "ungrounded", accepted: "grounded" },
    review_state: "needs_review",
    edited_row: null,
    entity: null,
    candidates: [],
    snippet: "selected out of 166 submissions; 119 claimed",
    model: "claude-3",
    version: 0,
    ...overrides,
  };
}

describe("escaping", () => {
  it("neutralizes markup in data", () => {
    expect(escapeHtml('<img src=x onerror="p()">')).not.toContain("<img");
  });

  it("escapes snippet before highlighting", () => {
    const html = highlightSnippet("<b>119</b>", { submitted: "119" });
    expect(html).toContain("&lt;b&gt;");
    expect(html).toContain("<mark>119</mark>");
  });

  it("prefers longer tokens when highlighting", () => {
    const html = highlightSnippet("166 and 16", { a: "16", b: "166" });
    expect(html).toContain("<mark>166</mark>");
  });
});

describe("queue rendering", () => {
  it("empty queue shows the explicit empty state", () => {
    expect(renderQueue([], 0)).toContain("Nothing to review");
  });

  it("rows carry record ids for navigation", () => {
    const html = renderQueue([record()], 1);
    expect(html).toContain('data-record-id="rec-1"');
  });
});

describe("record detail", () => {
  it("renders one badge per grounding column with the API verdict", () => {
    const html = renderRecordDetail(record());
    expect(html).toContain('data-column="submitted"');
    expect(html).toContain("badge-ungrounded");
    expect(html.match(/class="badge /g)).toHaveLength(3);
  });

  it("finalized records lose their action buttons", () => {
    const html = renderRecordDetail(record({ review_state: "approved" }));
    expect(html).not.toContain('data-action="approve"');
    expect(html).toContain("This record is approved.");
  });

  it("edited rows take display precedence", () => {
    const html = renderRecordDetail(
      record({
        review_state: "needs_review",
        edited_row: { track: "research", submitted: "166", accepted: "26" },
      }),
    );
    expect(html).toContain('value="166"');
  });

  it("candidates render scores, evidence, and a link action", () => {
    const candidates: Candidate[] = [
      { qid: "Q90001001", score: 0.85, evidence: [["name_similarity", "0.850"]] },
    ];
    const html = renderCandidates(candidates);
    expect(html).toContain("Q90001001");
    expect(html).toContain("0.850");
    expect(html).toContain('data-action="link"');
  });
});

describe("error banner", () => {
  it("offers a retry", () => {
    const html = renderErrorBanner("connection refused");
    expect(html).toContain("API error");
    expect(html).toContain('data-action="retry"');
  });
});

describe("client-side edit validation (mirror of the server rules)", () => {
  it("flags accepted > submitted", () => {
    expect(
      validateEditedRow("counts", { track: "research", submitted: "10", accepted: "26" }),
    ).toMatch(/accepted exceeds submitted/);
  });

  it("accepts the corrected hallucination row", () => {
    expect(
      validateEditedRow("counts", { track: "research", submitted: "166", accepted: "26" }),
    ).toBeNull();
  });

  it("flags a numeric-month date", () => {
    expect(validateEditedRow("deadlines", { kind: "paper submission", date: "05/09/20" }))
      .not.toBeNull();
    expect(validateEditedRow("deadlines", { kind: "paper submission", date: "2020-05-09" }))
      .toBeNull();
  });
});

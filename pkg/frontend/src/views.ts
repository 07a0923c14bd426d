// Pure view renderers: state in, HTML string out. No fetch calls, no
// extraction logic: every badge, score, and highlighted token is a value the
// API already delivered, so these functions are unit-testable without a DOM.

import type { Candidate, ExportResult, Job, ReviewRecord } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const STATE_LABELS: Record<string, string> = {
  needs_review: "needs review",
  auto_ok: "auto ok",
  approved: "approved",
  rejected: "rejected",
  edited: "edited",
};

export function renderQueue(
  items: ReviewRecord[],
  total: number,
  filters: { task?: string; conference?: string } = {},
): string {
  const filterNote = [
    filters.task ? `task=${escapeHtml(filters.task)}` : "",
    filters.conference ? `conference=${escapeHtml(filters.conference)}` : "",
  ]
    .filter(Boolean)
    .join(" ");
  if (items.length === 0) {
    return `<section class="queue empty">
      <h2>Review queue</h2>
      <p class="empty-state">Nothing to review${filterNote ? ` for ${filterNote}` : ""}.</p>
    </section>`;
  }
  const rows = items
    .map((record) => {
      const cells = Object.entries(record.row)
        .map(([column, value]) => `${escapeHtml(column)}: ${escapeHtml(value ?? "–")}`)
        .join(", ");
      return `<tr class="queue-row" data-record-id="${escapeHtml(record.id)}">
        <td>${escapeHtml(record.task)}</td>
        <td>${escapeHtml(record.conference_key)}</td>
        <td class="row-cells">${cells}</td>
        <td><span class="state state-${record.review_state}">${
          STATE_LABELS[record.review_state] ?? record.review_state
        }</span></td>
      </tr>`;
    })
    .join("\n");
  return `<section class="queue">
    <h2>Review queue</h2>
    <p class="queue-total">${total} pending${filterNote ? ` (${filterNote})` : ""}</p>
    <table class="queue-table">
      <thead><tr><th>task</th><th>conference</th><th>extracted row</th><th>state</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>
  </section>`;
}

export function highlightSnippet(snippet: string, row: Record<string, string | null>): string {
  const html = escapeHtml(snippet);
  const values = Object.values(row).filter((v): v is string => !!v && v.length > 1);
  if (values.length === 0) return html;
  // one alternation pass, longest first, so "166" wins over "16" and marks
  // never nest
  values.sort((a, b) => b.length - a.length);
  const needles = values.map((value) =>
    escapeHtml(value).replace(/[.*+?^${}()|[\]\\]/g, "\\$&"),
  );
  return html.replace(
    new RegExp(needles.join("|"), "gi"),
    (match) => `<mark>${match}</mark>`,
  );
}

export function renderGroundingBadges(record: ReviewRecord): string {
  return Object.entries(record.grounding)
    .map(
      ([column, verdict]) =>
        `<span class="badge badge-${verdict}" data-column="${escapeHtml(column)}">` +
        `${escapeHtml(column)}: ${verdict.replace("_", " ")}</span>`,
    )
    .join(" ");
}

export function renderCandidates(candidates: Candidate[]): string {
  if (candidates.length === 0) {
    return `<p class="no-candidates">No reconciliation candidates.</p>`;
  }
  const rows = candidates
    .map((candidate) => {
      const evidence = candidate.evidence
        .map(([tag, value]) => `${escapeHtml(tag)}=${escapeHtml(value)}`)
        .join(", ");
      return `<li class="candidate" data-qid="${escapeHtml(candidate.qid)}">
        <code>${escapeHtml(candidate.qid)}</code>
        <span class="score">${candidate.score.toFixed(3)}</span>
        <span class="evidence">${evidence}</span>
        <button data-action="link" data-qid="${escapeHtml(candidate.qid)}">link</button>
      </li>`;
    })
    .join("\n");
  return `<ul class="candidates">${rows}</ul>`;
}

export function renderRecordDetail(record: ReviewRecord): string {
  const editable = record.review_state === "needs_review" || record.review_state === "auto_ok";
  const fields = Object.entries(record.edited_row ?? record.row)
    .map(
      ([column, value]) => `<label class="field">
        <span>${escapeHtml(column)}</span>
        <input name="${escapeHtml(column)}" value="${escapeHtml(value ?? "")}"
               ${editable ? "" : "disabled"}>
      </label>`,
    )
    .join("\n");
  const actions = editable
    ? `<div class="actions">
        <button data-action="approve">approve</button>
        <button data-action="edit">save edits &amp; approve</button>
        <button data-action="reject">reject</button>
        <button data-action="new_entity">new entity</button>
      </div>`
    : `<p class="final">This record is ${STATE_LABELS[record.review_state]}.</p>`;
  return `<section class="record" data-record-id="${escapeHtml(record.id)}"
           data-version="${record.version}">
    <h2>${escapeHtml(record.task)} · ${escapeHtml(record.conference_key)}</h2>
    <p class="source">source: <a href="${escapeHtml(record.source_url)}">${escapeHtml(
      record.source_url,
    )}</a> · model: ${escapeHtml(record.model || "n/a")}</p>
    <div class="grounding">${renderGroundingBadges(record)}</div>
    <blockquote class="snippet">${highlightSnippet(record.snippet, record.row)}</blockquote>
    <form class="row-editor">${fields}</form>
    ${renderCandidates(record.candidates)}
    ${actions}
  </section>`;
}

export function renderExport(job: Job, result: ExportResult | null): string {
  let body: string;
  if (result === null) {
    body = `<button data-action="export" data-job-id="${escapeHtml(job.id)}">compile batch</button>`;
  } else if (result.kind === "gated") {
    body = `<p class="gated">${result.pending} record${
      result.pending === 1 ? "" : "s"
    } need review before export.</p>`;
  } else if (result.kind === "ready") {
    const stats = Object.entries(result.stats)
      .map(([key, value]) => `${escapeHtml(key)}=${value}`)
      .join(", ");
    body = `<p class="ready">Batch <code>${escapeHtml(result.batchId)}</code> (${stats})</p>
      <a class="download" href="/api/batches/${escapeHtml(result.batchId)}.qs" download>
        download .qs</a>`;
  } else {
    body = `<p class="error-banner">${escapeHtml(result.message)}
      <button data-action="export" data-job-id="${escapeHtml(job.id)}">retry</button></p>`;
  }
  return `<section class="export" data-job-id="${escapeHtml(job.id)}">
    <h2>Export · ${escapeHtml(job.conference_key)} (${escapeHtml(job.stage)})</h2>
    ${body}
  </section>`;
}

export function renderErrorBanner(message: string): string {
  return `<div class="error-banner">API error: ${escapeHtml(message)}
    <button data-action="retry">retry</button></div>`;
}

// Mirrors the server's edit checks so curators get instant feedback; the
// server still re-validates and its rejection always wins.
export function validateEditedRow(
  task: string,
  row: Record<string, string | null>,
): string | null {
  if (task === "counts") {
    const submitted = row.submitted ? Number(row.submitted) : null;
    const accepted = row.accepted ? Number(row.accepted) : null;
    if (submitted !== null && !Number.isInteger(submitted)) return "submitted must be an integer";
    if (accepted !== null && !Number.isInteger(accepted)) return "accepted must be an integer";
    if ((submitted ?? 0) < 0 || (accepted ?? 0) < 0) return "counts must be non-negative";
    if (submitted !== null && accepted !== null && accepted > submitted) {
      return "accepted exceeds submitted";
    }
  }
  if (task === "deadlines" && row.date) {
    if (!/^\d{4}-\d{2}-\d{2}$/.test(row.date) && !/[A-Za-z]{3,}/.test(row.date)) {
      return "date needs ISO form or a named month";
    }
  }
  return null;
}

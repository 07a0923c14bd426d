// Mirrors of the orchestrator API payloads. Every field shown in the UI comes
// straight from these; the client computes nothing itself.

export type Grounding = "grounded" | "ungrounded" | "not_applicable";

export type ReviewState =
  | "auto_ok"
  | "needs_review"
  | "approved"
  | "rejected"
  | "edited";

export interface Candidate {
  qid: string;
  score: number;
  evidence: [string, string][];
}

export interface ReviewRecord {
  id: string;
  task: string;
  conference_key: string;
  source_url: string;
  chunk_span: [number, number];
  row: Record<string, string | null>;
  grounding: Record<string, Grounding>;
  review_state: ReviewState;
  edited_row: Record<string, string | null> | null;
  entity: string | null;
  candidates: Candidate[];
  snippet: string;
  model: string;
  version: number;
}

export interface QueuePage {
  total: number;
  items: ReviewRecord[];
}

export interface Job {
  id: string;
  stage: string;
  conference_key: string;
  counters: Record<string, unknown>;
  error: string | null;
  config_path: string | null;
}

export type DecisionAction = "approve" | "reject" | "edit" | "link" | "new_entity";

export interface DecisionRequest {
  action: DecisionAction;
  version: number;
  decided_by?: string;
  row?: Record<string, string | null>;
  candidate_qid?: string;
}

export type DecisionResult =
  | { kind: "ok"; record: ReviewRecord }
  | { kind: "conflict"; record: ReviewRecord; reason: string }
  | { kind: "error"; message: string };

export type ExportResult =
  | { kind: "ready"; batchId: string; stats: Record<string, number> }
  | { kind: "gated"; pending: number }
  | { kind: "error"; message: string };

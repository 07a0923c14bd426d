// Thin typed client over the orchestrator API. The UI talks to these eight
// endpoints and nothing else.

import type {
  DecisionRequest,
  DecisionResult,
  ExportResult,
  Job,
  QueuePage,
  ReviewRecord,
} from "./types.js";

export interface QueueFilters {
  state?: string;
  task?: string;
  conference?: string;
  limit?: number;
  offset?: number;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private token: string = "",
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const headers: Record<string, string> = {
      ...(init?.headers as Record<string, string> | undefined),
    };
    if (init?.method === "POST") {
      headers["Content-Type"] = "application/json";
      headers["X-Auth-Token"] = this.token;
    }
    return fetch(`${this.baseUrl}${path}`, { ...init, headers });
  }

  async fetchQueue(filters: QueueFilters = {}): Promise<QueuePage> {
    const params = new URLSearchParams();
    params.set("state", filters.state ?? "needs_review");
    if (filters.task) params.set("task", filters.task);
    if (filters.conference) params.set("conference", filters.conference);
    if (filters.limit !== undefined) params.set("limit", String(filters.limit));
    if (filters.offset !== undefined) params.set("offset", String(filters.offset));
    const resp = await this.request(`/api/queue?${params}`);
    if (!resp.ok) throw new ApiError(resp.status, await resp.text());
    return (await resp.json()) as QueuePage;
  }

  async fetchRecord(id: string): Promise<ReviewRecord> {
    const resp = await this.request(`/api/records/${id}`);
    if (!resp.ok) throw new ApiError(resp.status, await resp.text());
    const body = (await resp.json()) as { record: ReviewRecord };
    return body.record;
  }

  async decide(id: string, decision: DecisionRequest): Promise<DecisionResult> {
    const resp = await this.request(`/api/records/${id}/decision`, {
      method: "POST",
      body: JSON.stringify(decision),
    });
    if (resp.ok) {
      const body = (await resp.json()) as { record: ReviewRecord };
      return { kind: "ok", record: body.record };
    }
    if (resp.status === 409) {
      const body = (await resp.json()) as { conflict: string; record: ReviewRecord };
      return { kind: "conflict", record: body.record, reason: body.conflict };
    }
    return { kind: "error", message: await describeError(resp) };
  }

  async listJobs(): Promise<Job[]> {
    const resp = await this.request("/api/jobs");
    if (!resp.ok) throw new ApiError(resp.status, await resp.text());
    const body = (await resp.json()) as { jobs: Job[] };
    return body.jobs;
  }

  async requestBatch(jobId: string): Promise<ExportResult> {
    const resp = await this.request("/api/batches", {
      method: "POST",
      body: JSON.stringify({ job_id: jobId }),
    });
    if (resp.ok) {
      const body = (await resp.json()) as {
        batch_id: string;
        stats: Record<string, number>;
      };
      return { kind: "ready", batchId: body.batch_id, stats: body.stats };
    }
    if (resp.status === 409) {
      const body = (await resp.json()) as { pending: number };
      return { kind: "gated", pending: body.pending };
    }
    return { kind: "error", message: await describeError(resp) };
  }

  batchUrl(batchId: string): string {
    return `${this.baseUrl}/api/batches/${batchId}.qs`;
  }

  async downloadBatch(batchId: string): Promise<string> {
    const resp = await this.request(`/api/batches/${batchId}.qs`);
    if (!resp.ok) throw new ApiError(resp.status, await resp.text());
    return resp.text();
  }

  async reportCsv(series: string, metric: string): Promise<string> {
    const params = new URLSearchParams({ series, metric });
    const resp = await this.request(`/api/report?${params}`);
    if (!resp.ok) throw new ApiError(resp.status, await resp.text());
    return resp.text();
  }
}

async function describeError(resp: Response): Promise<string> {
  try {
    const body = (await resp.json()) as { detail?: unknown };
    if (body.detail) return `${resp.status}: ${JSON.stringify(body.detail)}`;
  } catch {
    // non-JSON error body
  }
  return `HTTP ${resp.status}`;
}

// Controller glue: hash routing, event delegation, optimistic-concurrency
// handling. All state lives on the server; the client only holds the page it
// is looking at.

import { ApiClient } from "./api.js";
import type { DecisionRequest, ExportResult, ReviewRecord } from "./types.js";
import {
  renderErrorBanner,
  renderExport,
  renderQueue,
  renderRecordDetail,
  validateEditedRow,
} from "./views.js";

interface Route {
  screen: "queue" | "record" | "export";
  id?: string;
}

function parseRoute(hash: string): Route {
  const parts = hash.replace(/^#\/?/, "").split("/");
  if (parts[0] === "record" && parts[1]) return { screen: "record", id: parts[1] };
  if (parts[0] === "export" && parts[1]) return { screen: "export", id: parts[1] };
  return { screen: "queue" };
}

export class App {
  private api: ApiClient;

  constructor(
    private root: HTMLElement,
    baseUrl = "",
    token = "",
  ) {
    this.api = new ApiClient(baseUrl, token);
    window.addEventListener("hashchange", () => void this.render());
    this.root.addEventListener("click", (event) => void this.onClick(event));
  }

  setToken(token: string): void {
    this.api = new ApiClient("", token);
  }

  async render(): Promise<void> {
    const route = parseRoute(location.hash);
    try {
      if (route.screen === "record" && route.id) {
        const record = await this.api.fetchRecord(route.id);
        this.root.innerHTML = renderRecordDetail(record);
      } else if (route.screen === "export" && route.id) {
        await this.renderExport(route.id, null);
      } else {
        const params = new URLSearchParams(location.hash.split("?")[1] ?? "");
        const page = await this.api.fetchQueue({
          task: params.get("task") ?? undefined,
          conference: params.get("conference") ?? undefined,
        });
        this.root.innerHTML = renderQueue(page.items, page.total, {
          task: params.get("task") ?? undefined,
          conference: params.get("conference") ?? undefined,
        });
      }
    } catch (error) {
      this.root.innerHTML = renderErrorBanner(String(error));
    }
  }

  private async renderExport(jobId: string, result: ExportResult | null): Promise<void> {
    const jobs = await this.api.listJobs();
    const job = jobs.find((j) => j.id === jobId);
    if (!job) {
      this.root.innerHTML = renderErrorBanner(`no such job ${jobId}`);
      return;
    }
    this.root.innerHTML = renderExport(job, result);
  }

  private async onClick(event: Event): Promise<void> {
    const target = event.target as HTMLElement;
    const action = target.dataset.action;
    if (!action) return;
    event.preventDefault();

    if (action === "retry") {
      await this.render();
      return;
    }
    if (action === "export") {
      const jobId = target.dataset.jobId!;
      const result = await this.api.requestBatch(jobId);
      await this.renderExport(jobId, result);
      return;
    }

    const section = target.closest<HTMLElement>("[data-record-id]");
    if (!section) return;
    const recordId = section.dataset.recordId!;
    const version = Number(section.dataset.version ?? "0");

    const decision: DecisionRequest = { action: "approve", version };
    if (action === "approve" || action === "reject" || action === "new_entity") {
      decision.action = action;
    } else if (action === "edit") {
      decision.action = "edit";
      decision.row = this.collectRow(section);
      const task = section.querySelector("h2")?.textContent?.split(" ·")[0] ?? "";
      const problem = validateEditedRow(task.trim(), decision.row);
      if (problem) {
        this.root.innerHTML = renderErrorBanner(problem) + this.root.innerHTML;
        return;
      }
    } else if (action === "link") {
      decision.action = "link";
      decision.candidate_qid = target.dataset.qid;
    } else {
      return;
    }

    const result = await this.api.decide(recordId, decision);
    if (result.kind === "ok") {
      location.hash = "#/";
      await this.render();
    } else if (result.kind === "conflict") {
      // someone else decided first: show the fresh state
      this.root.innerHTML =
        renderErrorBanner(`conflict: ${result.reason}; showing the latest state`) +
        renderRecordDetail(result.record);
    } else {
      this.root.innerHTML = renderErrorBanner(result.message) + this.root.innerHTML;
    }
  }

  private collectRow(section: HTMLElement): Record<string, string | null> {
    const row: Record<string, string | null> = {};
    section.querySelectorAll<HTMLInputElement>(".row-editor input").forEach((input) => {
      row[input.name] = input.value === "" ? null : input.value;
    });
    return row;
  }
}

export function mount(root: HTMLElement, token = ""): App {
  const app = new App(root, "", token);
  void app.render();
  return app;
}

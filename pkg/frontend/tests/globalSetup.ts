// Boots the real orchestrator over the fixture store so the UI tests exercise
// the genuine API: build store -> spawn `confmeta serve` -> poll readiness.

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { rmSync } from "node:fs";
import { resolve } from "node:path";

import { BASE_URL, PORT, REPO_ROOT, STORE_DIR, TOKEN } from "./config.js";

let server: ChildProcess | undefined;

async function waitForServer(): Promise<void> {
  const deadline = Date.now() + 30_000;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE_URL}/api/jobs`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error("orchestrator API never became ready");
}

export default async function setup(): Promise<() => void> {
  rmSync(STORE_DIR, { recursive: true, force: true });
  execFileSync("python3", [resolve(REPO_ROOT, "scripts", "make_ui_fixture.py"), STORE_DIR], {
    stdio: "inherit",
  });

  server = spawn(
    "python3",
    [
      "-m",
      "confmeta.orchestrator.cli",
      "--store",
      STORE_DIR,
      "--config",
      resolve(REPO_ROOT, "tests", "fixtures", "pipeline_eswc2020.json"),
      "serve",
      "--port",
      String(PORT),
      "--token",
      TOKEN,
    ],
    { stdio: ["ignore", "inherit", "inherit"], env: { ...process.env } },
  );
  await waitForServer();

  return () => {
    server?.kill("SIGTERM");
  };
}

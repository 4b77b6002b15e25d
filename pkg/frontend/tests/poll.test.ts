import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { pollRun } from "../src/poll.js";
import type { RunViewDoc } from "../src/types.js";

function clientWith(sequence: RunViewDoc[]): ApiClient {
  const api = new ApiClient("");
  let i = 0;
  api.runView = async () => sequence[Math.min(i++, sequence.length - 1)]!;
  return api;
}

const view = (status: RunViewDoc["status"]): RunViewDoc => ({
  run_id: "r1",
  status,
  manifest: null,
});

describe("pollRun", () => {
  it("resolves on done and reports every status", async () => {
    const seen: string[] = [];
    const result = await pollRun(clientWith([view("pending"), view("running"), view("done")]), "r1", {
      intervalMs: 1,
      onUpdate: (update) => seen.push(update.status),
    });
    expect(result.status).toBe("done");
    expect(seen).toEqual(["pending", "running", "done"]);
  });

  it("resolves on failed too", async () => {
    const result = await pollRun(clientWith([view("running"), view("failed")]), "r1", {
      intervalMs: 1,
    });
    expect(result.status).toBe("failed");
  });

  it("rejects when status moves backwards", async () => {
    await expect(
      pollRun(clientWith([view("running"), view("pending")]), "r1", { intervalMs: 1 }),
    ).rejects.toThrow(/backwards/);
  });

  it("times out on a stuck run", async () => {
    await expect(
      pollRun(clientWith([view("running")]), "r1", { intervalMs: 1, timeoutMs: 5 }),
    ).rejects.toThrow(/still running/);
  });
});

describe("ApiClient errors", () => {
  it("surfaces the server's error body", async () => {
    globalThis.fetch = (async () =>
      new Response(JSON.stringify({ error: "that graph is invalid" }), {
        status: 400,
      })) as typeof fetch;
    const api = new ApiClient("");
    await expect(api.compile({ objects: [], relations: [] }, { objects: [], relations: [] }))
      .rejects.toMatchObject({ message: "that graph is invalid", status: 400 });
  });

  it("falls back to the HTTP status for non-JSON errors", async () => {
    globalThis.fetch = (async () => new Response("boom", { status: 502 })) as typeof fetch;
    const api = new ApiClient("");
    await expect(api.health()).rejects.toThrow(/HTTP 502/);
  });

  it("compile returns the exact response text", async () => {
    const raw = '{\n  "src": "x",\n  "tgt": "y",\n  "tgt_bgd": "x",\n  "tgt_new": "y",\n  "token_counts": {},\n  "truncated": []\n}\n';
    globalThis.fetch = (async () => new Response(raw, { status: 200 })) as typeof fetch;
    const api = new ApiClient("");
    const result = await api.compile({ objects: [], relations: [] }, { objects: [], relations: [] });
    expect(result.raw).toBe(raw);
    expect(result.bundle.tgt).toBe("y");
  });
});

/**
 * Typed client for the toolchain HTTP API. All compilation and diff logic
 * stays on the server; this file only moves JSON.
 */

import type {
  DeltaDoc,
  PromptBundleDoc,
  RunViewDoc,
  SceneGraphDoc,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

async function throwFrom(response: Response): Promise<never> {
  let detail = `HTTP ${response.status}`;
  try {
    const body = await response.json();
    detail = body.error ?? body.detail ?? detail;
  } catch {
    /* non-JSON error body */
  }
  throw new ApiError(detail, response.status);
}

export interface CompileResult {
  bundle: PromptBundleDoc;
  /** exact response bytes, so parity with the service can be asserted */
  raw: string;
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private async post(path: string, body: unknown): Promise<Response> {
    const response = await fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) await throwFrom(response);
    return response;
  }

  private async get(path: string): Promise<Response> {
    const response = await fetch(this.baseUrl + path);
    if (!response.ok) await throwFrom(response);
    return response;
  }

  async health(): Promise<{ status: string; version: string }> {
    return (await this.get("/api/health")).json();
  }

  async extract(imageBase64: string, mediaType = "image/png"): Promise<SceneGraphDoc> {
    const response = await this.post("/api/extract", {
      image: imageBase64,
      media_type: mediaType,
    });
    return response.json();
  }

  async compile(source: SceneGraphDoc, target: SceneGraphDoc): Promise<CompileResult> {
    const response = await this.post("/api/compile", { source, target });
    const raw = await response.text();
    return { bundle: JSON.parse(raw) as PromptBundleDoc, raw };
  }

  async diff(source: SceneGraphDoc, target: SceneGraphDoc): Promise<DeltaDoc> {
    return (await this.post("/api/diff", { source, target })).json();
  }

  async submitEdit(body: {
    image: string;
    source_graph: SceneGraphDoc;
    target_graph: SceneGraphDoc;
    params?: Record<string, unknown>;
  }): Promise<{ run_id: string }> {
    return (await this.post("/api/edit", body)).json();
  }

  async runView(runId: string): Promise<RunViewDoc> {
    return (await this.get(`/api/runs/${runId}`)).json();
  }

  async listRuns(): Promise<{ runs: { run_id: string; status: string }[] }> {
    return (await this.get("/api/runs")).json();
  }

  runImageUrl(runId: string, which: "input" | "output"): string {
    return `${this.baseUrl}/api/runs/${runId}/image/${which}`;
  }
}

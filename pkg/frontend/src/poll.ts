/**
 * Poll a run until it reaches a terminal state, enforcing that status only
 * moves forward (pending -> running -> done|failed).
 */

import type { ApiClient } from "./api.js";
import type { RunStatus, RunViewDoc } from "./types.js";

const ORDER: Record<RunStatus, number> = { pending: 0, running: 1, done: 2, failed: 2 };

export interface PollOptions {
  intervalMs?: number;
  timeoutMs?: number;
  onUpdate?: (view: RunViewDoc) => void;
}

export async function pollRun(
  api: ApiClient,
  runId: string,
  options: PollOptions = {},
): Promise<RunViewDoc> {
  const intervalMs = options.intervalMs ?? 1000;
  const timeoutMs = options.timeoutMs ?? 120_000;
  const startedAt = Date.now();
  let previous: RunStatus | null = null;

  for (;;) {
    const view = await api.runView(runId);
    if (previous !== null && ORDER[view.status] < ORDER[previous]) {
      throw new Error(`run ${runId} went backwards: ${previous} -> ${view.status}`);
    }
    previous = view.status;
    options.onUpdate?.(view);
    if (view.status === "done" || view.status === "failed") return view;
    if (Date.now() - startedAt > timeoutMs) {
      throw new Error(`run ${runId} still ${view.status} after ${timeoutMs}ms`);
    }
    await new Promise((resolve) => setTimeout(resolve, intervalMs));
  }
}

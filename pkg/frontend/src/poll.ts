/**
 * Poll a run until it reaches the done state. Poll failures retry with
 * exponential backoff; the caller sees every intermediate record so piece
 * rows update independently while the run executes.
 */

import type { ApiClient, RunRecord } from "./api.js";
import { ApiError } from "./api.js";

export interface PollOptions {
  intervalMs?: number;
  maxBackoffMs?: number;
  onUpdate?: (record: RunRecord) => void;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

export async function pollRun(
  client: ApiClient,
  runId: string,
  opts: PollOptions = {},
): Promise<RunRecord> {
  const interval = opts.intervalMs ?? 1000;
  const maxBackoff = opts.maxBackoffMs ?? 15000;
  const sleep = opts.sleep ?? defaultSleep;
  let backoff = interval;
  for (;;) {
    let record: RunRecord;
    try {
      record = await client.getRun(runId);
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) throw err;
      await sleep(backoff);
      backoff = backoff * 2 > maxBackoff ? maxBackoff : backoff * 2;
      continue;
    }
    backoff = interval;
    opts.onUpdate?.(record);
    if (record.status === "done") return record;
    await sleep(interval);
  }
}

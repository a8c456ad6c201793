/**
 * Client behavior against recorded transport fixtures: parse rejection with
 * positioned diagnostics, polling to completion, and backoff on poll errors.
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { ApiClient, ParseRejected } from "../src/api.js";
import { pollRun } from "../src/poll.js";

const here = dirname(fileURLToPath(import.meta.url));

function raw(name: string): any {
  return JSON.parse(readFileSync(join(here, "..", "fixtures", name), "utf8"));
}

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

describe("submitProblem", () => {
  it("returns the parsed canonical form", async () => {
    const fix = raw("problem_fenchel.json");
    const client = new ApiClient("", async (url, init) => {
      expect(url).toBe("/problems");
      expect(JSON.parse(String(init?.body)).statement_text).toContain("\\ll");
      return jsonResponse(fix);
    });
    const problem = await client.submitProblem("x y \\ll x\\log x + e^y, x \\ge 1, y \\ge 0");
    expect(problem.kind).toBe("inequality");
    expect(problem.variables).toEqual(["x", "y"]);
    expect(problem.canonical).toContain("\\ll");
  });

  it("rejects malformed input with a positioned diagnostic", async () => {
    const fix = raw("problem_malformed.json");
    const client = new ApiClient("", async () => jsonResponse(fix.body, fix.status));
    await expect(client.submitProblem("x \\ll")).rejects.toSatisfy((err: unknown) => {
      expect(err).toBeInstanceOf(ParseRejected);
      const diag = (err as ParseRejected).diagnostics[0];
      expect(diag.position).toBeGreaterThanOrEqual(0);
      expect(diag.message.length).toBeGreaterThan(0);
      return true;
    });
  });
});

describe("pollRun", () => {
  it("delivers intermediate records then resolves on done", async () => {
    const done = raw("run_fenchel_proved.json");
    const running = { ...done, status: "running", verdict: {}, attempts: [] };
    const sequence = [running, running, done];
    let calls = 0;
    const client = new ApiClient("", async () => jsonResponse(sequence[calls++]));
    const seen: string[] = [];
    const record = await pollRun(client, done.run_id, {
      intervalMs: 1,
      onUpdate: (r) => seen.push(r.status),
      sleep: async () => {},
    });
    expect(calls).toBe(3);
    expect(seen).toEqual(["running", "running", "done"]);
    expect(record.verdict.status).toBe("proved");
  });

  it("retries transient failures with backoff and preserves 404", async () => {
    const done = raw("run_fenchel_proved.json");
    let calls = 0;
    const waits: number[] = [];
    const client = new ApiClient("", async () => {
      calls += 1;
      if (calls < 3) return jsonResponse({ detail: { error: "boom" } }, 500);
      return jsonResponse(done);
    });
    const record = await pollRun(client, done.run_id, {
      intervalMs: 2,
      sleep: async (ms) => {
        waits.push(ms);
      },
    });
    expect(record.status).toBe("done");
    expect(waits[1]).toBeGreaterThan(waits[0]);

    const notFound = new ApiClient("", async () =>
      jsonResponse({ detail: { error: "unknown run id" } }, 404),
    );
    await expect(pollRun(notFound, "zzz", { sleep: async () => {} }))
      .rejects.toMatchObject({ status: 404 });
  });
});

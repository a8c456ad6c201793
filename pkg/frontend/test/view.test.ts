/**
 * Contract tests against recorded API fixtures: the view model must surface
 * exactly what the API said, never recompute it.
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import type { RunRecord } from "../src/api.js";
import { PROVED_BANNER, runView, validateEdit, witnessPlotSvg } from "../src/view.js";

const here = dirname(fileURLToPath(import.meta.url));

function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(here, "..", "fixtures", name), "utf8")) as T;
}

describe("proved run view (Eq. 1 fixture)", () => {
  const record = fixture<RunRecord>("run_fenchel_proved.json");
  const view = runView(record);

  it("shows two piece rows, both proved", () => {
    expect(view.pieces).toHaveLength(2);
    for (const piece of view.pieces) {
      expect(piece.status).toBe("proved");
      expect(piece.chipText).toMatch(/^proved, C = /);
    }
  });

  it("shows the proof banner with the API constant", () => {
    expect(view.banner).toBe(PROVED_BANNER);
    expect(view.bannerDetail).toBe(`C = ${record.verdict.c}`);
    expect(record.verdict.c).toBe("2");
  });

  it("displayed verdict equals the record verdict", () => {
    expect(view.verdict).toBe(record.verdict.status);
  });

  it("echoes the canonical rendering byte for byte", () => {
    expect(view.canonical).toBe(record.canonical);
  });
});

describe("gap-edited run view (NotCover fixture)", () => {
  const record = fixture<RunRecord>("run_fenchel_gap_edit.json");
  const view = runView(record);

  it("surfaces the coverage warning with a witness", () => {
    expect(view.warnings.some((w) => w.includes("cover"))).toBe(true);
    expect(view.coverageWitness).not.toBeNull();
    const coords = view.coverageWitness!.coordinates;
    expect(Object.keys(coords).sort()).toEqual(["x", "y"]);
    expect(view.coverageWitness!.clipboardText).toContain("x = ");
  });

  it("does not show the proof banner for the rejected cover", () => {
    const att = record.attempts[0];
    expect(att.coverage.status).toBe("not-cover");
    expect(att.proved).toBe(false);
  });

  it("plots the witness on the 2-D slice", () => {
    const svg = witnessPlotSvg(view.coverageWitness!.coordinates);
    expect(svg).not.toBeNull();
    expect(svg).toContain("<circle");
    expect(svg).toContain(">x<");
    expect(svg).toContain(">y<");
    // three or more variables: no slice to draw
    expect(witnessPlotSvg({ a: 1, b: 2, c: 3 })).toBeNull();
  });
});

describe("disproved run view", () => {
  const record = fixture<RunRecord>("run_x_squared_disproved.json");
  const view = runView(record);

  it("shows the counterexample point, copyable", () => {
    expect(view.verdict).toBe("disproved");
    expect(view.banner).toBeNull();
    expect(view.counterexample).not.toBeNull();
    expect(view.counterexample!.clipboardText).toMatch(/x = \d/);
  });

  it("the displayed values come from the record", () => {
    const cex = record.verdict.counterexample!;
    expect(view.counterexample!.coordinates).toEqual(cex.assignment);
    expect(view.bannerDetail).toContain(String(cex.c));
  });
});

describe("edit validation", () => {
  it("rejects an empty decomposition (k >= 1)", () => {
    expect(validateEdit([])).toMatch(/at least one/);
    expect(validateEdit(["  ", ""])).toMatch(/at least one/);
    expect(validateEdit(["y \\le \\log(x)"])).toBeNull();
  });
});

/**
 * The client never computes mathematics: every displayed verdict, constant,
 * witness, and coverage status originates from an API response. Enforced by
 * auditing the source for evaluation primitives.
 */

import { readFileSync, readdirSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

const here = dirname(fileURLToPath(import.meta.url));
const srcDir = join(here, "..", "src");

const FORBIDDEN = [
  "Math.",          // no numeric library at all in the client
  "eval(",
  "new Function",
  "parseFloat",
  "Number.parseFloat",
  "**",             // no exponentiation
];

function stripComments(text: string): string {
  return text.replace(/\/\*[\s\S]*?\*\//g, "").replace(/\/\/[^\n]*/g, "");
}

describe("client bundle purity", () => {
  const files = readdirSync(srcDir).filter((f) => f.endsWith(".ts"));

  it("covers the whole client source", () => {
    expect(files.sort()).toEqual(["api.ts", "main.ts", "poll.ts", "render.ts", "view.ts"]);
  });

  for (const file of readdirSync(srcDir).filter((f) => f.endsWith(".ts"))) {
    it(`${file} contains no evaluation logic`, () => {
      const code = stripComments(readFileSync(join(srcDir, file), "utf8"));
      for (const needle of FORBIDDEN) {
        expect(code.includes(needle), `${file} must not contain ${needle}`).toBe(false);
      }
    });
  }
});

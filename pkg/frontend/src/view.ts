/**
 * Pure view-model: turn API records into display state. Every verdict,
 * constant, witness, and coverage status shown in the UI originates from the
 * API response; this module never computes mathematics.
 */

import type { AttemptRecord, PieceRecord, RunRecord } from "./api.js";

export const PROVED_BANNER = "Proof verified";

export interface PieceChip {
  label: string;
  status: "pending" | "proved" | "unknown";
  chipText: string;
  reason: string;
}

export interface WitnessView {
  coordinates: Record<string, number>;
  clipboardText: string;
}

export interface UiRunView {
  status: "pending" | "running" | "done";
  verdict: string | null;
  banner: string | null;
  bannerDetail: string | null;
  pieces: PieceChip[];
  warnings: string[];
  assumptions: string[];
  counterexample: WitnessView | null;
  coverageWitness: WitnessView | null;
  backendNote: string | null;
  canonical: string;
}

function displayedAttempt(record: RunRecord): AttemptRecord | null {
  const key = record.verdict?.decomposition_key ?? record.verdict?.best_attempt;
  if (key) {
    const hit = record.attempts.find((a) => a.decomposition_key === key);
    if (hit) return hit;
  }
  return record.attempts.length ? record.attempts[record.attempts.length - 1] : null;
}

function pieceChip(p: PieceRecord): PieceChip {
  const label = p.label ?? p.region ?? "piece";
  if (p.status === "proved") {
    return { label, status: "proved", chipText: `proved, C = ${p.c}`, reason: "" };
  }
  if (p.status === "unknown") {
    return { label, status: "unknown", chipText: "unknown", reason: p.reason ?? "" };
  }
  return { label, status: "pending", chipText: "pending", reason: "" };
}

function witnessView(coords: Record<string, number>): WitnessView {
  const parts = Object.entries(coords).map(([k, v]) => `${k} = ${v}`);
  return { coordinates: coords, clipboardText: parts.join(", ") };
}

export function runView(record: RunRecord): UiRunView {
  const attempt = displayedAttempt(record);
  const verdict = record.verdict?.status ?? null;
  const warnings: string[] = [];
  let coverageWitness: WitnessView | null = null;
  let backendNote: string | null = null;

  if (attempt) {
    if (attempt.coverage && attempt.coverage.status === "not-cover") {
      warnings.push(
        "the edited pieces do not cover the domain; point outside every piece found",
      );
      if (attempt.coverage.witness) {
        coverageWitness = witnessView(attempt.coverage.witness);
      }
    }
    for (const flag of attempt.flags ?? []) warnings.push(flag);
    const casDown = (attempt.pieces ?? []).some((p) =>
      (p.backends ?? []).some(
        (b) => b.backend === "cas" && (b.reason ?? "").includes("unavailable"),
      ),
    );
    if (casDown) backendNote = "builtin only (CAS backend unavailable)";
  }

  let banner: string | null = null;
  let bannerDetail: string | null = null;
  let counterexample: WitnessView | null = null;
  if (verdict === "proved") {
    banner = PROVED_BANNER;
    bannerDetail = record.verdict?.c != null ? `C = ${record.verdict.c}` : null;
  } else if (verdict === "disproved" && record.verdict.counterexample) {
    const cex = record.verdict.counterexample;
    counterexample = witnessView(cex.assignment);
    bannerDetail = `lhs = ${cex.lhs_value} > ${cex.c} * rhs at the point above`;
  }

  return {
    status: record.status,
    verdict,
    banner,
    bannerDetail,
    pieces: (attempt?.pieces ?? []).map(pieceChip),
    warnings,
    assumptions: attempt?.assumptions ?? [],
    counterexample,
    coverageWitness,
    backendNote,
    canonical: record.canonical,
  };
}

/** Client-side validation for the edit form; mirrors the k >= 1 invariant. */
export function validateEdit(lines: string[]): string | null {
  const nonEmpty = lines.map((l) => l.trim()).filter(Boolean);
  if (nonEmpty.length === 0) {
    return "a decomposition needs at least one piece";
  }
  return null;
}

/**
 * Witness point plotted on the 2-D slice (problems with exactly two free
 * variables). Pure display scaling of the API-provided coordinates; no
 * mathematics beyond linear normalization.
 */
export function witnessPlotSvg(coords: Record<string, number>, size = 220): string | null {
  const names = Object.keys(coords).sort();
  if (names.length !== 2) return null;
  const [xn, yn] = names;
  const pad = 28;
  const span = size - 2 * pad;
  const scale = (v: number, max: number) => pad + (max > 0 ? (v / max) * span : 0);
  const xMax = coords[xn] > 1 ? coords[xn] : 1;
  const yMax = coords[yn] > 1 ? coords[yn] : 1;
  const cx = scale(coords[xn], xMax * 1.25);
  const cy = size - scale(coords[yn], yMax * 1.25);
  return [
    `<svg viewBox="0 0 ${size} ${size}" class="witness-plot" role="img">`,
    `<line x1="${pad}" y1="${size - pad}" x2="${size - pad}" y2="${size - pad}" stroke="#444"/>`,
    `<line x1="${pad}" y1="${pad}" x2="${pad}" y2="${size - pad}" stroke="#444"/>`,
    `<text x="${size - pad}" y="${size - 8}" text-anchor="end" font-size="10">${xn}</text>`,
    `<text x="8" y="${pad}" font-size="10">${yn}</text>`,
    `<circle cx="${cx}" cy="${cy}" r="4" fill="#c22"/>`,
    `<title>${xn} = ${coords[xn]}, ${yn} = ${coords[yn]}</title>`,
    `</svg>`,
  ].join("");
}

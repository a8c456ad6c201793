/**
 * DOM wiring for the single-page client: submit a LaTeX estimate with live
 * preview, launch runs, watch per-piece verdicts, edit the decomposition and
 * re-run. All state shown is derived from API responses.
 */

import { ApiClient, ParseRejected } from "./api.js";
import { pollRun } from "./poll.js";
import { markDiagnostic, renderMath } from "./render.js";
import { PROVED_BANNER, runView, validateEdit, witnessPlotSvg } from "./view.js";

const client = new ApiClient("");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

let currentProblemId: string | null = null;
let currentRunId: string | null = null;

async function preview(): Promise<void> {
  const text = el<HTMLTextAreaElement>("statement").value;
  const target = el<HTMLDivElement>("preview");
  if (!text.trim()) {
    target.innerHTML = "";
    return;
  }
  try {
    const problem = await client.submitProblem(text);
    currentProblemId = problem.problem_id;
    target.innerHTML =
      renderMath(problem.canonical, true) +
      `<div class="chips">${problem.constraints
        .map((c) => `<span class="chip">${renderMath(c)}</span>`)
        .join(" ")}</div>`;
    el<HTMLButtonElement>("launch").disabled = false;
  } catch (err) {
    currentProblemId = null;
    el<HTMLButtonElement>("launch").disabled = true;
    if (err instanceof ParseRejected) {
      const d = err.diagnostics[0];
      target.innerHTML =
        `<div class="diagnostic">${markDiagnostic(text, d.position)}</div>` +
        `<div class="message">at ${d.position}: ${d.message}</div>`;
    } else {
      target.innerHTML = `<div class="message">API unreachable; input preserved</div>`;
    }
  }
}

function paintRun(recordJson: Parameters<typeof runView>[0]): void {
  const view = runView(recordJson);
  el<HTMLDivElement>("canonical").innerHTML = renderMath(view.canonical, true);
  el<HTMLDivElement>("banner").textContent =
    view.banner === PROVED_BANNER
      ? `${PROVED_BANNER}${view.bannerDetail ? " (" + view.bannerDetail + ")" : ""}`
      : view.verdict ?? view.status;
  el<HTMLUListElement>("pieces").innerHTML = view.pieces
    .map(
      (p) =>
        `<li class="piece ${p.status}"><span>${renderMath(p.label)}</span>` +
        `<span class="chip">${p.chipText}</span></li>`,
    )
    .join("");
  el<HTMLDivElement>("assumptions").textContent = view.assumptions.length
    ? `assumptions: ${view.assumptions.join(", ")}`
    : "";
  el<HTMLUListElement>("warnings").innerHTML = view.warnings
    .map((w) => `<li>${w}</li>`)
    .join("");
  const cex = view.counterexample ?? view.coverageWitness;
  const witness = el<HTMLDivElement>("witness");
  if (cex) {
    const plot = witnessPlotSvg(cex.coordinates) ?? "";
    witness.innerHTML =
      `<button id="copy-witness">copy</button> ${cex.clipboardText}${plot}`;
    el<HTMLButtonElement>("copy-witness").onclick = () =>
      navigator.clipboard.writeText(cex.clipboardText);
  } else {
    witness.innerHTML = "";
  }
  el<HTMLDivElement>("backend-note").textContent = view.backendNote ?? "";
}

async function launch(): Promise<void> {
  if (!currentProblemId) return;
  const { run_id } = await client.startRun(currentProblemId);
  currentRunId = run_id;
  await pollRun(client, run_id, { onUpdate: paintRun });
}

async function submitEdit(): Promise<void> {
  if (!currentRunId) return;
  const lines = el<HTMLTextAreaElement>("edit").value.split("\n");
  const problem = el<HTMLSelectElement>("edit-kind").value;
  const invalid = validateEdit(lines);
  if (invalid) {
    el<HTMLDivElement>("edit-error").textContent = invalid;
    return;
  }
  el<HTMLDivElement>("edit-error").textContent = "";
  const body =
    problem === "series"
      ? { breakpoints: lines.filter((l) => l.trim()) }
      : { pieces: lines.filter((l) => l.trim()) };
  try {
    const fork = await client.editDecomposition(currentRunId, body);
    currentRunId = fork.run_id;
    await pollRun(client, fork.run_id, { onUpdate: paintRun });
  } catch (err) {
    el<HTMLDivElement>("edit-error").textContent =
      err instanceof Error ? err.message : String(err);
  }
}

export function boot(): void {
  el<HTMLTextAreaElement>("statement").addEventListener("input", () => {
    void preview();
  });
  el<HTMLButtonElement>("launch").addEventListener("click", () => void launch());
  el<HTMLButtonElement>("edit-submit").addEventListener("click", () => void submitEdit());
}

if (typeof document !== "undefined" && document.getElementById("statement")) {
  boot();
}

/**
 * Math rendering: the canonical LaTeX string returned by the API is rendered
 * verbatim (single source of truth server-side). Falls back to a monospace
 * span when KaTeX is unavailable or rejects the input.
 */

import katex from "katex";

export function renderMath(latex: string, displayMode = false): string {
  try {
    return katex.renderToString(latex, {
      displayMode,
      throwOnError: false,
      output: "htmlAndMathml",
    });
  } catch {
    const esc = latex.replace(/&/g, "&amp;").replace(/</g, "&lt;");
    return `<code class="math-fallback">${esc}</code>`;
  }
}

/** Inline diagnostic marker at a character offset of the source text. */
export function markDiagnostic(source: string, position: number): string {
  const esc = (s: string) => s.replace(/&/g, "&amp;").replace(/</g, "&lt;");
  const at = position < 0 ? 0 : position > source.length ? source.length : position;
  return (
    `<span class="ok">${esc(source.slice(0, at))}</span>` +
    `<span class="bad">${esc(source.slice(at) || " ")}</span>`
  );
}

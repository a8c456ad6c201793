"""Regenerate golden CAS query files and LLM replay fixtures.

Golden queries: one file per corpus piece (first heuristic decomposition,
C = 1), byte-exact under version control. Fixtures: replies the replay
transport serves for the llm strategy, derived from the heuristic proposer's
top candidate rendered in the declared output format.
"""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from decomp.cas import build_resolve_query
from decomp.corpus import Corpus
from decomp.decompose import Breakpoints, RegionCover, heuristic_propose
from decomp.latex import render_constraint, render_expr
from decomp.llm import build_prompt, prompt_hash
from decomp.prover import GridSpec
from decomp.statements import Inequality


def main():
    corpus = Corpus.load(ROOT / "corpus")
    gold_dir = ROOT / "golden" / "resolve"
    gold_dir.mkdir(parents=True, exist_ok=True)
    fixtures = ROOT / "fixtures" / "llm_replies.jsonl"
    fixtures.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for pid in corpus.ids():
        p = corpus.get(pid).parse()
        cands = heuristic_propose(p)
        top = cands[0]
        if isinstance(p, Inequality) and isinstance(top, RegionCover):
            for i, piece in enumerate(top.pieces):
                q = build_resolve_query(p.lhs, p.rhs, piece, 1)
                (gold_dir / f"{pid}_piece{i}_c1.wl").write_text(q.text + "\n")
        # replay fixture: the best candidate in the pinned reply format
        if isinstance(top, Breakpoints):
            best = top
            reply = "\n".join(render_expr(e) for e in best.ladder)
            if not reply:
                reply = ""
        else:
            best = None
            for cand in cands:
                if isinstance(cand, RegionCover) and cand.k > 1:
                    best = cand
                    break
            if best is None:
                best = top
            parent_keys = {c.key() for c in p.region.constraints}
            piece_lines = []
            for piece in best.pieces:
                extras = [c for c in piece.constraints if c.key() not in parent_keys]
                piece_lines.append(", ".join(render_constraint(c) for c in extras)
                                   or "0 \\le 1")
            reply = "\n".join(piece_lines)
        if pid == "question_fenchel_young":
            # the recorded model reply for case study 1 is the paper's split
            reply = "y \\le 2 \\log(x)\ny > 2 \\log(x)"
        prompt = build_prompt(p)
        lines.append(json.dumps({
            "prompt_sha256": prompt_hash(prompt),
            "model": "recorded",
            "reply": reply,
        }))
    fixtures.write_text("\n".join(lines) + "\n")
    print(f"wrote {len(list(gold_dir.glob('*.wl')))} golden queries, "
          f"{len(lines)} fixtures")


if __name__ == "__main__":
    main()

"""End-to-end pipeline: propose -> validate cover -> per-piece verification
-> aggregate verdict, with structured run records.

A Proved verdict requires every piece proved AND a coverage report that is
not NotCover; pieces whose region sampling finds no feasible point are
flagged and block Proved unless the cover itself was proved syntactically.
The global constant is the max over cover pieces (each point lies in some
piece) and the sum over series segments (segments add).
"""

from __future__ import annotations

import json
import time
import uuid
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import cas, kernels
from .decompose import (
    Breakpoints, Decomposition, NoCandidate, RegionCover,
    heuristic_propose, validate_cover,
)
from .domain import Region, Sign, sign_of, VarRole, Constraint
from .expr import Var, const
from .latex import render_canonical
from .llm import (
    FixtureMiss, MalformedReply, ProposerConfig, ProviderError, llm_propose,
)
from .prover import (
    Counterexample, GridSpec, PieceResult, ProverOptions, falsify_inequality,
    grid_search, sample_region,
)
from .series import SeriesOutcome, prove_series
from .statements import Inequality, ProblemStatement, Series
from .tape import compile_expr

SCHEMA_VERSION = 1
PROVED_BANNER = "Proof verified"


@dataclass
class RunConfig:
    strategies: tuple[str, ...] = ("heuristic",)
    backends: tuple[str, ...] = ("builtin",)
    grid_max: "int | Fraction" = 10_000
    replay: bool = False
    fixtures_path: Optional[str] = None
    box_budget: int = 100_000
    falsify_budget: int = 4096
    cas_cache_dir: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        if not self.backends:
            raise ValueError("at least one backend must be enabled")
        bad = set(self.backends) - {"builtin", "cas"}
        if bad:
            raise ValueError(f"unknown backends {sorted(bad)}")
        bad = set(self.strategies) - {"heuristic", "llm"}
        if bad:
            raise ValueError(f"unknown strategies {sorted(bad)}")
        if self.replay and "llm" in self.strategies and not self.fixtures_path:
            raise ValueError("replay mode forbids live LLM calls; "
                             "a fixtures path is required")

    def grid(self) -> GridSpec:
        return GridSpec.default(self.grid_max)

    def prover_options(self) -> ProverOptions:
        return ProverOptions(box_budget=self.box_budget, seed=self.seed,
                             lift_grid=self.grid())

    def to_dict(self) -> dict:
        return {
            "strategies": list(self.strategies),
            "backends": list(self.backends),
            "grid_max": str(self.grid_max),
            "replay": self.replay,
            "fixtures_path": self.fixtures_path,
            "box_budget": self.box_budget,
            "falsify_budget": self.falsify_budget,
            "seed": self.seed,
        }


@dataclass
class Attempt:
    strategy: str
    decomposition_key: str
    coverage: dict
    pieces: list = field(default_factory=list)
    proved: bool = False
    c: Optional[str] = None
    unknown_pieces: int = 0
    flags: list = field(default_factory=list)
    assumptions: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "decomposition_key": self.decomposition_key,
            "coverage": self.coverage,
            "pieces": self.pieces,
            "proved": self.proved,
            "c": self.c,
            "unknown_pieces": self.unknown_pieces,
            "flags": self.flags,
            "assumptions": self.assumptions,
        }


@dataclass
class RunRecord:
    problem_id: str
    statement_text: str
    canonical: str
    kind: str
    config: dict
    verdict: dict = field(default_factory=dict)
    attempts: list = field(default_factory=list)
    transcripts: dict = field(default_factory=lambda: {"llm": [], "cas": []})
    wall_clock: float = 0.0
    timestamp: float = 0.0
    run_id: str = ""
    status: str = "done"  # pending | running | done (service lifecycle)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "run_id": self.run_id,
            "status": self.status,
            "problem_id": self.problem_id,
            "statement_text": self.statement_text,
            "canonical": self.canonical,
            "kind": self.kind,
            "config": self.config,
            "verdict": self.verdict,
            "attempts": [a.to_dict() if isinstance(a, Attempt) else a
                         for a in self.attempts],
            "transcripts": self.transcripts,
            "wall_clock": round(self.wall_clock, 6),
            "timestamp": self.timestamp,
        }


def recompute_verdict(record: dict) -> dict:
    """Re-derive the verdict from the stored attempts; loading a record and
    re-aggregating must reproduce what was stored."""
    best: Optional[dict] = None
    for a in record["attempts"]:
        if a["proved"] and a["coverage"]["status"] != "not-cover":
            return {"status": "proved", "c": a["c"],
                    "decomposition_key": a["decomposition_key"]}
        if best is None or a["unknown_pieces"] < best["unknown_pieces"]:
            if a["coverage"]["status"] != "not-cover":
                best = a
    v = record["verdict"]
    if v.get("status") == "disproved":
        return v
    reasons = []
    if best is not None:
        reasons = [p.get("reason", "") for p in best.get("pieces", [])
                   if p.get("status") != "proved"]
    return {"status": "unknown", "reasons": reasons,
            "best_attempt": best["decomposition_key"] if best else None}


# ---------------------------------------------------------------------------
# Per-backend piece verification
# ---------------------------------------------------------------------------

def _cas_grid_search(f, g, r: Region, grid: GridSpec,
                     cfg: RunConfig, transcripts: list) -> PieceResult:
    t0 = time.monotonic()
    if not cas.available():
        return PieceResult(r, "unknown", reason="cas backend unavailable",
                           backend="cas", elapsed=time.monotonic() - t0)
    for c in grid.values:
        q = cas.build_resolve_query(f, g, r, c)
        reply = cas.run_resolve(q, cfg.cas_cache_dir)
        transcripts.append({"query_sha256": q.digest(), "c": str(c),
                            **reply.to_dict()})
        if reply.status == "True":
            return PieceResult(r, "proved", c, [{"rule": "cas-resolve",
                                                 "query": q.text}],
                               backend="cas", elapsed=time.monotonic() - t0)
        # False only advances the grid; Other (timeout etc.) likewise
    return PieceResult(r, "unknown", reason="no grid constant verified",
                       backend="cas", elapsed=time.monotonic() - t0)


def _region_feasible(r: Region, seed: int) -> bool:
    rng = np.random.default_rng(seed ^ 0xFEA51B1E)
    return sample_region(r, 32, rng).shape[1] > 0


def _verify_cover(p: Inequality, cover: RegionCover, cfg: RunConfig,
                  transcripts: dict) -> Attempt:
    grid = cfg.grid()
    opts = cfg.prover_options()
    attempt = Attempt("", cover.key(), {})
    c_max = Fraction(0)
    all_proved = True
    for piece in cover.pieces:
        per_backend = []
        piece_proved = False
        piece_c: Optional[Fraction] = None
        builtin_res: Optional[PieceResult] = None
        cas_res: Optional[PieceResult] = None
        if "builtin" in cfg.backends:
            builtin_res = grid_search(p.lhs, p.rhs, piece, grid, opts)
            per_backend.append(builtin_res.to_dict())
            if builtin_res.status == "proved":
                piece_proved = True
                piece_c = builtin_res.c
        if "cas" in cfg.backends:
            start = len(transcripts["cas"])
            cas_res = _cas_grid_search(p.lhs, p.rhs, piece, grid, cfg,
                                       transcripts["cas"])
            per_backend.append(cas_res.to_dict())
            if cas_res.status == "proved" and piece_c is None:
                piece_proved = True
                piece_c = cas_res.c
            if builtin_res is not None and builtin_res.status == "proved":
                # piece-level disagreement: the other backend denied the
                # very constant this one certified
                for t in transcripts["cas"][start:]:
                    if t.get("c") == str(builtin_res.c) and t.get("status") == "False":
                        attempt.flags.append(
                            f"soundness incident: cas returned False at "
                            f"C={builtin_res.c} where builtin proved "
                            f"({piece.key()})")
        if not _region_feasible(piece, cfg.seed):
            attempt.flags.append(f"vacuous piece: {piece.key()}")
        attempt.pieces.append({
            "region": piece.key(),
            "status": "proved" if piece_proved else "unknown",
            "c": str(piece_c) if piece_c is not None else None,
            "backends": per_backend,
            "reason": "" if piece_proved else
            (builtin_res.reason if builtin_res else "") or
            (cas_res.reason if cas_res else ""),
        })
        if piece_proved:
            c_max = max(c_max, piece_c)
        else:
            all_proved = False
            attempt.unknown_pieces += 1
    attempt.proved = all_proved
    attempt.c = str(c_max) if all_proved else None
    return attempt


def _verify_ladder(s: Series, bp: Breakpoints, cfg: RunConfig) -> Attempt:
    outcome: SeriesOutcome = prove_series(s, bp.ladder, cfg.grid(),
                                          cfg.prover_options())
    attempt = Attempt("", bp.key(), {})
    attempt.assumptions = outcome.assumptions
    for piece in outcome.pieces:
        d = piece.to_dict()
        attempt.pieces.append(d)
        if d["status"] != "proved":
            attempt.unknown_pieces += 1
    attempt.proved = outcome.status == "proved"
    attempt.c = str(outcome.c) if outcome.c is not None else None
    return attempt


# ---------------------------------------------------------------------------
# Falsification
# ---------------------------------------------------------------------------

def falsify_problem(p: ProblemStatement, c_ceiling: "Fraction | int",
                    budget: int = 4096, seed: int = 0) -> Optional[Counterexample]:
    if isinstance(p, Inequality):
        return falsify_inequality(p.lhs, p.rhs, p.region, c_ceiling, budget, seed)
    return _falsify_series(p, Fraction(c_ceiling), budget, seed)


def _falsify_series(s: Series, c: Fraction, budget: int, seed: int) -> Optional[Counterexample]:
    """Interval-verified lower bounds on partial sums vs C * target. Valid
    only when the summand is provably nonnegative (else the partial sum is
    not a lower bound for the series)."""
    full_vars = tuple(list(s.params_region.variables) + [(s.index, VarRole.INDEX)])
    full_region = Region(
        full_vars,
        s.params_region.constraints + (Constraint(Var(s.index), ">=", const(s.start)),))
    if sign_of(s.summand, full_region) not in (Sign.POS, Sign.NONNEG, Sign.ZERO):
        return None
    rng = np.random.default_rng(seed ^ 0x5E41E5)
    params = s.params_region.var_names()
    n_terms = min(max(budget, 64), 4096)
    order = (s.index, *params)
    tape = compile_expr(s.summand, order)
    ttape = compile_expr(s.target, params) if params else None
    pts = sample_region(s.params_region, 32, rng) if params else np.zeros((0, 1))
    n_pts = pts.shape[1] if params else 1
    d_grid = np.arange(s.start, s.start + n_terms, dtype=np.float64)
    for j in range(n_pts):
        cols = np.empty((len(order), n_terms))
        cols[0] = d_grid
        for i, nm in enumerate(params):
            cols[i + 1] = pts[i, j]
        lo, hi, ok = kernels.eval_boxes(tape, cols, cols)
        if not ok.all():
            continue
        with np.errstate(all="ignore"):
            partial_lo = float(np.sum(lo) * (1 - 1e-12))
        if ttape is not None:
            tl, th, tok = kernels.eval_boxes(tape=ttape, xl=pts[:, j:j + 1],
                                             xh=pts[:, j:j + 1])
            if not bool(tok[0]):
                continue
            target_hi = float(th[0])
        else:
            tl0, th0, tok0 = kernels.eval_boxes(
                compile_expr(s.target, ()), np.zeros((0, 1)), np.zeros((0, 1)))
            if not bool(tok0[0]):
                continue
            target_hi = float(th0[0])
        if target_hi < 0:
            continue
        if partial_lo > float(c) * target_hi:
            assignment = {nm: float(pts[i, j]) for i, nm in enumerate(params)}
            return Counterexample(assignment, partial_lo, target_hi, c)
    return None


# ---------------------------------------------------------------------------
# prove_pipeline
# ---------------------------------------------------------------------------

def _propose(p: ProblemStatement, strategy: str, cfg: RunConfig,
             transcripts: dict) -> list[Decomposition]:
    if strategy == "heuristic":
        try:
            return heuristic_propose(p)
        except NoCandidate:
            return []
    mode = "replay" if cfg.replay else "live"
    pcfg = ProposerConfig.from_env(mode=mode, fixtures_path=cfg.fixtures_path)
    try:
        decomp, transcript = llm_propose(p, pcfg)
    except (ProviderError, MalformedReply, FixtureMiss) as exc:
        transcripts["llm"].append({"error": f"{type(exc).__name__}: {exc}"})
        return []
    transcripts["llm"].append(transcript.to_dict())
    return [decomp]


def prove_pipeline(p: ProblemStatement, cfg: Optional[RunConfig] = None,
                   problem_id: str = "inline",
                   statement_text: str = "",
                   record: Optional[RunRecord] = None,
                   forced: Optional[Decomposition] = None) -> RunRecord:
    """Try proposer strategies in order, accepting the first decomposition
    that yields a global Proved; otherwise falsify; otherwise report the
    best attempt (fewest unknown pieces) with all transcripts.

    A pre-created record is filled in place (live pollers see pieces appear);
    a forced decomposition bypasses the proposers (user-edited runs).
    """
    cfg = cfg or RunConfig()
    t0 = time.monotonic()
    if record is None:
        record = RunRecord(problem_id=problem_id, statement_text="",
                           canonical="", kind="", config={})
    record.problem_id = problem_id
    record.statement_text = statement_text or render_canonical(p)
    record.canonical = render_canonical(p)
    record.kind = "series" if isinstance(p, Series) else "inequality"
    record.config = cfg.to_dict()
    record.timestamp = time.time()
    record.status = "running"
    best: Optional[Attempt] = None
    if forced is not None:
        plan: list[tuple[str, list[Decomposition]]] = [("forced", [forced])]
    else:
        plan = [(s, None) for s in cfg.strategies]  # proposals made lazily
    for strategy, pre in plan:
        for decomp in (pre if pre is not None
                       else _propose(p, strategy, cfg, record.transcripts)):
            coverage = validate_cover(p, decomp, cfg.seed)
            if not coverage.is_cover:
                # never forwarded to verification: the per-piece results
                # would be meaningless for the global claim
                attempt = Attempt(strategy, decomp.key(), coverage.to_dict())
                attempt.flags.append("rejected: decomposition does not cover "
                                     "the domain")
                record.attempts.append(attempt)
                continue
            if isinstance(p, Series):
                assert isinstance(decomp, Breakpoints)
                attempt = _verify_ladder(p, decomp, cfg)
            else:
                assert isinstance(decomp, RegionCover)
                attempt = _verify_cover(p, decomp, cfg, record.transcripts)
            attempt.strategy = strategy
            attempt.coverage = coverage.to_dict()
            if any(f.startswith("vacuous piece") for f in attempt.flags) \
                    and coverage.status != "proved":
                attempt.proved = False
                attempt.flags.append("rejected: vacuous piece without a "
                                     "proved cover")
            record.attempts.append(attempt)
            if attempt.proved and coverage.is_cover:
                record.verdict = {
                    "status": "proved", "c": attempt.c,
                    "decomposition_key": attempt.decomposition_key,
                }
                record.wall_clock = time.monotonic() - t0
                record.status = "done"
                return record
            if coverage.is_cover and (best is None or
                                      attempt.unknown_pieces < best.unknown_pieces):
                best = attempt
    cex = falsify_problem(p, cfg.grid().max, cfg.falsify_budget, cfg.seed)
    if cex is not None:
        record.verdict = {
            "status": "disproved",
            "counterexample": cex.to_dict(),
            "c_ceiling": str(cfg.grid().max),
        }
    else:
        reasons = []
        if best is not None:
            reasons = [pc.get("reason", "") for pc in best.pieces
                       if pc.get("status") != "proved"]
        record.verdict = {
            "status": "unknown",
            "reasons": reasons,
            "best_attempt": best.decomposition_key if best else None,
        }
    record.wall_clock = time.monotonic() - t0
    record.status = "done"
    return record


# ---------------------------------------------------------------------------
# Run store (append-only flat files)
# ---------------------------------------------------------------------------

class RunStore:
    def __init__(self, directory: "Path | str"):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def save(self, record: RunRecord) -> str:
        if not record.run_id:
            record.run_id = uuid.uuid4().hex[:12]
        path = self.directory / f"{record.run_id}.json"
        if path.exists():
            raise FileExistsError(f"run {record.run_id} already stored")
        path.write_text(json.dumps(record.to_dict(), indent=1))
        return record.run_id

    def load(self, run_id: str) -> dict:
        path = self.directory / f"{run_id}.json"
        if not path.exists():
            raise KeyError(run_id)
        return json.loads(path.read_text())

    def ids(self) -> list[str]:
        return sorted(p.stem for p in self.directory.glob("*.json"))

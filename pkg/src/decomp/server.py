"""Local HTTP JSON API consumed by the companion UI.

Endpoints (all responses carry schema_version):
  POST /problems                statement text -> parsed problem + id
  POST /runs                    problem id + config -> run id (async)
  GET  /runs/{id}               run record with per-piece status (pollable)
  PUT  /runs/{id}/decomposition user-edited decomposition -> forked new run
  GET  /corpus                  problem listing

Localhost desk tool: no auth, no multi-user concerns.
"""

from __future__ import annotations

import hashlib
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .corpus import Corpus, default_corpus_dir
from .latex import ParseError, parse_problem, render_canonical
from .llm import MalformedReply, parse_reply
from .pipeline import (
    RunConfig, RunRecord, RunStore, SCHEMA_VERSION, prove_pipeline,
)
from .statements import ProblemStatement, Series


class ProblemIn(BaseModel):
    statement_text: str
    allow_unconstrained: bool = False


class RunIn(BaseModel):
    problem_id: str
    strategies: list[str] = ["heuristic"]
    backends: list[str] = ["builtin"]
    grid_max: int = 10_000
    replay: bool = False
    fixtures_path: Optional[str] = None


class DecompositionIn(BaseModel):
    pieces: Optional[list[str]] = None       # constraint lines (inequality)
    breakpoints: Optional[list[str]] = None  # parameter expressions (series)


def create_app(corpus_dir: "str | Path | None" = None,
               runs_dir: "str | Path" = "runs",
               max_workers: int = 2) -> FastAPI:
    app = FastAPI(title="decomp", version="0.1.0")
    problems: dict[str, tuple[str, ProblemStatement]] = {}
    runs: dict[str, tuple[RunRecord, RunConfig, str]] = {}
    lock = threading.Lock()
    executor = ThreadPoolExecutor(max_workers=max_workers)
    store = RunStore(runs_dir)

    cdir = Path(corpus_dir) if corpus_dir else default_corpus_dir()
    if cdir.is_dir():
        corpus = Corpus.load(cdir)
        for pid in corpus.ids():
            prob = corpus.get(pid)
            try:
                problems[pid] = (prob.statement_text, prob.parse())
            except ParseError:
                continue

    def _payload(data: dict) -> dict:
        return {"schema_version": SCHEMA_VERSION, **data}

    @app.post("/problems")
    def post_problem(body: ProblemIn):
        try:
            p = parse_problem(body.statement_text, body.allow_unconstrained)
        except ParseError as exc:
            raise HTTPException(status_code=400, detail=_payload(
                {"diagnostics": exc.diagnostics.to_list()}))
        pid = "p_" + hashlib.sha256(p.key().encode()).hexdigest()[:12]
        with lock:
            problems[pid] = (body.statement_text, p)
        kind = "series" if isinstance(p, Series) else "inequality"
        variables = (p.params_region.var_names() if isinstance(p, Series)
                     else p.region.var_names())
        constraints = (p.params_region.constraints if isinstance(p, Series)
                       else p.region.constraints)
        from .latex import render_constraint
        return _payload({
            "problem_id": pid,
            "canonical": render_canonical(p),
            "kind": kind,
            "variables": list(variables),
            "constraints": [render_constraint(c) for c in constraints],
        })

    def _launch(pid: str, cfg: RunConfig, forced=None) -> str:
        text, p = problems[pid]
        run_id = uuid.uuid4().hex[:12]
        record = RunRecord(problem_id=pid, statement_text=text,
                           canonical=render_canonical(p),
                           kind="series" if isinstance(p, Series) else "inequality",
                           config=cfg.to_dict(), run_id=run_id, status="pending")
        with lock:
            runs[run_id] = (record, cfg, pid)

        def work():
            try:
                prove_pipeline(p, cfg, pid, text, record=record, forced=forced)
            except Exception as exc:  # surfaced, never silently dropped
                record.verdict = {"status": "unknown",
                                  "reasons": [f"pipeline error: {exc}"]}
                record.status = "done"
            try:
                store.save(record)
            except FileExistsError:
                pass

        executor.submit(work)
        return run_id

    @app.post("/runs")
    def post_run(body: RunIn):
        with lock:
            if body.problem_id not in problems:
                raise HTTPException(status_code=404,
                                    detail=_payload({"error": "unknown problem id"}))
        try:
            cfg = RunConfig(
                strategies=tuple(body.strategies),
                backends=tuple(body.backends),
                grid_max=body.grid_max,
                replay=body.replay,
                fixtures_path=body.fixtures_path,
            )
        except ValueError as exc:
            raise HTTPException(status_code=400,
                                detail=_payload({"error": str(exc)}))
        run_id = _launch(body.problem_id, cfg)
        return _payload({"run_id": run_id})

    @app.get("/runs/{run_id}")
    def get_run(run_id: str):
        with lock:
            hit = runs.get(run_id)
        if hit is None:
            raise HTTPException(status_code=404,
                                detail=_payload({"error": "unknown run id"}))
        record, _, _ = hit
        return _payload(record.to_dict())

    @app.put("/runs/{run_id}/decomposition")
    def put_decomposition(run_id: str, body: DecompositionIn):
        with lock:
            hit = runs.get(run_id)
        if hit is None:
            raise HTTPException(status_code=404,
                                detail=_payload({"error": "unknown run id"}))
        record, cfg, pid = hit
        if record.status != "done":
            raise HTTPException(status_code=409, detail=_payload(
                {"error": "run is still executing; wait for it to finish, "
                          "then fork"}))
        _, p = problems[pid]
        lines = body.breakpoints if isinstance(p, Series) else body.pieces
        if not lines:
            raise HTTPException(status_code=400, detail=_payload(
                {"error": "supply pieces (inequality) or breakpoints (series)"}))
        try:
            forced = parse_reply(p, "\n".join(lines))
        except MalformedReply as exc:
            raise HTTPException(status_code=400,
                                detail=_payload({"error": str(exc)}))
        new_id = _launch(pid, cfg, forced=forced)
        return _payload({"run_id": new_id, "forked_from": run_id})

    @app.get("/corpus")
    def get_corpus():
        with lock:
            items = [{"problem_id": pid, "statement_text": text,
                      "kind": "series" if isinstance(p, Series) else "inequality"}
                     for pid, (text, p) in sorted(problems.items())]
        return _payload({"problems": items})

    return app

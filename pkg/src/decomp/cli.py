"""Command line interface.

    decomp prove question_<id> | decomp prove --stmt "x \\ll x, x \\ge 0"
    decomp series series_<id>
    decomp falsify <id>
    decomp bench [--tag TAG]
    decomp record-fixtures
    decomp serve [--port N]

Exit codes: 0 proved, 1 disproved, 2 unknown, >2 operational error.
Prints "Proof verified" when the global verdict is Proved.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

from .corpus import Corpus, default_corpus_dir
from .latex import ParseError, parse_problem
from .pipeline import (
    PROVED_BANNER, RunConfig, RunRecord, RunStore, falsify_problem,
    prove_pipeline,
)
from .statements import Series

EXIT_PROVED = 0
EXIT_DISPROVED = 1
EXIT_UNKNOWN = 2
EXIT_ERROR = 3


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="decomp", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--corpus", default=None, help="problem corpus directory")
    ap.add_argument("--runs-dir", default="runs", help="run record directory")
    ap.add_argument("--grid-max", default="10000",
                    help="largest constant in the grid (default 10^4)")
    ap.add_argument("--backend", choices=["builtin", "cas", "both"],
                    default="builtin")
    ap.add_argument("--replay", action="store_true",
                    help="LLM strategy replays recorded fixtures only")
    ap.add_argument("--fixtures", default="fixtures/llm_replies.jsonl")
    ap.add_argument("--cas-cache", default="cas_cache",
                    help="reply cache directory for the CAS backend")
    ap.add_argument("--no-cas-cache", action="store_true",
                    help="bypass the CAS reply cache")
    ap.add_argument("--strategy", choices=["heuristic-first", "llm-first",
                                           "llm-only", "heuristic-only"],
                    default="heuristic-only")
    sub = ap.add_subparsers(dest="verb", required=True)

    for verb in ("prove", "series", "falsify"):
        sp = sub.add_parser(verb)
        sp.add_argument("problem_id", nargs="?")
        sp.add_argument("--stmt", help="inline statement text")
        sp.add_argument("--allow-unconstrained", action="store_true")

    bp = sub.add_parser("bench")
    bp.add_argument("tag", nargs="?", default=None)
    bp.add_argument("--out", default="bench_results.json")

    rp = sub.add_parser("record-fixtures")
    rp.add_argument("tag", nargs="?", default=None)

    vp = sub.add_parser("serve")
    vp.add_argument("--port", type=int, default=8723)
    vp.add_argument("--host", default="127.0.0.1")
    return ap


def _config_from_args(args) -> RunConfig:
    strategies = {
        "heuristic-only": ("heuristic",),
        "heuristic-first": ("heuristic", "llm"),
        "llm-first": ("llm", "heuristic"),
        "llm-only": ("llm",),
    }[args.strategy]
    backends = {"builtin": ("builtin",), "cas": ("cas",),
                "both": ("builtin", "cas")}[args.backend]
    return RunConfig(
        strategies=strategies,
        backends=backends,
        grid_max=Fraction(args.grid_max),
        replay=args.replay,
        fixtures_path=args.fixtures if ("llm" in strategies) else None,
        cas_cache_dir=None if args.no_cas_cache else args.cas_cache,
    )


def _load_problem(args):
    if args.stmt:
        return "inline", args.stmt, parse_problem(args.stmt,
                                                  args.allow_unconstrained)
    if not args.problem_id:
        print("error: give a problem id or --stmt TEXT", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)
    corpus = Corpus.load(args.corpus or default_corpus_dir())
    try:
        prob = corpus.get(args.problem_id)
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR) from exc
    return prob.id, prob.statement_text, prob.parse()


def _report(record: RunRecord) -> int:
    v = record.verdict
    if v["status"] == "proved":
        print(PROVED_BANNER)
        print(f"  C = {v['c']}  via {v['decomposition_key']}")
        for a in record.attempts:
            if a.decomposition_key == v["decomposition_key"]:
                for pc in a.pieces:
                    label = pc.get("label") or pc.get("region", "")
                    print(f"  piece {label}: C = {pc.get('c')}")
        return EXIT_PROVED
    if v["status"] == "disproved":
        cex = v["counterexample"]
        print("Disproved.")
        print(f"  counterexample: {cex['assignment']}")
        print(f"  lhs = {cex['lhs_value']}  >  {cex['c']} * rhs, rhs = {cex['rhs_value']}")
        return EXIT_DISPROVED
    print("Unknown.")
    for r in v.get("reasons", []):
        if r:
            print(f"  reason: {r}")
    return EXIT_UNKNOWN


def _verb_prove(args, want_series: bool) -> int:
    try:
        pid, text, p = _load_problem(args)
    except ParseError as exc:
        print("parse error:", file=sys.stderr)
        for d in exc.diagnostics.items:
            print(f"  at {d.position}: {d.message}", file=sys.stderr)
        return EXIT_ERROR
    if want_series and not isinstance(p, Series):
        print("error: not a series problem (use `decomp prove`)", file=sys.stderr)
        return EXIT_ERROR
    cfg = _config_from_args(args)
    record = prove_pipeline(p, cfg, pid, text)
    RunStore(args.runs_dir).save(record)
    return _report(record)


def _verb_falsify(args) -> int:
    try:
        pid, text, p = _load_problem(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    cfg = _config_from_args(args)
    cex = falsify_problem(p, cfg.grid().max, cfg.falsify_budget, cfg.seed)
    if cex is None:
        print("NotFound (not a proof).")
        return EXIT_UNKNOWN
    print("Counterexample (interval-verified):")
    print(f"  {cex.assignment}")
    print(f"  lhs = {cex.lhs_value} > {cex.c} * {cex.rhs_value}")
    return EXIT_DISPROVED


def _verb_bench(args) -> int:
    corpus = Corpus.load(args.corpus or default_corpus_dir())
    cfg = _config_from_args(args)
    rows = []
    incidents = []
    t_start = time.monotonic()
    for pid in corpus.ids(args.tag):
        prob = corpus.get(pid)
        p = prob.parse()
        t0 = time.monotonic()
        record = prove_pipeline(p, cfg, pid, prob.statement_text)
        elapsed = time.monotonic() - t0
        v = record.verdict
        for a in record.attempts:
            incidents.extend(f for f in a.flags if f.startswith("soundness"))
        if v["status"] == "proved":
            cex = falsify_problem(p, Fraction(v["c"]), cfg.falsify_budget, cfg.seed)
            if cex is not None:
                incidents.append(
                    f"{pid}: proved with C={v['c']} but counterexampled at "
                    f"{cex.assignment}")
        ok = prob.expected_verdict is None or prob.expected_verdict == v["status"]
        rows.append({
            "id": pid, "verdict": v["status"], "c": v.get("c"),
            "backend": "+".join(cfg.backends), "time": round(elapsed, 2),
            "expected": prob.expected_verdict, "ok": ok,
        })
    widths = (34, 10, 8, 10, 8, 5)
    print(f"{'problem':<{widths[0]}}{'verdict':<{widths[1]}}{'C':<{widths[2]}}"
          f"{'backend':<{widths[3]}}{'time':<{widths[4]}}{'ok':<{widths[5]}}")
    for row in rows:
        print(f"{row['id']:<{widths[0]}}{row['verdict']:<{widths[1]}}"
              f"{str(row['c'] or '-'):<{widths[2]}}{row['backend']:<{widths[3]}}"
              f"{row['time']:<{widths[4]}}{'yes' if row['ok'] else 'NO':<{widths[5]}}")
    total = time.monotonic() - t_start
    print(f"\n{len(rows)} problems in {total:.1f}s; "
          f"{sum(1 for r in rows if r['ok'])} matched expectations; "
          f"{len(incidents)} soundness incidents")
    Path(args.out).write_text(json.dumps(
        {"rows": rows, "incidents": incidents, "total_seconds": total}, indent=1))
    for inc in incidents:
        print("INCIDENT:", inc)
    if incidents or not all(r["ok"] for r in rows):
        return EXIT_ERROR
    return EXIT_PROVED


def _verb_record_fixtures(args) -> int:
    from .llm import ProposerConfig, llm_propose
    corpus = Corpus.load(args.corpus or default_corpus_dir())
    pcfg = ProposerConfig.from_env(mode="record", fixtures_path=args.fixtures)
    n = 0
    for pid in corpus.ids(args.tag):
        p = corpus.get(pid).parse()
        try:
            llm_propose(p, pcfg)
            n += 1
        except Exception as exc:
            print(f"{pid}: {type(exc).__name__}: {exc}", file=sys.stderr)
    print(f"recorded {n} fixtures to {args.fixtures}")
    return EXIT_PROVED if n else EXIT_ERROR


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_ERROR


def _dispatch(args) -> int:
    try:
        if args.verb == "prove":
            return _verb_prove(args, want_series=False)
        if args.verb == "series":
            return _verb_prove(args, want_series=True)
        if args.verb == "falsify":
            return _verb_falsify(args)
        if args.verb == "bench":
            return _verb_bench(args)
        if args.verb == "record-fixtures":
            return _verb_record_fixtures(args)
        if args.verb == "serve":
            import uvicorn
            from .server import create_app
            uvicorn.run(create_app(corpus_dir=args.corpus,
                                   runs_dir=args.runs_dir),
                        host=args.host, port=args.port)
            return EXIT_PROVED
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

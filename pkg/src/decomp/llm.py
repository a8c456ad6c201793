"""LLM-backed decomposition proposals with record/replay.

The provider is a single HTTP JSON endpoint: POST {"model", "prompt"} ->
{"text"}. Request/response pairs persist as one JSON object per line keyed
by the SHA-256 of the prompt, so replay mode is byte-deterministic and makes
no network calls (the replay transport has no client at all).
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol

from .decompose import Breakpoints, Decomposition, RegionCover
from .domain import Constraint
from .latex import ParseDiagnostics, ParseError, _Parser, tokenize
from .statements import ProblemStatement, Series
from .latex import render_canonical


class ProviderError(RuntimeError):
    """Network or authentication failure talking to the provider."""


class MalformedReply(ValueError):
    """Reply does not parse under the declared output format."""


class FixtureMiss(KeyError):
    """Replay mode has no recorded reply for this prompt."""


@dataclass
class ProposerConfig:
    mode: str = "live"                     # live | replay | record
    endpoint: str = ""
    model: str = ""
    api_key_env: str = "LLM_API_KEY"
    fixtures_path: Optional[Path] = None
    retries: int = 2                       # re-prompts after a malformed reply
    timeout: float = 30.0

    @staticmethod
    def from_env(mode: str = "live",
                 fixtures_path: "Path | str | None" = None) -> "ProposerConfig":
        return ProposerConfig(
            mode=mode,
            endpoint=os.environ.get("LLM_ENDPOINT", ""),
            model=os.environ.get("LLM_MODEL", "default"),
            fixtures_path=Path(fixtures_path) if fixtures_path else None,
        )


@dataclass
class PromptTranscript:
    prompt: str
    reply: str
    parsed_key: str
    model: str
    timestamp: float
    attempts: int = 1

    def to_dict(self) -> dict:
        return {"prompt": self.prompt, "reply": self.reply,
                "parsed_key": self.parsed_key, "model": self.model,
                "timestamp": self.timestamp, "attempts": self.attempts}


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode()).hexdigest()


class Transport(Protocol):
    def complete(self, prompt: str, model: str) -> str: ...


class HttpTransport:
    """Live provider calls over the single JSON endpoint."""

    def __init__(self, endpoint: str, api_key: str = "", timeout: float = 30.0):
        if not endpoint:
            raise ProviderError("no LLM endpoint configured (set LLM_ENDPOINT)")
        self.endpoint = endpoint
        self.api_key = api_key
        self.timeout = timeout
        self.calls = 0

    def complete(self, prompt: str, model: str) -> str:
        import httpx
        self.calls += 1
        headers = {}
        if self.api_key:
            headers["authorization"] = f"Bearer {self.api_key}"
        try:
            resp = httpx.post(self.endpoint, json={"model": model, "prompt": prompt},
                              headers=headers, timeout=self.timeout)
            resp.raise_for_status()
            data = resp.json()
        except Exception as exc:
            raise ProviderError(str(exc)) from exc
        if "text" not in data:
            raise ProviderError("provider reply lacks a 'text' field")
        return str(data["text"])


class ReplayTransport:
    """Serves recorded replies; performs zero network operations."""

    def __init__(self, fixtures_path: Path):
        self.fixtures_path = Path(fixtures_path)
        self.network_calls = 0
        self._by_hash: dict[str, str] = {}
        if self.fixtures_path.exists():
            for line in self.fixtures_path.read_text().splitlines():
                if not line.strip():
                    continue
                obj = json.loads(line)
                self._by_hash[obj["prompt_sha256"]] = obj["reply"]

    def complete(self, prompt: str, model: str) -> str:
        key = prompt_hash(prompt)
        if key not in self._by_hash:
            raise FixtureMiss(f"no fixture for prompt {key[:12]}... "
                              f"in {self.fixtures_path}")
        return self._by_hash[key]


class RecordTransport:
    """Live calls, with request/response pairs appended as JSONL."""

    def __init__(self, inner: Transport, fixtures_path: Path):
        self.inner = inner
        self.fixtures_path = Path(fixtures_path)

    def complete(self, prompt: str, model: str) -> str:
        reply = self.inner.complete(prompt, model)
        self.fixtures_path.parent.mkdir(parents=True, exist_ok=True)
        with self.fixtures_path.open("a") as fh:
            fh.write(json.dumps({
                "prompt_sha256": prompt_hash(prompt),
                "model": model,
                "reply": reply,
            }) + "\n")
        return reply


def make_transport(cfg: ProposerConfig) -> Transport:
    if cfg.mode == "replay":
        if cfg.fixtures_path is None:
            raise ProviderError("replay mode needs a fixtures path")
        return ReplayTransport(cfg.fixtures_path)
    live = HttpTransport(cfg.endpoint, os.environ.get(cfg.api_key_env, ""),
                         cfg.timeout)
    if cfg.mode == "record":
        if cfg.fixtures_path is None:
            raise ProviderError("record mode needs a fixtures path")
        return RecordTransport(live, cfg.fixtures_path)
    return live


# ---------------------------------------------------------------------------
# Prompt construction and reply parsing
# ---------------------------------------------------------------------------

_PROMPT_TEMPLATE_PATH = Path(__file__).resolve().parent / "prompts" / "decompose_prompt.txt"


def _template_text() -> str:
    return _PROMPT_TEMPLATE_PATH.read_text()


def build_prompt(p: ProblemStatement) -> str:
    kind = "series" if isinstance(p, Series) else "inequality"
    return _template_text().format(statement=render_canonical(p), kind=kind)


def _parse_constraint_line(line: str) -> list[Constraint]:
    diags = ParseDiagnostics()
    toks = tokenize(line, diags)
    p = _Parser(toks, diags)
    out: list[Constraint] = []
    while p.peek().kind != "end":
        t = p.peek()
        if t.text == ",":
            p.next()
            continue
        lhs = p.expression(5)
        rt = p.next()
        if rt.text not in ("<=", "<", ">=", ">", "="):
            raise MalformedReply(f"expected a relation in {line!r}")
        rhs = p.expression(5)
        out.append(Constraint(lhs, rt.text, rhs))
    if not out:
        raise MalformedReply(f"no constraint found in {line!r}")
    return out


def _parse_expr_line(line: str):
    diags = ParseDiagnostics()
    toks = tokenize(line, diags)
    p = _Parser(toks, diags)
    e = p.expression(0)
    if p.peek().kind != "end":
        raise MalformedReply(f"trailing tokens in {line!r}")
    return e


def parse_reply(p: ProblemStatement, reply: str) -> Decomposition:
    """Strict machine-readable format: one piece (inequality, a constraint
    conjunction) or one breakpoint expression (series) per line."""
    lines = [ln.strip() for ln in reply.strip().splitlines() if ln.strip()]
    if not lines:
        raise MalformedReply("empty reply")
    try:
        if isinstance(p, Series):
            ladder = tuple(_parse_expr_line(ln) for ln in lines)
            allowed = set(p.params_region.var_names())
            from .expr import free_vars
            for e in ladder:
                if not free_vars(e) <= allowed:
                    raise MalformedReply(
                        f"breakpoint {render_canonical_expr(e)} uses non-parameters")
            return Breakpoints(ladder)
        pieces = []
        for ln in lines:
            cons = _parse_constraint_line(ln)
            pieces.append(p.region.with_constraints(*cons))
        return RegionCover(tuple(pieces))
    except (ParseError, ValueError) as exc:
        if isinstance(exc, MalformedReply):
            raise
        raise MalformedReply(str(exc)) from exc


def render_canonical_expr(e) -> str:
    from .latex import render_expr
    return render_expr(e)


def llm_propose(p: ProblemStatement, cfg: ProposerConfig,
                transport: Optional[Transport] = None) -> tuple[Decomposition, PromptTranscript]:
    """One prompt, bounded re-prompts on malformed replies. The transcript's
    parsed decomposition is re-parse-checked against the raw reply."""
    transport = transport or make_transport(cfg)
    prompt = build_prompt(p)
    last_exc: Optional[Exception] = None
    current = prompt
    for attempt in range(cfg.retries + 1):
        reply = transport.complete(current, cfg.model)
        try:
            decomp = parse_reply(p, reply)
        except MalformedReply as exc:
            last_exc = exc
            current = (prompt + "\n\nYour previous reply did not match the "
                       "output format. Reply again with one piece per line "
                       "and nothing else.")
            continue
        check = parse_reply(p, reply)
        assert check.key() == decomp.key()
        transcript = PromptTranscript(
            prompt=current, reply=reply, parsed_key=decomp.key(),
            model=cfg.model, timestamp=time.time(), attempts=attempt + 1)
        return decomp, transcript
    raise last_exc if last_exc is not None else MalformedReply("no reply")

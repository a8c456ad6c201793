"""External CAS backend: build, dispatch, and classify quantifier-elimination
queries for per-piece claims.

The executable is named by the WOLFRAMSCRIPT environment variable; when it is
absent the backend reports Unavailable and the pipeline continues with the
builtin prover alone. Replies are classified strictly (only the exact tokens
True/False after whitespace normalization); everything else is Other. A
False reply never disproves an estimate, it only advances the constant grid.
Replies are cached on disk keyed by the query-text hash.
"""

from __future__ import annotations

import hashlib
import os
import re
import shutil
import subprocess
import threading
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .domain import Region
from .expr import Const, Exp, Expr, Log, Power, Product, Sum, Var, normalize

EXECUTABLE_ENV = "WOLFRAMSCRIPT"
DEFAULT_TIMEOUT = 60.0
MAX_CONCURRENT = 2

_spawn_sem = threading.BoundedSemaphore(MAX_CONCURRENT)


class ExecutableMissing(RuntimeError):
    """No CAS executable configured or present."""


class UnrenderableExpr(ValueError):
    """Expression outside the CAS input fragment (unreachable for the core grammar)."""


@dataclass(frozen=True)
class ResolveQuery:
    variables: tuple[str, ...]
    body: str
    timeout: float
    text: str

    def digest(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()


@dataclass(frozen=True)
class ResolveReply:
    status: str          # "True" | "False" | "Other"
    raw: str
    elapsed: float
    cached: bool = False

    def to_dict(self) -> dict:
        return {"status": self.status, "raw": self.raw,
                "elapsed": round(self.elapsed, 6), "cached": self.cached}


def _wname(name: str) -> str:
    # x_1 would be pattern syntax in the CAS input language
    return re.sub(r"[^A-Za-z0-9]", "", name) or "v"


def render_wolfram(e: Expr) -> str:
    e = normalize(e)
    return _render_w(e)


def _render_w(e: Expr) -> str:
    if isinstance(e, Const):
        v = e.value
        if v.denominator == 1:
            return str(v.numerator) if v >= 0 else f"(-{-v.numerator})"
        s = f"{v.numerator}/{v.denominator}"
        return f"({s})"
    if isinstance(e, Var):
        return _wname(e.name)
    if isinstance(e, Sum):
        return "(" + " + ".join(_render_w(t) for t in e.terms) + ")"
    if isinstance(e, Product):
        return "(" + "*".join(_render_w(f) for f in e.factors) + ")"
    if isinstance(e, Power):
        p = e.exponent
        pe = str(p.numerator) if p.denominator == 1 else f"({p.numerator}/{p.denominator})"
        return f"{_render_w(e.base)}^{pe}"
    if isinstance(e, Log):
        return f"Log[{_render_w(e.arg)}]"
    if isinstance(e, Exp):
        return f"Exp[{_render_w(e.arg)}]"
    raise UnrenderableExpr(repr(e))


_REL_W = {"<=": "<=", "<": "<", ">=": ">=", ">": ">", "=": "=="}


def build_resolve_query(f: Expr, g: Expr, r: Region, c: "Fraction | int",
                        timeout: float = DEFAULT_TIMEOUT) -> ResolveQuery:
    """Deterministic rendering of ForAll[vars, Implies[domain, f <= C*g]]
    wrapped in Resolve[..., Reals]; C is rendered as an exact rational."""
    c = Fraction(c)
    names = tuple(_wname(n) for n in r.var_names())
    conds = " && ".join(
        f"{_render_w(cn.lhs)} {_REL_W[cn.rel]} {_render_w(cn.rhs)}"
        for cn in r.constraints
    ) or "True"
    ce = str(c.numerator) if c.denominator == 1 else f"({c.numerator}/{c.denominator})"
    body = (f"ForAll[{{{', '.join(names)}}}, "
            f"Implies[{conds}, {_render_w(f)} <= {ce}*{_render_w(g)}]]")
    text = f"Resolve[{body}, Reals]"
    return ResolveQuery(names, body, timeout, text)


def executable_path() -> Optional[str]:
    exe = os.environ.get(EXECUTABLE_ENV, "").strip()
    if not exe:
        return None
    if os.path.sep in exe or (os.path.altsep and os.path.altsep in exe):
        return exe if os.path.exists(exe) else None
    return shutil.which(exe)


def available() -> bool:
    return executable_path() is not None


def classify(output: str) -> str:
    token = " ".join(output.split())
    if token == "True":
        return "True"
    if token == "False":
        return "False"
    return "Other"


def run_resolve(q: ResolveQuery, cache_dir: "Path | str | None" = None,
                use_cache: bool = True) -> ResolveReply:
    """Invoke the configured executable on the query, with wall-clock timeout
    and an on-disk reply cache keyed by the query-text hash."""
    cache_file = None
    if cache_dir is not None and use_cache:
        cache_file = Path(cache_dir) / f"{q.digest()}.txt"
        if cache_file.exists():
            raw = cache_file.read_text()
            return ResolveReply(classify(raw), raw, 0.0, cached=True)
    exe = executable_path()
    if exe is None:
        raise ExecutableMissing(
            f"no CAS executable: set {EXECUTABLE_ENV} to the wolframscript path")
    t0 = time.monotonic()
    try:
        with _spawn_sem:
            proc = subprocess.run(
                [exe, "-code", q.text], capture_output=True, text=True,
                timeout=q.timeout)
        raw = proc.stdout if proc.returncode == 0 else \
            f"exit {proc.returncode}: {proc.stdout}{proc.stderr}"
        status = classify(proc.stdout) if proc.returncode == 0 else "Other"
    except subprocess.TimeoutExpired:
        raw = f"timeout after {q.timeout}s"
        status = "Other"
    elapsed = time.monotonic() - t0
    if cache_file is not None:
        cache_file.parent.mkdir(parents=True, exist_ok=True)
        cache_file.write_text(raw)
    return ResolveReply(status, raw, elapsed)

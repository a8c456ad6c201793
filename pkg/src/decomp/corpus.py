"""Flat-file problem store.

One file per problem, plain structured text with a stable field order:

    id: question_fenchel_young
    tags: inequality, crossover
    expected_verdict: proved
    statement: x y \\ll x\\log x + e^y, x \\ge 1, y \\ge 0

The statement field is last and runs to the end of the file, so it may
contain anything the parser accepts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .latex import parse_problem
from .statements import ProblemStatement

FIELD_ORDER = ("id", "tags", "expected_verdict", "statement")


@dataclass
class CorpusProblem:
    id: str
    statement_text: str
    tags: tuple[str, ...] = ()
    expected_verdict: Optional[str] = None

    def parse(self) -> ProblemStatement:
        return parse_problem(self.statement_text)

    def to_text(self) -> str:
        lines = [f"id: {self.id}"]
        if self.tags:
            lines.append(f"tags: {', '.join(self.tags)}")
        if self.expected_verdict:
            lines.append(f"expected_verdict: {self.expected_verdict}")
        lines.append(f"statement: {self.statement_text}")
        return "\n".join(lines) + "\n"


def parse_problem_file(text: str) -> CorpusProblem:
    fields: dict[str, str] = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i]
        if not line.strip():
            i += 1
            continue
        key, sep, value = line.partition(":")
        key = key.strip()
        if not sep or key not in FIELD_ORDER:
            raise ValueError(f"bad corpus line: {line!r}")
        if key == "statement":
            rest = [value.strip()] + [ln for ln in lines[i + 1:]]
            fields["statement"] = "\n".join(rest).strip()
            break
        fields[key] = value.strip()
        i += 1
    if "id" not in fields or "statement" not in fields:
        raise ValueError("corpus file needs at least id and statement fields")
    tags = tuple(t.strip() for t in fields.get("tags", "").split(",") if t.strip())
    return CorpusProblem(fields["id"], fields["statement"], tags,
                         fields.get("expected_verdict"))


@dataclass
class Corpus:
    problems: dict[str, CorpusProblem] = field(default_factory=dict)

    @staticmethod
    def load(directory: "Path | str") -> "Corpus":
        directory = Path(directory)
        out = Corpus()
        for path in sorted(directory.glob("*.txt")):
            prob = parse_problem_file(path.read_text())
            if prob.id in out.problems:
                raise ValueError(f"duplicate problem id {prob.id}")
            out.problems[prob.id] = prob
        return out

    def get(self, problem_id: str) -> CorpusProblem:
        if problem_id not in self.problems:
            raise KeyError(f"unknown problem id {problem_id!r}")
        return self.problems[problem_id]

    def ids(self, tag: Optional[str] = None) -> list[str]:
        if tag is None:
            return sorted(self.problems)
        return sorted(pid for pid, p in self.problems.items() if tag in p.tags)

    def save(self, directory: "Path | str") -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for pid, p in self.problems.items():
            (directory / f"{pid}.txt").write_text(p.to_text())


def default_corpus_dir() -> Path:
    here = Path(__file__).resolve()
    for base in (here.parents[2], Path.cwd()):
        cand = base / "corpus"
        if cand.is_dir():
            return cand
    return Path("corpus")

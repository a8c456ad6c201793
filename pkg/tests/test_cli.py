import sys
from pathlib import Path

import pytest

from decomp.cli import main

ROOT = Path(__file__).resolve().parents[1]


def _run(capsys, tmp_path, *argv):
    code = main(["--corpus", str(ROOT / "corpus"),
                 "--runs-dir", str(tmp_path / "runs"), *argv])
    out = capsys.readouterr()
    return code, out.out, out.err


class TestExitCodes:
    def test_proved_prints_banner_and_exits_zero(self, capsys, tmp_path):
        code, out, _ = _run(capsys, tmp_path, "prove", "question_fenchel_young")
        assert code == 0
        assert out.splitlines()[0] == "Proof verified"

    def test_series_verb(self, capsys, tmp_path):
        code, out, _ = _run(capsys, tmp_path, "series", "series_basel")
        assert code == 0
        assert "Proof verified" in out

    def test_disproved_exits_one(self, capsys, tmp_path):
        code, out, _ = _run(capsys, tmp_path, "prove", "question_x_squared")
        assert code == 1
        assert "counterexample" in out

    def test_unknown_exits_two(self, capsys, tmp_path):
        code, out, _ = _run(capsys, tmp_path, "--grid-max", "4", "prove",
                            "--stmt", r"x y \ll x \log x + e^y, x \ge 1, y > \log x")
        assert code == 2
        assert "Unknown" in out

    def test_unknown_id_is_operational_error(self, capsys, tmp_path):
        code, _, err = _run(capsys, tmp_path, "prove", "question_nope")
        assert code > 2
        assert "question_nope" in err

    def test_parse_error_is_operational_error(self, capsys, tmp_path):
        code, _, err = _run(capsys, tmp_path, "prove", "--stmt", r"x \ll")
        assert code > 2

    def test_series_verb_rejects_inequality(self, capsys, tmp_path):
        code, _, err = _run(capsys, tmp_path, "series", "question_identity")
        assert code > 2

    def test_falsify_verb(self, capsys, tmp_path):
        code, out, _ = _run(capsys, tmp_path, "falsify", "question_x_squared")
        assert code == 1
        assert "interval-verified" in out

    def test_inline_statement(self, capsys, tmp_path):
        code, out, _ = _run(capsys, tmp_path, "prove", "--stmt",
                            r"\log x \ll x, x \ge 1")
        assert code == 0


class TestCorpusExitCodes:
    def test_exit_codes_match_verdicts_on_entire_corpus(self, capsys, tmp_path):
        from decomp.corpus import Corpus
        corpus = Corpus.load(ROOT / "corpus")
        want = {"proved": 0, "disproved": 1, "unknown": 2}
        for pid in corpus.ids():
            prob = corpus.get(pid)
            verb = "series" if pid.startswith("series") else "prove"
            code, _, _ = _run(capsys, tmp_path, verb, pid)
            assert code == want[prob.expected_verdict], pid


class TestBench:
    def test_bench_table_and_results_file(self, capsys, tmp_path, monkeypatch):
        import json
        monkeypatch.chdir(tmp_path)
        code, out, _ = _run(capsys, tmp_path, "bench", "geometric",
                            "--out", str(tmp_path / "results.json"))
        assert code == 0
        assert "series_geometric_half" in out
        assert "0 soundness incidents" in out
        data = json.loads((tmp_path / "results.json").read_text())
        assert {r["id"] for r in data["rows"]} >= {"series_geometric_half",
                                                   "series_geometric_34"}
        assert data["incidents"] == []

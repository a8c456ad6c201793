import time
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from decomp.server import create_app

ROOT = Path(__file__).resolve().parents[1]
FENCHEL = r"x y \ll x\log x + e^y, x \ge 1, y \ge 0"


@pytest.fixture
def client(tmp_path):
    app = create_app(corpus_dir=ROOT / "corpus", runs_dir=tmp_path / "runs")
    with TestClient(app) as c:
        yield c


def _wait_done(client, run_id, timeout=60.0):
    t0 = time.monotonic()
    while time.monotonic() - t0 < timeout:
        body = client.get(f"/runs/{run_id}").json()
        if body["status"] == "done":
            return body
        time.sleep(0.05)
    raise TimeoutError(f"run {run_id} did not finish")


class TestProblems:
    def test_post_fenchel_parses(self, client):
        resp = client.post("/problems", json={"statement_text": FENCHEL})
        assert resp.status_code == 200
        body = resp.json()
        assert body["schema_version"] == 1
        assert body["kind"] == "inequality"
        assert body["variables"] == ["x", "y"]
        assert r"\ll" in body["canonical"]

    def test_parse_failure_400_with_diagnostics(self, client):
        resp = client.post("/problems", json={"statement_text": r"x \ll"})
        assert resp.status_code == 400
        diags = resp.json()["detail"]["diagnostics"]
        assert diags and "position" in diags[0]

    def test_corpus_listing(self, client):
        body = client.get("/corpus").json()
        ids = {p["problem_id"] for p in body["problems"]}
        assert "question_fenchel_young" in ids and "series_spectral_sum" in ids


class TestRunLifecycle:
    def test_post_then_poll_to_proved(self, client):
        pid = client.post("/problems", json={"statement_text": FENCHEL}).json()["problem_id"]
        run_id = client.post("/runs", json={"problem_id": pid}).json()["run_id"]
        body = _wait_done(client, run_id)
        assert body["verdict"]["status"] == "proved"
        win = next(a for a in body["attempts"]
                   if a["decomposition_key"] == body["verdict"]["decomposition_key"])
        assert len(win["pieces"]) == 2
        assert all(pc["status"] == "proved" for pc in win["pieces"])

    def test_unknown_problem_404(self, client):
        resp = client.post("/runs", json={"problem_id": "nope"})
        assert resp.status_code == 404
        assert client.get("/runs/nope").status_code == 404

    def test_bad_config_400(self, client):
        pid = client.post("/problems", json={"statement_text": FENCHEL}).json()["problem_id"]
        resp = client.post("/runs", json={"problem_id": pid, "backends": []})
        assert resp.status_code == 400


class TestEditDecomposition:
    def test_gap_edit_surfaces_not_cover_warning(self, client):
        pid = client.post("/problems", json={"statement_text": FENCHEL}).json()["problem_id"]
        run_id = client.post("/runs", json={"problem_id": pid}).json()["run_id"]
        _wait_done(client, run_id)
        resp = client.put(f"/runs/{run_id}/decomposition", json={
            "pieces": [r"y \le \log(x)", r"y > 2 \log(x)"]})
        assert resp.status_code == 200
        body = resp.json()
        assert body["forked_from"] == run_id
        forked = _wait_done(client, body["run_id"])
        att = forked["attempts"][0]
        assert att["coverage"]["status"] == "not-cover"
        assert att["coverage"]["witness"] is not None
        assert any("cover" in f for f in att["flags"])
        assert forked["verdict"]["status"] != "proved" or \
            forked["verdict"]["decomposition_key"] != att["decomposition_key"]

    def test_edit_running_run_409(self, client):
        # a slow problem so the first poll still sees it running
        pid = client.post("/problems", json={
            "statement_text": r"(x_1 x_2 x_3)^{\frac{1}{3}} \ll "
                              r"\frac{1}{3} (x_1 + x_2 + x_3), "
                              r"x_1 \ge 0, x_2 \ge 0, x_3 \ge 0"
        }).json()["problem_id"]
        run_id = client.post("/runs", json={"problem_id": pid}).json()["run_id"]
        resp = client.put(f"/runs/{run_id}/decomposition",
                          json={"pieces": [r"x_1 \le x_2"]})
        assert resp.status_code in (200, 409)  # 409 unless it already finished
        if resp.status_code == 409:
            assert "fork" in resp.json()["detail"]["error"]
        _wait_done(client, run_id, timeout=120)

    def test_edit_unknown_run_404(self, client):
        resp = client.put("/runs/zzz/decomposition", json={"pieces": ["x \\ge 1"]})
        assert resp.status_code == 404

    def test_malformed_edit_400(self, client):
        pid = client.post("/problems", json={"statement_text": FENCHEL}).json()["problem_id"]
        run_id = client.post("/runs", json={"problem_id": pid}).json()["run_id"]
        _wait_done(client, run_id)
        resp = client.put(f"/runs/{run_id}/decomposition",
                          json={"pieces": ["split wherever"]})
        assert resp.status_code == 400

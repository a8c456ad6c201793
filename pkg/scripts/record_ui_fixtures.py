"""Capture live API responses as fixtures for the UI contract tests."""

import json
import sys
import time
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from fastapi.testclient import TestClient

from decomp.server import create_app

FENCHEL = r"x y \ll x\log x + e^y, x \ge 1, y \ge 0"
OUT = ROOT / "frontend" / "fixtures"


def wait_done(client, run_id):
    while True:
        body = client.get(f"/runs/{run_id}").json()
        if body["status"] == "done":
            return body
        time.sleep(0.05)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    import tempfile
    with tempfile.TemporaryDirectory() as tmp:
        app = create_app(corpus_dir=ROOT / "corpus", runs_dir=tmp)
        with TestClient(app) as client:
            prob = client.post("/problems", json={"statement_text": FENCHEL}).json()
            (OUT / "problem_fenchel.json").write_text(json.dumps(prob, indent=1))

            bad = client.post("/problems", json={"statement_text": r"x \ll"})
            (OUT / "problem_malformed.json").write_text(
                json.dumps({"status": bad.status_code, "body": bad.json()}, indent=1))

            rid = client.post("/runs", json={"problem_id": prob["problem_id"]}).json()["run_id"]
            record = wait_done(client, rid)
            (OUT / "run_fenchel_proved.json").write_text(json.dumps(record, indent=1))

            fork = client.put(f"/runs/{rid}/decomposition", json={
                "pieces": [r"y \le \log(x)", r"y > 2 \log(x)"]}).json()
            forked = wait_done(client, fork["run_id"])
            (OUT / "run_fenchel_gap_edit.json").write_text(json.dumps(forked, indent=1))

            x2 = client.post("/problems", json={
                "statement_text": r"x^2 \ll x, x \ge 1"}).json()
            rid2 = client.post("/runs", json={"problem_id": x2["problem_id"]}).json()["run_id"]
            rec2 = wait_done(client, rid2)
            (OUT / "run_x_squared_disproved.json").write_text(json.dumps(rec2, indent=1))

            corpus = client.get("/corpus").json()
            (OUT / "corpus.json").write_text(json.dumps(corpus, indent=1))
    print("fixtures:", sorted(p.name for p in OUT.glob("*.json")))


if __name__ == "__main__":
    main()

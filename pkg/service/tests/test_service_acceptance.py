"""Acceptance: live-server protocol conformance plus an end-to-end rerank run
driven through the primary toolkit's command line and the wire protocol only.
"""

import json
import random
import socket
import string
import subprocess
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import pytest
import requests


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name}")
        raise
    print(f"[PASS] {name}")


def _free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def _run(argv, **kwargs):
    proc = subprocess.run(argv, capture_output=True, text=True, **kwargs)
    assert proc.returncode == 0, f"{argv}\nstdout: {proc.stdout}\nstderr: {proc.stderr}"
    return proc


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Demo corpus and baseline results produced by the primary CLI."""
    out = tmp_path_factory.mktemp("e2e")
    _run(
        [
            sys.executable, "-m", "lfrerank.cli", "demo",
            "--out-dir", str(out), "--seed", "13", "--examples", "64", "--epochs", "20",
        ]
    )
    return out


@pytest.fixture(scope="module")
def live_service(workspace, tmp_path_factory):
    model_path = tmp_path_factory.mktemp("model") / "critic.pt"
    _run(
        [
            sys.executable, "-m", "scorer_service.cli", "finetune",
            "--pairs", str(workspace / "pairs.jsonl"),
            "--out", str(model_path),
            "--learning-rate", "1e-3", "--epochs", "8", "--seed", "0",
        ]
    )
    port = _free_port()
    proc = subprocess.Popen(
        [
            sys.executable, "-m", "scorer_service.cli", "serve",
            "--model", str(model_path), "--port", str(port), "--max-batch-size", "256",
        ],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
    )
    base_url = f"http://127.0.0.1:{port}"
    try:
        for _ in range(100):
            try:
                if requests.get(f"{base_url}/health", timeout=1).status_code == 200:
                    break
            except requests.RequestException:
                time.sleep(0.1)
        else:
            raise RuntimeError("service did not become healthy")
        yield base_url
    finally:
        proc.terminate()
        proc.wait(timeout=10)


def _random_text(rng):
    words = [
        "".join(rng.choices(string.ascii_lowercase, k=rng.randint(1, 8)))
        for _ in range(rng.randint(0, 6))
    ]
    return " ".join(words)


def test_live_protocol_conformance(live_service):
    with criterion("protocol conformance: 100 randomized batches over HTTP"):
        rng = random.Random(33)
        for _ in range(100):
            pairs = [
                [_random_text(rng), _random_text(rng)]
                for _ in range(rng.randint(0, 40))
            ]
            resp = requests.post(f"{live_service}/score", json={"pairs": pairs}, timeout=10)
            assert resp.status_code == 200
            scores = resp.json()["scores"]
            assert len(scores) == len(pairs)
            assert all(isinstance(s, float) and 0.0 <= s <= 1.0 for s in scores)
        # ordering: batch scores equal per-pair scores, element by element
        pairs = [[_random_text(rng), _random_text(rng)] for _ in range(16)]
        batch = requests.post(f"{live_service}/score", json={"pairs": pairs}, timeout=10).json()["scores"]
        singles = [
            requests.post(f"{live_service}/score", json={"pairs": [p]}, timeout=10).json()["scores"][0]
            for p in pairs
        ]
        assert batch == pytest.approx(singles, abs=1e-6)


def test_live_oversize_batch(live_service):
    with criterion("oversize batches answered with HTTP 413 and an error body"):
        resp = requests.post(
            f"{live_service}/score", json={"pairs": [["a", "b"]] * 257}, timeout=10
        )
        assert resp.status_code == 413
        assert "error" in resp.json()


def test_end_to_end_rerank_shape(workspace, live_service, tmp_path):
    with criterion("primary rerank via remote scorer matches the baseline run's shape"):
        remote_out = tmp_path / "results_remote.jsonl"
        _run(
            [
                sys.executable, "-m", "lfrerank.cli", "rerank",
                "--dataset", str(workspace / "dataset.jsonl"),
                "--beams", str(workspace / "beams.jsonl"),
                "--rule", "always",
                "--scorer", f"remote:{live_service}",
                "--out", str(remote_out),
            ]
        )
        baseline_rows = [
            json.loads(line)
            for line in (workspace / "results_baseline_always.jsonl").read_text().splitlines()
        ]
        remote_rows = [json.loads(line) for line in remote_out.read_text().splitlines()]
        assert [r["id"] for r in remote_rows] == [r["id"] for r in baseline_rows]
        for got, ref in zip(remote_rows, baseline_rows):
            assert set(got) == set(ref)
            assert len(got["scores"]) == len(ref["scores"])
            assert [s["rank"] for s in got["scores"]] == [s["rank"] for s in ref["scores"]]
            assert got["reranked"] is True
            assert all(0.0 <= s["score"] <= 1.0 for s in got["scores"])

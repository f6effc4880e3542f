"""Shared fixtures: the default synthetic corpus, a fitted model, and a
helper that boots the HTTP service as a real subprocess."""

from __future__ import annotations

import datetime as dt
import socket
import subprocess
import sys
import time
from pathlib import Path

import httpx
import pytest

from recmate.clustering import KMeansConfig, kmeans_fit
from recmate.datagen import gen_corpus
from recmate.profiles import ConsumerDataset, ConsumptionRecord, build_feature_vector


def hourly_dataset(consumer_id, days, value_fn, start=dt.date(2023, 1, 2)):
    """Complete hourly dataset; values come from value_fn(day_index, hour)."""
    records = []
    for d in range(days):
        date = start + dt.timedelta(days=d)
        for h in range(24):
            records.append(ConsumptionRecord(date.year, date.month, date.day, h, float(value_fn(d, h))))
    return ConsumerDataset.from_records(consumer_id, records)


@pytest.fixture(scope="session")
def corpus():
    return gen_corpus()


@pytest.fixture(scope="session")
def corpus_vectors(corpus):
    return [build_feature_vector(ds) for ds, _ in corpus]


@pytest.fixture(scope="session")
def corpus_labels(corpus):
    return [archetype.value for _, archetype in corpus]


@pytest.fixture(scope="session")
def corpus_model(corpus_vectors):
    return kmeans_fit(corpus_vectors, KMeansConfig(k=3, seed=0))


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


class LiveServer:
    """A recmate service running as a child process."""

    def __init__(self, community_path: Path, model_path: Path, snapshot_path: Path, policy_path: Path | None = None):
        self.port = free_port()
        self.base_url = f"http://127.0.0.1:{self.port}"
        cmd = [
            sys.executable,
            "-m",
            "recmate.cli",
            "serve",
            "--community",
            str(community_path),
            "--model",
            str(model_path),
            "--snapshot",
            str(snapshot_path),
            "--port",
            str(self.port),
            "--quiet",
        ]
        if policy_path is not None:
            cmd += ["--policy", str(policy_path)]
        self.proc = subprocess.Popen(cmd, stdout=subprocess.PIPE, stderr=subprocess.PIPE)
        self._wait_healthy()

    def _wait_healthy(self, timeout: float = 20.0) -> None:
        deadline = time.time() + timeout
        while time.time() < deadline:
            if self.proc.poll() is not None:
                out, err = self.proc.communicate()
                raise RuntimeError(f"server died on startup: {err.decode()[-2000:]}")
            try:
                if httpx.get(f"{self.base_url}/api/health", timeout=1.0).status_code == 200:
                    return
            except httpx.HTTPError:
                time.sleep(0.05)
        self.stop()
        raise RuntimeError("server did not become healthy in time")

    def stop(self) -> None:
        if self.proc.poll() is None:
            self.proc.terminate()
            try:
                self.proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()

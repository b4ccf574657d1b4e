import numpy as np
import pytest
from fastapi.testclient import TestClient

import dc_coolopt as dc
from dc_coolopt.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture(scope="module")
def lemma2_payload(client):
    resp = client.post("/instances/generate",
                       json={"family": "lemma2", "params": {"p": 5, "n": 25}})
    assert resp.status_code == 200
    return resp.json()


class TestHealth:
    def test_ok(self, client):
        resp = client.get("/health")
        assert resp.status_code == 200
        body = resp.json()
        assert body["status"] == "ok"
        assert body["version"] == dc.__version__


class TestGenerate:
    def test_lemma2(self, lemma2_payload):
        assert lemma2_payload["n"] == 25
        assert lemma2_payload["demand"] == 5
        assert lemma2_payload["format"] == "dc-coolopt/1"

    def test_unknown_family_400(self, client):
        resp = client.post("/instances/generate", json={"family": "zzz", "params": {}})
        assert resp.status_code == 400
        assert "unknown family" in resp.json()["detail"]

    def test_malformed_422(self, client):
        resp = client.post("/instances/generate", json={"params": {}})
        assert resp.status_code == 422


class TestSolve:
    def test_enum_cost(self, client, lemma2_payload):
        resp = client.post("/solve", json={"instance": lemma2_payload,
                                           "algorithm": "enum"})
        assert resp.status_code == 200
        body = resp.json()
        assert body["cost"] == pytest.approx(0.5, abs=1e-9)
        assert body["feasible"] is True
        assert body["wall_time"] >= 0.0

    def test_all_algorithms(self, client, lemma2_payload):
        for alg in ("sr", "ga", "h1", "h2", "bnb", "lp", "single-redline"):
            resp = client.post("/solve", json={"instance": lemma2_payload,
                                               "algorithm": alg, "seed": 1})
            assert resp.status_code == 200, alg

    def test_unknown_algorithm_400(self, client, lemma2_payload):
        resp = client.post("/solve", json={"instance": lemma2_payload,
                                           "algorithm": "annealing"})
        assert resp.status_code == 400

    def test_demand_override(self, client, lemma2_payload):
        resp = client.post("/solve", json={"instance": lemma2_payload,
                                           "algorithm": "enum", "demand": 3})
        assert resp.status_code == 200
        assert sum(resp.json()["rho"]) == 3

    def test_invalid_instance_422(self, client):
        resp = client.post("/solve", json={"instance": {"n": 2}, "algorithm": "sr"})
        assert resp.status_code == 422


class TestBenchmark:
    def test_small_run(self, client):
        resp = client.post("/benchmark", json={
            "family": "case3", "demands": [2], "algorithms": ["SR", "H2"],
            "trials": 2, "seed": 3, "timing": False,
            "family_params": {"n": 8}, "format": "csv",
        })
        assert resp.status_code == 200
        body = resp.json()
        assert body["rendered"].startswith("family,D,algorithm")
        assert body["reports"][0]["trials"] == 2


class TestSurrogateEndpoints:
    def test_model_fit_eval_compare(self, client):
        resp = client.post("/surrogate/model", json={"n": 25, "seed": 0})
        assert resp.status_code == 200
        model = resp.json()
        assert model["kind"] == "synthetic-v1"

        resp = client.post("/surrogate/fit", json={"model": model, "samples": 1500,
                                                   "seed": 1, "demand": 5})
        assert resp.status_code == 200
        fit = resp.json()
        assert fit["instance"]["m"] == 3

        resp = client.post("/solve", json={"instance": fit["instance"],
                                           "algorithm": "h2", "seed": 2})
        assert resp.status_code == 200
        sol = resp.json()

        resp = client.post("/surrogate/evaluate", json={
            "model": model, "solution": sol, "t_idle": 35.0, "t_busy": 27.0,
            "demand": 5,
        })
        assert resp.status_code == 200
        assert set(resp.json()) == {"true_power", "temp_margin", "feasible"}

        resp = client.post("/surrogate/compare", json={
            "model": model, "samples": 1500, "demands": [4], "seed": 0,
            "safety_margin": 0.2,
        })
        assert resp.status_code == 200
        rows = resp.json()["rows"]
        assert len(rows) == 1 and rows[0]["D"] == 4

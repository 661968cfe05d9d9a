import pytest
from starlette.testclient import TestClient

import golden as golden_mod
from conftest import FIXTURES, make_config
from hopqa.config import Config
from hopqa.service import create_app


@pytest.fixture()
def client(golden_script):
    app = create_app(make_config(golden_script), eager=True)
    with TestClient(app) as c:
        yield c


@pytest.fixture()
def bare_client(golden_script):
    config = Config(scripted_path=str(golden_script), au_top_k=5).validate()
    app = create_app(config, eager=True)
    with TestClient(app) as c:
        yield c


class TestHealth:
    def test_healthz_with_graph(self, client):
        body = client.get("/healthz").json()
        assert body["status"] == "ok"
        assert body["graph_loaded"] is True
        assert body["stats"]["triples"] == 50

    def test_healthz_without_graph(self, bare_client):
        body = bare_client.get("/healthz").json()
        assert body["graph_loaded"] is False
        assert body["stats"] == {}


class TestGraphLoad:
    def test_load_reports_counts(self, bare_client):
        resp = bare_client.post("/graph/load", json={"path": str(FIXTURES / "kg.tsv")})
        assert resp.status_code == 200
        body = resp.json()
        assert body["triples"] == 50
        assert body["entities"] > 0
        assert body["duplicates_dropped"] == 0

    def test_missing_file_maps_to_graph_stage(self, bare_client):
        resp = bare_client.post("/graph/load", json={"path": "/nonexistent.tsv"})
        assert resp.status_code == 400
        assert resp.json()["detail"]["stage"] == "graph"

    def test_answer_before_load_conflicts(self, bare_client):
        resp = bare_client.post("/answer", json={"question": "anything"})
        assert resp.status_code == 409
        assert resp.json()["detail"]["stage"] == "graph"


class TestAnswer:
    def test_basic(self, client):
        resp = client.post("/answer", json={"question": golden_mod.PLAYBOOK["q02"][0]})
        assert resp.status_code == 200
        body = resp.json()
        assert body["answers"] == ["San Francisco Giants"]
        assert body["num_paths"] == 1
        assert body["trace"] is None
        assert body["rendered_context"] is None
        path = body["paths"][0]
        assert path["source"] == "Lou Seal"
        assert path["frontier"] == "San Francisco Giants"

    def test_include_trace_and_context(self, client):
        resp = client.post("/answer", json={
            "question": golden_mod.PLAYBOOK["q02"][0],
            "include_trace": True,
            "include_context": True,
        })
        body = resp.json()
        assert body["trace"][0]["stage"] == "decompose"
        assert "Lou Seal" in body["rendered_context"]

    def test_unscripted_question_maps_to_gateway_stage(self, client):
        resp = client.post("/answer", json={"question": "Completely unknown question?"})
        assert resp.status_code == 502
        assert resp.json()["detail"]["stage"] == "llm-gateway"

    def test_counters_present(self, client):
        resp = client.post("/answer", json={"question": golden_mod.PLAYBOOK["q05"][0]})
        counters = resp.json()["counters"]
        assert counters["llm_calls"] >= 4
        assert counters["total_prompt_tokens"] > 0


class TestEval:
    def test_eval_endpoint(self, client, golden_dataset):
        resp = client.post("/eval", json={"dataset_path": str(golden_dataset)})
        assert resp.status_code == 200
        body = resp.json()
        assert body["report"]["hit_at_1"] == 1.0
        assert len(body["per_question"]) == 10
        assert body["warnings"] == []

    def test_missing_dataset(self, client):
        resp = client.post("/eval", json={"dataset_path": "/nonexistent.jsonl"})
        assert resp.status_code == 400

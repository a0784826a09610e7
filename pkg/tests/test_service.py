import time

import pytest
from fastapi.testclient import TestClient

from optistack.server import create_app


@pytest.fixture
def client(tmp_path):
    app = create_app(data_dir=tmp_path / "runs")
    with TestClient(app) as c:
        yield c


def wait_finished(client, run_id, timeout=60.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        doc = client.get(f"/api/runs/{run_id}").json()
        if doc["status"] in ("finished", "failed"):
            return doc
        time.sleep(0.1)
    raise TimeoutError(f"run {run_id} did not finish")


class TestCatalogEndpoints:
    def test_tasks_listing(self, client):
        tasks = client.get("/api/tasks").json()
        ids = [t["id"] for t in tasks]
        assert ids == ["task1", "task2", "task3"]
        task2 = tasks[1]
        assert task2["layer_budget"] == 8
        assert len(task2["target"]) == 301
        task3 = tasks[2]
        assert task3["has_spec_band"]
        assert len(task3["spec_band"]) == 671

    def test_materials(self, client):
        doc = client.get("/api/materials").json()
        assert [m["n_const"][0] for m in doc["materials"]] == [1.457, 1.645, 1.860, 2.327]


class TestSimulateEndpoint:
    def test_empty_stack_air_task_is_zero(self, client):
        body = {"task": "task2", "stack": {"layers": []}}
        doc = client.post("/api/simulate", json=body).json()
        assert all(v == 0.0 for v in doc["reflectivity"])
        assert len(doc["reflectivity"]) == 301

    def test_cache_hit_and_miss_identical(self, client):
        body = {"task": "task2",
                "stack": {"layers": [[1, 72.85], [4, 45.62]]}}
        first = client.post("/api/simulate", json=body).json()
        second = client.post("/api/simulate", json=body).json()
        assert first == second

    def test_malformed_body_is_400(self, client):
        resp = client.post("/api/simulate", json={"stack": {}})
        assert resp.status_code == 400
        assert "error" in resp.json()

    def test_dbr_endpoint(self, client):
        doc = client.post("/api/dbr", json={"n1": 1.457, "n2": 2.327,
                                            "band_edge": 550, "periods": 4}).json()
        assert doc["lambda0"] == pytest.approx(424.59, abs=0.01)
        assert len(doc["stack"]["layers"]) == 8


class TestRunLifecycle:
    def test_train_metrics_best_and_whatif(self, client):
        body = {"task": "task2", "episodes": 15, "seed": 4,
                "replay_stats_every": 0, "run_id": "t1"}
        doc = client.post("/api/runs", json=body).json()
        assert doc == {"run_id": "t1", "status": "queued"}
        final = wait_finished(client, "t1")
        assert final["status"] == "finished"
        assert final["sim_calls"] == 15

        listing = client.get("/api/runs").json()
        assert any(r["run_id"] == "t1" for r in listing)

        metrics = client.get("/api/runs/t1/metrics").json()
        assert len(metrics["records"]) == 15
        assert metrics["cursor"] == 14

        # cursor-based pagination
        tail = client.get("/api/runs/t1/metrics", params={"after": 9}).json()
        assert [r["episode"] for r in tail["records"]] == list(range(10, 15))

        best = client.get("/api/runs/t1/best").json()
        assert 0 < best["reward"] <= 1
        assert best["task_id"] == "task2"

        whatif = {"run_id": "t1", "layer": 0, "material": 1, "thickness": 80.0}
        a = client.post("/api/whatif", json=whatif).json()
        b = client.post("/api/whatif", json=whatif).json()
        assert a == b
        assert a["layer"] == 0

        table = client.post("/api/whatif", json={"run_id": "t1", "table": True}).json()
        assert table["material_ids"] == [1, 2, 3, 4]
        assert len(table["records"]) % 4 == 0

        q = client.post("/api/qvalues", json={"run_id": "t1", "layers": []}).json()
        assert len(q["q_values"]) == 5
        assert len(q["actor_thicknesses_nm"]) == 4
        assert all(1.0 <= t <= 150.0 for t in q["actor_thicknesses_nm"])

        q2 = client.post("/api/qvalues",
                         json={"run_id": "t1", "layers": [[1, 72.85]]}).json()
        assert q2["cursor"] == 1

    def test_unknown_run_is_404(self, client):
        assert client.get("/api/runs/ghost").status_code == 404
        assert client.get("/api/runs/ghost/metrics").status_code == 404

    def test_restart_lists_finished_runs(self, tmp_path):
        app = create_app(data_dir=tmp_path / "runs")
        with TestClient(app) as c:
            c.post("/api/runs", json={"task": "task1", "episodes": 6,
                                      "seed": 1, "run_id": "keep",
                                      "replay_stats_every": 0})
            wait_finished(c, "keep")
        # a brand-new service instance over the same store sees the run
        app2 = create_app(data_dir=tmp_path / "runs", start_worker=False)
        with TestClient(app2) as c2:
            listing = c2.get("/api/runs").json()
            assert [r["run_id"] for r in listing] == ["keep"]
            assert listing[0]["status"] == "finished"
            best = c2.get("/api/runs/keep/best").json()
            assert "reward" in best

    def test_baseline_run_via_service(self, client):
        body = {"task": "task2", "episodes": 2, "steps": 5, "seed": 0,
                "algo": "dqn_discrete", "run_id": "bl"}
        client.post("/api/runs", json=body)
        final = wait_finished(client, "bl")
        assert final["status"] == "finished"
        assert final["sim_calls"] == 10
        detail = client.get("/api/runs/bl").json()
        assert detail["algo"] == "dqn_discrete"

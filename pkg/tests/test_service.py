import pytest
from fastapi.testclient import TestClient

from gridrec.online import RetrainSchedule
from gridrec.persistence import GridModel, load_model, save_model
from gridrec.service import create_app
from gridrec.trainer import QTable


def tiny_model():
    return GridModel(
        n=2,
        user_sets=[{1, 2}, {2, 3}, {8, 9}, {9, 10}],
        item_sets=[{101, 105}, {102}, {103}, {104}],
        q=QTable.initial(2).values,
        item_popularity={101: 3, 102: 2, 103: 1, 104: 1, 105: 1},
    )


@pytest.fixture
def service(tmp_path):
    model_path = tmp_path / "model.json"
    save_model(tiny_model(), model_path)
    app = create_app(
        model_path,
        feedback_log_path=tmp_path / "events.jsonl",
        snapshot_every=100,
        retrain_schedule=RetrainSchedule(every_f_events=3, episodes=30),
    )
    return TestClient(app), model_path, tmp_path


class TestReads:
    def test_health(self, service):
        client, _, _ = service
        body = client.get("/v1/health").json()
        assert body == {"status": "ok", "model_version": 1, "feedback_seq": 0}

    def test_grid(self, service):
        client, _, _ = service
        body = client.get("/v1/grid").json()
        assert body["n"] == 2
        assert len(body["cells"]) == 4
        assert body["cells"][0] == {"row": 0, "col": 0, "user_set_size": 2, "item_set_size": 2}

    def test_q_masked_nulls(self, service):
        client, _, _ = service
        body = client.get("/v1/q").json()
        assert body["n"] == 2
        assert body["actions"] == ["UP", "DOWN", "LEFT", "RIGHT"]
        assert len(body["values"]) == 4
        assert body["values"][0][0] is None  # UP invalid at (0, 0)
        assert body["values"][0][1] == 0.0

    def test_cell(self, service):
        client, _, _ = service
        body = client.get("/v1/cell/0/1").json()
        assert body == {"row": 0, "col": 1, "user_set_size": 2, "item_set_size": 1}

    def test_cell_out_of_bounds_404(self, service):
        client, _, _ = service
        assert client.get("/v1/cell/9/9").status_code == 404


class TestRecommendations:
    def test_recommend(self, service):
        client, _, _ = service
        body = client.post(
            "/v1/recommendations",
            json={"profile": [101], "n": 3, "k": 2, "epsilon": 0.0, "seed": 1},
        ).json()
        assert len(body["items"]) <= 3
        assert body["trace"]
        for item in body["items"]:
            assert item["item"] != 101

    def test_empty_profile_400(self, service):
        client, _, _ = service
        resp = client.post("/v1/recommendations", json={"profile": []})
        assert resp.status_code == 400

    def test_malformed_body_400(self, service):
        client, _, _ = service
        resp = client.post("/v1/recommendations", json={"profile": "x"})
        assert resp.status_code == 400

    def test_bad_k_400(self, service):
        client, _, _ = service
        resp = client.post("/v1/recommendations", json={"profile": [101], "k": 99})
        assert resp.status_code == 400


class TestFeedback:
    def test_satisfied_increments_cell(self, service):
        client, _, _ = service
        before = client.get("/v1/cell/0/0").json()["user_set_size"]
        resp = client.post("/v1/feedback", json={"user": 42, "cell": [0, 0], "satisfied": True}).json()
        assert resp["applied"] is True
        assert resp["new_user_set_size"] == before + 1
        assert client.get("/v1/cell/0/0").json()["user_set_size"] == before + 1

    def test_duplicate_satisfied_idempotent(self, service):
        client, _, _ = service
        client.post("/v1/feedback", json={"user": 42, "cell": [0, 0], "satisfied": True})
        size = client.get("/v1/cell/0/0").json()["user_set_size"]
        client.post("/v1/feedback", json={"user": 42, "cell": [0, 0], "satisfied": True})
        assert client.get("/v1/cell/0/0").json()["user_set_size"] == size

    def test_unsatisfied_no_mutation_but_logged(self, service):
        client, _, _ = service
        before = client.get("/v1/cell/0/0").json()["user_set_size"]
        client.post("/v1/feedback", json={"user": 43, "cell": [0, 0], "satisfied": False})
        assert client.get("/v1/cell/0/0").json()["user_set_size"] == before
        assert client.get("/v1/health").json()["feedback_seq"] == 1

    def test_out_of_bounds_404(self, service):
        client, _, _ = service
        resp = client.post("/v1/feedback", json={"user": 1, "cell": [9, 9], "satisfied": True})
        assert resp.status_code == 404

    def test_malformed_400(self, service):
        client, _, _ = service
        resp = client.post("/v1/feedback", json={"user": 1, "satisfied": True})
        assert resp.status_code == 400

    def test_retrain_changes_q(self, service):
        client, _, _ = service
        q_before = [row[:] for row in client.get("/v1/q").json()["values"]]
        responses = [
            client.post("/v1/feedback", json={"user": 50 + i, "cell": [0, 0], "satisfied": True}).json()
            for i in range(3)
        ]
        assert [r["retrained"] for r in responses] == [False, False, True]
        q_after = client.get("/v1/q").json()["values"]
        assert q_after != q_before
        # invalid actions stay masked after retraining
        for before_row, after_row in zip(q_before, q_after):
            for b, a in zip(before_row, after_row):
                assert (b is None) == (a is None)

    def test_sequence_numbers_advance(self, service):
        client, _, _ = service
        for i in range(4):
            client.post("/v1/feedback", json={"user": 60 + i, "cell": [1, 0], "satisfied": True})
        assert client.get("/v1/health").json()["feedback_seq"] == 4


class TestDurability:
    def test_log_replay_on_restart(self, service, tmp_path):
        client, model_path, base = service
        for i in range(2):
            client.post("/v1/feedback", json={"user": 70 + i, "cell": [1, 1], "satisfied": True})
        size_live = client.get("/v1/cell/1/1").json()["user_set_size"]
        # snapshot_every=100 so the on-disk model is still the original
        assert load_model(model_path).feedback_seq == 0

        app2 = create_app(
            model_path,
            feedback_log_path=base / "events.jsonl",
            snapshot_every=100,
            retrain_schedule=RetrainSchedule(every_f_events=3, episodes=30),
        )
        client2 = TestClient(app2)
        assert client2.get("/v1/cell/1/1").json()["user_set_size"] == size_live
        assert client2.get("/v1/health").json()["feedback_seq"] == 2

    def test_concurrent_feedback_linearizes(self, tmp_path):
        import threading

        model_path = tmp_path / "model.json"
        save_model(tiny_model(), model_path)
        app = create_app(
            model_path,
            feedback_log_path=tmp_path / "events.jsonl",
            snapshot_every=1000,
            retrain_schedule=RetrainSchedule(every_f_events=1000, episodes=10),
        )
        client = TestClient(app)
        base = client.get("/v1/cell/0/0").json()["user_set_size"]

        def worker(offset):
            for i in range(5):
                client.post(
                    "/v1/feedback",
                    json={"user": 1000 + offset * 10 + i, "cell": [0, 0], "satisfied": True},
                )

        threads = [threading.Thread(target=worker, args=(t,)) for t in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()

        assert client.get("/v1/cell/0/0").json()["user_set_size"] == base + 20
        assert client.get("/v1/health").json()["feedback_seq"] == 20
        events = (tmp_path / "events.jsonl").read_text().splitlines()
        import json as _json

        seqs = sorted(_json.loads(line)["seq"] for line in events)
        assert seqs == list(range(1, 21))

    def test_snapshot_persists_model(self, tmp_path):
        model_path = tmp_path / "model.json"
        save_model(tiny_model(), model_path)
        app = create_app(
            model_path,
            feedback_log_path=tmp_path / "events.jsonl",
            snapshot_every=2,
            retrain_schedule=RetrainSchedule(every_f_events=50, episodes=10),
        )
        client = TestClient(app)
        client.post("/v1/feedback", json={"user": 80, "cell": [0, 1], "satisfied": True})
        client.post("/v1/feedback", json={"user": 81, "cell": [0, 1], "satisfied": True})
        on_disk = load_model(model_path)
        assert on_disk.feedback_seq == 2
        assert {80, 81} <= on_disk.user_sets[1]

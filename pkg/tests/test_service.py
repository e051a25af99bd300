import pytest
from fastapi.testclient import TestClient

from trackbank.service import create_app


@pytest.fixture
def client():
    return TestClient(create_app(), raise_server_exceptions=False)


def simulate(client, preset="crossing", seed=0):
    resp = client.post("/simulate", json={"preset": preset, "seed": seed})
    assert resp.status_code == 200
    return resp.json()


class TestSimulate:
    def test_preset(self, client):
        body = simulate(client)
        assert body["ground_truth"]["num_frames"] == 16
        assert len(body["stream"]) == 15
        assert body["first_frame"][0]["frame"] == 0

    def test_deterministic(self, client):
        assert simulate(client, seed=3) == simulate(client, seed=3)

    def test_unknown_preset(self, client):
        resp = client.post("/simulate", json={"preset": "zebra"})
        assert resp.status_code == 422
        assert "zebra" in resp.json()["detail"]

    def test_requires_exactly_one_source(self, client):
        assert client.post("/simulate", json={}).status_code == 422
        both = {"preset": "crossing", "scenario": {"num_objects": 1}}
        assert client.post("/simulate", json=both).status_code == 422


class TestTrackAndEvaluate:
    def test_pipeline(self, client):
        body = simulate(client)
        track = client.post(
            "/track",
            json={
                "first_frame": body["first_frame"],
                "stream": body["stream"],
                "config": {"embedding_dim": 8},
            },
        )
        assert track.status_code == 200
        tr = track.json()
        assert len(tr["trajectories"]["targets"]) == 2
        assert len(tr["frames"]) == 15

        ev = client.post(
            "/evaluate",
            json={
                "trajectories": tr["trajectories"],
                "ground_truth": body["ground_truth"],
            },
        )
        assert ev.status_code == 200
        report = ev.json()["report"]
        assert report["id_switches"] == 0
        assert 0.5 < report["jf_mean"] <= 1.0

    def test_bad_stream_rejected(self, client):
        body = simulate(client)
        resp = client.post(
            "/track",
            json={
                "first_frame": body["first_frame"],
                "stream": [{"frame": 2, "detections": []}, {"frame": 1, "detections": []}],
                "config": {},
            },
        )
        assert resp.status_code == 422
        assert "strictly increasing" in resp.json()["detail"]

    def test_bad_config_rejected(self, client):
        body = simulate(client)
        resp = client.post(
            "/track",
            json={"first_frame": body["first_frame"], "stream": [], "config": {"mode": "nope"}},
        )
        assert resp.status_code == 422


class TestTanCheckAndBench:
    def test_tan_check(self, client):
        resp = client.post("/tan-check", json={"seed": 0})
        assert resp.status_code == 200
        body = resp.json()
        assert body["passed"] is True
        assert all(c["passed"] for c in body["checks"])

    def test_bench(self, client):
        resp = client.post("/bench", json={"preset": "association-small", "frames": 50})
        assert resp.status_code == 200
        body = resp.json()
        assert body["num_frames"] == 50
        assert body["total_seconds"] > 0

    def test_bench_unknown_preset(self, client):
        assert client.post("/bench", json={"preset": "huge"}).status_code == 422


class TestSessions:
    def test_online_stepping(self, client):
        body = simulate(client)
        created = client.post(
            "/sessions",
            json={"first_frame": body["first_frame"], "config": {"embedding_dim": 8}},
        )
        assert created.status_code == 201
        sid = created.json()["session_id"]
        assert created.json()["num_targets"] == 2

        for record in body["stream"][:5]:
            step = client.post(
                f"/sessions/{sid}/step",
                json={"frame": record["frame"], "detections": record["detections"]},
            )
            assert step.status_code == 200
            assert len(step.json()["matches"]) == 2

        trajs = client.get(f"/sessions/{sid}/trajectories")
        assert trajs.status_code == 200
        entries = trajs.json()["targets"][0]["entries"]
        assert [e["frame"] for e in entries] == [0, 1, 2, 3, 4, 5]

        assert client.delete(f"/sessions/{sid}").status_code == 204
        assert client.get(f"/sessions/{sid}/trajectories").status_code == 404

    def test_out_of_order_step_rejected(self, client):
        body = simulate(client)
        sid = client.post(
            "/sessions",
            json={"first_frame": body["first_frame"], "config": {"embedding_dim": 8}},
        ).json()["session_id"]
        r = body["stream"][0]
        ok = client.post(f"/sessions/{sid}/step", json={"frame": r["frame"], "detections": r["detections"]})
        assert ok.status_code == 200
        again = client.post(f"/sessions/{sid}/step", json={"frame": r["frame"], "detections": []})
        assert again.status_code == 422
        assert "out-of-order" in again.json()["detail"]

    def test_unknown_session(self, client):
        assert client.post("/sessions/xyz/step", json={"frame": 1, "detections": []}).status_code == 404

    def test_sessions_equal_batch_track(self, client):
        body = simulate(client, preset="deformation", seed=2)
        config = {"embedding_dim": 8}
        batch = client.post(
            "/track",
            json={"first_frame": body["first_frame"], "stream": body["stream"], "config": config},
        ).json()["trajectories"]

        sid = client.post(
            "/sessions", json={"first_frame": body["first_frame"], "config": config}
        ).json()["session_id"]
        for record in body["stream"]:
            client.post(
                f"/sessions/{sid}/step",
                json={"frame": record["frame"], "detections": record["detections"]},
            )
        online = client.get(f"/sessions/{sid}/trajectories").json()
        assert online == batch

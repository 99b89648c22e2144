import pytest
from fastapi.testclient import TestClient

from expalign.benchmarks import generate, instance_to_obj, serialize
from expalign.service import create_app, load_instance_dir


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def make_corridor_session(client):
    response = client.post("/api/sessions", json={"instance": "corridor"})
    assert response.status_code == 201
    return response.json()


SESSION_KEYS = {
    "id",
    "instance",
    "status",
    "iteration",
    "pending",
    "history",
    "candidates",
    "confirmed",
    "policy",
}


def check_session_shape(resource):
    assert set(resource) == SESSION_KEYS
    assert isinstance(resource["id"], str)
    assert resource["status"] in {"awaiting_answers", "solved", "no_solution", "exhausted"}
    for item in resource["pending"]:
        assert set(item) == {"state", "kind", "prompt"}
        assert item["kind"] in {"forbidden", "goal"}
    for item in resource["history"]:
        assert set(item) == {"state", "kind", "verdict", "iteration"}
    assert set(resource["candidates"]) == {"forbidden", "goal"}
    assert set(resource["confirmed"]) == {"forbidden", "goal"}
    if resource["policy"] is not None:
        assert set(resource["policy"]) == {"actions", "occupancy"}


class TestInstances:
    def test_list_includes_fixtures(self, client):
        names = {item["name"] for item in client.get("/api/instances").json()}
        assert {"single", "switch", "corridor"} <= names

    def test_instance_json_round_trips(self, client):
        payload = client.get("/api/instances/switch").json()
        assert payload["name"] == "switch"
        assert payload["s0"] == "s0"
        assert "robot_transitions" in payload and "human_transitions" in payload

    def test_unknown_instance_404(self, client):
        assert client.get("/api/instances/nope").status_code == 404

    def test_layout_served_for_grid_instances(self, tmp_path):
        inst = generate("walkway", 4, 4, 1)
        (tmp_path / "w.json").write_text(serialize(inst))
        app = create_app(load_instance_dir(tmp_path))
        local = TestClient(app)
        payload = local.get(f"/api/instances/{inst.name}").json()
        assert payload["layout"]["width"] == 4
        assert payload["layout"]["cells"]


class TestSessionLifecycle:
    def test_switch_solves_immediately(self, client):
        res = client.post("/api/sessions", json={"instance": "switch"})
        assert res.status_code == 201
        body = res.json()
        check_session_shape(body)
        assert body["status"] == "solved"
        assert body["pending"] == []
        assert body["policy"]["actions"]["s0"] == "b2"

    def test_corridor_full_flow(self, client):
        body = make_corridor_session(client)
        check_session_shape(body)
        assert body["status"] == "awaiting_answers"
        assert [(p["state"], p["kind"]) for p in body["pending"]] == [
            ("W", "forbidden"),
            ("A", "goal"),
        ]
        assert body["pending"][0]["prompt"] == "Do I need to avoid state 'W'?"
        sid = body["id"]

        answers = {
            "answers": [
                {"state": p["state"], "kind": p["kind"], "verdict": "neither"}
                for p in body["pending"]
            ]
        }
        advanced = client.post(f"/api/sessions/{sid}/answers", json=answers)
        assert advanced.status_code == 200
        after = advanced.json()
        check_session_shape(after)
        assert after["status"] == "solved"
        assert len(after["history"]) == 2

        policy = client.get(f"/api/sessions/{sid}/policy")
        assert policy.status_code == 200
        assert policy.json()["actions"]["s0"] == "aW"
        assert policy.json()["occupancy"]["g"] > 0

    def test_get_session_round_trip(self, client):
        body = make_corridor_session(client)
        fetched = client.get(f"/api/sessions/{body['id']}")
        assert fetched.status_code == 200
        assert fetched.json() == body

    def test_unknown_session_404(self, client):
        assert client.get("/api/sessions/deadbeef").status_code == 404
        assert client.post("/api/sessions/deadbeef/answers", json={"answers": []}).status_code == 404
        assert client.get("/api/sessions/deadbeef/policy").status_code == 404

    def test_policy_view_blocked_until_solved(self, client):
        body = make_corridor_session(client)
        res = client.get(f"/api/sessions/{body['id']}/policy")
        assert res.status_code == 409

    def test_replay_is_rejected_not_reapplied(self, client):
        body = make_corridor_session(client)
        sid = body["id"]
        answers = {
            "answers": [
                {"state": p["state"], "kind": p["kind"], "verdict": "neither"}
                for p in body["pending"]
            ]
        }
        assert client.post(f"/api/sessions/{sid}/answers", json=answers).status_code == 200
        replay = client.post(f"/api/sessions/{sid}/answers", json=answers)
        assert replay.status_code == 409
        assert client.get(f"/api/sessions/{sid}").json()["status"] == "solved"

    def test_partial_answers_422(self, client):
        body = make_corridor_session(client)
        sid = body["id"]
        one = {
            "answers": [
                {
                    "state": body["pending"][0]["state"],
                    "kind": body["pending"][0]["kind"],
                    "verdict": "neither",
                }
            ]
        }
        assert client.post(f"/api/sessions/{sid}/answers", json=one).status_code == 422

    def test_bad_verdict_422(self, client):
        body = make_corridor_session(client)
        bad = {
            "answers": [
                {"state": p["state"], "kind": p["kind"], "verdict": "maybe"}
                for p in body["pending"]
            ]
        }
        assert client.post(f"/api/sessions/{body['id']}/answers", json=bad).status_code == 422

    def test_duplicate_answers_422(self, client):
        body = make_corridor_session(client)
        p = body["pending"][0]
        dup = {
            "answers": [
                {"state": p["state"], "kind": p["kind"], "verdict": "neither"},
                {"state": p["state"], "kind": p["kind"], "verdict": "must_avoid"},
            ]
        }
        assert client.post(f"/api/sessions/{body['id']}/answers", json=dup).status_code == 422

    def test_confirming_unreachable_goal_reports_no_solution(self, client):
        body = make_corridor_session(client)
        sid = body["id"]
        first = {
            "answers": [
                {"state": "W", "kind": "forbidden", "verdict": "must_avoid"},
                {"state": "A", "kind": "goal", "verdict": "neither"},
            ]
        }
        after = client.post(f"/api/sessions/{sid}/answers", json=first).json()
        assert after["status"] == "awaiting_answers"
        assert [(p["state"], p["kind"]) for p in after["pending"]] == [("g", "goal")]
        second = {"answers": [{"state": "g", "kind": "goal", "verdict": "must_visit"}]}
        final = client.post(f"/api/sessions/{sid}/answers", json=second).json()
        assert final["status"] == "no_solution"
        assert client.get(f"/api/sessions/{sid}/policy").status_code == 409


class TestSessionCreation:
    def test_unknown_name_404(self, client):
        assert client.post("/api/sessions", json={"instance": "missing"}).status_code == 404

    def test_inline_instance(self, client, fx):
        obj = instance_to_obj(fx["switch"])
        res = client.post("/api/sessions", json={"instance": obj})
        assert res.status_code == 201
        assert res.json()["status"] == "solved"

    def test_bad_inline_instance_422(self, client, fx):
        obj = instance_to_obj(fx["switch"])
        del obj["gamma"]
        res = client.post("/api/sessions", json={"instance": obj})
        assert res.status_code == 422
        assert "gamma" in res.json()["error"]

    def test_noisy_planning_accepted(self, client):
        res = client.post(
            "/api/sessions", json={"instance": "switch", "planning": {"noisy": 8.9999}}
        )
        assert res.status_code == 201

    def test_bad_planning_422(self, client):
        res = client.post("/api/sessions", json={"instance": "switch", "planning": "psychic"})
        assert res.status_code == 422

    def test_missing_instance_field_422(self, client):
        assert client.post("/api/sessions", json={}).status_code == 422


class TestEviction:
    def test_idle_sessions_expire(self):
        app = create_app(session_ttl_s=0.0)
        local = TestClient(app)
        body = local.post("/api/sessions", json={"instance": "corridor"}).json()
        assert local.get(f"/api/sessions/{body['id']}").status_code == 404

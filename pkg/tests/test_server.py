import json

import pytest
from fastapi.testclient import TestClient

from stylebot.server import TraceStore, create_app


@pytest.fixture(scope="module")
def client(engine):
    app = create_app(engine=engine)
    with TestClient(app) as c:
        yield c


class TestChat:
    def test_chat_roundtrip_with_resolvable_trace(self, client):
        r = client.post("/api/chat", json={"session_id": "s1", "utterance": "hello"})
        assert r.status_code == 200
        body = r.json()
        assert body["response"]
        assert body["route"]
        tr = client.get(body["trace_ref"])
        assert tr.status_code == 200
        trace = tr.json()
        assert trace["turn_id"] == body["turn_id"]
        assert trace["gate"]["verdict"]

    def test_empty_utterance_400(self, client):
        r = client.post("/api/chat", json={"session_id": "s1", "utterance": "   "})
        assert r.status_code == 400
        assert r.json() == {"error": "empty input"}

    def test_missing_utterance_400(self, client):
        r = client.post("/api/chat", json={"session_id": "s1"})
        assert r.status_code == 400

    def test_malformed_body_400(self, client):
        r = client.post(
            "/api/chat", content=b"{not json", headers={"content-type": "application/json"}
        )
        assert r.status_code == 400
        assert "error" in r.json()

    def test_stateless_identical_responses(self, client):
        r1 = client.post("/api/chat", json={"session_id": "s1", "utterance": "engage"})
        r2 = client.post("/api/chat", json={"session_id": "s2", "utterance": "engage"})
        assert r1.json()["response"] == r2.json()["response"]
        assert r1.json()["route"] == r2.json()["route"]

    def test_never_empty_response_on_200(self, client, engine):
        from stylebot.evalharness import load_eval_set

        for item in load_eval_set().items:
            r = client.post("/api/chat", json={"session_id": "s", "utterance": item.utterance})
            assert r.status_code == 200
            assert r.json()["response"].strip()


class TestTrace:
    def test_unknown_trace_404(self, client):
        r = client.get("/api/trace/never-issued")
        assert r.status_code == 404
        assert r.json() == {"error": "unknown trace"}

    def test_ring_buffer_evicts_oldest(self):
        store = TraceStore(capacity=3)
        for n in range(5):
            store.put(f"t{n}", {"n": n})
        assert store.get("t0") is None
        assert store.get("t1") is None
        assert store.get("t4") == {"n": 4}


class TestHealth:
    def test_ok_when_loaded(self, client):
        r = client.get("/api/health")
        assert r.status_code == 200
        body = r.json()
        assert body["status"] == "ok"
        assert all(body["components"].values())

    def test_loading_state_without_engine(self):
        app = create_app()  # no engine, no manifest: never becomes ready
        with TestClient(app) as c:
            health = c.get("/api/health")
            assert health.json()["status"] == "loading"
            chat = c.post("/api/chat", json={"session_id": "s", "utterance": "hi"})
            assert chat.status_code == 503
            assert chat.json() == {"error": "engine loading"}
            trace = c.get("/api/trace/t1")
            assert trace.status_code == 503


class TestStaticFallback:
    def test_index_served(self, client):
        r = client.get("/")
        assert r.status_code == 200
        assert "stylebot" in r.text


class TestLatency:
    def test_chat_p50_under_50ms(self, client):
        import statistics
        import time

        samples = []
        for _ in range(20):
            start = time.perf_counter()
            r = client.post("/api/chat", json={"session_id": "lat", "utterance": "red alert"})
            samples.append((time.perf_counter() - start) * 1000)
            assert r.status_code == 200
        assert statistics.median(samples) < 50


class TestBackgroundLoad:
    def test_engine_loads_from_manifest(self, engine_dir):
        import time

        app = create_app(manifest_path=engine_dir / "manifest.json")
        with TestClient(app) as c:
            deadline = time.time() + 10
            while time.time() < deadline:
                if c.get("/api/health").json()["status"] == "ok":
                    break
                time.sleep(0.05)
            r = c.post("/api/chat", json={"session_id": "s", "utterance": "engage"})
            assert r.status_code == 200

    def test_load_delay_exposes_503_window(self, engine_dir, monkeypatch):
        monkeypatch.setenv("STYLEBOT_LOAD_DELAY", "1.5")
        app = create_app(manifest_path=engine_dir / "manifest.json")
        with TestClient(app) as c:
            r = c.post("/api/chat", json={"session_id": "s", "utterance": "engage"})
            assert r.status_code == 503
            assert r.json()["error"] == "engine loading"

import json

import pytest
from fastapi.testclient import TestClient

from ontoquery.engine import Engine
from ontoquery.service import create_app


@pytest.fixture()
def client():
    return TestClient(create_app(Engine()))


def new_session(client) -> str:
    response = client.post("/sessions")
    assert response.status_code == 201
    body = response.json()
    assert body["session"]
    return body["session"]


class TestSessions:
    def test_q1_message_answers_with_petrov(self, client, q1):
        sid = new_session(client)
        response = client.post(f"/sessions/{sid}/messages", json={"text": q1})
        assert response.status_code == 200
        body = response.json()
        assert body["kind"] == "answer"
        assert "Petrov Petr" in body["text"]
        assert body["sparql"].startswith("PREFIX")
        assert len(body["proof"][0]) == 7
        assert body["dot"].startswith("digraph")
        assert body["state"] == "awaiting-question"

    def test_two_sessions_are_independent(self, client, q1, q2):
        a, b = new_session(client), new_session(client)
        assert a != b
        client.post(f"/sessions/{a}/messages", json={"text": q1})
        # session b has no context: the pronoun cannot be resolved
        reply = client.post(f"/sessions/{b}/messages", json={"text": q2}).json()
        assert reply["kind"] == "clarifying-question"

    def test_unknown_session_404(self, client):
        assert client.post("/sessions/nope/messages", json={"text": "x"}).status_code == 404

    def test_malformed_body_400(self, client):
        sid = new_session(client)
        assert client.post(f"/sessions/{sid}/messages", json={"wrong": 1}).status_code == 400

    def test_empty_utterance_422(self, client):
        sid = new_session(client)
        assert client.post(f"/sessions/{sid}/messages", json={"text": "   "}).status_code == 422

    def test_context_restores_history(self, client, q1, q2):
        sid = new_session(client)
        client.post(f"/sessions/{sid}/messages", json={"text": q1})
        client.post(f"/sessions/{sid}/messages", json={"text": q2})
        context = client.get(f"/sessions/{sid}/context").json()
        assert [t["utterance"] for t in context["turns"]] == [q1, q2]
        assert context["turns"][1]["augmented"] == "anaphora"
        assert context["turns"][0]["reply"]["kind"] == "answer"

    def test_response_schema_is_stable_for_every_kind(self, client, q1, tank_text):
        sid = new_session(client)
        keys = {"kind", "text", "state", "condition", "cards", "sparql", "proof", "dot"}
        for text in (q1, "Smith's phone", tank_text):
            body = client.post(f"/sessions/{sid}/messages", json={"text": text}).json()
            assert set(body) == keys


class TestGraphEndpoints:
    def test_health(self, client):
        body = client.get("/health").json()
        assert body["status"] == "ok" and body["triples"] > 0

    def test_stats_count_tanks_after_extract(self, client, tank_text):
        before = client.get("/graph/stats").json()
        assert "base:Tank" not in before["instances_by_class"]
        report = client.post("/extract", json={"text": tank_text}).json()
        assert report["added"] == 9 and report["committed"]
        after = client.get("/graph/stats").json()
        assert after["instances_by_class"]["base:Tank"] == 3

    def test_extract_dry_run_does_not_commit(self, client, tank_text):
        report = client.post("/extract", json={"text": tank_text, "commit": False}).json()
        assert report["added"] == 0 and not report["committed"]
        assert "INSERT DATA" in report["sparql"]
        after = client.get("/graph/stats").json()
        assert "base:Tank" not in after["instances_by_class"]

    def test_extract_rejects_questions(self, client, q1):
        assert client.post("/extract", json={"text": q1}).status_code == 422


class TestDeterminism:
    def test_replaying_transcript_is_byte_identical(self, q1, q2):
        def transcript() -> bytes:
            client = TestClient(create_app(Engine()))
            sid = new_session(client)
            chunks = []
            for text in (q1, q2, "Smith's phone"):
                response = client.post(f"/sessions/{sid}/messages", json={"text": text})
                chunks.append(response.content)
            return b"\n".join(chunks)

        assert transcript() == transcript()

    def test_ask_equals_first_session_turn(self, q1):
        """CLI/API parity: one-shot ask equals the first turn of a session."""
        from ontoquery.dialogue import DialogueSession

        engine = Engine()
        one_shot = DialogueSession(engine).handle_turn(q1)
        client = TestClient(create_app(engine))
        sid = new_session(client)
        api = client.post(f"/sessions/{sid}/messages", json={"text": q1}).json()
        assert api["text"] == one_shot.text
        assert api["sparql"] == one_shot.answer.sparql

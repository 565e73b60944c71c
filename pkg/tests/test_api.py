"""HTTP surface: personalize, content, review with optimistic locking,
purge, and story composer modes."""

from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from eventscribe.api import create_app
from eventscribe.generation import MockBackend
from eventscribe.model import canonical_key
from eventscribe.retrieval import Passage, RetrievalCorpus
from eventscribe.slots import batch_generate, default_slot_bank, export_artifacts
from tests.conftest import make_golf_shot
from tests.test_pipeline import make_runner, tennis_set_end


@pytest.fixture
def runner(tmp_path):
    r = make_runner(tmp_path)
    r.corpus = RetrievalCorpus(
        passages=(
            Passage("d1", "Artist Name won five awards for the hit record", "GRAMMY Achievements", 3.0),
            Passage("d2", "Artist Name grew up playing piano", "Biography", 2.0),
            Passage("d3", "Artist Name headlines a tour", "News", 5.0),
        )
    )
    batch = batch_generate(MockBackend(), default_slot_bank(), variants_per_cell=1)
    export_artifacts(batch.templates, r.publisher.store, r.publisher.cdn)
    return r


@pytest.fixture
def client(runner):
    return TestClient(create_app(runner))


def pending_item(runner):
    event = tennis_set_end(event_id="api-t1")
    runner.submit(event)
    runner.run_until_quiescent()
    return canonical_key(event)


class TestPersonalizeEndpoint:
    def test_valid_payload_returns_sentences(self, client):
        response = client.post("/personalize", json={
            "user_id": "u1",
            "week": 9,
            "player": "Last Name",
            "payload": {
                "roster": [{"name": "Last Name", "position": "Running Back",
                            "opponent": "Atlanta Falcons", "team": "My Team"}],
            },
            "rationale": [{"stat_type": "projected_points", "percentile": 82,
                           "values": {"projection_points": 15.55, "opponent": "Atlanta Falcons"}}],
        })
        assert response.status_code == 200
        body = response.json()
        assert len(body["sentences"]) == 1
        assert "15.55" in body["sentences"][0]

    def test_invalid_payload_rejected(self, client):
        response = client.post("/personalize", json={
            "player": "Ghost",
            "payload": {"roster": [], "player_stats": {"Ghost": {}}},
            "rationale": [],
        })
        assert response.status_code == 422


class TestContentAndReview:
    def test_review_queue_lists_pending(self, runner, client):
        cid = pending_item(runner)
        response = client.get("/review", params={"state": "pending_review"})
        assert response.status_code == 200
        ids = [item["content_id"] for item in response.json()["items"]]
        assert cid in ids

    def test_full_review_round_trip(self, runner, client):
        cid = pending_item(runner)
        item = client.get(f"/review/{cid}").json()
        edited = client.put(f"/review/{cid}", json={
            "final_text": "Edited commentary text.",
            "revision": item["revision"],
        })
        assert edited.status_code == 200
        new_revision = edited.json()["revision"]
        assert new_revision == item["revision"] + 1

        approved = client.post(f"/review/{cid}/approve", json={"revision": new_revision})
        assert approved.status_code == 200
        assert approved.json()["state"] == "published"

        content = client.get(f"/content/{cid}")
        assert content.status_code == 200
        assert content.json()["state"] == "published"
        assert content.json()["final_text"] == "Edited commentary text."
        assert f"content/{cid}" in runner.publisher.purges

    def test_stale_edit_conflicts(self, runner, client):
        cid = pending_item(runner)
        item = client.get(f"/review/{cid}").json()
        first = client.put(f"/review/{cid}", json={"final_text": "a", "revision": item["revision"]})
        assert first.status_code == 200
        stale = client.put(f"/review/{cid}", json={"final_text": "b", "revision": item["revision"]})
        assert stale.status_code == 409

    def test_approve_non_pending_conflicts(self, runner, client):
        event = make_golf_shot(event_id="api-g1")
        runner.submit(event)
        runner.run_until_quiescent()
        cid = canonical_key(event)
        response = client.post(f"/review/{cid}/approve", json={"revision": 0})
        assert response.status_code == 409

    def test_reject_regenerates_new_revision(self, runner, client):
        cid = pending_item(runner)
        item = client.get(f"/review/{cid}").json()
        response = client.post(f"/review/{cid}/reject", json={"revision": item["revision"]})
        assert response.status_code == 200
        body = response.json()
        assert body["item"]["revision"] == item["revision"] + 1
        assert body["item"]["state"] == "pending_review"

    def test_missing_content_404(self, client):
        assert client.get("/content/none/such/id").status_code == 404


class TestPurge:
    def test_purge_counts_cached_keys(self, runner, client):
        event = make_golf_shot(event_id="api-g2")
        runner.submit(event)
        runner.run_until_quiescent()
        key = f"content/{canonical_key(event)}"
        runner.publisher.cdn.fetch(key)
        response = client.post("/purge", json={"keys": [key, "ghost"]})
        assert response.status_code == 200
        assert response.json()["purged"] == 1


class TestStoryComposer:
    def test_categorical_context_only_tagged_passages(self, client):
        response = client.get("/story/context", params={
            "artist": "Artist Name", "mode": "categorical", "category": "GRAMMY Achievements",
        })
        assert response.status_code == 200
        passages = response.json()["passages"]
        assert passages
        assert all(p["category"] == "GRAMMY Achievements" for p in passages)

    def test_free_mode_draws_from_whole_corpus(self, client):
        response = client.get("/story/context", params={"artist": "Artist Name", "mode": "free"})
        categories = {p["category"] for p in response.json()["passages"]}
        assert len(categories) > 1

    def test_story_generates_pending_items(self, runner, client):
        response = client.post("/story", json={
            "artist": "Artist Name",
            "mode": "categorical",
            "category": "GRAMMY Achievements",
            "avoid_topics": ["violence"],
            "kinds": ["summary", "headline"],
        })
        assert response.status_code == 200
        items = response.json()["items"]
        assert len(items) == 2
        assert all(item["state"] == "pending_review" for item in items)

    def test_summary_respects_character_screen(self, runner, client):
        response = client.post("/story", json={
            "artist": "Artist Name", "mode": "free", "kinds": ["summary"],
        })
        item = response.json()["items"][0]
        assert item["final_text"]
        assert len(item["final_text"]) <= 150

    def test_unknown_artist_validation(self, client):
        response = client.post("/story", json={"artist": "Nobody Here", "mode": "free"})
        assert response.status_code == 422

    def test_category_mode_mismatch_rejected(self, client):
        assert client.post("/story", json={
            "artist": "Artist Name", "mode": "categorical",
        }).status_code == 422
        assert client.post("/story", json={
            "artist": "Artist Name", "mode": "free", "category": "News",
        }).status_code == 422


class TestAuth:
    def test_admin_routes_gated_when_token_set(self, runner):
        client = TestClient(create_app(runner, auth_token="secret"))
        assert client.get("/review").status_code == 401
        assert client.get("/review", headers={"x-auth-token": "secret"}).status_code == 200
        # consumer endpoints stay open
        assert client.get("/health").status_code == 200

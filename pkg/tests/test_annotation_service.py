"""Store semantics plus the HTTP surface (exercised via direct HTTP calls)."""

import threading

import pytest
from fastapi.testclient import TestClient

from mvpref.annotation import (
    AnnotationStore,
    CapExceededError,
    DuplicateSubmissionError,
    UnknownAnnotatorError,
    UnknownAssetListError,
    create_app,
)
from mvpref.dataset.types import RankingRecord
from mvpref.errors import ValidationError

from conftest import record

LISTS = [
    {"asset_list_id": "L1", "prompt_id": "p1", "asset_ids": ["A", "B", "C", "D"]},
    {"asset_list_id": "L2", "prompt_id": "p2", "asset_ids": ["E", "F", "G", "H", "I"]},
]
PEOPLE = [
    {"id": "u1", "role": "annotator"},
    {"id": "u2", "role": "annotator"},
    {"id": "r1", "role": "researcher"},
]


def make_store(cap=400, journal=None):
    return AnnotationStore(LISTS, PEOPLE, cap=cap, seed=7, journal_path=journal)


def test_next_task_shape_and_permutation():
    store = make_store()
    task = store.next_task("u1")
    assert task.asset_list_id == "L1"
    assert sorted(task.presentation_order) == sorted(task.asset_ids)
    # per-annotator randomization is deterministic
    again = store.next_task("u1")
    assert again.presentation_order == task.presentation_order


def test_unknown_annotator_rejected():
    with pytest.raises(UnknownAnnotatorError):
        make_store().next_task("ghost")


def test_submit_validates_coverage():
    store = make_store()
    with pytest.raises(ValidationError, match="D"):
        store.submit_ranking("u1", record("u1", "L1", "A", {"B", "C"}))


def test_submit_accepts_ties_and_counts():
    store = make_store()
    assert store.submit_ranking("u1", record("u1", "L1", "A", {"B", "C"}, "D")) == 1
    assert store.completed_lists("u1") == 1


def test_duplicate_submission_refused():
    store = make_store()
    store.submit_ranking("u1", record("u1", "L1", "A", "B", "C", "D"))
    with pytest.raises(DuplicateSubmissionError):
        store.submit_ranking("u1", record("u1", "L1", "D", "C", "B", "A"))


def test_cap_blocks_further_work():
    store = make_store(cap=1)
    store.submit_ranking("u1", record("u1", "L1", "A", "B", "C", "D"))
    assert store.next_task("u1") is None
    with pytest.raises(CapExceededError):
        store.submit_ranking("u1", record("u1", "L2", "E", "F", "G", "H", "I"))
    # researchers are not capped
    store2 = make_store(cap=1)
    store2.submit_ranking("r1", record("r1", "L1", "A", "B", "C", "D"))
    assert store2.next_task("r1") is not None


def test_exhaustion_returns_none():
    store = make_store()
    store.submit_ranking("u1", record("u1", "L1", "A", "B", "C", "D"))
    store.submit_ranking("u1", record("u1", "L2", "E", "F", "G", "H", "I"))
    assert store.next_task("u1") is None


def test_export_excludes_researchers_by_default():
    store = make_store()
    store.submit_ranking("u1", record("u1", "L1", "A", "B", "C", "D"))
    store.submit_ranking("u2", record("u2", "L1", "B", "A", "C", "D"))
    store.submit_ranking("u1", record("u1", "L2", "E", "F", "G", "H", "I"))
    store.submit_ranking("r1", record("r1", "L1", "A", "B", "C", "D"))
    assert len(store.export_rankings()) == 3
    assert len(store.export_rankings("researcher")) == 1
    # deterministic order, pure function of the store
    first = [r.to_json() for r in store.export_rankings()]
    second = [r.to_json() for r in store.export_rankings()]
    assert first == second
    assert [r.asset_list_id for r in store.export_rankings()] == ["L1", "L1", "L2"]


def test_empty_store_exports_nothing():
    assert make_store().export_rankings() == []


def test_exactly_once_under_concurrency():
    store = make_store()
    outcomes = []

    def submit():
        try:
            store.submit_ranking("u1", record("u1", "L1", "A", "B", "C", "D"))
            outcomes.append("ok")
        except DuplicateSubmissionError:
            outcomes.append("dup")

    threads = [threading.Thread(target=submit) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert outcomes.count("ok") == 1
    assert store.completed_lists("u1") == 1


def test_conflicts_agreement_is_empty():
    store = make_store()
    store.submit_ranking("u1", record("u1", "L1", "A", "B", "C", "D"))
    store.submit_ranking("r1", record("r1", "L1", "A", "B", "C", "D"))
    assert store.flag_conflicts("L1") == []


def test_conflicts_strict_inversion_detected():
    store = make_store()
    store.submit_ranking("u1", record("u1", "L1", "A", "B", "C", "D"))
    store.submit_ranking("r1", record("r1", "L1", "B", "A", "C", "D"))
    assert store.flag_conflicts("L1") == [("A", "B")]


def test_consensus_tie_is_not_a_conflict():
    store = make_store()
    store.submit_ranking("u1", record("u1", "L1", {"A", "B"}, "C", "D"))
    store.submit_ranking("r1", record("r1", "L1", "A", "B", "C", "D"))
    assert store.flag_conflicts("L1") == []


def test_conflicts_require_researcher_record():
    store = make_store()
    store.submit_ranking("u1", record("u1", "L1", "A", "B", "C", "D"))
    with pytest.raises(ValidationError):
        store.flag_conflicts("L1")
    with pytest.raises(UnknownAssetListError):
        store.flag_conflicts("L999")


def test_journal_replay_rebuilds_state(tmp_path):
    journal = tmp_path / "journal.ndjson"
    store = make_store(journal=journal)
    store.submit_ranking("u1", record("u1", "L1", "A", {"B", "C"}, "D"))
    store.submit_ranking("u2", record("u2", "L2", "E", "F", "G", "H", "I"))

    rebuilt = make_store(journal=journal)
    assert rebuilt.completed_lists("u1") == 1
    assert rebuilt.completed_lists("u2") == 1
    with pytest.raises(DuplicateSubmissionError):
        rebuilt.submit_ranking("u1", record("u1", "L1", "A", "B", "C", "D"))


# -- HTTP surface -------------------------------------------------------------

@pytest.fixture
def client():
    return TestClient(create_app(make_store(cap=2)))


def test_http_task_and_submission_flow(client):
    resp = client.get("/tasks/next", params={"annotator": "u1"})
    assert resp.status_code == 200
    task = resp.json()["task"]
    assert task["asset_list_id"] == "L1"

    body = RankingRecord(annotator_id="u1", asset_list_id="L1",
                         ranking=[{"A"}, {"B", "C"}, {"D"}]).to_json()
    resp = client.post("/rankings", json=body)
    assert resp.status_code == 200
    assert resp.json() == {"status": "accepted", "completed_lists": 1}

    dup = client.post("/rankings", json=body)
    assert dup.status_code == 409
    assert dup.json()["code"] == "duplicate_submission"

    export = client.get("/rankings/export")
    assert export.status_code == 200
    assert '"ranking": [["A"], ["B", "C"], ["D"]]' in export.text

    researcher = RankingRecord(annotator_id="r1", asset_list_id="L1",
                               ranking=[{"D"}, {"C"}, {"B"}, {"A"}]).to_json()
    assert client.post("/rankings", json=researcher).status_code == 200
    assert "r1" not in client.get("/rankings/export").text
    filtered = client.get("/rankings/export", params={"role": "researcher"})
    assert "r1" in filtered.text and "u1" not in filtered.text


def test_http_error_bodies(client):
    resp = client.get("/tasks/next", params={"annotator": "ghost"})
    assert resp.status_code == 404
    assert set(resp.json()) == {"code", "message"}

    bad = RankingRecord(annotator_id="u1", asset_list_id="L1",
                        ranking=[{"A"}, {"B"}]).to_json()
    resp = client.post("/rankings", json=bad)
    assert resp.status_code == 400
    assert resp.json()["code"] == "validation_error"


def test_http_conflicts_endpoint(client):
    for rec in [record("u1", "L1", "A", "B", "C", "D"),
                record("r1", "L1", "B", "A", "C", "D")]:
        assert client.post("/rankings", json=rec.to_json()).status_code == 200
    resp = client.get("/conflicts/L1")
    assert resp.status_code == 200
    assert resp.json() == {"asset_list_id": "L1", "conflicts": [["A", "B"]]}
    assert client.get("/conflicts/L2").status_code == 400  # no records yet


def test_http_serves_view_png(tmp_path):
    from mvpref.dataset.repository import AssetRepository
    from conftest import make_asset, make_prompt
    from mvpref.dataset.synthetic import generate_prompt_image

    repo = AssetRepository(tmp_path)
    assets = [make_asset("p1", quality=q, n_views=2, image_size=16,
                         method_id=f"m{q}") for q in (1.0, 0.7, 0.4, 0.1)]
    repo.save_prompts([make_prompt("p1")],
                      {"p1": generate_prompt_image("p1", 16, 0)})
    repo.save_assets(assets)
    lists = [{"asset_list_id": "L1", "prompt_id": "p1",
              "asset_ids": [a.id for a in assets]}]
    store = AnnotationStore(lists, PEOPLE, cap=2, seed=0)
    client = TestClient(create_app(store, repo=repo))

    resp = client.get(f"/assets/{assets[0].id}/views/0")
    assert resp.status_code == 200
    assert resp.headers["content-type"] == "image/png"
    assert resp.content[:8] == b"\x89PNG\r\n\x1a\n"
    assert client.get(f"/assets/{assets[0].id}/views/99").status_code == 404
    assert client.get("/assets/nope/views/0").status_code == 404

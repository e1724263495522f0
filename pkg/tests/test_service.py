"""Session service: HTTP lifecycle, label semantics, and crash-safe resume."""

import json
import time

import pytest
from fastapi.testclient import TestClient

import pairtune as pt
from pairtune.driver import Budgets, DriverConfig, to_run_config
from pairtune.oracles import ExpertSpec, SyntheticSurfaceSpec
from pairtune.service import SessionHandle, create_app

SPACE = pt.ConfigSpace(
    (
        pt.ParameterDef("alpha", "continuous", 0.0, 10.0),
        pt.ParameterDef("beta", "continuous", -5.0, 5.0),
    ),
    "throughput",
    "higher_is_better",
)

BOWL = SyntheticSurfaceSpec("quadratic_bowl", (1.0, 1.0), (0.4, 0.6), (), 0.0, 7)


def run_doc(expert: bool = True, **over) -> dict:
    base = dict(
        Q=20, q=5, n=2, P=2, t=4, variant="cm_casl", seed=3,
        initial_measured=6, pool_size=20, grid_search=False,
        C=10.0, gamma=0.25, suite_size=10,
    )
    base.update(over)
    cfg = DriverConfig(**base)
    spec = ExpertSpec(accuracy=0.9, abstain_prob=0.0, seed=77) if expert else None
    return json.loads(json.dumps(to_run_config(SPACE, BOWL, cfg, spec)))


@pytest.fixture()
def client(tmp_path):
    app = create_app(str(tmp_path / "data"))
    with TestClient(app) as c:
        yield c


def wait_phase(client, sid, want=("awaiting_labels", "done"), timeout=30.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        phase = client.get(f"/sessions/{sid}").json()["phase"]
        if phase in want:
            return phase
        assert phase != "failed", client.get(f"/sessions/{sid}").json()["error"]
        time.sleep(0.02)
    raise AssertionError(f"session {sid} never reached {want}")


def events_of(data_dir, sid):
    return (data_dir / sid / "events.jsonl").read_bytes()


# -- lifecycle -------------------------------------------------------------------

def test_create_session(client, tmp_path):
    r = client.post("/sessions", json=run_doc())
    assert r.status_code == 201
    body = r.json()
    sid = body["session_id"]
    assert body["phase"] == "awaiting_labels"

    sdir = tmp_path / "data" / sid
    assert (sdir / "run_config.json").exists()
    assert (sdir / "meta.json").exists()
    assert (sdir / "events.jsonl").exists()

    status = client.get(f"/sessions/{sid}").json()
    assert status["variant"] == "cm_casl"
    assert status["Q"] == 20 and status["q"] == 5
    assert status["pending"] == 5
    assert status["labels_used"] == 0


def test_create_rejects_bad_config(client):
    doc = run_doc()
    doc["driver"]["variant"] = "boosted"
    assert client.post("/sessions", json=doc).status_code == 400
    assert client.post("/sessions", json={"nope": 1}).status_code == 400


def test_create_accepts_minimal_doc(client):
    # optional blocks (budgets, interaction_pairs, noise_sigma) default
    doc = run_doc()
    doc["driver"].pop("budgets", None)
    doc["source"].pop("interaction_pairs", None)
    doc["source"].pop("noise_sigma", None)
    assert client.post("/sessions", json=doc).status_code == 201


def test_unknown_session_404(client):
    assert client.get("/sessions/deadbeef0000").status_code == 404
    assert client.get("/sessions/deadbeef0000/queries").status_code == 404


def test_cors_allows_browser_consoles(client):
    # the labeling page is static and may load from any origin
    r = client.get("/sessions", headers={"Origin": "http://elsewhere:5173"})
    assert r.headers["access-control-allow-origin"] == "*"
    pre = client.options("/sessions/x/labels", headers={
        "Origin": "http://elsewhere:5173",
        "Access-Control-Request-Method": "POST",
        "Access-Control-Request-Headers": "content-type",
    })
    assert pre.status_code == 200
    assert "POST" in pre.headers["access-control-allow-methods"]


def test_listing_shows_phase(client):
    sid = client.post("/sessions", json=run_doc()).json()["session_id"]
    rows = client.get("/sessions").json()
    assert [r["session_id"] for r in rows] == [sid]
    assert rows[0]["phase"] == "awaiting_labels"


# -- queries and labels ----------------------------------------------------------

def test_queries_render_decoded_values(client):
    sid = client.post("/sessions", json=run_doc()).json()["session_id"]
    queries = client.get(f"/sessions/{sid}/queries").json()
    assert len(queries) == 5
    first = queries[0]
    assert set(first["left"]["values"]) == {"alpha", "beta"}
    assert 0.0 <= first["left"]["values"]["alpha"] <= 10.0
    assert first["differing"], "endpoints of a pair must differ somewhere"
    assert first["iteration"] == 1
    ids = [q["query_id"] for q in queries]
    assert len(set(ids)) == 5


def test_label_submission_flow(client, tmp_path):
    sid = client.post("/sessions", json=run_doc()).json()["session_id"]
    queries = client.get(f"/sessions/{sid}/queries").json()

    # answered queries leave the pending list
    first = queries[0]["query_id"]
    ack = client.post(f"/sessions/{sid}/labels",
                      json={"query_id": first, "answer": "left_better"}).json()
    assert ack["status"] == "recorded"
    assert ack["answered"] == 1 and ack["expected"] == 5
    assert len(client.get(f"/sessions/{sid}/queries").json()) == 4

    # same answer twice is acknowledged, not an error
    dup = client.post(f"/sessions/{sid}/labels",
                      json={"query_id": first, "answer": "left_better"})
    assert dup.status_code == 200 and dup.json()["status"] == "duplicate"

    # changing a recorded answer is a conflict
    conflict = client.post(f"/sessions/{sid}/labels",
                           json={"query_id": first, "answer": "right_better"})
    assert conflict.status_code == 409

    # unknown query id
    missing = client.post(f"/sessions/{sid}/labels",
                          json={"query_id": "it9999-p0", "answer": "left_better"})
    assert missing.status_code == 404

    # malformed answer never reaches the session
    bad = client.post(f"/sessions/{sid}/labels",
                      json={"query_id": first, "answer": "both"})
    assert bad.status_code == 422

    # finish the batch: label semantics are checked against the event log below
    answers = ["left_better", "right_better", "cannot_tell", "right_better"]
    for q, a in zip(queries[1:], answers):
        ack = client.post(f"/sessions/{sid}/labels",
                          json={"query_id": q["query_id"], "answer": a}).json()
    assert ack["phase"] == "computing"
    wait_phase(client, sid)

    lines = [json.loads(l) for l in
             events_of(tmp_path / "data", sid).decode().splitlines()]
    labeled = [e for e in lines if e["event"] == "labeled"][0]
    by_qid = {a["query_id"]: a for a in labeled["answers"]}
    assert by_qid[first]["label"] == 1
    assert by_qid[queries[1]["query_id"]]["label"] == 1
    assert by_qid[queries[2]["query_id"]]["label"] == 0
    assert by_qid[queries[3]["query_id"]]["abstained"] is True
    assert by_qid[queries[4]["query_id"]]["label"] == 0
    # the abstention was resolved by measuring both endpoints
    measured = [e for e in lines if e["event"] == "measured"
                and e["reason"] == "abstention"]
    assert len(measured) == 2

    # status surfaces the completed batch so a client can show resolutions
    status = client.get(f"/sessions/{sid}").json()
    assert status["last_batch"] == [
        {"query_id": a["query_id"], "label": a["label"],
         "abstained": a["abstained"]}
        for a in labeled["answers"]]


def test_submit_while_computing_conflicts(client):
    sid = client.post("/sessions", json=run_doc()).json()["session_id"]
    queries = client.get(f"/sessions/{sid}/queries").json()
    for q in queries:
        client.post(f"/sessions/{sid}/labels",
                    json={"query_id": q["query_id"], "answer": "left_better"})
    # worker may still be training; a submit in that window is rejected
    r = client.post(f"/sessions/{sid}/labels",
                    json={"query_id": queries[0]["query_id"],
                          "answer": "left_better"})
    assert r.status_code in (404, 409)  # 404 once the next batch is out
    wait_phase(client, sid)


# -- simulated-expert advance ------------------------------------------------------

def test_auto_advance_to_completion(client):
    sid = client.post("/sessions", json=run_doc()).json()["session_id"]
    out = client.post(f"/sessions/{sid}/advance", json={"batches": 2}).json()
    assert out["batches"] == 2
    status = client.get(f"/sessions/{sid}").json()
    assert status["labels_used"] == 10
    # live held-out CA: initial fit plus one per completed batch so far
    mid_history = status["ca_history"]
    assert len(mid_history) >= 3
    assert all(0.0 <= p["ca"] <= 100.0 for p in mid_history)

    out = client.post(f"/sessions/{sid}/advance", json={"batches": 1000}).json()
    assert out["phase"] == "done"
    status = client.get(f"/sessions/{sid}").json()
    assert status["labels_used"] == 20
    assert status["ca"] is not None and status["ra"] is not None
    assert status["pseudolabels"] >= 0
    assert status["pending"] == 0
    history = status["ca_history"]
    assert history[:len(mid_history)] == mid_history
    assert history[-1]["ca"] == status["ca"]
    iters = [p["iteration"] for p in history]
    assert iters == sorted(iters)
    assert all(s in iters for s in status["ssl_steps"])


def test_auto_advance_needs_expert(client):
    sid = client.post("/sessions", json=run_doc(expert=False)).json()["session_id"]
    assert client.post(f"/sessions/{sid}/advance").status_code == 409


def test_export_model(client):
    sid = client.post("/sessions", json=run_doc()).json()["session_id"]
    assert client.get(f"/sessions/{sid}/model").status_code == 409  # not done

    client.post(f"/sessions/{sid}/advance", json={"batches": 1000})
    out = client.get(f"/sessions/{sid}/model").json()
    model = pt.deserialize_model(out["model"])
    assert model.decision_many([[0.1] * 4]).shape == (1,)
    assert out["ca"] is not None


def test_done_session_rejects_labels(client):
    sid = client.post("/sessions", json=run_doc()).json()["session_id"]
    client.post(f"/sessions/{sid}/advance", json={"batches": 1000})
    r = client.post(f"/sessions/{sid}/labels",
                    json={"query_id": "it0001-p0", "answer": "left_better"})
    assert r.status_code == 409


# -- resume ------------------------------------------------------------------------

def test_resume_after_restart_is_byte_identical(tmp_path):
    doc = run_doc()

    # uninterrupted twin
    app_b = create_app(str(tmp_path / "b"))
    with TestClient(app_b) as cb:
        sid_b = cb.post("/sessions", json=doc).json()["session_id"]
        cb.post(f"/sessions/{sid_b}/advance", json={"batches": 1000})
        ca_b = cb.get(f"/sessions/{sid_b}").json()["ca"]

    # interrupted: advance 2 batches, drop the registry, reload from disk
    app_a = create_app(str(tmp_path / "a"))
    with TestClient(app_a) as ca_client:
        sid_a = ca_client.post("/sessions", json=doc).json()["session_id"]
        ca_client.post(f"/sessions/{sid_a}/advance", json={"batches": 2})

    app_a2 = create_app(str(tmp_path / "a"))
    with TestClient(app_a2) as ca2:
        rows = ca2.get("/sessions").json()
        assert rows[0]["phase"] == "suspended"

        status = ca2.get(f"/sessions/{sid_a}").json()
        assert status["phase"] == "awaiting_labels"
        assert status["labels_used"] == 10
        ca2.post(f"/sessions/{sid_a}/advance", json={"batches": 1000})
        assert ca2.get(f"/sessions/{sid_a}").json()["ca"] == ca_b

    assert events_of(tmp_path / "a", sid_a) == events_of(tmp_path / "b", sid_b)


def test_resume_drops_unlogged_partial_answers(tmp_path):
    doc = run_doc()
    app = create_app(str(tmp_path / "data"))
    with TestClient(app) as c:
        sid = c.post("/sessions", json=doc).json()["session_id"]
        queries = c.get(f"/sessions/{sid}/queries").json()
        c.post(f"/sessions/{sid}/labels",
               json={"query_id": queries[0]["query_id"], "answer": "left_better"})

    app2 = create_app(str(tmp_path / "data"))
    with TestClient(app2) as c2:
        # partial answers were never persisted: the full batch is pending again
        pending = c2.get(f"/sessions/{sid}/queries").json()
        assert len(pending) == 5
        assert pending[0]["query_id"] == queries[0]["query_id"]
        ack = c2.post(f"/sessions/{sid}/labels",
                      json={"query_id": queries[0]["query_id"],
                            "answer": "right_better"}).json()
        assert ack["status"] == "recorded"


def test_resume_of_done_session(tmp_path):
    doc = run_doc()
    app = create_app(str(tmp_path / "data"))
    with TestClient(app) as c:
        sid = c.post("/sessions", json=doc).json()["session_id"]
        c.post(f"/sessions/{sid}/advance", json={"batches": 1000})
        before = c.get(f"/sessions/{sid}").json()

    app2 = create_app(str(tmp_path / "data"))
    with TestClient(app2) as c2:
        status = c2.get(f"/sessions/{sid}").json()
        assert status["phase"] == "done"
        assert status["ca"] == before["ca"]
        assert status["ca_history"] == before["ca_history"]
        assert status["ssl_steps"] == before["ssl_steps"]
        assert c2.get(f"/sessions/{sid}/model").status_code == 200


def test_tampered_log_refuses_to_load(tmp_path):
    doc = run_doc()
    app = create_app(str(tmp_path / "data"))
    with TestClient(app) as c:
        sid = c.post("/sessions", json=doc).json()["session_id"]
        c.post(f"/sessions/{sid}/advance", json={"batches": 2})

    log = tmp_path / "data" / sid / "events.jsonl"
    lines = log.read_text().splitlines()
    for i, line in enumerate(lines):
        e = json.loads(line)
        if e["event"] == "labeled":
            e["answers"][0]["label"] = 1 - e["answers"][0]["label"]
            lines[i] = json.dumps(e, sort_keys=True, separators=(",", ":"))
            break
    log.write_text("\n".join(lines) + "\n")

    handle = SessionHandle(sid, tmp_path / "data" / sid)
    with pytest.raises(RuntimeError, match="diverged|persisted"):
        handle.load()

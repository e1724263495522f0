"""HTTP session host for human-in-the-loop labeling.

Each session wraps the driver generator.  The service holds the generator
between requests, persists every emitted event to an append-only log, and on
restart refolds the log through a fresh generator, verifying byte equality
with the recorded prefix along the way.  Labels submitted by people and
labels produced by the demo auto-expert travel the same path.
"""

from __future__ import annotations

import json
import pathlib
import threading
import uuid
from datetime import datetime, timezone
from typing import Sequence

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from . import svm
from .driver import (QueryBatch, _derive, drive, from_run_config, make_oracle,
                     refold)
from .events import EventLog, event_line
from .oracles import ExpertAnswer, ExpertSpec, SimulatedExpert, label_from_measurements
from .space import ValidationError

ANSWER_LABELS = {"left_better": 1, "right_better": 0}
PHASES = ("awaiting_labels", "computing", "ssl_step", "done", "suspended", "failed")


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


class SessionHandle:
    """One live session: generator, pending batch, answer buffer, event log."""

    def __init__(self, session_id: str, directory: pathlib.Path):
        self.session_id = session_id
        self.directory = directory
        self.lock = threading.RLock()
        self.log = EventLog(str(directory / "events.jsonl"))
        self.phase = "computing"
        self.batch: QueryBatch | None = None
        self.result = None
        self.error: str | None = None
        self.answers: dict[str, dict] = {}
        self.issued_at: str | None = None
        self.gen = None
        self.created_at: str | None = None
        self.space = None
        self.source = None
        self.cfg = None
        self.expert_spec: ExpertSpec | None = None
        self.ca_history: list[dict] = []
        self.ssl_steps: list[int] = []
        self.last_batch: list[dict] = []
        self._verify_against: list[dict] = []
        self._verify_cursor = 0

    # -- persistence ------------------------------------------------------

    def _sink(self, event: dict) -> None:
        if self._verify_cursor < len(self._verify_against):
            expected = self._verify_against[self._verify_cursor]
            if event_line(event) != event_line(expected):
                raise RuntimeError(
                    f"refold diverged from the persisted log at record "
                    f"{self._verify_cursor}: {event.get('event')} vs "
                    f"{expected.get('event')}")
            self._verify_cursor += 1
        else:
            self.log.append(event)
        if event["event"] == "retrained" and event.get("suite_ca") is not None:
            self.ca_history.append({"iteration": event["iteration"],
                                    "ca": event["suite_ca"]})
        if event["event"] == "labeled":
            self.last_batch = [{"query_id": a["query_id"], "label": a["label"],
                                "abstained": a["abstained"]}
                               for a in event["answers"]]
        if event["event"] == "pseudolabeled":
            self.ssl_steps.append(event["iteration"])
            if self.phase == "computing":
                self.phase = "ssl_step"

    def start(self, doc: dict) -> None:
        self.space, self.source, self.cfg, self.expert_spec = from_run_config(doc)
        self.created_at = _utcnow()
        (self.directory / "run_config.json").write_text(json.dumps(doc, sort_keys=True))
        (self.directory / "meta.json").write_text(json.dumps(
            {"session_id": self.session_id, "created_at": self.created_at},
            sort_keys=True))
        self.gen = drive(self.space, self.source, self.cfg,
                         expert_spec=self.expert_spec, sink=self._sink)
        self._step(None)

    def load(self) -> None:
        doc = json.loads((self.directory / "run_config.json").read_text())
        meta = json.loads((self.directory / "meta.json").read_text())
        self.created_at = meta["created_at"]
        self.space, self.source, self.cfg, self.expert_spec = from_run_config(doc)
        recorded = self.log.read()
        self._verify_against = recorded
        self._verify_cursor = 0
        gen, parked = refold(self.space, self.source, self.cfg, recorded,
                             expert_spec=self.expert_spec, sink=self._sink)
        if self._verify_cursor < len(recorded):
            raise RuntimeError(
                f"refold produced {self._verify_cursor} of {len(recorded)} "
                f"persisted records")
        self._verify_against = []
        if gen is None:
            self.gen = None
            self._finish(parked)
        else:
            self.gen = gen
            self._issue(parked)

    # -- state machine ------------------------------------------------------

    def _issue(self, batch: QueryBatch) -> None:
        self.batch = batch
        self.answers = {}
        self.issued_at = _utcnow()
        self.phase = "awaiting_labels"

    def _finish(self, result) -> None:
        self.result = result
        self.batch = None
        self.answers = {}
        self.phase = "done"

    def _step(self, answers: Sequence[ExpertAnswer] | None) -> None:
        """Advance the generator one batch; call with the lock held."""
        self.phase = "computing"
        self.batch = None
        try:
            if answers is None:
                batch = next(self.gen)
            else:
                batch = self.gen.send(answers)
        except StopIteration as stop:
            self._finish(stop.value)
        except Exception as exc:
            self.phase = "failed"
            self.error = f"{type(exc).__name__}: {exc}"
            raise
        else:
            self._issue(batch)

    def _collect_answers(self) -> list[ExpertAnswer]:
        out = []
        for query_id in self.batch.query_ids:
            a = self.answers[query_id]
            out.append(ExpertAnswer(label=a["label"], abstained=a["abstained"]))
        return out

    # -- operations ---------------------------------------------------------

    def submit(self, query_id: str, answer: str) -> dict:
        with self.lock:
            if self.phase == "done":
                raise HTTPException(409, "session is done; no labels expected")
            if self.phase in ("computing", "ssl_step"):
                raise HTTPException(409, "batch in progress; poll status")
            if self.batch is None or query_id not in self.batch.query_ids:
                raise HTTPException(404, f"unknown query {query_id!r}")
            if answer not in ANSWER_LABELS and answer != "cannot_tell":
                raise HTTPException(400, f"unknown answer {answer!r}")
            previous = self.answers.get(query_id)
            if previous is not None:
                if previous["answer"] == answer:
                    return self._ack(query_id, duplicate=True)
                raise HTTPException(
                    409, f"query {query_id} already answered {previous['answer']!r}")
            self.answers[query_id] = {
                "answer": answer,
                "label": ANSWER_LABELS.get(answer),
                "abstained": answer == "cannot_tell",
            }
            if len(self.answers) == len(self.batch.query_ids):
                collected = self._collect_answers()
                self.phase = "computing"
                worker = threading.Thread(target=self._advance_worker,
                                          args=(collected,), daemon=True)
                worker.start()
            return self._ack(query_id, duplicate=False)

    def _advance_worker(self, answers: list[ExpertAnswer]) -> None:
        with self.lock:
            try:
                self._step(answers)
            except Exception:
                pass  # phase/error already record the failure

    def _ack(self, query_id: str, duplicate: bool) -> dict:
        return {
            "session_id": self.session_id,
            "query_id": query_id,
            "status": "duplicate" if duplicate else "recorded",
            "answered": len(self.answers),
            "expected": 0 if self.batch is None else len(self.batch.query_ids),
            "phase": self.phase,
        }

    def auto_advance(self, batches: int) -> dict:
        """Answer pending batches with the configured simulated expert."""
        with self.lock:
            if self.expert_spec is None:
                raise HTTPException(409, "session has no simulated expert configured")
            truth = None
            done_batches = 0
            while done_batches < batches and self.phase == "awaiting_labels":
                batch = self.batch
                expert = SimulatedExpert(ExpertSpec(
                    accuracy=self.expert_spec.accuracy,
                    abstain_prob=self.expert_spec.abstain_prob,
                    seed=_derive(self.expert_spec.seed, "advance", batch.iteration),
                    latency=self.expert_spec.latency,
                ))
                if truth is None:
                    truth = make_oracle(self.space, self.source, self.cfg.budgets)
                answers = []
                for pair in batch.pairs:
                    label = label_from_measurements(
                        truth.true_performance(batch.endpoints[pair.left_id]),
                        truth.true_performance(batch.endpoints[pair.right_id]))
                    answers.append(expert.label(label))
                self._step(answers)
                done_batches += 1
            return {"session_id": self.session_id, "batches": done_batches,
                    "phase": self.phase}

    # -- views ---------------------------------------------------------------

    def status(self) -> dict:
        batch = self.batch
        result = self.result
        labels_used = 0
        iteration = 0
        if result is not None:
            labels_used = result.labels_used
            iteration = result.iterations
        elif batch is not None:
            labels_used = batch.labels_used
            iteration = batch.iteration
        view = {
            "session_id": self.session_id,
            "phase": self.phase,
            "created_at": self.created_at,
            "variant": self.cfg.variant if self.cfg else None,
            "Q": self.cfg.Q if self.cfg else None,
            "q": self.cfg.q if self.cfg else None,
            "labels_used": labels_used,
            "iteration": iteration,
            "pending": 0 if batch is None else len(batch.query_ids) - len(self.answers),
            "error": self.error,
            "ca_history": list(self.ca_history),
            "ssl_steps": list(self.ssl_steps),
            "last_batch": list(self.last_batch),
        }
        if result is not None:
            view.update({
                "flags": list(result.flags),
                "pseudolabels": result.pseudolabels_added,
                "abstentions": result.abstentions,
                "sim_cost": result.sim_cost,
                "ca": None if result.metrics is None else result.metrics.ca,
                "ra": None if result.metrics is None else result.metrics.ra,
            })
        return view

    def pending_queries(self) -> list[dict]:
        with self.lock:
            batch = self.batch
            if batch is None or self.phase != "awaiting_labels":
                return []
            names = [p.name for p in self.space.parameters]
            out = []
            for query_id, pair in zip(batch.query_ids, batch.pairs):
                if query_id in self.answers:
                    continue
                left = batch.endpoints[pair.left_id]
                right = batch.endpoints[pair.right_id]
                lvals = dict(zip(names, left.values))
                rvals = dict(zip(names, right.values))
                out.append({
                    "query_id": query_id,
                    "iteration": batch.iteration,
                    "issued_at": self.issued_at,
                    "left": {"id": left.id, "values": lvals},
                    "right": {"id": right.id, "values": rvals},
                    "differing": [n for n in names if lvals[n] != rvals[n]],
                })
            return out

    def export_model(self) -> dict:
        with self.lock:
            if self.phase != "done":
                raise HTTPException(409, f"session is {self.phase}, not done")
            model = self.result.model
            if not isinstance(model, svm.ComparatorModel):
                raise HTTPException(409, "session ended on a fallback model; "
                                         "nothing exportable")
            metrics = self.result.metrics
            return {
                "session_id": self.session_id,
                "model": svm.serialize_model(model),
                "ca": None if metrics is None else metrics.ca,
                "ra": None if metrics is None else metrics.ra,
            }


class SessionRegistry:
    def __init__(self, data_dir: str):
        self.data_dir = pathlib.Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, SessionHandle] = {}
        self._lock = threading.Lock()

    def create(self, doc: dict) -> SessionHandle:
        session_id = uuid.uuid4().hex[:12]
        directory = self.data_dir / session_id
        directory.mkdir()
        handle = SessionHandle(session_id, directory)
        try:
            handle.start(doc)
        except (ValidationError, ValueError, TypeError, KeyError) as exc:
            raise HTTPException(400, f"invalid run config: {exc}") from exc
        with self._lock:
            self._sessions[session_id] = handle
        return handle

    def get(self, session_id: str) -> SessionHandle:
        with self._lock:
            handle = self._sessions.get(session_id)
        if handle is not None:
            return handle
        directory = self.data_dir / session_id
        if not (directory / "run_config.json").exists():
            raise HTTPException(404, f"unknown session {session_id!r}")
        handle = SessionHandle(session_id, directory)
        handle.load()
        with self._lock:
            # a racing load may have beaten us; keep the first one
            existing = self._sessions.get(session_id)
            if existing is not None:
                return existing
            self._sessions[session_id] = handle
        return handle

    def listing(self) -> list[dict]:
        with self._lock:
            loaded = dict(self._sessions)
        rows = []
        for directory in sorted(self.data_dir.iterdir()):
            if not (directory / "run_config.json").exists():
                continue
            sid = directory.name
            if sid in loaded:
                rows.append({"session_id": sid, "phase": loaded[sid].phase,
                             "created_at": loaded[sid].created_at})
            else:
                meta = json.loads((directory / "meta.json").read_text())
                rows.append({"session_id": sid, "phase": "suspended",
                             "created_at": meta["created_at"]})
        return rows


class SubmitBody(BaseModel):
    query_id: str
    answer: str = Field(pattern="^(left_better|right_better|cannot_tell)$")


class AdvanceBody(BaseModel):
    batches: int = Field(default=1, ge=1, le=1000)


def create_app(data_dir: str) -> FastAPI:
    app = FastAPI(title="pairtune session service")
    # the labeling console is a static page served from any origin (often
    # file:// or another port); the API must answer cross-origin requests
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    registry = SessionRegistry(data_dir)
    app.state.registry = registry

    @app.post("/sessions", status_code=201)
    def create_session(doc: dict):
        handle = registry.create(doc)
        return {"session_id": handle.session_id, "phase": handle.phase,
                "created_at": handle.created_at}

    @app.get("/sessions")
    def list_sessions():
        return registry.listing()

    @app.get("/sessions/{session_id}")
    def get_status(session_id: str):
        return registry.get(session_id).status()

    @app.get("/sessions/{session_id}/queries")
    def get_queries(session_id: str):
        return registry.get(session_id).pending_queries()

    @app.post("/sessions/{session_id}/labels")
    def submit_label(session_id: str, body: SubmitBody):
        return registry.get(session_id).submit(body.query_id, body.answer)

    @app.post("/sessions/{session_id}/advance")
    def advance(session_id: str, body: AdvanceBody | None = None):
        batches = 1 if body is None else body.batches
        return registry.get(session_id).auto_advance(batches)

    @app.get("/sessions/{session_id}/model")
    def export_model(session_id: str):
        return registry.get(session_id).export_model()

    return app


def serve(data_dir: str, host: str = "127.0.0.1", port: int = 8787) -> None:
    import uvicorn

    uvicorn.run(create_app(data_dir), host=host, port=port, log_level="warning")

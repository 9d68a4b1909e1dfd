"""HTTP API for the operator console: model state, evidence, what-if, reports.

Single-session, in-memory state guarded by one lock; committed events are
appended to an on-disk log (JSON lines) and replayed on startup, so the state
after N commits equals the state after a restart.  Every response carries the
revision it was computed at; conditional writes reject stale revisions.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .engine import (
    AssessmentError,
    EngineError,
    RiskEngine,
    SecurityEvent,
    UnknownSubjectError,
)

__all__ = ["create_app"]


class _Session:
    def __init__(self, engine: RiskEngine, persist_path: str | None):
        self.engine = engine
        self.persist_path = Path(persist_path) if persist_path else None
        self.revision = 0
        self.lock = threading.RLock()
        self._report = None
        if self.persist_path and self.persist_path.exists():
            with open(self.persist_path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    raw = json.loads(line)
                    raw.pop("id", None)
                    engine.apply_event(SecurityEvent.from_dict(raw))

    def report(self):
        if self._report is None:
            self._report = self.engine.assess()
        return self._report

    def commit(self, events: list[SecurityEvent]) -> list[int]:
        ids = [self.engine.apply_event(e) for e in events]
        try:
            self._report = self.engine.assess()
        except AssessmentError:
            # roll the log back; an impossible committed state would wedge the session
            for eid in ids:
                self.engine.remove_event(eid)
            raise
        self.revision += 1
        self._persist_all()
        return ids

    def retract(self, event_id: int) -> None:
        event = self.engine.remove_event(event_id)
        try:
            self._report = self.engine.assess()
        except AssessmentError:
            self.engine.events.append((event_id, event))
            self.engine.events.sort(key=lambda pair: pair[0])
            raise
        self.revision += 1
        self._persist_all()

    def _persist_all(self) -> None:
        if not self.persist_path:
            return
        lines = [
            json.dumps({"id": eid, **event.to_dict()}) for eid, event in self.engine.events
        ]
        self.persist_path.write_text("\n".join(lines) + ("\n" if lines else ""))


def _parse_events(body) -> list[SecurityEvent]:
    if isinstance(body, dict) and "events" in body:
        body = body["events"]
    if isinstance(body, dict):
        body = [body]
    if not isinstance(body, list) or not body:
        raise EngineError("expected an event object or a non-empty list under 'events'")
    return [SecurityEvent.from_dict(e) for e in body]


def create_app(engine: RiskEngine, persist_path: str | None = None, console_dir: str | None = None) -> FastAPI:
    session = _Session(engine, persist_path)
    app = FastAPI(title="bamrisk", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def _bad_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": "schema violation", "detail": exc.errors()})

    def _error(status: int, exc: Exception):
        return JSONResponse(status_code=status, content={"error": str(exc)})

    @app.get("/model")
    def get_model():
        with session.lock:
            tag = engine.tag
            return {
                "revision": session.revision,
                "params": engine.params.to_dict(),
                "autoSilent": engine.auto_silent,
                "topology": {
                    "hosts": [h.id for h in engine.topology.hosts],
                    "subnets": [
                        {"id": name, "hosts": list(members)} for name, members in engine.topology.subnets
                    ],
                    "sourcePriors": engine.bam.priors,
                },
                "tag": {
                    "nodes": list(tag.nodes),
                    "steps": [
                        {
                            "source": s.source,
                            "target": s.target,
                            "type": s.attack_type,
                            "conditionP": s.condition.probability,
                            "sensors": list(s.sensor.member_sensor_ids) if s.sensor else [],
                        }
                        for s in tag.steps
                    ],
                },
                "batNodeCounts": {b.source: b.n for b in engine.bam.bats},
            }

    @app.get("/risk")
    def get_risk():
        with session.lock:
            try:
                report = session.report()
            except AssessmentError as exc:
                return _error(422, exc)
            return {"revision": session.revision, "report": report.to_dict()}

    @app.get("/events")
    def get_events():
        with session.lock:
            return {
                "revision": session.revision,
                "events": [{"id": eid, **event.to_dict()} for eid, event in engine.events],
            }

    @app.post("/events")
    async def post_events(request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError as exc:
            return _error(400, exc)
        with session.lock:
            if isinstance(body, dict) and body.get("ifRevision") is not None:
                if body["ifRevision"] != session.revision:
                    return JSONResponse(
                        status_code=409,
                        content={"error": "stale revision", "revision": session.revision},
                    )
            try:
                events = _parse_events(body)
            except EngineError as exc:
                return _error(400, exc)
            try:
                ids = session.commit(events)
            except UnknownSubjectError as exc:
                return _error(404, exc)
            except AssessmentError as exc:
                return _error(422, exc)
            except EngineError as exc:
                return _error(400, exc)
            return {
                "revision": session.revision,
                "eventIds": ids,
                "report": session.report().to_dict(),
            }

    @app.post("/whatif")
    async def post_whatif(request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError as exc:
            return _error(400, exc)
        with session.lock:
            try:
                events = _parse_events(body)
            except EngineError as exc:
                return _error(400, exc)
            try:
                report = engine.assess(extra_events=events)
            except UnknownSubjectError as exc:
                return _error(404, exc)
            except AssessmentError as exc:
                return _error(422, exc)
            except EngineError as exc:
                return _error(400, exc)
            return {"revision": session.revision, "report": report.to_dict(), "committed": False}

    @app.delete("/events/{event_id}")
    def delete_event(event_id: int):
        with session.lock:
            try:
                session.retract(event_id)
            except UnknownSubjectError as exc:
                return _error(404, exc)
            except AssessmentError as exc:
                return _error(422, exc)
            return {"revision": session.revision, "report": session.report().to_dict()}

    @app.get("/bats/{source}/explain")
    def explain(source: str):
        with session.lock:
            if source not in engine.tag.nodes:
                return _error(404, KeyError(f"unknown attack source {source!r}"))
            try:
                detail = engine.explain(source)
            except AssessmentError as exc:
                return _error(422, exc)
            return {"revision": session.revision, "source": source, "assets": detail}

    if console_dir and Path(console_dir).is_dir():
        app.mount("/", StaticFiles(directory=console_dir, html=True), name="console")

    return app

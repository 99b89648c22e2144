"""HTTP session service: the query loop behind a small JSON API.

Sessions live in memory with idle eviction; each one is guarded by a lock so
answer posts apply exactly once.  The service also exposes instance metadata
(including grid layouts) and optionally serves the static UI bundle.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .benchmarks import (
    BenchmarkInstance,
    InstanceFormatError,
    deserialize,
    fixtures,
    instance_from_obj,
    instance_to_obj,
    query_prompt,
)
from .mdp import NoisyRationalPlanning, OptimalPlanning
from .query import (
    AnswerMismatch,
    IllegalState,
    OracleAnswer,
    QueryKind,
    QuerySession,
    SessionStatus,
    start_session,
    step,
)

SESSION_TTL_S = 3600.0


def load_instance_dir(path: str | Path) -> dict[str, BenchmarkInstance]:
    instances = {}
    for file in sorted(Path(path).glob("*.json")):
        instance = deserialize(file.read_text())
        instances[instance.name] = instance
    return instances


@dataclass
class _Entry:
    session: QuerySession
    instance: BenchmarkInstance
    lock: threading.Lock = field(default_factory=threading.Lock)
    touched: float = field(default_factory=time.monotonic)


class SessionStore:
    def __init__(self, ttl_s: float = SESSION_TTL_S):
        self.ttl_s = ttl_s
        self._entries: dict[str, _Entry] = {}
        self._lock = threading.Lock()

    def create(self, entry: _Entry) -> str:
        sid = uuid.uuid4().hex
        with self._lock:
            self._entries[sid] = entry
        return sid

    def get(self, sid: str) -> _Entry | None:
        now = time.monotonic()
        with self._lock:
            expired = [k for k, e in self._entries.items() if now - e.touched > self.ttl_s]
            for k in expired:
                del self._entries[k]
            entry = self._entries.get(sid)
            if entry is not None:
                entry.touched = now
            return entry


def _session_resource(sid: str, entry: _Entry) -> dict:
    session = entry.session
    instance = entry.instance
    states = instance.robot_domain.states
    resource = {
        "id": sid,
        "instance": instance.name,
        "status": session.status.value,
        "iteration": session.iteration,
        "pending": [
            {
                "state": states[s],
                "kind": kind.value,
                "prompt": query_prompt(instance, s, kind),
            }
            for s, kind in session.pending
        ],
        "history": [
            {
                "state": states[rec.state],
                "kind": rec.kind.value,
                "verdict": rec.answer.value,
                "iteration": rec.iteration,
            }
            for rec in session.query_log
        ],
        "candidates": {
            "forbidden": sorted(states[s] for s in session.forbidden_candidates),
            "goal": sorted(states[s] for s in session.goal_candidates),
        },
        "confirmed": {
            "forbidden": sorted(states[s] for s in session.confirmed_forbidden),
            "goal": sorted(states[s] for s in session.confirmed_goal),
        },
        "policy": _policy_view(entry),
    }
    return resource


def _policy_view(entry: _Entry) -> dict | None:
    session = entry.session
    if session.status is not SessionStatus.SOLVED or session.policy is None:
        return None
    dom = entry.instance.robot_domain
    choices = session.policy.choices()
    return {
        "actions": {dom.states[s]: dom.actions[choices[s]] for s in range(dom.num_states)},
        "occupancy": {
            dom.states[s]: session.occupancy.state_mass(s) for s in range(dom.num_states)
        },
    }


def _error(status_code: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status_code, content={"error": message})


def create_app(
    instances: dict[str, BenchmarkInstance] | None = None,
    session_ttl_s: float = SESSION_TTL_S,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    catalogue = dict(fixtures())
    if instances:
        catalogue.update(instances)
    store = SessionStore(session_ttl_s)

    app = FastAPI(title="expalign query service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/api/instances")
    def list_instances():
        out = []
        for name, inst in sorted(catalogue.items()):
            meta = {"name": name, "states": inst.robot_domain.num_states}
            if inst.layout is not None:
                meta["width"] = inst.layout.width
                meta["height"] = inst.layout.height
            out.append(meta)
        return out

    @app.get("/api/instances/{name}")
    def get_instance(name: str):
        if name not in catalogue:
            return _error(404, f"unknown instance {name!r}")
        return instance_to_obj(catalogue[name])

    @app.post("/api/sessions", status_code=201)
    async def create_session(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(422, "request body must be JSON")
        if not isinstance(body, dict) or "instance" not in body:
            return _error(422, "body must carry an 'instance' field")
        spec = body["instance"]
        if isinstance(spec, str):
            if spec not in catalogue:
                return _error(404, f"unknown instance {spec!r}")
            instance = catalogue[spec]
        elif isinstance(spec, dict):
            try:
                instance = instance_from_obj(spec)
            except InstanceFormatError as exc:
                return _error(422, f"bad inline instance: {exc}")
        else:
            return _error(422, "'instance' must be a name or an inline instance object")

        planning = body.get("planning", "optimal")
        if planning == "optimal":
            plan = OptimalPlanning()
        elif isinstance(planning, dict) and "noisy" in planning:
            try:
                plan = NoisyRationalPlanning(float(planning["noisy"]))
            except (TypeError, ValueError):
                return _error(422, "'noisy' threshold must be a number")
        else:
            return _error(422, "'planning' must be \"optimal\" or {\"noisy\": threshold}")

        try:
            session = start_session(
                instance.human_domain,
                instance.reward,
                instance.robot_domain,
                plan,
                instance_name=instance.name,
            )
        except ValueError as exc:
            return _error(422, str(exc))
        entry = _Entry(session, instance)
        sid = store.create(entry)
        return _session_resource(sid, entry)

    @app.get("/api/sessions/{sid}")
    def get_session(sid: str):
        entry = store.get(sid)
        if entry is None:
            return _error(404, "unknown session")
        with entry.lock:
            return _session_resource(sid, entry)

    @app.post("/api/sessions/{sid}/answers")
    async def post_answers(sid: str, request: Request):
        entry = store.get(sid)
        if entry is None:
            return _error(404, "unknown session")
        try:
            body = await request.json()
        except Exception:
            return _error(422, "request body must be JSON")
        if not isinstance(body, dict) or not isinstance(body.get("answers"), list):
            return _error(422, "body must carry an 'answers' list")

        dom = entry.instance.robot_domain
        answers: dict[tuple[int, QueryKind], OracleAnswer] = {}
        for item in body["answers"]:
            if not isinstance(item, dict):
                return _error(422, "each answer must be an object")
            try:
                state = dom.state_index(str(item.get("state")))
                kind = QueryKind(str(item.get("kind")))
                verdict = OracleAnswer(str(item.get("verdict")))
            except (KeyError, ValueError):
                return _error(422, f"malformed answer entry: {item}")
            if (state, kind) in answers:
                return _error(422, f"duplicate answer for {item.get('state')}")
            answers[(state, kind)] = verdict

        with entry.lock:
            try:
                step(entry.session, answers)
            except IllegalState as exc:
                return _error(409, str(exc))
            except AnswerMismatch as exc:
                return _error(422, str(exc))
            return _session_resource(sid, entry)

    @app.get("/api/sessions/{sid}/policy")
    def get_policy(sid: str):
        entry = store.get(sid)
        if entry is None:
            return _error(404, "unknown session")
        with entry.lock:
            view = _policy_view(entry)
            if view is None:
                return _error(409, f"session is {entry.session.status.value}, not solved")
            return view

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app

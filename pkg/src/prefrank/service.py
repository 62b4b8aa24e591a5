"""HTTP/JSON service exposing net validation, elicitation sessions, and
feedback rounds.

Sessions live in process memory; with a snapshot directory configured, every
mutation is written through as a JSON snapshot and sessions are replayed from
disk on startup (solving is deterministic, so a replayed session is
byte-identical).  Requests to one session are serialized by a per-session
lock; different sessions run concurrently.
"""

from __future__ import annotations

import glob
import json
import os
import threading
import time
from dataclasses import dataclass, field
from importlib import metadata

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import compiler, ranking, session as sessions
from .model import NetValidationError, check_acyclic, parse_net

try:
    VERSION = metadata.version("prefrank")
except metadata.PackageNotFoundError:  # running from a source tree
    VERSION = "0.0.0-dev"


@dataclass
class ServiceConfig:
    snapshot_dir: str | None = None
    items_dir: str | None = None  # allow-list root for items_ref
    default_k: int = 10
    round_cap: int = sessions.ROUND_CAP
    static_dir: str | None = None  # built web client, when present


@dataclass
class _Store:
    config: ServiceConfig
    sessions: dict[str, sessions.Session] = field(default_factory=dict)
    meta: dict[str, float] = field(default_factory=dict)  # created_at
    locks: dict[str, threading.Lock] = field(default_factory=dict)
    registry_lock: threading.Lock = field(default_factory=threading.Lock)

    def add(self, sess: sessions.Session, created_at: float | None = None) -> None:
        with self.registry_lock:
            self.sessions[sess.session_id] = sess
            self.meta[sess.session_id] = created_at or time.time()
            self.locks[sess.session_id] = threading.Lock()

    def lock_for(self, session_id: str) -> threading.Lock | None:
        with self.registry_lock:
            return self.locks.get(session_id)

    def snapshot_path(self, session_id: str) -> str | None:
        if not self.config.snapshot_dir:
            return None
        return os.path.join(self.config.snapshot_dir, f"session_{session_id}.json")

    def persist(self, sess: sessions.Session) -> None:
        path = self.snapshot_path(sess.session_id)
        if not path:
            return
        os.makedirs(os.path.dirname(path), exist_ok=True)
        doc = sessions.to_snapshot(sess)
        doc["created_at"] = self.meta[sess.session_id]
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)

    def restore(self) -> None:
        if not self.config.snapshot_dir:
            return
        for path in sorted(glob.glob(os.path.join(self.config.snapshot_dir, "session_*.json"))):
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
            sess = sessions.replay_snapshot(doc)
            self.add(sess, created_at=doc.get("created_at"))


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "detail": message})


def _topk_payload(sess: sessions.Session) -> list[dict]:
    scores = dict(ranking.top_k(sess.current_v, sess.items, sess.k))
    return [
        {"id": item_id, "rank": rank + 1, "debug_scores": str(scores[item_id])}
        for rank, item_id in enumerate(sess.displayed)
    ]


def _round_payload(sess: sessions.Session) -> dict:
    return {
        "session_id": sess.session_id,
        "topk": _topk_payload(sess),
        "status": sess.status,
        "round": len(sess.rounds),
        "relaxation_applied": sess.rounds[-1].relaxation_applied,
    }


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    store = _Store(config=config)
    store.restore()
    app = FastAPI(title="prefrank", version=VERSION)

    @app.get("/api/health")
    def health():
        return {"status": "ok", "version": VERSION}

    @app.post("/api/nets/validate")
    async def validate_net(request: Request):
        try:
            doc = json.loads(await request.body())
        except json.JSONDecodeError as exc:
            return _error(400, "MalformedJson", str(exc))
        if not isinstance(doc, dict):
            return _error(400, "MalformedJson", "net document must be an object")
        try:
            net = parse_net(doc)
        except NetValidationError as exc:
            return {
                "valid": False,
                "acyclic": False,
                "diagnostics": [{"code": d.code, "message": d.message} for d in exc.diagnostics],
            }
        report = check_acyclic(net)
        diagnostics = []
        if not report.acyclic:
            diagnostics.append(
                {"code": "SemiDirectedCycle", "message": f"cycle through {list(report.witness)}"}
            )
        return {"valid": True, "acyclic": report.acyclic, "diagnostics": diagnostics}

    @app.post("/api/sessions", status_code=201)
    async def create_session(request: Request):
        try:
            body = json.loads(await request.body())
        except json.JSONDecodeError as exc:
            return _error(400, "MalformedJson", str(exc))
        try:
            net = parse_net(body["net"])
        except KeyError:
            return _error(400, "SchemaError", "body needs a 'net' field")
        except NetValidationError as exc:
            return _error(400, "InvalidNet", str(exc))
        k = body.get("k", config.default_k)
        if not isinstance(k, int) or k < 2:
            return _error(400, "SchemaError", "k must be an integer >= 2")
        try:
            if "items" in body:
                items = ranking.load_items_json(body["items"], net, provenance="inline")
            elif "items_ref" in body:
                items = _load_items_ref(body["items_ref"], net, config)
            else:
                return _error(400, "SchemaError", "body needs 'items' or 'items_ref'")
        except ranking.ItemError as exc:
            return _error(400, exc.code, str(exc))
        except FileNotFoundError as exc:
            return _error(400, "UnknownItemsRef", str(exc))
        try:
            sess = sessions.start_session(
                net,
                items,
                hard=body.get("hard") or {},
                k=k,
                round_cap=config.round_cap,
            )
        except sessions.EmptyItemSet as exc:
            return _error(422, "EmptyItemSet", str(exc))
        except sessions.BaseSystemInfeasible as exc:
            return _error(
                422,
                "BaseSystemInfeasible",
                "the preference statements are inconsistent; "
                f"conflict hints: {[str(c) for c in exc.conflict[:6]]}",
            )
        except compiler.NetNotAcyclic as exc:
            return _error(422, "NetNotAcyclic", str(exc))
        except ranking.ItemError as exc:
            return _error(400, exc.code, str(exc))
        store.add(sess)
        store.persist(sess)
        return _round_payload(sess)

    @app.post("/api/sessions/{session_id}/feedback")
    def post_feedback(session_id: str, body: dict):
        lock = store.lock_for(session_id)
        if lock is None:
            return _error(404, "UnknownSession", session_id)
        chosen = body.get("chosen")
        if not isinstance(chosen, str):
            return _error(400, "SchemaError", "body needs a 'chosen' item id")
        with lock:
            sess = store.sessions[session_id]
            try:
                sessions.feedback(sess, chosen)
            except sessions.NotActive as exc:
                return _error(409, "NotActive", str(exc))
            except sessions.ChosenNotDisplayed as exc:
                return _error(422, "ChosenNotDisplayed", str(exc))
            store.persist(sess)
            return _round_payload(sess)

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        lock = store.lock_for(session_id)
        if lock is None:
            return _error(404, "UnknownSession", session_id)
        with lock:
            sess = store.sessions[session_id]
            doc = sessions.to_snapshot(sess)
            doc["created_at"] = store.meta[session_id]
            doc["topk"] = _topk_payload(sess)
            return doc

    if config.static_dir and os.path.isdir(config.static_dir):
        app.mount("/", StaticFiles(directory=config.static_dir, html=True), name="ui")

    return app


def _load_items_ref(ref: str, net, config: ServiceConfig) -> ranking.ItemTable:
    if not config.items_dir:
        raise FileNotFoundError("no items directory configured")
    path = os.path.realpath(os.path.join(config.items_dir, ref))
    root = os.path.realpath(config.items_dir)
    if not path.startswith(root + os.sep):
        raise FileNotFoundError(f"items_ref {ref!r} escapes the items directory")
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no such items file: {ref!r}")
    return ranking.load_items(path, net)

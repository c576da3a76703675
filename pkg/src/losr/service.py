"""HTTP service exposing interactive parsing sessions.

Each session owns a scene; commands run the full pipeline against it and
commit the resulting world on success.  Sessions live in memory, are
serialized per session, and expire after an idle period.  The app can also
serve a static directory so a browser console and the API share one
process.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import chunker
from .corpus import Artifacts, CommandResult, run_command
from .gss import NoParseError, PRUNED
from .lexicon import OovError
from .planner import AMBIGUOUS, PlannerError, execute_sequence, grounding_map
from .postprocess import (
    SCORED,
    AllParsesRejectedError,
    AnaphoraError,
    NoUniqueParseError,
)
from .trees import deserialize, serialize
from .world import WorldModel, Shape, scene_from_json, scene_to_json, scenes_equal

DEFAULT_IDLE_SECONDS = 3600.0

# One of everything the console demos: a prism on a cube, a two-cube stack
# and a lone red cube to pick up.
DEMO_SCENE = WorldModel(8, frozenset([
    Shape("cube", "white", 2, 2, 0),
    Shape("prism", "cyan", 2, 2, 1),
    Shape("cube", "blue", 5, 5, 0),
    Shape("cube", "green", 5, 5, 1),
    Shape("cube", "red", 1, 6, 0),
    Shape("cube", "yellow", 6, 1, 0),
]))


class SessionRequest(BaseModel):
    scene: Optional[dict] = None


class CommandRequest(BaseModel):
    text: str


@dataclass
class HistoryEntry:
    text: str
    losr: str
    world_before: WorldModel


@dataclass
class Session:
    session_id: str
    initial: WorldModel
    world: WorldModel
    history: list = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_used: float = field(default_factory=time.monotonic)


class ServiceError(Exception):
    """Carries an HTTP status and the error body the API returns."""

    def __init__(self, status: int, code: str, message: str, category: str,
                 detail: Optional[dict] = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.category = category
        self.detail = detail

    def body(self) -> dict:
        payload = {"code": self.code, "message": self.message, "category": self.category}
        if self.detail:
            payload["detail"] = self.detail
        return payload


def classify_failure(exc: Exception, world: WorldModel) -> ServiceError:
    """Map a pipeline exception to a distinct response code.

    An all-rejected forest where some candidate died on an ambiguity gets
    the ambiguous code along with that candidate's groundings, so a client
    can highlight the competing referents.
    """
    if isinstance(exc, OovError):
        return ServiceError(422, "oov", str(exc), "lexicon",
                            {"phrase": exc.phrase, "feature": exc.feature})
    if isinstance(exc, (NoParseError, chunker.ChunkError)):
        return ServiceError(422, "no-parse", str(exc), "parser")
    if isinstance(exc, NoUniqueParseError):
        return ServiceError(422, "ambiguous", str(exc), "scoring")
    if isinstance(exc, AnaphoraError):
        return ServiceError(422, "all-rejected", str(exc), "anaphora")
    if isinstance(exc, AllParsesRejectedError):
        ambiguous = [p for p in exc.parses
                     if isinstance(p.failure, PlannerError) and p.failure.code == AMBIGUOUS]
        if ambiguous:
            parse = ambiguous[0]
            detail = dict(parse.failure.details)
            detail["groundings"] = grounding_entries(parse.tree, world)
            return ServiceError(422, "ambiguous", str(parse.failure), "planner", detail)
        failures = [{"losr": p.tree.text,
                     "code": getattr(p.failure, "code", "error"),
                     "message": str(p.failure)}
                    for p in exc.parses]
        category = ("anaphora"
                    if any(isinstance(p.failure, AnaphoraError) for p in exc.parses)
                    else "planner")
        return ServiceError(422, "all-rejected", str(exc), category, {"failures": failures})
    if isinstance(exc, PlannerError):
        return ServiceError(422, "all-rejected", str(exc), "planner", exc.details or None)
    raise exc


def grounding_entries(tree, world: WorldModel) -> list:
    """Entity paths with their candidate referents as JSON dicts."""
    entries = []
    for path, groundings in sorted(grounding_map(tree, world).items()):
        entries.append({"path": list(path),
                        "candidates": [g.describe() for g in groundings]})
    return entries


def command_payload(text: str, result: CommandResult, world_before: WorldModel) -> dict:
    chosen = result.selection.chosen
    verified = [p for p in result.selection.parses if p.verified]
    return {
        "text": text,
        "tokens": list(result.tokens),
        "chunks": [{"phrase": c.phrase, "feature": c.feature,
                    "start": c.start, "end": c.end} for c in result.chunks],
        "losr": chosen.tree.text,
        "losrPretty": serialize(chosen.tree, pretty=True),
        "score": chosen.score,
        "tie": chosen.tie,
        "forestSize": len(result.forest.trees),
        "parses": [{"losr": p.tree.text, "score": p.score} for p in verified],
        "groundings": grounding_entries(chosen.tree, world_before),
        "scene": scene_to_json(result.world_after),
    }


class SessionStore:
    def __init__(self, initial_scene: WorldModel, idle_seconds: float):
        self.initial_scene = initial_scene
        self.idle_seconds = idle_seconds
        self.sessions: dict = {}
        self.lock = threading.Lock()

    def create(self, scene: Optional[WorldModel]) -> Session:
        initial = scene if scene is not None else self.initial_scene
        session = Session(uuid.uuid4().hex, initial, initial)
        with self.lock:
            self._expire()
            self.sessions[session.session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self.lock:
            self._expire()
            session = self.sessions.get(session_id)
            if session is None:
                raise ServiceError(404, "unknown-session",
                                   f"no session {session_id!r}", "session")
            session.last_used = time.monotonic()
            return session

    def _expire(self) -> None:
        cutoff = time.monotonic() - self.idle_seconds
        stale = [sid for sid, s in self.sessions.items() if s.last_used < cutoff]
        for sid in stale:
            del self.sessions[sid]


def _check_replay(session: Session) -> None:
    """History replayed from the initial scene must land on the current one."""
    world = session.initial
    for entry in session.history:
        world = execute_sequence(deserialize(entry.losr), world)
    if not scenes_equal(world, session.world):
        raise RuntimeError("session history replay drifted from the live scene")


def _parse_scene(data: Optional[dict]) -> Optional[WorldModel]:
    if data is None:
        return None
    try:
        return scene_from_json(data)
    except (ValueError, KeyError, TypeError) as exc:
        raise ServiceError(400, "bad-scene", f"invalid scene: {exc}", "request")


def create_app(artifacts: Artifacts, initial_scene: Optional[WorldModel] = None,
               static_dir: Optional[str] = None,
               idle_seconds: float = DEFAULT_IDLE_SECONDS) -> FastAPI:
    app = FastAPI(title="losr console service")
    store = SessionStore(initial_scene if initial_scene is not None else DEMO_SCENE,
                         idle_seconds)
    app.state.store = store

    @app.exception_handler(ServiceError)
    def service_error_handler(request: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status, content=exc.body())

    @app.post("/api/session")
    def create_session(body: Optional[SessionRequest] = None):
        scene = _parse_scene(body.scene if body else None)
        session = store.create(scene)
        return {"sessionId": session.session_id, "scene": scene_to_json(session.world)}

    @app.get("/api/session/{session_id}/scene")
    def get_scene(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return scene_to_json(session.world)

    @app.post("/api/session/{session_id}/command")
    def post_command(session_id: str, body: CommandRequest):
        session = store.get(session_id)
        with session.lock:
            world_before = session.world
            try:
                result = run_command(artifacts, world_before, body.text,
                                     mode=PRUNED, selection=SCORED)
            except Exception as exc:  # mapped to a structured body below
                raise classify_failure(exc, world_before)
            session.history.append(HistoryEntry(body.text,
                                                result.selection.chosen.tree.text,
                                                world_before))
            session.world = result.world_after
            _check_replay(session)
            return command_payload(body.text, result, world_before)

    @app.post("/api/session/{session_id}/reset")
    def post_reset(session_id: str):
        session = store.get(session_id)
        with session.lock:
            session.world = session.initial
            session.history.clear()
            return scene_to_json(session.world)

    @app.post("/api/session/{session_id}/undo")
    def post_undo(session_id: str):
        session = store.get(session_id)
        with session.lock:
            if not session.history:
                raise ServiceError(409, "nothing-to-undo", "history is empty", "session")
            entry = session.history.pop()
            session.world = entry.world_before
            return scene_to_json(session.world)

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")

    return app

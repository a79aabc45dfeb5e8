"""HTTP + WebSocket boundary for teacher and supervisor clients.

The runtime serializes operations per session (a second in-flight teacher
turn is rejected as busy), the ticket queue is the only cross-session shared
state, and every mutation is appended to the session log before its event is
pushed, so a restart can rehydrate from the log alone.
"""

from __future__ import annotations

import asyncio
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.requests import Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import serde
from .config import Config
from .dialogue import (
    DialogueEngine,
    Phase,
    SessionState,
    StudentReply,
    apply_supervisor_reply,
    close_session,
    handle_teacher_turn,
    new_session,
)
from .errors import (
    AlreadyClaimed,
    ConfigError,
    EmptyReply,
    NotClaimant,
    SessionClosed,
    SimStudentError,
    UnknownTicket,
    WrongPhase,
)
from .scenario import ScenarioState, load_scenario, state_from_record, state_to_record
from .sessionlog import SessionLogWriter, read_log, replay_log
from .supervisor import TicketQueue

API_ERROR_STATUS = {
    "unknown_session": 404,
    "unknown_ticket": 404,
    "wrong_phase": 409,
    "session_closed": 409,
    "busy": 409,
    "already_claimed": 409,
    "not_claimant": 409,
    "duplicate_ticket": 409,
    "duplicate_survey": 409,
    "duplicate_session": 409,
    "empty_reply": 422,
    "validation": 422,
    "unauthorized": 401,
}


class ApiError(Exception):
    def __init__(self, code: str, message: str, phase: Optional[str] = None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.phase = phase

    def status(self) -> int:
        return API_ERROR_STATUS.get(self.code, 400)

    def body(self) -> dict:
        return {"code": self.code, "message": self.message, "phase": self.phase}


class EventHub:
    """Fan-out of service events to websocket subscribers (at-least-once)."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._subs: dict[int, tuple[asyncio.AbstractEventLoop, asyncio.Queue, Callable[[dict], bool]]] = {}
        self._next_id = 0

    def subscribe(
        self, loop: asyncio.AbstractEventLoop, queue: asyncio.Queue, keep: Callable[[dict], bool]
    ) -> int:
        with self._lock:
            sub_id = self._next_id
            self._next_id += 1
            self._subs[sub_id] = (loop, queue, keep)
            return sub_id

    def unsubscribe(self, sub_id: int) -> None:
        with self._lock:
            self._subs.pop(sub_id, None)

    def publish(self, event: dict) -> None:
        with self._lock:
            subs = list(self._subs.values())
        for loop, queue, keep in subs:
            if keep(event):
                loop.call_soon_threadsafe(queue.put_nowait, event)


@dataclass
class SessionEntry:
    state: SessionState
    lock: threading.Lock = field(default_factory=threading.Lock)


class ServiceRuntime:
    """All mutable service state plus the operations the API exposes."""

    def __init__(
        self,
        engine: DialogueEngine,
        config: Config,
        log_path: str | Path,
        queue: Optional[TicketQueue] = None,
    ):
        self.engine = engine
        self.config = config
        self.queue = queue or TicketQueue(require_claim=config.require_claim, clock=engine.clock)
        self.hub = EventHub()
        self.log = SessionLogWriter(log_path)
        self.sessions: dict[str, SessionEntry] = {}
        self.surveys: dict[str, dict] = {}
        self._registry_lock = threading.Lock()
        self.base_scenario: Optional[ScenarioState] = (
            load_scenario(config.scenario_path) if config.scenario_path else None
        )

    # -- log + event helpers -------------------------------------------------

    def _record(self, record_type: str, session_id: str, payload: dict) -> int:
        seq = self.log.append(record_type, session_id, payload, self.engine.clock())
        return seq

    def _emit(self, event_type: str, session_id: str, seq: int, payload: dict, phase: Phase) -> None:
        self.hub.publish(
            {
                "type": event_type,
                "session_id": session_id,
                "seq": seq,
                "payload": payload,
                "phase": phase.value,
            }
        )

    # -- session registry ----------------------------------------------------

    def _entry(self, session_id: str) -> SessionEntry:
        entry = self.sessions.get(session_id)
        if entry is None:
            raise ApiError("unknown_session", f"no session {session_id}")
        return entry

    def rehydrate(self) -> None:
        """Rebuild sessions, surveys, and unresolved tickets from the log file."""
        if not Path(self.log.path).exists():
            return
        records = read_log(self.log.path)
        if not records:
            return
        replayed = replay_log(records)
        with self._registry_lock:
            for sid, rep in replayed.sessions.items():
                self.sessions[sid] = SessionEntry(state=rep.session)
                if rep.survey is not None:
                    self.surveys[sid] = rep.survey
        self.queue.rehydrate(replayed.unresolved_tickets())
        self.log.seed_sequences(replayed.next_seq)

    # -- operations ------------------------------------------------------------

    def create_session(
        self, scenario_record: Optional[dict] = None, session_id: Optional[str] = None
    ) -> dict:
        sid = session_id or uuid.uuid4().hex[:12]
        scenario: Optional[ScenarioState] = self.base_scenario
        if scenario_record is not None:
            try:
                scenario = state_from_record(scenario_record)
            except ConfigError as exc:
                raise ApiError("validation", f"bad scenario seed: {exc}")
        with self._registry_lock:
            if sid in self.sessions:
                raise ApiError("duplicate_session", f"session {sid} already exists")
            state = new_session(self.engine, sid, scenario)
            self.sessions[sid] = SessionEntry(state=state)
        config_payload = {
            "config": self.config.to_record(),
            "scenario": state_to_record(state.scenario),
        }
        self._record("config", sid, config_payload)
        greeting = state.turns[0]
        seq = self._record("turn", sid, serde.turn_to_record(greeting))
        self._emit("turn", sid, seq, serde.turn_to_record(greeting), state.phase)
        return {
            "session_id": sid,
            "greeting": greeting.text,
            "phase": state.phase.value,
        }

    def post_utterance(self, session_id: str, text: str) -> dict:
        if not isinstance(text, str) or not text.strip():
            raise ApiError("validation", "utterance text must be a non-empty string")
        entry = self._entry(session_id)
        if not entry.lock.acquire(blocking=False):
            raise ApiError("busy", "another teacher turn is in flight for this session")
        try:
            state = entry.state
            try:
                new_state, outcome = handle_teacher_turn(self.engine, state, text)
            except WrongPhase as exc:
                raise ApiError("wrong_phase", str(exc), phase=state.phase.value)
            except SessionClosed as exc:
                raise ApiError("session_closed", str(exc), phase=state.phase.value)
            entry.state = new_state

            teacher_record = serde.turn_to_record(outcome.teacher_turn)
            teacher_seq = self._record("turn", session_id, teacher_record)
            self._emit("turn", session_id, teacher_seq, teacher_record, new_state.phase)

            if isinstance(outcome, StudentReply):
                student_record = serde.turn_to_record(outcome.student_turn)
                seq = self._record("turn", session_id, student_record)
                self._emit("turn", session_id, seq, student_record, new_state.phase)
                return {
                    "outcome": "student_reply",
                    "reply": outcome.text,
                    "teacher_turn": teacher_record,
                    "student_turn": student_record,
                    "phase": new_state.phase.value,
                }

            ticket = outcome.ticket
            self.queue.enqueue(ticket)
            ticket_record = serde.ticket_to_record(ticket)
            seq = self._record("ticket", session_id, ticket_record)
            self._emit("ticket", session_id, seq, ticket_record, new_state.phase)
            self._emit("phase", session_id, seq, {"phase": new_state.phase.value}, new_state.phase)
            return {
                "outcome": "escalated",
                "ticket_id": ticket.ticket_id,
                "teacher_turn": teacher_record,
                "phase": new_state.phase.value,
            }
        finally:
            entry.lock.release()

    def transcript(self, session_id: str, since: int = -1) -> dict:
        entry = self._entry(session_id)
        state = entry.state
        turns = [serde.turn_to_record(t) for t in state.turns if t.turn_id > since]
        return {"turns": turns, "phase": state.phase.value, "session_id": session_id}

    def list_tickets(self) -> list[dict]:
        return [serde.ticket_to_record(t) for t in self.queue.open_tickets()]

    def claim_ticket(self, ticket_id: str, supervisor_id: str) -> dict:
        try:
            ticket = self.queue.claim(ticket_id, supervisor_id)
        except UnknownTicket as exc:
            raise ApiError("unknown_ticket", str(exc))
        except AlreadyClaimed as exc:
            raise ApiError("already_claimed", str(exc))
        record = serde.ticket_to_record(ticket)
        entry = self.sessions.get(ticket.session_id)
        phase = entry.state.phase if entry else Phase.AWAITING_SUPERVISOR
        seq = self._record("ticket", ticket.session_id, record)
        self._emit("ticket", ticket.session_id, seq, record, phase)
        return record

    def resolve_ticket(self, ticket_id: str, supervisor_id: str, reply: str) -> dict:
        try:
            ticket = self.queue.resolve(ticket_id, supervisor_id, reply)
        except UnknownTicket as exc:
            raise ApiError("unknown_ticket", str(exc))
        except NotClaimant as exc:
            raise ApiError("not_claimant", str(exc))
        except EmptyReply as exc:
            raise ApiError("empty_reply", str(exc))

        entry = self._entry(ticket.session_id)
        with entry.lock:
            try:
                new_state, turn = apply_supervisor_reply(
                    self.engine, entry.state, ticket_id, reply
                )
            except (WrongPhase, UnknownTicket) as exc:
                # The queue won the race but the session moved on; surface it.
                raise ApiError("wrong_phase", str(exc), phase=entry.state.phase.value)
            entry.state = new_state

        turn_record = serde.turn_to_record(turn)
        seq = self._record("turn", ticket.session_id, turn_record)
        self._emit("turn", ticket.session_id, seq, turn_record, new_state.phase)
        ticket_record = serde.ticket_to_record(ticket)
        seq = self._record("ticket", ticket.session_id, ticket_record)
        self._emit("ticket", ticket.session_id, seq, ticket_record, new_state.phase)
        self._emit(
            "phase", ticket.session_id, seq, {"phase": new_state.phase.value}, new_state.phase
        )
        return {
            "ticket": ticket_record,
            "turn": turn_record,
            "phase": new_state.phase.value,
            "resolution_latency": ticket.resolution_latency,
        }

    def submit_survey(self, session_id: str, answers: Any, role: Any) -> dict:
        entry = self._entry(session_id)
        if (
            not isinstance(answers, list)
            or len(answers) != 6
            or not all(isinstance(a, int) and 1 <= a <= 5 for a in answers)
        ):
            raise ApiError("validation", "survey needs exactly six integer answers in 1..5")
        if role not in ("teacher", "supervisor"):
            raise ApiError("validation", f"unknown respondent role {role!r}")
        with entry.lock:
            state = entry.state
            if session_id in self.surveys:
                raise ApiError("duplicate_survey", "survey already submitted for this session")
            if state.phase is Phase.CLOSED:
                raise ApiError("session_closed", "session already closed")
            if state.phase is Phase.AWAITING_SUPERVISOR:
                raise ApiError(
                    "wrong_phase",
                    "resolve the open ticket before closing the session",
                    phase=state.phase.value,
                )
            payload = {
                "session_id": session_id,
                "answers": list(answers),
                "role": role,
                "questions": list(self.config.survey_questions),
            }
            self.surveys[session_id] = payload
            entry.state = close_session(state)
        seq = self._record("survey", session_id, payload)
        self._emit("survey", session_id, seq, payload, Phase.CLOSED)
        self._emit("phase", session_id, seq, {"phase": Phase.CLOSED.value}, Phase.CLOSED)
        return {"stored": True, "phase": Phase.CLOSED.value}

    # -- websocket snapshots ---------------------------------------------------

    def session_snapshot_events(self, session_id: str) -> list[dict]:
        entry = self._entry(session_id)
        state = entry.state
        events = []
        for turn in state.turns:
            events.append(
                {
                    "type": "turn",
                    "session_id": session_id,
                    "seq": turn.turn_id,
                    "payload": serde.turn_to_record(turn),
                    "phase": state.phase.value,
                    "snapshot": True,
                }
            )
        events.append(
            {
                "type": "phase",
                "session_id": session_id,
                "seq": len(state.turns),
                "payload": {"phase": state.phase.value},
                "phase": state.phase.value,
                "snapshot": True,
            }
        )
        return events

    def queue_snapshot_events(self) -> list[dict]:
        events = []
        for i, ticket in enumerate(self.queue.open_tickets()):
            events.append(
                {
                    "type": "ticket",
                    "session_id": ticket.session_id,
                    "seq": i,
                    "payload": serde.ticket_to_record(ticket),
                    "phase": Phase.AWAITING_SUPERVISOR.value,
                    "snapshot": True,
                }
            )
        return events


def require_supervisor(runtime: ServiceRuntime, token: Optional[str]) -> None:
    expected = runtime.config.supervisor_token
    if expected and token != expected:
        raise ApiError("unauthorized", "bad or missing supervisor token")


def create_app(runtime: ServiceRuntime, ui_dir: Optional[str | Path] = None) -> FastAPI:
    app = FastAPI(title="simstudent", version="0.1.0")

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(status_code=exc.status(), content=exc.body())

    @app.exception_handler(SimStudentError)
    async def _domain_error(_request: Request, exc: SimStudentError) -> JSONResponse:
        return JSONResponse(
            status_code=400, content={"code": "error", "message": str(exc), "phase": None}
        )

    @app.post("/api/sessions")
    def create_session(body: Optional[dict] = None) -> dict:
        body = body or {}
        return runtime.create_session(
            scenario_record=body.get("scenario"), session_id=body.get("session_id")
        )

    @app.post("/api/sessions/{session_id}/utterances")
    def post_utterance(session_id: str, body: dict) -> dict:
        return runtime.post_utterance(session_id, body.get("text", ""))

    @app.get("/api/sessions/{session_id}/transcript")
    def transcript(session_id: str, since: int = -1) -> dict:
        return runtime.transcript(session_id, since)

    @app.post("/api/sessions/{session_id}/survey")
    def submit_survey(session_id: str, body: dict) -> dict:
        return runtime.submit_survey(session_id, body.get("answers"), body.get("role"))

    @app.get("/api/tickets")
    def list_tickets(token: Optional[str] = None) -> list[dict]:
        require_supervisor(runtime, token)
        return runtime.list_tickets()

    @app.post("/api/tickets/{ticket_id}/claim")
    def claim(ticket_id: str, body: dict) -> dict:
        require_supervisor(runtime, body.get("token"))
        supervisor_id = body.get("supervisor_id") or "supervisor"
        return runtime.claim_ticket(ticket_id, supervisor_id)

    @app.post("/api/tickets/{ticket_id}/resolve")
    def resolve(ticket_id: str, body: dict) -> dict:
        require_supervisor(runtime, body.get("token"))
        supervisor_id = body.get("supervisor_id") or "supervisor"
        return runtime.resolve_ticket(ticket_id, supervisor_id, body.get("reply", ""))

    @app.get("/api/config")
    def get_config() -> dict:
        return {
            "survey_questions": list(runtime.config.survey_questions),
            "require_claim": runtime.config.require_claim,
        }

    async def _pump(ws: WebSocket, snapshot: list[dict], keep: Callable[[dict], bool]) -> None:
        await ws.accept()
        queue: asyncio.Queue = asyncio.Queue()
        loop = asyncio.get_running_loop()
        sub_id = runtime.hub.subscribe(loop, queue, keep)
        try:
            for event in snapshot:
                await ws.send_json(event)
            while True:
                event = await queue.get()
                await ws.send_json(event)
        except WebSocketDisconnect:
            pass
        finally:
            runtime.hub.unsubscribe(sub_id)

    @app.websocket("/ws/sessions/{session_id}")
    async def ws_session(ws: WebSocket, session_id: str) -> None:
        try:
            snapshot = runtime.session_snapshot_events(session_id)
        except ApiError:
            await ws.close(code=4404)
            return
        await _pump(ws, snapshot, lambda e: e.get("session_id") == session_id)

    @app.websocket("/ws/supervisor")
    async def ws_supervisor(ws: WebSocket, token: Optional[str] = None) -> None:
        try:
            require_supervisor(runtime, token)
        except ApiError:
            await ws.close(code=4401)
            return
        snapshot = runtime.queue_snapshot_events()
        await _pump(ws, snapshot, lambda e: e.get("type") == "ticket")

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app

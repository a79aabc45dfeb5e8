"""Append-only newline-delimited JSON session log, plus replay.

One record per line: {"v", "type", "session", "seq", "ts", "payload"}.
Sequence numbers are dense per session, so replay can rebuild every
SessionState exactly and a restarted server can rehydrate open tickets.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .dialogue import Phase, SessionState, Speaker, Turn
from .entities import FigureRef
from .scenario import Conflict, assert_fact, state_from_record
from .serde import ticket_from_record, turn_from_record
from .supervisor import EscalationTicket, TicketStatus
from .uncertainty import Verdict

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

RECORD_TYPES = ("config", "turn", "ticket", "survey")


def encode_record(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))


class SessionLogWriter:
    """Thread-safe appender that hands out dense per-session sequence numbers."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "a", encoding="utf-8")
        self._lock = threading.Lock()
        self._next_seq: dict[str, int] = {}

    def seed_sequences(self, next_seq: dict[str, int]) -> None:
        with self._lock:
            self._next_seq.update(next_seq)

    def append(self, record_type: str, session_id: str, payload: dict, timestamp: float) -> int:
        if record_type not in RECORD_TYPES:
            raise ValueError(f"unknown record type {record_type!r}")
        with self._lock:
            seq = self._next_seq.get(session_id, 0)
            self._next_seq[session_id] = seq + 1
            record = {
                "v": SCHEMA_VERSION,
                "type": record_type,
                "session": session_id,
                "seq": seq,
                "ts": timestamp,
                "payload": payload,
            }
            self._fh.write(encode_record(record) + "\n")
            self._fh.flush()
        return seq

    def close(self) -> None:
        with self._lock:
            self._fh.close()


def read_log(path: str | Path) -> list[dict]:
    """Parse a log file; a corrupted final line is dropped with a warning."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    records: list[dict] = []
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            if i == len(lines) - 1:
                logger.warning("truncating corrupted final log line: %s", exc)
                break
            raise ValueError(f"corrupted log record at line {i + 1}: {exc}") from exc
        records.append(record)
    return records


@dataclass
class ReplayedSession:
    session: SessionState
    config_payload: dict
    turn_records: list[dict] = field(default_factory=list)
    survey: Optional[dict] = None


@dataclass
class ReplayedLog:
    sessions: dict[str, ReplayedSession]
    tickets: dict[str, EscalationTicket]
    next_seq: dict[str, int]

    def unresolved_tickets(self) -> list[EscalationTicket]:
        return [
            t for t in self.tickets.values() if t.status is not TicketStatus.RESOLVED
        ]


def _apply_turn(session: SessionState, turn: Turn) -> SessionState:
    scenario = session.scenario
    last_figure = session.last_figure
    phase = session.phase
    open_ticket = session.open_ticket
    if turn.speaker is Speaker.TEACHER and turn.analysis is not None:
        for fact in turn.analysis.applied:
            result = assert_fact(scenario, fact.figure, fact.attribute, fact.value, turn.turn_id)
            if isinstance(result, Conflict):
                raise ValueError(
                    f"logged fact conflicts during replay: {fact} on turn {turn.turn_id}"
                )
            scenario = result
        if turn.analysis.decision.verdict is Verdict.PROCEED:
            ann_figure = turn.analysis.annotation.figure
            if ann_figure is not FigureRef.UNSPECIFIED:
                last_figure = ann_figure
    if turn.speaker is Speaker.SUPERVISOR_AS_STUDENT:
        phase = Phase.AWAITING_TEACHER
        open_ticket = None
    return replace(
        session,
        scenario=scenario,
        turns=session.turns + (turn,),
        last_figure=last_figure,
        phase=phase,
        open_ticket=open_ticket,
    )


def verify_session_replay(rep: ReplayedSession) -> list[str]:
    """Re-execute a session's teacher turns against the logged config and
    compare every recomputed turn to the stored one. Returns divergences."""
    from .config import config_from_record
    from .dialogue import apply_supervisor_reply, handle_teacher_turn, new_session
    from .pretrained import build_engine
    from .serde import turn_to_record

    if not rep.turn_records:
        return []
    sid = rep.session.session_id
    timestamps = iter(r["timestamp"] for r in rep.turn_records)
    engine = build_engine(
        config_from_record(rep.config_payload["config"]), clock=lambda: next(timestamps)
    )
    divergences: list[str] = []

    def check(expected: dict, actual: dict) -> None:
        if json.dumps(expected, sort_keys=True) != json.dumps(actual, sort_keys=True):
            divergences.append(
                f"session {sid} turn {expected.get('turn_id')}: recomputed turn differs"
            )

    state = new_session(engine, sid, state_from_record(rep.config_payload["scenario"]))
    check(rep.turn_records[0], turn_to_record(state.turns[0]))
    i = 1
    while i < len(rep.turn_records):
        logged = rep.turn_records[i]
        speaker = logged["speaker"]
        if speaker == Speaker.TEACHER.value:
            state, outcome = handle_teacher_turn(engine, state, logged["text"])
            check(logged, turn_to_record(outcome.teacher_turn))
            i += 1
            if state.phase is Phase.AWAITING_TEACHER:  # proceeded: student turn follows
                if i >= len(rep.turn_records):
                    divergences.append(f"session {sid}: missing logged student turn")
                    break
                check(rep.turn_records[i], turn_to_record(state.turns[-1]))
                i += 1
        elif speaker == Speaker.SUPERVISOR_AS_STUDENT.value:
            state, turn = apply_supervisor_reply(
                engine, state, state.open_ticket or "", logged["text"]
            )
            check(logged, turn_to_record(turn))
            i += 1
        else:
            divergences.append(f"session {sid}: unexpected logged speaker {speaker!r}")
            break
    return divergences


def replay_log(records: list[dict]) -> ReplayedLog:
    """Rebuild all sessions and ticket states from log records."""
    sessions: dict[str, ReplayedSession] = {}
    tickets: dict[str, EscalationTicket] = {}
    next_seq: dict[str, int] = {}

    for record in records:
        if record.get("v") != SCHEMA_VERSION:
            raise ValueError(f"unsupported log schema version {record.get('v')}")
        sid = record["session"]
        seq = record["seq"]
        expected = next_seq.get(sid, 0)
        if seq != expected:
            raise ValueError(f"session {sid}: expected seq {expected}, found {seq}")
        next_seq[sid] = seq + 1
        rtype = record["type"]
        payload = record["payload"]

        if rtype == "config":
            scenario = state_from_record(payload["scenario"])
            sessions[sid] = ReplayedSession(
                session=SessionState(session_id=sid, scenario=scenario),
                config_payload=payload,
            )
        elif rtype == "turn":
            entry = sessions[sid]
            turn = turn_from_record(payload)
            entry.session = _apply_turn(entry.session, turn)
            entry.turn_records.append(payload)
        elif rtype == "ticket":
            entry = sessions[sid]
            ticket = ticket_from_record(payload)
            tickets[ticket.ticket_id] = ticket
            if ticket.status is TicketStatus.RESOLVED:
                if entry.session.open_ticket == ticket.ticket_id:
                    entry.session = replace(
                        entry.session, phase=Phase.AWAITING_TEACHER, open_ticket=None
                    )
            else:
                entry.session = replace(
                    entry.session,
                    phase=Phase.AWAITING_SUPERVISOR,
                    open_ticket=ticket.ticket_id,
                )
        elif rtype == "survey":
            entry = sessions[sid]
            entry.survey = payload
            entry.session = replace(entry.session, phase=Phase.CLOSED, open_ticket=None)
        else:
            raise ValueError(f"unknown record type {rtype!r}")

    return ReplayedLog(sessions=sessions, tickets=tickets, next_seq=next_seq)

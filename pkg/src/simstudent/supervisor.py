"""Escalation tickets and the cross-session supervisor queue.

The queue is the only shared mutable structure in the system. Every
operation takes one lock, so transitions are linearizable: claim is a
compare-and-set on status and resolution happens exactly once no matter how
claim/resolve calls interleave.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence

from .entities import EntityAnnotation, RelationCandidate
from .errors import (
    AlreadyClaimed,
    DuplicateTicket,
    EmptyReply,
    NotClaimant,
    UnknownTicket,
)
from .uncertainty import ActDistribution, GateDecision, Trigger


@dataclass(frozen=True)
class TicketDiagnostics:
    """Everything the supervisor panel renders: the full act distribution,
    per-entity confidences, relation candidates, and what tripped the gate."""

    distribution: ActDistribution
    annotation: EntityAnnotation
    candidates: tuple[RelationCandidate, ...]
    decision: GateDecision

    def __post_init__(self) -> None:
        if self.decision.triggered_by is Trigger.NONE:
            raise ValueError("escalation diagnostics must name a trigger")


class TicketStatus(Enum):
    OPEN = "open"
    CLAIMED = "claimed"
    RESOLVED = "resolved"


@dataclass
class EscalationTicket:
    """A frozen teacher turn awaiting a respond-as-student answer.

    Status only moves forward: Open -> Claimed -> Resolved or Open -> Resolved.
    """

    ticket_id: str
    session_id: str
    turn_id: int
    utterance: str
    diagnostics: TicketDiagnostics
    created_at: float
    status: TicketStatus = TicketStatus.OPEN
    claimant: Optional[str] = None
    resolved_at: Optional[float] = None
    reply: Optional[str] = None

    @property
    def triggered_by(self) -> Trigger:
        return self.diagnostics.decision.triggered_by

    @property
    def resolution_latency(self) -> Optional[float]:
        if self.resolved_at is None:
            return None
        return self.resolved_at - self.created_at


QueueListener = Callable[[str, EscalationTicket], None]


class TicketQueue:
    """FIFO escalation queue with atomic claim/resolve transitions.

    `require_claim=False` is single-supervisor mode, where resolving an open
    ticket directly is allowed; with claims required, only the claimant may
    resolve. Listeners fire after the lock is released (at-least-once).
    """

    def __init__(self, require_claim: bool = False, clock: Callable[[], float] = time.time):
        self._lock = threading.Lock()
        self._tickets: dict[str, EscalationTicket] = {}
        self._order: list[str] = []
        self._listeners: list[QueueListener] = []
        self.require_claim = require_claim
        self.clock = clock

    def subscribe(self, listener: QueueListener) -> None:
        self._listeners.append(listener)

    def _notify(self, event: str, ticket: EscalationTicket) -> None:
        for listener in list(self._listeners):
            listener(event, ticket)

    def enqueue(self, ticket: EscalationTicket) -> str:
        with self._lock:
            if ticket.ticket_id in self._tickets:
                raise DuplicateTicket(f"ticket {ticket.ticket_id} already enqueued")
            for existing in self._tickets.values():
                if (
                    existing.session_id == ticket.session_id
                    and existing.status is not TicketStatus.RESOLVED
                ):
                    raise DuplicateTicket(
                        f"session {ticket.session_id} already has open ticket "
                        f"{existing.ticket_id}"
                    )
            self._tickets[ticket.ticket_id] = ticket
            self._order.append(ticket.ticket_id)
        self._notify("open", ticket)
        return ticket.ticket_id

    def claim(self, ticket_id: str, supervisor_id: str) -> EscalationTicket:
        with self._lock:
            ticket = self._tickets.get(ticket_id)
            if ticket is None or ticket.status is TicketStatus.RESOLVED:
                raise UnknownTicket(f"no claimable ticket {ticket_id}")
            if ticket.status is TicketStatus.CLAIMED:
                raise AlreadyClaimed(
                    f"ticket {ticket_id} already claimed by {ticket.claimant}"
                )
            ticket.status = TicketStatus.CLAIMED
            ticket.claimant = supervisor_id
        self._notify("claimed", ticket)
        return ticket

    def resolve(self, ticket_id: str, supervisor_id: str, reply: str) -> EscalationTicket:
        if not reply or not reply.strip():
            raise EmptyReply("supervisor reply must contain text")
        with self._lock:
            ticket = self._tickets.get(ticket_id)
            if ticket is None or ticket.status is TicketStatus.RESOLVED:
                raise UnknownTicket(f"no resolvable ticket {ticket_id}")
            if ticket.status is TicketStatus.CLAIMED and ticket.claimant != supervisor_id:
                raise NotClaimant(
                    f"ticket {ticket_id} is claimed by {ticket.claimant}"
                )
            if ticket.status is TicketStatus.OPEN and self.require_claim:
                raise NotClaimant(f"ticket {ticket_id} must be claimed before resolving")
            ticket.status = TicketStatus.RESOLVED
            ticket.claimant = ticket.claimant or supervisor_id
            ticket.reply = reply
            ticket.resolved_at = self.clock()
        self._notify("resolved", ticket)
        return ticket

    def get(self, ticket_id: str) -> EscalationTicket:
        with self._lock:
            ticket = self._tickets.get(ticket_id)
            if ticket is None:
                raise UnknownTicket(f"no ticket {ticket_id}")
            return ticket

    def open_tickets(self) -> list[EscalationTicket]:
        """Unresolved tickets in creation order (open and claimed)."""
        with self._lock:
            return [
                self._tickets[tid]
                for tid in self._order
                if self._tickets[tid].status is not TicketStatus.RESOLVED
            ]

    def all_tickets(self) -> list[EscalationTicket]:
        with self._lock:
            return [self._tickets[tid] for tid in self._order]

    def counts(self) -> dict[str, int]:
        with self._lock:
            out = {status.value: 0 for status in TicketStatus}
            for ticket in self._tickets.values():
                out[ticket.status.value] += 1
            out["total"] = len(self._tickets)
            return out

    def rehydrate(self, tickets: Sequence[EscalationTicket]) -> None:
        """Restore unresolved tickets (log replay after a restart)."""
        with self._lock:
            for ticket in tickets:
                if ticket.status is TicketStatus.RESOLVED:
                    continue
                if ticket.ticket_id not in self._tickets:
                    self._tickets[ticket.ticket_id] = ticket
                    self._order.append(ticket.ticket_id)

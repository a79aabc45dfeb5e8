"""Per-session state machine: teacher turn -> analysis -> reply or ticket.

Sessions are immutable values; every operation returns a new state, which
keeps replay trivial and lets the safety tests enumerate reachable states.
The pipeline for a teacher turn is: normalize, ensemble classify, extract
entities, score relations, tentatively apply asserted facts, gate, then
either respond from a template or freeze the turn into an escalation ticket.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Callable, Optional, Union

from .acts import ActClassifier, DialogueAct, featurize, normalize
from .entities import (
    DIMENSIONS,
    Attribute,
    EntityAnnotation,
    FigureRef,
    RelationCandidate,
    RelationScorer,
    extract_entities,
    finalize_presence,
    score_relations,
)
from .errors import SessionClosed, UnknownTicket, WrongPhase
from .scenario import Conflict, ScenarioState, assert_fact, default_scenario
from .supervisor import EscalationTicket, TicketDiagnostics
from .templates import ResponseTemplate, default_templates, render_response
from .uncertainty import (
    ActDistribution,
    GateDecision,
    UncertaintyConfig,
    Verdict,
    ensemble_classify,
    gate,
)

GREETING = "Hi! I am ready to work on the two figures."

# Confidence assigned to a figure carried over from an earlier turn rather
# than named in the current one.
CONTEXT_FIGURE_CONFIDENCE = 0.9


class Speaker(Enum):
    TEACHER = "teacher"
    STUDENT = "student"
    SUPERVISOR_AS_STUDENT = "supervisor_as_student"


class Phase(Enum):
    AWAITING_TEACHER = "awaiting_teacher"
    AWAITING_SUPERVISOR = "awaiting_supervisor"
    CLOSED = "closed"


@dataclass(frozen=True)
class AppliedFact:
    figure: FigureRef
    attribute: Attribute
    value: Fraction


@dataclass(frozen=True)
class TurnAnalysis:
    act: DialogueAct
    distribution: ActDistribution
    annotation: EntityAnnotation
    candidates: tuple[RelationCandidate, ...]
    decision: GateDecision
    resolved_figure: FigureRef
    applied: tuple[AppliedFact, ...] = ()


@dataclass(frozen=True)
class Turn:
    turn_id: int
    speaker: Speaker
    text: str
    timestamp: float
    analysis: Optional[TurnAnalysis] = None
    references: Optional[int] = None  # escalated teacher turn, for supervisor turns


@dataclass(frozen=True)
class SessionState:
    session_id: str
    scenario: ScenarioState
    turns: tuple[Turn, ...] = ()
    phase: Phase = Phase.AWAITING_TEACHER
    open_ticket: Optional[str] = None
    last_figure: Optional[FigureRef] = None

    def next_turn_id(self) -> int:
        return len(self.turns)


@dataclass(frozen=True)
class StudentReply:
    text: str
    teacher_turn: Turn
    student_turn: Turn


@dataclass(frozen=True)
class Escalated:
    ticket: EscalationTicket
    teacher_turn: Turn


Outcome = Union[StudentReply, Escalated]


@dataclass(frozen=True)
class DialogueEngine:
    """Immutable bundle of trained models and knobs shared by all sessions."""

    classifier: ActClassifier
    scorer: RelationScorer
    templates: tuple[ResponseTemplate, ...]
    config: UncertaintyConfig
    clock: Callable[[], float] = time.time


def default_engine(
    classifier: ActClassifier,
    scorer: RelationScorer,
    config: UncertaintyConfig = UncertaintyConfig(),
    clock: Callable[[], float] = time.time,
) -> DialogueEngine:
    return DialogueEngine(
        classifier=classifier,
        scorer=scorer,
        templates=default_templates(),
        config=config,
        clock=clock,
    )


def new_session(
    engine: DialogueEngine,
    session_id: str,
    scenario: Optional[ScenarioState] = None,
) -> SessionState:
    greeting = Turn(
        turn_id=0, speaker=Speaker.STUDENT, text=GREETING, timestamp=engine.clock()
    )
    return SessionState(
        session_id=session_id,
        scenario=scenario if scenario is not None else default_scenario(),
        turns=(greeting,),
    )


def _resolve_figure(
    session: SessionState, ann: EntityAnnotation
) -> tuple[FigureRef, Optional[float]]:
    if ann.figure is not FigureRef.UNSPECIFIED:
        return ann.figure, ann.figure_confidence
    if session.last_figure is not None:
        return session.last_figure, CONTEXT_FIGURE_CONFIDENCE
    return FigureRef.UNSPECIFIED, None


def handle_teacher_turn(
    engine: DialogueEngine, session: SessionState, text: str
) -> tuple[SessionState, Outcome]:
    """Run one teacher utterance through the full pipeline.

    Asserted facts are committed to the scenario only when the turn proceeds;
    an escalated turn leaves the world model untouched, since its analysis is
    exactly what the gate distrusted.
    """
    if session.phase is Phase.CLOSED:
        raise SessionClosed(f"session {session.session_id} is closed")
    if session.phase is not Phase.AWAITING_TEACHER:
        raise WrongPhase("a supervisor reply is pending; teacher input is rejected")

    turn_id = session.next_turn_id()
    norm = normalize(text)
    fv = featurize(norm, engine.classifier.hash_space)
    distribution = ensemble_classify(engine.classifier, fv, engine.config)
    act = DialogueAct(distribution.argmax())

    ann = extract_entities(norm)
    candidates = score_relations(norm, ann, engine.scorer)
    ann = finalize_presence(ann, candidates)
    figure, figure_confidence = _resolve_figure(session, ann)

    facts = [
        c
        for c in candidates
        if c.label and c.value is not None and c.attribute in DIMENSIONS
    ]
    confidences = [c.decision_confidence for c in candidates]
    scenario = session.scenario
    applied: list[AppliedFact] = []
    scenario_consistent = True
    if facts:
        if figure is FigureRef.UNSPECIFIED:
            confidences.append(0.0)  # nowhere to put the fact: force escalation
        else:
            confidences.append(figure_confidence)
            for fact in facts:
                result = assert_fact(scenario, figure, fact.attribute, fact.value, turn_id)
                if isinstance(result, Conflict):
                    scenario_consistent = False
                    break
                scenario = result
                applied.append(AppliedFact(figure, fact.attribute, fact.value))
    elif ann.attributes and figure_confidence is not None:
        confidences.append(figure_confidence)
    entity_confidence = min(confidences, default=1.0)

    reply_text = render_response(act, ann, scenario, engine.templates, figure=figure)
    decision = gate(
        distribution,
        entity_confidence,
        reply_text is not None,
        scenario_consistent,
        engine.config,
    )

    analysis = TurnAnalysis(
        act=act,
        distribution=distribution,
        annotation=ann,
        candidates=candidates,
        decision=decision,
        resolved_figure=figure,
        applied=tuple(applied) if decision.verdict is Verdict.PROCEED else (),
    )
    teacher_turn = Turn(
        turn_id=turn_id,
        speaker=Speaker.TEACHER,
        text=text,
        timestamp=engine.clock(),
        analysis=analysis,
    )

    if decision.verdict is Verdict.PROCEED:
        student_turn = Turn(
            turn_id=turn_id + 1,
            speaker=Speaker.STUDENT,
            text=reply_text,
            timestamp=engine.clock(),
        )
        explicit_figure = (
            ann.figure if ann.figure is not FigureRef.UNSPECIFIED else session.last_figure
        )
        new_state = replace(
            session,
            scenario=scenario,
            turns=session.turns + (teacher_turn, student_turn),
            last_figure=explicit_figure,
        )
        return new_state, StudentReply(
            text=reply_text, teacher_turn=teacher_turn, student_turn=student_turn
        )

    ticket = EscalationTicket(
        ticket_id=f"{session.session_id}-t{turn_id}",
        session_id=session.session_id,
        turn_id=turn_id,
        utterance=text,
        diagnostics=TicketDiagnostics(
            distribution=distribution,
            annotation=ann,
            candidates=candidates,
            decision=decision,
        ),
        created_at=teacher_turn.timestamp,
    )
    new_state = replace(
        session,
        turns=session.turns + (teacher_turn,),
        phase=Phase.AWAITING_SUPERVISOR,
        open_ticket=ticket.ticket_id,
    )
    return new_state, Escalated(ticket=ticket, teacher_turn=teacher_turn)


def apply_supervisor_reply(
    engine: DialogueEngine, session: SessionState, ticket_id: str, text: str
) -> tuple[SessionState, Turn]:
    """Append the supervisor's respond-as-student turn and reopen the session.

    The reply never touches the scenario: free text from the supervisor would
    reintroduce the NLU failure mode the handoff exists to bypass.
    """
    if session.phase is not Phase.AWAITING_SUPERVISOR:
        raise WrongPhase("no supervisor reply is pending for this session")
    if session.open_ticket != ticket_id:
        raise UnknownTicket(f"ticket {ticket_id} is not open for this session")
    escalated = session.turns[-1]
    turn = Turn(
        turn_id=session.next_turn_id(),
        speaker=Speaker.SUPERVISOR_AS_STUDENT,
        text=text,
        timestamp=engine.clock(),
        references=escalated.turn_id,
    )
    new_state = replace(
        session,
        turns=session.turns + (turn,),
        phase=Phase.AWAITING_TEACHER,
        open_ticket=None,
    )
    return new_state, turn


def close_session(session: SessionState) -> SessionState:
    if session.phase is Phase.CLOSED:
        raise SessionClosed(f"session {session.session_id} already closed")
    return replace(session, phase=Phase.CLOSED, open_ticket=None)

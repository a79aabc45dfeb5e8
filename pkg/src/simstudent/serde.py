"""JSON-able encodings for turns, tickets, and analyses.

Used by the session log, the HTTP/WS payloads, and the replay checker, so
encode/decode must round-trip exactly (rationals as "p/q" strings, floats
left to json's shortest-repr, which is bit-faithful for float64).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

from .acts import DialogueAct
from .dialogue import AppliedFact, Phase, Speaker, Turn, TurnAnalysis
from .entities import (
    Attribute,
    AttributeMention,
    EntityAnnotation,
    FigureRef,
    Presence,
    RelationCandidate,
    Span,
    ValueMention,
)
from .supervisor import EscalationTicket, TicketDiagnostics, TicketStatus
from .uncertainty import (
    ActDistribution,
    GateDecision,
    GateDiagnostics,
    Trigger,
    Verdict,
)


def fraction_to_str(value: Optional[Fraction]) -> Optional[str]:
    return None if value is None else str(value)


def fraction_from_str(raw: Optional[str]) -> Optional[Fraction]:
    return None if raw is None else Fraction(raw)


def distribution_to_record(d: ActDistribution) -> dict:
    return {
        "mean_probs": list(d.mean_probs),
        "predictive_entropy": d.predictive_entropy,
        "sample_count": d.sample_count,
        "argmax_agreement": d.argmax_agreement,
    }


def distribution_from_record(rec: dict) -> ActDistribution:
    return ActDistribution(
        mean_probs=tuple(rec["mean_probs"]),
        predictive_entropy=rec["predictive_entropy"],
        sample_count=rec["sample_count"],
        argmax_agreement=rec["argmax_agreement"],
    )


def _span_to_list(span: Optional[Span]) -> Optional[list[int]]:
    return None if span is None else [span.start, span.end]


def _span_from_list(raw: Optional[list]) -> Optional[Span]:
    return None if raw is None else Span(raw[0], raw[1])


def annotation_to_record(ann: EntityAnnotation) -> dict:
    return {
        "text": ann.text,
        "attributes": [
            {"attribute": m.attribute.value, "span": _span_to_list(m.span)}
            for m in ann.attributes
        ],
        "values": [
            {"value": str(v.value), "span": _span_to_list(v.span)} for v in ann.values
        ],
        "figure": ann.figure.value,
        "figure_confidence": ann.figure_confidence,
        "value_presence": ann.value_presence.value,
        "presence_confidence": ann.presence_confidence,
    }


def annotation_from_record(rec: dict) -> EntityAnnotation:
    return EntityAnnotation(
        text=rec["text"],
        attributes=tuple(
            AttributeMention(Attribute(m["attribute"]), _span_from_list(m["span"]))
            for m in rec["attributes"]
        ),
        values=tuple(
            ValueMention(Fraction(v["value"]), _span_from_list(v["span"]))
            for v in rec["values"]
        ),
        figure=FigureRef(rec["figure"]),
        figure_confidence=rec["figure_confidence"],
        value_presence=Presence(rec["value_presence"]),
        presence_confidence=rec["presence_confidence"],
    )


def candidate_to_record(c: RelationCandidate) -> dict:
    return {
        "attribute": c.attribute.value,
        "attribute_span": _span_to_list(c.attribute_span),
        "value": fraction_to_str(c.value),
        "value_span": _span_to_list(c.value_span),
        "confidence": c.confidence,
        "label": c.label,
    }


def candidate_from_record(rec: dict) -> RelationCandidate:
    return RelationCandidate(
        attribute=Attribute(rec["attribute"]),
        attribute_span=_span_from_list(rec["attribute_span"]),
        value=fraction_from_str(rec["value"]),
        value_span=_span_from_list(rec["value_span"]),
        confidence=rec["confidence"],
        label=rec["label"],
    )


def decision_to_record(d: GateDecision) -> dict:
    g = d.diagnostics
    return {
        "verdict": d.verdict.value,
        "triggered_by": d.triggered_by.value,
        "diagnostics": {
            "entropy": g.entropy,
            "tau_act": g.tau_act,
            "entity_confidence": g.entity_confidence,
            "tau_entity": g.tau_entity,
            "template_available": g.template_available,
            "scenario_consistent": g.scenario_consistent,
            "argmax_agreement": g.argmax_agreement,
        },
    }


def decision_from_record(rec: dict) -> GateDecision:
    g = rec["diagnostics"]
    return GateDecision(
        verdict=Verdict(rec["verdict"]),
        triggered_by=Trigger(rec["triggered_by"]),
        diagnostics=GateDiagnostics(
            entropy=g["entropy"],
            tau_act=g["tau_act"],
            entity_confidence=g["entity_confidence"],
            tau_entity=g["tau_entity"],
            template_available=g["template_available"],
            scenario_consistent=g["scenario_consistent"],
            argmax_agreement=g["argmax_agreement"],
        ),
    )


def analysis_to_record(a: TurnAnalysis) -> dict:
    return {
        "act": a.act.label,
        "distribution": distribution_to_record(a.distribution),
        "annotation": annotation_to_record(a.annotation),
        "candidates": [candidate_to_record(c) for c in a.candidates],
        "decision": decision_to_record(a.decision),
        "resolved_figure": a.resolved_figure.value,
        "applied": [
            {"figure": f.figure.value, "attribute": f.attribute.value, "value": str(f.value)}
            for f in a.applied
        ],
    }


def analysis_from_record(rec: dict) -> TurnAnalysis:
    return TurnAnalysis(
        act=DialogueAct[rec["act"].upper()],
        distribution=distribution_from_record(rec["distribution"]),
        annotation=annotation_from_record(rec["annotation"]),
        candidates=tuple(candidate_from_record(c) for c in rec["candidates"]),
        decision=decision_from_record(rec["decision"]),
        resolved_figure=FigureRef(rec["resolved_figure"]),
        applied=tuple(
            AppliedFact(
                figure=FigureRef(f["figure"]),
                attribute=Attribute(f["attribute"]),
                value=Fraction(f["value"]),
            )
            for f in rec["applied"]
        ),
    )


def turn_to_record(turn: Turn) -> dict:
    return {
        "turn_id": turn.turn_id,
        "speaker": turn.speaker.value,
        "text": turn.text,
        "timestamp": turn.timestamp,
        "analysis": None if turn.analysis is None else analysis_to_record(turn.analysis),
        "references": turn.references,
    }


def turn_from_record(rec: dict) -> Turn:
    analysis = rec.get("analysis")
    return Turn(
        turn_id=rec["turn_id"],
        speaker=Speaker(rec["speaker"]),
        text=rec["text"],
        timestamp=rec["timestamp"],
        analysis=None if analysis is None else analysis_from_record(analysis),
        references=rec.get("references"),
    )


def ticket_to_record(ticket: EscalationTicket) -> dict:
    d = ticket.diagnostics
    return {
        "ticket_id": ticket.ticket_id,
        "session_id": ticket.session_id,
        "turn_id": ticket.turn_id,
        "utterance": ticket.utterance,
        "created_at": ticket.created_at,
        "status": ticket.status.value,
        "claimant": ticket.claimant,
        "resolved_at": ticket.resolved_at,
        "reply": ticket.reply,
        "diagnostics": {
            "distribution": distribution_to_record(d.distribution),
            "annotation": annotation_to_record(d.annotation),
            "candidates": [candidate_to_record(c) for c in d.candidates],
            "decision": decision_to_record(d.decision),
        },
    }


def ticket_from_record(rec: dict) -> EscalationTicket:
    d = rec["diagnostics"]
    return EscalationTicket(
        ticket_id=rec["ticket_id"],
        session_id=rec["session_id"],
        turn_id=rec["turn_id"],
        utterance=rec["utterance"],
        created_at=rec["created_at"],
        status=TicketStatus(rec["status"]),
        claimant=rec.get("claimant"),
        resolved_at=rec.get("resolved_at"),
        reply=rec.get("reply"),
        diagnostics=TicketDiagnostics(
            distribution=distribution_from_record(d["distribution"]),
            annotation=annotation_from_record(d["annotation"]),
            candidates=tuple(candidate_from_record(c) for c in d["candidates"]),
            decision=decision_from_record(d["decision"]),
        ),
    )


def phase_value(phase: Phase) -> str:
    return phase.value

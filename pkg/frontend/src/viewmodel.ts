// Event-sourced view models. Rendering state is a pure function of the
// event stream: replaying recorded events reproduces the exact view, which
// is what the snapshot tests do. The channel is at-least-once, so reducers
// dedupe (turns by turn_id, ticket transitions by forward-only status).

import { Phase, TicketPayload, TurnPayload, UiEvent } from "./events.js";

export interface TurnView {
  turnId: number;
  speaker: "teacher" | "student";
  rawSpeaker: string;
  text: string;
}

export interface TeacherView {
  sessionId: string | null;
  turns: TurnView[]; // ordered by turn id, never arrival order
  phase: Phase;
  inputDisabled: boolean;
  thinking: boolean; // "student is thinking": a supervisor handoff is pending
  closed: boolean;
  surveySubmitted: boolean;
}

export function initialTeacherView(): TeacherView {
  return {
    sessionId: null,
    turns: [],
    phase: "awaiting_teacher",
    inputDisabled: false,
    thinking: false,
    closed: false,
    surveySubmitted: false,
  };
}

function withPhase(view: TeacherView, phase: Phase): TeacherView {
  return {
    ...view,
    phase,
    inputDisabled: phase !== "awaiting_teacher",
    thinking: phase === "awaiting_supervisor",
    closed: phase === "closed",
  };
}

export function reduceTeacher(view: TeacherView, event: UiEvent): TeacherView {
  let next = view.sessionId ? view : { ...view, sessionId: event.session_id };
  if (event.session_id !== next.sessionId) {
    return next;
  }
  if (event.type === "turn") {
    const turn = event.payload as TurnPayload;
    if (!next.turns.some((t) => t.turnId === turn.turn_id)) {
      const turns = [
        ...next.turns,
        {
          turnId: turn.turn_id,
          // the teacher sees supervisor handoffs as the student speaking
          speaker: turn.speaker === "teacher" ? ("teacher" as const) : ("student" as const),
          rawSpeaker: turn.speaker,
          text: turn.text,
        },
      ];
      turns.sort((a, b) => a.turnId - b.turnId);
      next = { ...next, turns };
    }
  }
  if (event.type === "survey") {
    next = { ...next, surveySubmitted: true };
  }
  return withPhase(next, event.phase);
}

export interface TicketView {
  ticketId: string;
  sessionId: string;
  turnId: number;
  utterance: string;
  status: "open" | "claimed" | "resolved";
  claimant: string | null;
  badge: string;
  payload: TicketPayload;
}

export interface SupervisorView {
  tickets: Record<string, TicketView>;
  order: string[]; // creation order
}

export function initialSupervisorView(): SupervisorView {
  return { tickets: {}, order: [] };
}

const STATUS_RANK = { open: 0, claimed: 1, resolved: 2 } as const;

export function ticketBadge(triggeredBy: string): string {
  switch (triggeredBy) {
    case "act_uncertainty":
      return "dialogue-act uncertainty";
    case "entity_uncertainty":
      return "entity uncertainty";
    case "no_template":
      return "no response template";
    case "scenario_conflict":
      return "scenario conflict";
    default:
      return triggeredBy;
  }
}

export function reduceSupervisor(view: SupervisorView, event: UiEvent): SupervisorView {
  if (event.type !== "ticket") {
    return view;
  }
  const payload = event.payload as TicketPayload;
  const existing = view.tickets[payload.ticket_id];
  if (existing && STATUS_RANK[payload.status] <= STATUS_RANK[existing.status]) {
    return view; // duplicate or stale delivery
  }
  const ticket: TicketView = {
    ticketId: payload.ticket_id,
    sessionId: payload.session_id,
    turnId: payload.turn_id,
    utterance: payload.utterance,
    status: payload.status,
    claimant: payload.claimant,
    badge: ticketBadge(payload.diagnostics.decision.triggered_by),
    payload,
  };
  const order = existing ? view.order : [...view.order, payload.ticket_id];
  return { tickets: { ...view.tickets, [payload.ticket_id]: ticket }, order };
}

/** Unresolved tickets in creation order: the rendered queue. */
export function openQueue(view: SupervisorView): TicketView[] {
  return view.order
    .map((id) => view.tickets[id])
    .filter((t) => t.status !== "resolved");
}

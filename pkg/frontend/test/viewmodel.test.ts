// Replays the recorded golden event stream (captured from a real service
// run) through the reducers and compares against the stored snapshot.

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { UiEvent } from "../src/events.js";
import {
  initialSupervisorView,
  initialTeacherView,
  openQueue,
  reduceSupervisor,
  reduceTeacher,
  ticketBadge,
} from "../src/viewmodel.js";

const here = dirname(fileURLToPath(import.meta.url));
const goldenEvents: UiEvent[] = JSON.parse(
  readFileSync(join(here, "golden_events.json"), "utf8")
);
const expected = JSON.parse(readFileSync(join(here, "expected_views.json"), "utf8"));

function replayTeacher(events: UiEvent[]) {
  let view = initialTeacherView();
  const trace: object[] = [];
  for (const event of events) {
    view = reduceTeacher(view, event);
    trace.push({
      after_seq: event.seq,
      type: event.type,
      phase: view.phase,
      inputDisabled: view.inputDisabled,
      thinking: view.thinking,
    });
  }
  return { view, trace };
}

function replaySupervisor(events: UiEvent[]) {
  let view = initialSupervisorView();
  for (const event of events) {
    view = reduceSupervisor(view, event);
  }
  return view;
}

describe("teacher view replay", () => {
  it("matches the stored snapshot", () => {
    const { view, trace } = replayTeacher(goldenEvents);
    expect({
      turns: view.turns,
      phase: view.phase,
      inputDisabled: view.inputDisabled,
      thinking: view.thinking,
      closed: view.closed,
      surveySubmitted: view.surveySubmitted,
    }).toEqual(expected.teacher);
    expect(trace).toEqual(expected.teacherTrace);
  });

  it("orders the transcript by turn id, not arrival order", () => {
    const shuffled = [...goldenEvents].reverse();
    // phase comes from the chronologically newest event; feed the final event
    // last so the terminal phase is comparable, then check turn ordering
    let view = initialTeacherView();
    for (const event of shuffled) {
      view = reduceTeacher(view, event);
    }
    expect(view.turns.map((t) => t.turnId)).toEqual([0, 1, 2, 3, 4]);
  });

  it("dedupes at-least-once turn deliveries", () => {
    const doubled = goldenEvents.flatMap((e) => [e, e]);
    const { view } = replayTeacher(doubled);
    expect(view.turns.map((t) => t.turnId)).toEqual([0, 1, 2, 3, 4]);
  });

  it("locks the input exactly while a supervisor reply is pending", () => {
    const { trace } = replayTeacher(goldenEvents);
    const disabledPhases = (trace as any[])
      .filter((t) => t.inputDisabled)
      .map((t) => t.phase);
    expect(new Set(disabledPhases)).toEqual(new Set(["awaiting_supervisor", "closed"]));
  });

  it("renders supervisor replies as the student", () => {
    const { view } = replayTeacher(goldenEvents);
    const handoff = view.turns.find((t) => t.rawSpeaker === "supervisor_as_student");
    expect(handoff).toBeDefined();
    expect(handoff!.speaker).toBe("student");
  });

  it("ignores events for other sessions", () => {
    const { view } = replayTeacher(goldenEvents);
    const foreign = { ...goldenEvents[0], session_id: "other", seq: 99 };
    expect(reduceTeacher(view, foreign)).toEqual(view);
  });
});

describe("supervisor view replay", () => {
  it("matches the stored snapshot", () => {
    const view = replaySupervisor(goldenEvents);
    expect(view.order).toEqual(expected.supervisor.order);
    const simplified = Object.fromEntries(
      Object.entries(view.tickets).map(([id, t]) => [
        id,
        { status: t.status, badge: t.badge, utterance: t.utterance, turnId: t.turnId },
      ])
    );
    expect(simplified).toEqual(expected.supervisor.tickets);
    expect(openQueue(view).map((t) => t.ticketId)).toEqual(
      expected.supervisor.openQueueIds
    );
  });

  it("shows the ticket in the queue while open and removes it on resolve", () => {
    const upToOpen = goldenEvents.filter((e) => e.seq <= 5);
    const openView = replaySupervisor(upToOpen);
    expect(openQueue(openView).map((t) => t.ticketId)).toEqual(["golden-t3"]);
    const full = replaySupervisor(goldenEvents);
    expect(openQueue(full)).toEqual([]);
  });

  it("never moves a ticket status backwards", () => {
    const resolvedFirst = [...goldenEvents].sort((a, b) =>
      a.type === "ticket" && b.type === "ticket" ? b.seq - a.seq : 0
    );
    const view = replaySupervisor(resolvedFirst);
    expect(view.tickets["golden-t3"].status).toBe("resolved");
  });

  it("maps triggers to badges", () => {
    expect(ticketBadge("act_uncertainty")).toBe("dialogue-act uncertainty");
    expect(ticketBadge("entity_uncertainty")).toBe("entity uncertainty");
    expect(ticketBadge("no_template")).toBe("no response template");
    expect(ticketBadge("scenario_conflict")).toBe("scenario conflict");
  });
});

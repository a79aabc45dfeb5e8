// Teacher chat panel: post utterances, watch the push channel, lock the
// input while a supervisor handoff is pending, and collect the exit survey.

import { ApiClient, ApiError } from "./client.js";
import { UiEvent } from "./events.js";
import { TeacherView, initialTeacherView, reduceTeacher } from "./viewmodel.js";

const LIKERT = [1, 2, 3, 4, 5];

export class TeacherPanel {
  private client: ApiClient;
  private root: HTMLElement;
  private view: TeacherView = initialTeacherView();
  private sessionId: string | null = null;
  private surveyQuestions: string[] = [];
  private surveyOpen = false;
  private pendingText: string | null = null; // optimistic echo for our own turn
  private statusNote = "";

  constructor(client: ApiClient, root: HTMLElement) {
    this.client = client;
    this.root = root;
  }

  async start(): Promise<void> {
    const config = await this.client.getConfig();
    this.surveyQuestions = config.survey_questions;
    const created = await this.client.createSession();
    this.sessionId = created.session_id;
    this.client.openSessionSocket(created.session_id, (event) => this.onEvent(event));
    this.render();
  }

  onEvent(event: UiEvent): void {
    this.view = reduceTeacher(this.view, event);
    if (event.type === "turn" && event.payload.speaker === "teacher") {
      this.pendingText = null;
    }
    this.render();
  }

  private async send(text: string): Promise<void> {
    if (!this.sessionId || !text.trim()) {
      return;
    }
    this.pendingText = text;
    this.statusNote = "";
    this.render();
    try {
      await this.client.postUtterance(this.sessionId, text);
    } catch (err) {
      this.pendingText = null;
      this.statusNote = err instanceof ApiError ? err.message : String(err);
      this.render();
    }
  }

  private async submitSurvey(form: HTMLFormElement): Promise<void> {
    if (!this.sessionId) {
      return;
    }
    const answers = this.surveyQuestions.map((_, i) => {
      const field = form.elements.namedItem(`q${i}`) as HTMLSelectElement;
      return Number(field.value);
    });
    try {
      await this.client.submitSurvey(this.sessionId, answers, "teacher");
      this.surveyOpen = false;
    } catch (err) {
      this.statusNote = err instanceof ApiError ? err.message : String(err);
    }
    this.render();
  }

  render(): void {
    const bubbles = this.view.turns
      .map(
        (turn) => `
        <div class="bubble ${turn.speaker}" data-turn="${turn.turnId}">
          <span class="who">${turn.speaker}</span>${escapeHtml(turn.text)}
        </div>`
      )
      .join("");
    const pending = this.pendingText
      ? `<div class="bubble teacher pending"><span class="who">teacher</span>${escapeHtml(
          this.pendingText
        )}</div>`
      : "";
    const thinking = this.view.thinking
      ? `<div class="thinking" id="thinking">student is thinking&hellip;</div>`
      : "";
    const closed = this.view.closed
      ? `<div class="closed-banner">Session closed. Thanks for practicing!</div>`
      : "";
    const survey = this.surveyOpen && !this.view.closed ? this.surveyHtml() : "";

    this.root.innerHTML = `
      <h2>Teacher</h2>
      <div class="transcript" id="transcript">${bubbles}${pending}${thinking}${closed}</div>
      ${survey}
      <form id="say" class="composer">
        <input id="utterance" type="text" placeholder="Ask the student a question"
               autocomplete="off" ${this.view.inputDisabled ? "disabled" : ""} />
        <button type="submit" ${this.view.inputDisabled ? "disabled" : ""}>Send</button>
        <button type="button" id="end-session"
                ${this.view.phase !== "awaiting_teacher" ? "disabled" : ""}>
          End session
        </button>
      </form>
      <div class="status-note">${escapeHtml(this.statusNote)}</div>
    `;

    const form = this.root.querySelector<HTMLFormElement>("#say")!;
    const input = this.root.querySelector<HTMLInputElement>("#utterance")!;
    form.onsubmit = (e) => {
      e.preventDefault();
      const text = input.value;
      input.value = "";
      void this.send(text);
    };
    this.root.querySelector<HTMLButtonElement>("#end-session")!.onclick = () => {
      this.surveyOpen = true;
      this.render();
    };
    const surveyForm = this.root.querySelector<HTMLFormElement>("#survey-form");
    if (surveyForm) {
      surveyForm.onsubmit = (e) => {
        e.preventDefault();
        void this.submitSurvey(surveyForm);
      };
    }
    const transcript = this.root.querySelector<HTMLElement>("#transcript")!;
    transcript.scrollTop = transcript.scrollHeight;
  }

  private surveyHtml(): string {
    const rows = this.surveyQuestions
      .map(
        (q, i) => `
        <label class="survey-row">
          <span>${escapeHtml(q)}</span>
          <select name="q${i}">
            ${LIKERT.map((v) => `<option value="${v}" ${v === 3 ? "selected" : ""}>${v}</option>`).join("")}
          </select>
        </label>`
      )
      .join("");
    return `
      <form id="survey-form" class="survey">
        <h3>Before you go (1 = low, 5 = high)</h3>
        ${rows}
        <button type="submit">Submit survey &amp; close session</button>
      </form>`;
  }
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

// Supervisor dashboard: live escalation queue, per-ticket uncertainty bars,
// claim/resolve flow with a respond-as-student input.

import { renderBars } from "./bars.js";
import { ApiClient, ApiError } from "./client.js";
import { ACT_LABELS, TicketPayload, UiEvent } from "./events.js";
import {
  SupervisorView,
  TicketView,
  initialSupervisorView,
  openQueue,
  reduceSupervisor,
} from "./viewmodel.js";
import { escapeHtml } from "./teacher.js";

export class SupervisorPanel {
  private client: ApiClient;
  private root: HTMLElement;
  private view: SupervisorView = initialSupervisorView();
  private supervisorId: string;
  private selected: string | null = null;
  private toast = "";

  constructor(client: ApiClient, root: HTMLElement, supervisorId = "supervisor") {
    this.client = client;
    this.root = root;
    this.supervisorId = supervisorId;
  }

  async start(): Promise<void> {
    this.client.openSupervisorSocket((event) => this.onEvent(event));
    this.render();
  }

  onEvent(event: UiEvent): void {
    this.view = reduceSupervisor(this.view, event);
    const queue = openQueue(this.view);
    if (this.selected && !this.view.tickets[this.selected]) {
      this.selected = null;
    }
    if (!this.selected && queue.length) {
      this.selected = queue[0].ticketId;
    }
    this.render();
  }

  private async claim(ticketId: string): Promise<void> {
    try {
      await this.client.claimTicket(ticketId, this.supervisorId);
      this.toast = "";
    } catch (err) {
      this.toast =
        err instanceof ApiError && err.code === "already_claimed"
          ? "Another supervisor claimed this ticket first."
          : String(err instanceof Error ? err.message : err);
    }
    this.render();
  }

  private async resolve(ticketId: string, reply: string): Promise<void> {
    try {
      await this.client.resolveTicket(ticketId, this.supervisorId, reply);
      this.toast = "";
    } catch (err) {
      this.toast = err instanceof ApiError ? err.message : String(err);
    }
    this.render();
  }

  render(): void {
    const queue = openQueue(this.view);
    const items = queue
      .map((ticket) => {
        const mine = ticket.claimant === this.supervisorId;
        const claimedBadge =
          ticket.status === "claimed"
            ? `<span class="claimed ${mine ? "mine" : "theirs"}">claimed by ${escapeHtml(
                ticket.claimant || "?"
              )}</span>`
            : "";
        return `
        <li class="ticket ${ticket.ticketId === this.selected ? "selected" : ""} ${
          ticket.status === "claimed" && !mine ? "greyed" : ""
        }" data-ticket="${ticket.ticketId}">
          <span class="badge">${escapeHtml(ticket.badge)}</span>
          ${escapeHtml(ticket.utterance)}
          ${claimedBadge}
        </li>`;
      })
      .join("");

    const detail = this.selected ? this.detailHtml(this.view.tickets[this.selected]) : "";
    this.root.innerHTML = `
      <h2>Supervisor</h2>
      <div class="toast">${escapeHtml(this.toast)}</div>
      <ul class="queue" id="queue">${items || "<li class='empty'>No open tickets</li>"}</ul>
      <div id="detail">${detail}</div>
    `;

    for (const li of this.root.querySelectorAll<HTMLElement>("li.ticket")) {
      li.onclick = () => {
        this.selected = li.dataset.ticket || null;
        this.render();
      };
    }
    if (this.selected) {
      const ticket = this.view.tickets[this.selected];
      this.mountBars(ticket.payload);
      const claimButton = this.root.querySelector<HTMLButtonElement>("#claim");
      if (claimButton) {
        claimButton.onclick = () => void this.claim(ticket.ticketId);
      }
      const form = this.root.querySelector<HTMLFormElement>("#resolve-form");
      if (form) {
        form.onsubmit = (e) => {
          e.preventDefault();
          const input = form.querySelector<HTMLInputElement>("#reply")!;
          void this.resolve(ticket.ticketId, input.value);
        };
      }
    }
  }

  private detailHtml(ticket: TicketView): string {
    if (ticket.status === "resolved") {
      return "";
    }
    const resolvable = ticket.status === "open" || ticket.claimant === this.supervisorId;
    return `
      <div class="ticket-detail">
        <div class="utterance">&ldquo;${escapeHtml(ticket.utterance)}&rdquo;</div>
        <span class="badge big" id="trigger-badge">${escapeHtml(ticket.badge)}</span>
        <h4>Dialogue act</h4><div id="act-bars"></div>
        <h4>Relations (attribute, value)</h4><div id="relation-bars"></div>
        <h4>Figure &amp; value presence</h4><div id="entity-bars"></div>
        <div class="actions">
          <button id="claim" ${ticket.status !== "open" ? "disabled" : ""}>Claim</button>
          <form id="resolve-form">
            <input id="reply" type="text" placeholder="Respond as the student"
                   ${resolvable ? "" : "disabled"} />
            <button type="submit" ${resolvable ? "" : "disabled"}>Send as student</button>
          </form>
        </div>
      </div>`;
  }

  private mountBars(payload: TicketPayload): void {
    const actRoot = this.root.querySelector<HTMLElement>("#act-bars");
    if (actRoot) {
      renderBars(
        actRoot,
        payload.diagnostics.distribution.mean_probs.map((value, i) => ({
          label: ACT_LABELS[i] ?? `class ${i}`,
          value,
        }))
      );
    }
    const relationRoot = this.root.querySelector<HTMLElement>("#relation-bars");
    if (relationRoot) {
      renderBars(
        relationRoot,
        payload.diagnostics.candidates.map((candidate) => ({
          label: `(${candidate.attribute}, ${candidate.value ?? "-"})`,
          value: candidate.confidence,
        }))
      );
    }
    const entityRoot = this.root.querySelector<HTMLElement>("#entity-bars");
    if (entityRoot) {
      const annotation = payload.diagnostics.annotation;
      renderBars(entityRoot, [
        { label: `figure: ${annotation.figure}`, value: annotation.figure_confidence },
        {
          label: `value presence: ${annotation.value_presence}`,
          value: annotation.presence_confidence,
        },
      ]);
    }
  }
}

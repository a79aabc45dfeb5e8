// Thin service client. Configured with a single endpoint URL plus the
// supervisor token; WebSocket/fetch implementations are injectable so the
// same code runs in the browser and in node-based tests.

import { UiEvent } from "./events.js";

export interface WebSocketLike {
  onmessage: ((event: { data: any }) => void) | null;
  onclose: (() => void) | null;
  onerror: ((err: any) => void) | null;
  close(): void;
}

export interface ClientConfig {
  baseUrl: string; // e.g. http://localhost:8000
  token?: string;
  fetchImpl?: typeof fetch;
  wsFactory?: (url: string) => WebSocketLike;
}

export class ApiError extends Error {
  code: string;
  status: number;
  phase: string | null;

  constructor(status: number, body: { code?: string; message?: string; phase?: string | null }) {
    super(body.message || `request failed with ${status}`);
    this.code = body.code || "error";
    this.status = status;
    this.phase = body.phase ?? null;
  }
}

export class ApiClient {
  private baseUrl: string;
  private token: string;
  private fetchImpl: typeof fetch;
  private wsFactory: (url: string) => WebSocketLike;

  constructor(config: ClientConfig) {
    this.baseUrl = config.baseUrl.replace(/\/$/, "");
    this.token = config.token || "";
    this.fetchImpl = config.fetchImpl || fetch.bind(globalThis);
    this.wsFactory =
      config.wsFactory || ((url: string) => new WebSocket(url) as unknown as WebSocketLike);
  }

  private async request(method: string, path: string, body?: unknown): Promise<any> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json().catch(() => ({}));
    if (!response.ok) {
      throw new ApiError(response.status, payload);
    }
    return payload;
  }

  createSession(sessionId?: string, scenario?: unknown): Promise<any> {
    return this.request("POST", "/api/sessions", {
      session_id: sessionId,
      scenario,
    });
  }

  postUtterance(sessionId: string, text: string): Promise<any> {
    return this.request("POST", `/api/sessions/${sessionId}/utterances`, { text });
  }

  transcript(sessionId: string, since = -1): Promise<any> {
    return this.request("GET", `/api/sessions/${sessionId}/transcript?since=${since}`);
  }

  submitSurvey(sessionId: string, answers: number[], role: string): Promise<any> {
    return this.request("POST", `/api/sessions/${sessionId}/survey`, { answers, role });
  }

  listTickets(): Promise<any[]> {
    return this.request("GET", `/api/tickets?token=${encodeURIComponent(this.token)}`);
  }

  claimTicket(ticketId: string, supervisorId: string): Promise<any> {
    return this.request("POST", `/api/tickets/${ticketId}/claim`, {
      supervisor_id: supervisorId,
      token: this.token,
    });
  }

  resolveTicket(ticketId: string, supervisorId: string, reply: string): Promise<any> {
    return this.request("POST", `/api/tickets/${ticketId}/resolve`, {
      supervisor_id: supervisorId,
      reply,
      token: this.token,
    });
  }

  getConfig(): Promise<any> {
    return this.request("GET", "/api/config");
  }

  private socketUrl(path: string): string {
    return this.baseUrl.replace(/^http/, "ws") + path;
  }

  openSessionSocket(sessionId: string, onEvent: (event: UiEvent) => void): WebSocketLike {
    const ws = this.wsFactory(this.socketUrl(`/ws/sessions/${sessionId}`));
    ws.onmessage = (message) => onEvent(JSON.parse(String(message.data)));
    return ws;
  }

  openSupervisorSocket(onEvent: (event: UiEvent) => void): WebSocketLike {
    const ws = this.wsFactory(
      this.socketUrl(`/ws/supervisor?token=${encodeURIComponent(this.token)}`)
    );
    ws.onmessage = (message) => onEvent(JSON.parse(String(message.data)));
    return ws;
  }
}

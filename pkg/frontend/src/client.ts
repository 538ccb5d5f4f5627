// Service-API client: REST for registration, one WebSocket stream per
// session. Reconnects with backoff; the server replays the full log on
// every connect, so the handler simply rebuilds state from scratch.

import type { ChatEvent, RegistrationResponse } from "./protocol.js";
import { isChatEvent } from "./protocol.js";

export class RegistrationError extends Error {
  constructor(message: string, readonly retryable: boolean) {
    super(message);
  }
}

export async function createSession(
  baseUrl: string,
  fields: { first_name: string; pronouns: string; topic: string; seed?: number },
): Promise<RegistrationResponse> {
  const response = await fetch(`${baseUrl}/sessions`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(fields),
  });
  if (response.status === 201) {
    return (await response.json()) as RegistrationResponse;
  }
  const body = await response.text();
  if (response.status === 502) {
    throw new RegistrationError("The scenario could not be generated. Please retry.", true);
  }
  throw new RegistrationError(`Registration failed (${response.status}): ${body}`, false);
}

export interface StreamCallbacks {
  onReplayStart(): void; // fired per (re)connect, before the log replays
  onEvent(event: ChatEvent): void;
  onStatus(connected: boolean): void;
}

type WebSocketLike = Pick<WebSocket, "send" | "close"> & {
  onopen: ((ev: unknown) => void) | null;
  onclose: ((ev: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
};

export type SocketFactory = (url: string) => WebSocketLike;

export class SessionStream {
  private socket: WebSocketLike | null = null;
  private closed = false;
  private retryDelay = 500;

  constructor(
    private readonly wsUrl: string,
    private readonly callbacks: StreamCallbacks,
    private readonly socketFactory: SocketFactory = (url) =>
      new WebSocket(url) as unknown as WebSocketLike,
    private readonly schedule: (fn: () => void, ms: number) => void = (fn, ms) => {
      setTimeout(fn, ms);
    },
  ) {}

  connect(): void {
    if (this.closed) return;
    const socket = this.socketFactory(this.wsUrl);
    this.socket = socket;
    socket.onopen = () => {
      this.retryDelay = 500;
      this.callbacks.onReplayStart();
      this.callbacks.onStatus(true);
    };
    socket.onmessage = (message) => {
      let parsed: unknown;
      try {
        parsed = JSON.parse(String(message.data));
      } catch {
        console.warn("unparseable frame", message.data);
        return;
      }
      if (typeof parsed === "object" && parsed !== null && (parsed as { type?: string }).type === "heartbeat") {
        return;
      }
      if (isChatEvent(parsed)) {
        this.callbacks.onEvent(parsed);
      } else {
        console.warn("skipping non-event frame", parsed);
      }
    };
    socket.onclose = () => {
      this.callbacks.onStatus(false);
      if (!this.closed) {
        this.schedule(() => this.connect(), this.retryDelay);
        this.retryDelay = Math.min(this.retryDelay * 2, 10_000);
      }
    };
  }

  send(payload: Record<string, unknown>): void {
    this.socket?.send(JSON.stringify(payload));
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }
}

export function streamUrl(baseUrl: string, sessionId: string): string {
  const ws = baseUrl.replace(/^http/, "ws");
  return `${ws}/sessions/${sessionId}/stream`;
}

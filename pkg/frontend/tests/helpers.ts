// Scripted protocol driver: serves a recorded wire-event log the way the
// real service does — full replay on connect, then batches that follow each
// client frame. The log was produced by the backend harness (see
// fixtures/generate.py), so the client is tested against genuine protocol
// traffic.

import type { ChatEvent, Payload } from "../src/protocol.js";
import type { SocketFactory } from "../src/client.js";

const CLIENT_TAGS = new Set(["user_draft", "option_selected", "continue_submitted"]);

function sortKeys(value: unknown): unknown {
  if (Array.isArray(value)) return value.map(sortKeys);
  if (typeof value === "object" && value !== null) {
    return Object.fromEntries(
      Object.entries(value as Record<string, unknown>)
        .sort(([a], [b]) => (a < b ? -1 : 1))
        .map(([key, entry]) => [key, sortKeys(entry)]),
    );
  }
  return value;
}

function stable(value: unknown): string {
  return JSON.stringify(sortKeys(value));
}

export class FakeSocket {
  onopen: ((ev: unknown) => void) | null = null;
  onclose: ((ev: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  sent: string[] = [];

  constructor(private readonly server: FakeServer) {}

  open(): void {
    this.onopen?.({});
  }

  deliver(event: ChatEvent | { type: string }): void {
    this.onmessage?.({ data: JSON.stringify(event) });
  }

  send(frame: string): void {
    this.sent.push(frame);
    this.server.receive(this, JSON.parse(frame) as Record<string, unknown>);
  }

  close(): void {
    this.onclose?.({});
  }

  dropFromServer(): void {
    this.onclose?.({});
  }
}

export class FakeServer {
  private delivered = 0; // events persisted & already pushed at least once
  sockets: FakeSocket[] = [];
  errors: string[] = []; // protocol mismatches; tests assert this stays empty

  constructor(private readonly log: ChatEvent[]) {}

  factory(): SocketFactory {
    return () => {
      const socket = new FakeSocket(this);
      this.sockets.push(socket);
      queueMicrotask(() => {
        socket.open();
        // replay everything persisted so far, then wait for frames
        for (let i = 0; i < this.delivered; i += 1) {
          socket.deliver(this.log[i]!);
        }
        this.pushUntilClientEvent(socket);
      });
      return socket;
    };
  }

  connectSync(): FakeSocket {
    const socket = new FakeSocket(this);
    this.sockets.push(socket);
    socket.open();
    for (let i = 0; i < this.delivered; i += 1) {
      socket.deliver(this.log[i]!);
    }
    this.pushUntilClientEvent(socket);
    return socket;
  }

  nextExpected(): Payload | null {
    const event = this.log[this.delivered];
    return event ? event.payload : null;
  }

  finished(): boolean {
    return this.delivered >= this.log.length;
  }

  receive(socket: FakeSocket, frame: Record<string, unknown>): void {
    if (frame.type === "resume") {
      this.pushUntilClientEvent(socket);
      return;
    }
    const expected = this.nextExpected();
    if (!expected || !CLIENT_TAGS.has(expected.type)) {
      this.errors.push(`unexpected client frame ${stable(frame)}: none scripted`);
      return;
    }
    if (stable(frame) !== stable(expected)) {
      this.errors.push(
        `client frame ${stable(frame)} does not match scripted ${stable(expected)}`,
      );
      return;
    }
    socket.deliver(this.log[this.delivered]!);
    this.delivered += 1;
    this.pushUntilClientEvent(socket);
  }

  private pushUntilClientEvent(socket: FakeSocket): void {
    while (this.delivered < this.log.length) {
      const event = this.log[this.delivered]!;
      if (CLIENT_TAGS.has(event.payload.type)) return;
      socket.deliver(event);
      this.delivered += 1;
    }
  }
}

export async function flushMicrotasks(): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, 0));
}

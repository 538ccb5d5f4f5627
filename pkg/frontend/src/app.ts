// Screen wiring: registration -> brief -> chat. The chat screen re-renders
// from the reducer state after every server event; no optimistic updates.

import { createSession, RegistrationError, SessionStream, streamUrl } from "./client.js";
import type { RegistrationResponse } from "./protocol.js";
import { initialState, renderEvent, type ViewState } from "./state.js";
import { renderBrief, renderChat, renderRegistration } from "./view.js";

declare global {
  interface Window {
    CONVOCOACH_BASE_URL?: string;
  }
}

export interface AppOptions {
  root: HTMLElement;
  baseUrl?: string;
  socketFactory?: ConstructorParameters<typeof SessionStream>[2];
}

export class App {
  private readonly root: HTMLElement;
  private readonly baseUrl: string;
  private readonly socketFactory: AppOptions["socketFactory"];
  private state: ViewState = initialState();
  private session: RegistrationResponse | null = null;
  private stream: SessionStream | null = null;

  constructor(options: AppOptions) {
    this.root = options.root;
    this.baseUrl =
      options.baseUrl ?? window.CONVOCOACH_BASE_URL ?? window.location.origin;
    this.socketFactory = options.socketFactory;
  }

  start(): void {
    this.showRegistration();
  }

  private showRegistration(serverError?: string): void {
    renderRegistration(
      this.root,
      {
        onSubmit: (fields) => {
          void this.register(fields);
        },
      },
      serverError,
    );
  }

  private async register(fields: { first_name: string; pronouns: string; topic: string }) {
    try {
      this.session = await createSession(this.baseUrl, fields);
    } catch (error) {
      const message =
        error instanceof RegistrationError
          ? error.message
          : "The service is unreachable. Please retry.";
      this.showRegistration(message);
      return;
    }
    renderBrief(this.root, this.session.brief, () => this.openChat());
  }

  private openChat(): void {
    if (!this.session) return;
    const session = this.session;
    this.stream = new SessionStream(
      streamUrl(this.baseUrl, session.session_id),
      {
        onReplayStart: () => {
          // the server replays the full log on each connect
          this.state = initialState();
          this.paint();
        },
        onEvent: (event) => {
          this.state = renderEvent(this.state, event);
          this.paint();
        },
        onStatus: () => {
          this.paint();
        },
      },
      this.socketFactory,
    );
    this.stream.connect();
    this.paint();
  }

  private paint(): void {
    if (!this.session) return;
    renderChat(this.root, this.state, this.session.character_name, {
      onDraft: (text) => this.stream?.send({ type: "user_draft", text }),
      onSelect: (index) => this.stream?.send({ type: "option_selected", index }),
      onContinue: (text) => this.stream?.send({ type: "continue_submitted", text }),
      onResume: () => this.stream?.send({ type: "resume" }),
    });
  }

  // test hook: current reducer state
  viewState(): ViewState {
    return this.state;
  }
}

export function mount(root: HTMLElement, baseUrl?: string): App {
  const app = new App({ root, baseUrl });
  app.start();
  return app;
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  mount(document.getElementById("app") as HTMLElement);
}

// Pure view-state reducer. Every rendered change originates from a server
// event — there is no optimistic path. Replaying the same event log always
// reconstructs the identical ViewState, which is what makes reconnect safe.

import type { ChatEvent, WireFeedback, WireOption } from "./protocol.js";
import { KNOWN_PAYLOADS } from "./protocol.js";

export interface Bubble {
  item: "bubble";
  side: "user" | "character";
  role: string;
  text: string;
}

export interface FeedbackPanel {
  item: "feedback";
  kind: "positive" | "constructive";
  heading: string;
  body: string;
  alternative: { text: string; rationale: string } | null;
}

export interface Notice {
  item: "notice";
  code: string;
  message: string;
  retryable: boolean;
}

export type TranscriptItem = Bubble | FeedbackPanel | Notice;

// What the composer area offers. "blocked" covers in-flight generation and
// the gap between constructive feedback and its continue prompt.
export type ComposerMode = "free" | "blocked" | "options" | "continue" | "done";

export interface ViewState {
  items: TranscriptItem[];
  composer: ComposerMode;
  options: WireOption[]; // canonical order; render sorted by display_position
  continueText: string;
  pendingDraft: string | null;
  generating: boolean;
  completed: boolean;
  lastEventId: number;
  positives: number;
  constructives: number;
}

export function initialState(): ViewState {
  return {
    items: [],
    composer: "free",
    options: [],
    continueText: "",
    pendingDraft: null,
    generating: false,
    completed: false,
    lastEventId: 0,
    positives: 0,
    constructives: 0,
  };
}

export function displayOrder(options: WireOption[]): WireOption[] {
  return [...options].sort((a, b) => a.display_position - b.display_position);
}

function withItem(state: ViewState, item: TranscriptItem): ViewState {
  return { ...state, items: [...state.items, item] };
}

function feedbackPanel(feedback: WireFeedback): FeedbackPanel {
  return {
    item: "feedback",
    kind: feedback.kind_tag,
    heading: feedback.heading,
    body: feedback.body,
    alternative: feedback.best_alternative
      ? { text: feedback.best_alternative.text, rationale: feedback.best_alternative.rationale }
      : null,
  };
}

export function renderEvent(state: ViewState, event: ChatEvent): ViewState {
  const payload = event.payload;
  if (!KNOWN_PAYLOADS.has(payload.type)) {
    console.warn("skipping unknown chat event payload", payload);
    return state;
  }
  const next: ViewState = { ...state, lastEventId: event.event_id };

  switch (payload.type) {
    case "chat_started":
      return { ...next, composer: "free" };

    case "user_draft":
      // Not a bubble yet: a free-turn reply flushes it, an option set
      // replaces it.
      return { ...next, pendingDraft: payload.text, composer: "blocked", generating: true };

    case "options_presented":
      return {
        ...next,
        pendingDraft: null,
        options: payload.option_set.options,
        composer: "options",
        generating: false,
      };

    case "option_selected": {
      const option = next.options[payload.index];
      const sent = option ? option.text : `(option ${payload.index})`;
      return {
        ...withItem(next, { item: "bubble", side: "user", role: "sent_option", text: sent }),
        options: [],
        composer: "blocked",
        generating: true,
      };
    }

    case "character_message": {
      let flushed = next;
      const hadPendingDraft = next.pendingDraft !== null;
      if (hadPendingDraft) {
        flushed = withItem(flushed, {
          item: "bubble",
          side: "user",
          role: "draft",
          text: next.pendingDraft as string,
        });
        flushed = { ...flushed, pendingDraft: null };
      }
      flushed = withItem(flushed, {
        item: "bubble",
        side: "character",
        role: payload.role,
        text: payload.text,
      });
      switch (payload.role) {
        case "blunt_trigger":
          // opens a turn; the user may now draft
          return { ...flushed, composer: "free", generating: false };
        case "continue_reply":
          // closes a repaired turn; the next turn begins
          return { ...flushed, composer: "free", generating: false };
        case "normal_reply":
          if (hadPendingDraft) {
            // free-turn reply: turn complete
            return { ...flushed, composer: "free", generating: false };
          }
          // right-pick response: positive feedback still on its way
          return { ...flushed, composer: "blocked", generating: true };
        default:
          // clarification / blunt_follow_up: feedback still on its way
          return { ...flushed, composer: "blocked", generating: true };
      }
    }

    case "feedback_presented": {
      const panel = feedbackPanel(payload.feedback);
      const flushed = withItem(next, panel);
      if (panel.kind === "positive") {
        return { ...flushed, positives: flushed.positives + 1, composer: "free", generating: false };
      }
      // locked until the continue prompt (sent in the same batch) arrives
      return {
        ...flushed,
        constructives: flushed.constructives + 1,
        composer: "blocked",
        generating: false,
      };
    }

    case "continue_prompt":
      return {
        ...next,
        composer: "continue",
        continueText: payload.prefilled_text,
        generating: false,
      };

    case "continue_submitted":
      return {
        ...withItem(next, { item: "bubble", side: "user", role: "continue", text: payload.text }),
        composer: "blocked",
        continueText: "",
        generating: true,
      };

    case "session_completed":
      return { ...next, composer: "done", completed: true, generating: false };

    case "error_notice":
      return {
        ...withItem(next, {
          item: "notice",
          code: payload.code,
          message: payload.message,
          retryable: payload.retryable ?? false,
        }),
        generating: false,
      };
  }
}

export function replay(events: ChatEvent[]): ViewState {
  return events.reduce(renderEvent, initialState());
}

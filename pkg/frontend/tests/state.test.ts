import { describe, expect, it, vi } from "vitest";

import type { ChatEvent, Payload } from "../src/protocol.js";
import { initialState, renderEvent, replay, type ViewState } from "../src/state.js";
import fixture from "./fixtures/session_events.json";

const LOG = fixture as unknown as ChatEvent[];

let counter = 0;
function ev(payload: Payload): ChatEvent {
  counter += 1;
  return { v: 1, event_id: counter, session_id: "s", ts: "2025-01-01T00:00:00.000+00:00", payload };
}

function apply(payloads: Payload[], from?: ViewState): ViewState {
  return payloads.reduce((state, payload) => renderEvent(state, ev(payload)), from ?? initialState());
}

const OPTIONS = {
  options: [
    { text: "canonical zero", display_position: 2 },
    { text: "canonical one", display_position: 0 },
    { text: "canonical two", display_position: 1 },
  ],
  kind: "indirect_speech_act",
};

describe("composer gating", () => {
  it("starts free and blocks while the server is generating", () => {
    let state = apply([{ type: "chat_started" }]);
    expect(state.composer).toBe("free");
    state = apply([{ type: "user_draft", text: "hello" }], state);
    expect(state.composer).toBe("blocked");
    expect(state.generating).toBe(true);
  });

  it("free-turn reply flushes the draft bubble and re-enables input", () => {
    const state = apply([
      { type: "chat_started" },
      { type: "user_draft", text: "hello there" },
      { type: "character_message", text: "hi!", role: "normal_reply" },
    ]);
    expect(state.items.map((item) => item.item)).toEqual(["bubble", "bubble"]);
    expect(state.items[0]).toMatchObject({ side: "user", text: "hello there" });
    expect(state.items[1]).toMatchObject({ side: "character", text: "hi!" });
    expect(state.composer).toBe("free");
    expect(state.generating).toBe(false);
  });

  it("options replace the input and keep display order", () => {
    const state = apply([
      { type: "chat_started" },
      { type: "user_draft", text: "scenario draft" },
      { type: "options_presented", option_set: OPTIONS },
    ]);
    expect(state.composer).toBe("options");
    expect(state.pendingDraft).toBeNull();
    // canonical array untouched; display order derived at render time
    expect(state.options.map((option) => option.text)).toEqual([
      "canonical zero",
      "canonical one",
      "canonical two",
    ]);
  });

  it("selection sends the canonical option text as the user bubble", () => {
    const state = apply([
      { type: "chat_started" },
      { type: "user_draft", text: "scenario draft" },
      { type: "options_presented", option_set: OPTIONS },
      { type: "option_selected", index: 1 },
    ]);
    const bubble = state.items.at(-1);
    expect(bubble).toMatchObject({ side: "user", text: "canonical one" });
    expect(state.composer).toBe("blocked");
  });

  it("constructive feedback locks input until the continue prompt arrives", () => {
    let state = apply([
      { type: "chat_started" },
      { type: "user_draft", text: "scenario draft" },
      { type: "options_presented", option_set: OPTIONS },
      { type: "option_selected", index: 0 },
      { type: "character_message", text: "do you mean a or b?", role: "clarification" },
      {
        type: "feedback_presented",
        feedback: {
          kind_tag: "constructive",
          heading: "A Clearer Way",
          body: "the readings differ",
          best_alternative: { text: "canonical one", rationale: "it is direct" },
          continue_message: "sorry, i meant it plainly",
        },
      },
    ]);
    expect(state.composer).toBe("blocked");
    expect(state.constructives).toBe(1);
    state = apply([{ type: "continue_prompt", prefilled_text: "sorry, i meant it plainly" }], state);
    expect(state.composer).toBe("continue");
    expect(state.continueText).toBe("sorry, i meant it plainly");
    state = apply(
      [
        { type: "continue_submitted", text: "sorry, i meant it plainly" },
        { type: "character_message", text: "got it, thanks", role: "continue_reply" },
      ],
      state,
    );
    expect(state.composer).toBe("free");
  });

  it("positive feedback re-enables input with no gate", () => {
    const state = apply([
      { type: "chat_started" },
      { type: "user_draft", text: "scenario draft" },
      { type: "options_presented", option_set: OPTIONS },
      { type: "option_selected", index: 1 },
      { type: "character_message", text: "clear answer", role: "normal_reply" },
      {
        type: "feedback_presented",
        feedback: {
          kind_tag: "positive",
          heading: "Nice",
          body: "that was clear",
          best_alternative: null,
          continue_message: null,
        },
      },
    ]);
    expect(state.composer).toBe("free");
    expect(state.positives).toBe(1);
  });

  it("blunt trigger opens the turn with input available", () => {
    const state = apply([
      { type: "chat_started" },
      { type: "character_message", text: "let's talk about something else.", role: "blunt_trigger" },
    ]);
    expect(state.composer).toBe("free");
    expect(state.items[0]).toMatchObject({ side: "character", role: "blunt_trigger" });
  });

  it("session completion shows the summary", () => {
    const state = apply([{ type: "chat_started" }, { type: "session_completed" }]);
    expect(state.composer).toBe("done");
    expect(state.completed).toBe(true);
  });
});

describe("robustness", () => {
  it("skips unknown payload tags with a console diagnostic", () => {
    const warn = vi.spyOn(console, "warn").mockImplementation(() => {});
    const state = initialState();
    const next = renderEvent(state, ev({ type: "mystery" } as unknown as Payload));
    expect(next).toEqual(state);
    expect(warn).toHaveBeenCalled();
    warn.mockRestore();
  });

  it("error notices append as alerts and stop the typing indicator", () => {
    const state = apply([
      { type: "chat_started" },
      { type: "user_draft", text: "hi" },
      { type: "error_notice", code: "GenerationFailed", message: "try again", retryable: true },
    ]);
    expect(state.items.at(-1)).toMatchObject({ item: "notice", retryable: true });
    expect(state.generating).toBe(false);
  });
});

describe("replay", () => {
  it("is deterministic over the recorded session log", () => {
    expect(replay(LOG)).toEqual(replay(LOG));
  });

  it("drives the recorded session to completion", () => {
    const state = replay(LOG);
    expect(state.completed).toBe(true);
    expect(state.composer).toBe("done");
    expect(state.constructives).toBe(1); // the scripted wrong pick
    expect(state.positives).toBe(7);
  });

  it("prefix replay equals incremental application", () => {
    const prefix = LOG.slice(0, 20);
    const incremental = prefix.reduce(renderEvent, initialState());
    expect(replay(prefix)).toEqual(incremental);
  });
});

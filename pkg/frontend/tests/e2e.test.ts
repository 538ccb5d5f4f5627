// End-to-end UI script against recorded protocol traffic: registration ->
// brief -> two free messages -> wrong pick -> constructive panel -> continue
// gate -> full session completion.

import { beforeEach, describe, expect, it, vi } from "vitest";

import { App } from "../src/app.js";
import type { ChatEvent } from "../src/protocol.js";
import { FakeServer, flushMicrotasks } from "./helpers.js";
import fixture from "./fixtures/session_events.json";
import registration from "./fixtures/registration.json";

const LOG = fixture as unknown as ChatEvent[];

function mountApp(server: FakeServer): { root: HTMLElement; app: App } {
  document.body.innerHTML = '<div id="app"></div>';
  const root = document.getElementById("app") as HTMLElement;
  const app = new App({ root, baseUrl: "http://svc.test", socketFactory: server.factory() });
  app.start();
  return { root, app };
}

function fillRegistration(root: HTMLElement, fields: Record<string, string>): void {
  for (const [name, value] of Object.entries(fields)) {
    (root.querySelector(`#field-${name}`) as HTMLInputElement).value = value;
  }
}

function submit(form: Element): void {
  form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
}

async function registerAndStart(root: HTMLElement): Promise<void> {
  fillRegistration(root, { first_name: "Mark", pronouns: "he/him", topic: "machine learning" });
  submit(root.querySelector("form.registration")!);
  await flushMicrotasks();
  expect(root.textContent).toContain("Background Information");
  expect(root.textContent).toContain(registration.brief.instruction);
  (root.querySelector("button.send") as HTMLButtonElement).click();
  await flushMicrotasks();
}

beforeEach(() => {
  vi.restoreAllMocks();
  vi.stubGlobal(
    "fetch",
    vi.fn(async () => new Response(JSON.stringify(registration), { status: 201 })),
  );
});

describe("registration screen", () => {
  it("blocks submission with inline errors and sends no request", async () => {
    const { root } = mountApp(new FakeServer(LOG));
    fillRegistration(root, { first_name: "Mark" }); // topic left empty
    submit(root.querySelector("form.registration")!);
    await flushMicrotasks();
    const error = root.querySelector("#error-topic") as HTMLElement;
    expect(error.hidden).toBe(false);
    expect(error.textContent).toContain("required");
    expect(fetch).not.toHaveBeenCalled();
  });

  it("shows a retryable banner when scenario generation fails", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async () => new Response(JSON.stringify({ detail: "boom" }), { status: 502 })),
    );
    const { root } = mountApp(new FakeServer(LOG));
    fillRegistration(root, { first_name: "Mark", pronouns: "", topic: "machine learning" });
    submit(root.querySelector("form.registration")!);
    await flushMicrotasks();
    const banner = root.querySelector(".notice") as HTMLElement;
    expect(banner.textContent).toContain("retry");
    expect(banner.querySelector("button.retry")).toBeTruthy();
  });

  it("navigates to the brief screen on success", async () => {
    const { root } = mountApp(new FakeServer(LOG));
    fillRegistration(root, { first_name: "Mark", pronouns: "he/him", topic: "machine learning" });
    submit(root.querySelector("form.registration")!);
    await flushMicrotasks();
    expect(root.textContent).toContain("Background Information");
    expect(root.textContent).toContain("Julia");
    expect(root.querySelector("button.send")?.textContent).toBe("Start Chat");
  });
});

describe("full session through the chat screen", () => {
  it("walks the scripted session end to end", async () => {
    const server = new FakeServer(LOG);
    const { root, app } = mountApp(server);
    await registerAndStart(root);

    // fresh session: replay of zero events, then the chat opens
    expect(app.viewState().lastEventId).toBeGreaterThan(0);
    expect(root.querySelector("#draft-input")).toBeTruthy();
    expect(root.textContent).not.toContain("select the best-phrased");

    let sawOptions = false;
    let sawConstructive = false;
    let guard = 0;
    while (!server.finished() && guard < 200) {
      guard += 1;
      const expected = server.nextExpected();
      if (!expected) break;
      if (expected.type === "user_draft") {
        const input = root.querySelector("#draft-input") as HTMLInputElement;
        expect(input).toBeTruthy();
        expect(input.disabled).toBe(false);
        input.value = expected.text;
        submit(root.querySelector("form.draft-form")!);
      } else if (expected.type === "option_selected") {
        sawOptions = true;
        // input box is gone; exactly three option buttons, display order
        expect(root.querySelector("#draft-input")).toBeNull();
        const buttons = [...root.querySelectorAll("button.option")] as HTMLButtonElement[];
        expect(buttons).toHaveLength(3);
        expect(root.textContent).toContain("select the best-phrased");
        const state = app.viewState();
        const ordered = [...state.options].sort(
          (a, b) => a.display_position - b.display_position,
        );
        expect(buttons.map((b) => b.textContent)).toEqual(ordered.map((o) => o.text));
        const target = buttons.find(
          (b) => Number(b.dataset.canonicalIndex) === expected.index,
        )!;
        target.click();
      } else {
        // continue gate: free typing is gone, the prefilled text is locked
        sawConstructive = true;
        const input = root.querySelector("#continue-input") as HTMLInputElement;
        expect(input).toBeTruthy();
        expect(input.readOnly).toBe(true);
        expect(input.value).toBe(expected.text);
        expect(root.querySelector("#draft-input")).toBeNull();
        const panels = [...root.querySelectorAll("section.feedback.constructive")];
        expect(panels.length).toBeGreaterThan(0);
        expect(panels.at(-1)!.querySelector("blockquote.alternative-text")).toBeTruthy();
        submit(root.querySelector("form.continue-form")!);
        // the continue reply re-enables free input
        const revived = root.querySelector("#draft-input") as HTMLInputElement;
        expect(revived).toBeTruthy();
        expect(revived.disabled).toBe(false);
      }
    }

    expect(server.errors).toEqual([]);
    expect(sawOptions).toBe(true);
    expect(sawConstructive).toBe(true);
    expect(server.finished()).toBe(true);
    expect(app.viewState().completed).toBe(true);
    const banner = root.querySelector(".completed") as HTMLElement;
    expect(banner.textContent).toContain("Session complete");
    // blue (user) and gray (character) bubbles both present
    expect(root.querySelectorAll(".msg.user").length).toBeGreaterThan(5);
    expect(root.querySelectorAll(".msg.character").length).toBeGreaterThan(5);
  });

  it("never renders enabled free input while options are pending", async () => {
    const server = new FakeServer(LOG);
    const { root } = mountApp(server);
    await registerAndStart(root);
    // walk to the first options prompt
    while (server.nextExpected()?.type === "user_draft") {
      const input = root.querySelector("#draft-input") as HTMLInputElement;
      input.value = (server.nextExpected() as { text: string }).text;
      submit(root.querySelector("form.draft-form")!);
    }
    expect(server.errors).toEqual([]);
    expect(server.nextExpected()?.type).toBe("option_selected");
    expect(root.querySelector("#draft-input")).toBeNull();
    expect(root.querySelectorAll("button.option")).toHaveLength(3);
  });
});

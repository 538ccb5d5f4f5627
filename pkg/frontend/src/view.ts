// DOM rendering: the chat screen is re-rendered from ViewState after every
// server event. Controls only exist in phases where their event is legal,
// so the UI cannot submit out of phase through its own affordances.

import type { ViewState } from "./state.js";
import { displayOrder } from "./state.js";

export interface ComposerHandlers {
  onDraft(text: string): void;
  onSelect(canonicalIndex: number): void;
  onContinue(text: string): void;
  onResume(): void;
}

export const OPTION_INSTRUCTION =
  "Based on your understanding of direct, literal communication styles, " +
  "select the best-phrased message below.";

export const CONTINUE_INSTRUCTION = "Send this message to clarify and continue the conversation.";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderChat(
  root: HTMLElement,
  state: ViewState,
  characterName: string,
  handlers: ComposerHandlers,
): void {
  root.textContent = "";

  const log = el("div", "chat-log");
  log.id = "chat-log";
  log.setAttribute("role", "log");
  log.setAttribute("aria-live", "polite");
  log.setAttribute("aria-label", `Conversation with ${characterName}`);

  for (const item of state.items) {
    if (item.item === "bubble") {
      const bubble = el("div", `msg ${item.side}`, item.text);
      bubble.dataset.role = item.role;
      log.appendChild(bubble);
    } else if (item.item === "feedback") {
      const panel = el("section", `feedback ${item.kind}`);
      panel.setAttribute("aria-label", `Feedback: ${item.heading}`);
      panel.appendChild(el("h2", "feedback-heading", item.heading));
      panel.appendChild(el("p", "feedback-body", item.body));
      if (item.alternative) {
        const alt = el("div", "alternative");
        alt.appendChild(el("p", "alternative-label", "As an alternative, you could try:"));
        alt.appendChild(el("blockquote", "alternative-text", item.alternative.text));
        if (item.alternative.rationale) {
          alt.appendChild(el("p", "alternative-rationale", item.alternative.rationale));
        }
        panel.appendChild(alt);
      }
      log.appendChild(panel);
    } else {
      const notice = el("div", "notice", `${item.message}`);
      notice.setAttribute("role", "alert");
      if (item.retryable) {
        const retry = el("button", "retry", "Try again");
        retry.type = "button";
        retry.addEventListener("click", () => handlers.onResume());
        notice.appendChild(retry);
      }
      log.appendChild(notice);
    }
  }

  if (state.generating) {
    const typing = el("div", "typing", `${characterName} is typing…`);
    typing.setAttribute("role", "status");
    log.appendChild(typing);
  }

  root.appendChild(log);
  root.appendChild(renderComposer(state, handlers));
}

function renderComposer(state: ViewState, handlers: ComposerHandlers): HTMLElement {
  const composer = el("div", "composer");
  composer.id = "composer";

  switch (state.composer) {
    case "free":
    case "blocked": {
      const form = el("form", "draft-form") as HTMLFormElement;
      const input = el("input") as HTMLInputElement;
      input.type = "text";
      input.id = "draft-input";
      input.placeholder = "Write your message here";
      input.setAttribute("aria-label", "Write your message");
      input.disabled = state.composer === "blocked";
      const send = el("button", "send", "Send") as HTMLButtonElement;
      send.type = "submit";
      send.disabled = state.composer === "blocked";
      form.appendChild(input);
      form.appendChild(send);
      form.addEventListener("submit", (submitEvent) => {
        submitEvent.preventDefault();
        const text = input.value.trim();
        if (text) {
          handlers.onDraft(text);
          input.value = "";
        }
      });
      composer.appendChild(form);
      break;
    }
    case "options": {
      const group = el("div", "options");
      group.setAttribute("role", "group");
      group.setAttribute("aria-label", "Message options");
      group.appendChild(el("p", "instruction", OPTION_INSTRUCTION));
      for (const option of displayOrder(state.options)) {
        const canonicalIndex = state.options.indexOf(option);
        const button = el("button", "option", option.text) as HTMLButtonElement;
        button.type = "button";
        button.dataset.canonicalIndex = String(canonicalIndex);
        button.addEventListener("click", () => handlers.onSelect(canonicalIndex));
        group.appendChild(button);
      }
      composer.appendChild(group);
      break;
    }
    case "continue": {
      const form = el("form", "continue-form") as HTMLFormElement;
      form.appendChild(el("p", "instruction", CONTINUE_INSTRUCTION));
      const input = el("input") as HTMLInputElement;
      input.type = "text";
      input.id = "continue-input";
      input.value = state.continueText;
      input.readOnly = true;
      input.setAttribute("aria-label", "Prefilled message to continue the conversation");
      const send = el("button", "send", "Send") as HTMLButtonElement;
      send.type = "submit";
      form.appendChild(input);
      form.appendChild(send);
      form.addEventListener("submit", (submitEvent) => {
        submitEvent.preventDefault();
        handlers.onContinue(input.value);
      });
      composer.appendChild(form);
      break;
    }
    case "done": {
      const banner = el("div", "completed");
      banner.setAttribute("role", "status");
      banner.appendChild(el("h2", undefined, "Session complete"));
      banner.appendChild(
        el(
          "p",
          undefined,
          `You worked through ${state.positives + state.constructives} scenario turns: ` +
            `${state.positives} read clearly the first time, ` +
            `${state.constructives} gave you a repair to practice.`,
        ),
      );
      composer.appendChild(banner);
      break;
    }
  }
  return composer;
}

export interface RegistrationHandlers {
  onSubmit(fields: { first_name: string; pronouns: string; topic: string }): void;
}

export function renderRegistration(
  root: HTMLElement,
  handlers: RegistrationHandlers,
  serverError?: string,
): void {
  root.textContent = "";
  const form = el("form", "registration") as HTMLFormElement;
  form.setAttribute("aria-label", "Registration");

  if (serverError) {
    const banner = el("div", "notice", serverError);
    banner.setAttribute("role", "alert");
    const retry = el("button", "retry", "Try again") as HTMLButtonElement;
    retry.type = "submit";
    banner.appendChild(retry);
    form.appendChild(banner);
  }

  const fields: Array<[string, string, boolean]> = [
    ["first_name", "First name", true],
    ["pronouns", "Pronouns", false],
    ["topic", "A topic you're interested in", true],
  ];
  for (const [name, label, required] of fields) {
    const wrapper = el("div", "field");
    const labelNode = el("label", undefined, label) as HTMLLabelElement;
    labelNode.htmlFor = `field-${name}`;
    const input = el("input") as HTMLInputElement;
    input.type = "text";
    input.id = `field-${name}`;
    input.name = name;
    if (required) input.setAttribute("aria-required", "true");
    const error = el("p", "field-error");
    error.id = `error-${name}`;
    error.hidden = true;
    input.setAttribute("aria-describedby", error.id);
    wrapper.appendChild(labelNode);
    wrapper.appendChild(input);
    wrapper.appendChild(error);
    form.appendChild(wrapper);
  }

  const submit = el("button", "send", "Complete Registration") as HTMLButtonElement;
  submit.type = "submit";
  form.appendChild(submit);

  form.addEventListener("submit", (submitEvent) => {
    submitEvent.preventDefault();
    const value = (name: string) =>
      (form.querySelector(`#field-${name}`) as HTMLInputElement).value.trim();
    let valid = true;
    for (const [name, label, required] of fields) {
      const error = form.querySelector(`#error-${name}`) as HTMLElement;
      if (required && !value(name)) {
        error.textContent = `${label} is required`;
        error.hidden = false;
        (form.querySelector(`#field-${name}`) as HTMLInputElement).setAttribute(
          "aria-invalid",
          "true",
        );
        valid = false;
      } else {
        error.hidden = true;
        (form.querySelector(`#field-${name}`) as HTMLInputElement).removeAttribute("aria-invalid");
      }
    }
    if (!valid) return; // inline errors only; no request leaves the page
    handlers.onSubmit({
      first_name: value("first_name"),
      pronouns: value("pronouns"),
      topic: value("topic"),
    });
  });

  root.appendChild(form);
}

export function renderBrief(
  root: HTMLElement,
  brief: { background: string; instruction: string },
  onStart: () => void,
): void {
  root.textContent = "";
  const screen = el("div", "brief");
  const background = el("section");
  background.setAttribute("aria-label", "Background information");
  background.appendChild(el("h2", undefined, "Background Information"));
  background.appendChild(el("p", undefined, brief.background));
  const instruction = el("section");
  instruction.setAttribute("aria-label", "Instruction");
  instruction.appendChild(el("h2", undefined, "Instruction"));
  instruction.appendChild(el("p", undefined, brief.instruction));
  const start = el("button", "send", "Start Chat") as HTMLButtonElement;
  start.type = "button";
  start.addEventListener("click", onStart);
  screen.appendChild(background);
  screen.appendChild(instruction);
  screen.appendChild(start);
  root.appendChild(screen);
}

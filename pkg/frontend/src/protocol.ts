// Wire types for the session service (protocol v1, see docs/protocol.md).
// Option sets arrive redacted: texts and display positions only.

export interface WireOption {
  text: string;
  display_position: number;
}

export interface WireOptionSet {
  options: WireOption[];
  kind: string;
}

export interface WireAlternative {
  text: string;
  rationale: string;
}

export interface WireFeedback {
  kind_tag: "positive" | "constructive";
  heading: string;
  body: string;
  best_alternative: WireAlternative | null;
  continue_message: string | null;
}

export type Payload =
  | { type: "chat_started" }
  | { type: "user_draft"; text: string }
  | { type: "option_selected"; index: number }
  | { type: "continue_submitted"; text: string }
  | { type: "character_message"; text: string; role: string }
  | { type: "options_presented"; option_set: WireOptionSet }
  | { type: "feedback_presented"; feedback: WireFeedback }
  | { type: "continue_prompt"; prefilled_text: string }
  | { type: "session_completed" }
  | { type: "error_notice"; code: string; message: string; retryable?: boolean };

export interface ChatEvent {
  v: number;
  event_id: number;
  session_id: string;
  ts: string;
  payload: Payload;
}

export interface Brief {
  background: string;
  instruction: string;
}

export interface RegistrationResponse {
  session_id: string;
  character_name: string;
  brief: Brief;
}

export const KNOWN_PAYLOADS = new Set<string>([
  "chat_started",
  "user_draft",
  "option_selected",
  "continue_submitted",
  "character_message",
  "options_presented",
  "feedback_presented",
  "continue_prompt",
  "session_completed",
  "error_notice",
]);

export function isChatEvent(value: unknown): value is ChatEvent {
  if (typeof value !== "object" || value === null) return false;
  const candidate = value as Record<string, unknown>;
  return (
    typeof candidate.event_id === "number" &&
    typeof candidate.session_id === "string" &&
    typeof candidate.payload === "object" &&
    candidate.payload !== null &&
    typeof (candidate.payload as Record<string, unknown>).type === "string"
  );
}

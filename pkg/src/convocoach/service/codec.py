"""Wire and storage serialization for session state and chat events.

One canonical JSON form (sorted keys, compact separators, UTF-8) is used
everywhere bytes are compared: snapshots, event logs, transcripts, goldens.
Every payload tag lives in the closed set below and round-trips losslessly.
"""

from __future__ import annotations

import json
from typing import Any

from ..content import ScenarioBrief
from ..engine import (
    BluntTriggerIssued,
    CharacterReplied,
    EngineEvent,
    FeedbackIssued,
    PhaseName,
    PresentOptions,
    ScheduleConfig,
    ScheduleState,
    SelectOption,
    SessionPhase,
    SessionState,
    SubmitContinue,
    SubmitDraft,
    TurnRecord,
    UserProfile,
    apply_event,
    begin_chat,
    new_session,
)
from ..messages import (
    FREE,
    BestAlternative,
    CharacterMessage,
    Feedback,
    FeedbackTag,
    MessageOptionSet,
    MessageRole,
    OptionCandidate,
    ScenarioKind,
)

SCHEMA_VERSION = 1

# Closed payload tag set. The first group mirrors engine events; the second
# is server-emitted. error_notice is informational and skipped by the fold.
CLIENT_PAYLOADS = frozenset({"user_draft", "option_selected", "continue_submitted"})
SERVER_PAYLOADS = frozenset(
    {
        "chat_started",
        "character_message",
        "options_presented",
        "feedback_presented",
        "continue_prompt",
        "session_completed",
        "error_notice",
    }
)
ALL_PAYLOADS = CLIENT_PAYLOADS | SERVER_PAYLOADS


class CodecError(ValueError):
    pass


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def canonical_bytes(obj: Any) -> bytes:
    return canonical_json(obj).encode("utf-8")


# --- state <-> dict -----------------------------------------------------------


def _assignment_to_dict(assignment) -> str:
    return FREE if assignment == FREE else assignment.value


def _assignment_from_dict(raw: str):
    return FREE if raw == FREE else ScenarioKind(raw)


def option_set_to_dict(option_set: MessageOptionSet) -> dict:
    return {
        "options": [
            {"text": opt.text, "display_position": opt.display_position}
            for opt in option_set.options
        ],
        "appropriate_index": option_set.appropriate_index,
        "hidden_rationales": list(option_set.hidden_rationales),
        "kind": option_set.kind.value,
    }


def option_set_from_dict(raw: dict) -> MessageOptionSet:
    return MessageOptionSet(
        options=tuple(
            OptionCandidate(text=o["text"], display_position=o["display_position"])
            for o in raw["options"]
        ),
        appropriate_index=raw["appropriate_index"],
        hidden_rationales=tuple(raw["hidden_rationales"]),
        kind=ScenarioKind(raw["kind"]),
    )


def feedback_to_dict(feedback: Feedback) -> dict:
    out: dict[str, Any] = {
        "kind_tag": feedback.kind_tag.value,
        "heading": feedback.heading,
        "body": feedback.body,
        "best_alternative": None,
        "continue_message": feedback.continue_message,
    }
    if feedback.best_alternative is not None:
        out["best_alternative"] = {
            "text": feedback.best_alternative.text,
            "rationale": feedback.best_alternative.rationale,
        }
    return out


def feedback_from_dict(raw: dict) -> Feedback:
    alt = raw.get("best_alternative")
    return Feedback(
        kind_tag=FeedbackTag(raw["kind_tag"]),
        heading=raw["heading"],
        body=raw["body"],
        best_alternative=BestAlternative(alt["text"], alt["rationale"]) if alt else None,
        continue_message=raw.get("continue_message"),
    )


def turn_to_dict(turn: TurnRecord) -> dict:
    return {
        "index": turn.index,
        "assignment": _assignment_to_dict(turn.assignment),
        "draft": turn.draft,
        "option_set": option_set_to_dict(turn.option_set) if turn.option_set else None,
        "selected": turn.selected,
        "character_messages": [
            {"text": msg.text, "role": msg.role.value} for msg in turn.character_messages
        ],
        "feedback": feedback_to_dict(turn.feedback) if turn.feedback else None,
        "continue_message": turn.continue_message,
        "continue_message_sent": turn.continue_message_sent,
    }


def turn_from_dict(raw: dict) -> TurnRecord:
    return TurnRecord(
        index=raw["index"],
        assignment=_assignment_from_dict(raw["assignment"]),
        draft=raw.get("draft"),
        option_set=option_set_from_dict(raw["option_set"]) if raw.get("option_set") else None,
        selected=raw.get("selected"),
        character_messages=[
            CharacterMessage(m["text"], MessageRole(m["role"]))
            for m in raw.get("character_messages", [])
        ],
        feedback=feedback_from_dict(raw["feedback"]) if raw.get("feedback") else None,
        continue_message=raw.get("continue_message"),
        continue_message_sent=raw.get("continue_message_sent", False),
    )


def state_to_dict(state: SessionState) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "session_id": state.session_id,
        "profile": {
            "first_name": state.profile.first_name,
            "pronouns": state.profile.pronouns,
            "topic": state.profile.topic,
        },
        "brief": {
            "background": state.brief.background,
            "instruction": state.brief.instruction,
        },
        "schedule": {
            "free_turns_remaining": state.schedule.free_turns_remaining,
            "remaining_rounds": {
                kind.value: count for kind, count in sorted(state.schedule.remaining_rounds.items())
            },
            "order_seed": state.schedule.order_seed,
            "emitted": [kind.value for kind in state.schedule.emitted],
        },
        "phase": {
            "name": state.phase.name.value,
            "assignment": (
                _assignment_to_dict(state.phase.assignment)
                if state.phase.assignment is not None
                else None
            ),
        },
        "turns": [turn_to_dict(turn) for turn in state.turns],
        "character_name": state.character_name,
    }


def state_from_dict(raw: dict) -> SessionState:
    phase_raw = raw["phase"]
    return SessionState(
        session_id=raw["session_id"],
        profile=UserProfile(**raw["profile"]),
        brief=ScenarioBrief(**raw["brief"]),
        schedule=ScheduleState(
            free_turns_remaining=raw["schedule"]["free_turns_remaining"],
            remaining_rounds={
                ScenarioKind(k): v for k, v in raw["schedule"]["remaining_rounds"].items()
            },
            order_seed=raw["schedule"]["order_seed"],
            emitted=[ScenarioKind(k) for k in raw["schedule"]["emitted"]],
        ),
        phase=SessionPhase(
            name=PhaseName(phase_raw["name"]),
            assignment=(
                _assignment_from_dict(phase_raw["assignment"])
                if phase_raw.get("assignment") is not None
                else None
            ),
        ),
        turns=[turn_from_dict(t) for t in raw["turns"]],
        character_name=raw["character_name"],
    )


# --- events <-> payloads --------------------------------------------------------


def engine_event_to_payload(event: EngineEvent, role: MessageRole | None = None) -> dict:
    """Encode an engine event as a wire payload.

    ``role`` must be supplied for character messages (the engine derives it
    during apply; the server reads it off the appended turn message).
    """
    if isinstance(event, SubmitDraft):
        return {"type": "user_draft", "text": event.text}
    if isinstance(event, SelectOption):
        return {"type": "option_selected", "index": event.index}
    if isinstance(event, SubmitContinue):
        return {"type": "continue_submitted", "text": event.text}
    if isinstance(event, PresentOptions):
        return {"type": "options_presented", "option_set": option_set_to_dict(event.option_set)}
    if isinstance(event, FeedbackIssued):
        return {"type": "feedback_presented", "feedback": feedback_to_dict(event.feedback)}
    if isinstance(event, BluntTriggerIssued):
        return {
            "type": "character_message",
            "text": event.text,
            "role": MessageRole.BLUNT_TRIGGER.value,
        }
    if isinstance(event, CharacterReplied):
        if role is None:
            raise CodecError("character_message payload needs the applied role")
        return {"type": "character_message", "text": event.text, "role": role.value}
    raise CodecError(f"cannot encode event {type(event).__name__}")


def _text_field(payload: dict, field: str = "text") -> str:
    value = payload.get(field)
    if not isinstance(value, str):
        raise CodecError(f"payload field {field!r} must be text")
    return value


def payload_to_engine_event(payload: dict) -> EngineEvent | None:
    """Decode a payload into its engine event; None for informational tags."""
    tag = payload.get("type")
    if tag not in ALL_PAYLOADS:
        raise CodecError(f"unknown payload tag {tag!r}")
    if tag == "user_draft":
        return SubmitDraft(_text_field(payload))
    if tag == "option_selected":
        index = payload.get("index")
        if not isinstance(index, int) or isinstance(index, bool):
            raise CodecError("payload field 'index' must be an integer")
        return SelectOption(index)
    if tag == "continue_submitted":
        return SubmitContinue(_text_field(payload))
    if tag == "options_presented":
        try:
            return PresentOptions(option_set_from_dict(payload["option_set"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise CodecError(f"malformed option set payload: {exc}") from exc
    if tag == "feedback_presented":
        try:
            return FeedbackIssued(feedback_from_dict(payload["feedback"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise CodecError(f"malformed feedback payload: {exc}") from exc
    if tag == "character_message":
        if payload.get("role") == MessageRole.BLUNT_TRIGGER.value:
            return BluntTriggerIssued(_text_field(payload))
        return CharacterReplied(_text_field(payload))
    return None  # chat_started / continue_prompt / session_completed / error_notice


def chat_event(event_id: int, session_id: str, timestamp: str, payload: dict) -> dict:
    if payload.get("type") not in ALL_PAYLOADS:
        raise CodecError(f"unknown payload tag {payload.get('type')!r}")
    return {
        "v": SCHEMA_VERSION,
        "event_id": event_id,
        "session_id": session_id,
        "ts": timestamp,
        "payload": payload,
    }


def redact_for_wire(event: dict) -> dict:
    """Strip hidden option-set fields before an event leaves the server."""
    payload = event["payload"]
    if payload.get("type") != "options_presented":
        return event
    out = json.loads(canonical_json(event))
    option_set = out["payload"]["option_set"]
    option_set.pop("appropriate_index", None)
    option_set.pop("hidden_rationales", None)
    return out


# --- replay ---------------------------------------------------------------------


def fold_events(
    session_id: str,
    profile: UserProfile,
    brief: ScenarioBrief,
    character_name: str,
    order_seed: int,
    events: list[dict],
    config: ScheduleConfig | None = None,
) -> SessionState:
    """Rebuild session state by replaying the persisted event log."""
    state = new_session(
        profile, brief, character_name, order_seed, config=config, session_id=session_id
    )
    for event in events:
        payload = event["payload"]
        if payload.get("type") == "chat_started":
            state, _ = begin_chat(state)
            continue
        engine_event = payload_to_engine_event(payload)
        if engine_event is None:
            continue
        state, _ = apply_event(state, engine_event)
    return state

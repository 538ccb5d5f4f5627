"""Transcript export: a versioned, canonical document per session.

Schema ``transcript.v1`` (field names are stable):
  session_id, character_name, profile, brief, config, completed, turns[].
Each turn carries assignment, draft, options, appropriate_index,
hidden_rationales, selected, character_messages, feedback,
continue_message, and timing derived from the event log.
"""

from __future__ import annotations

import json

from ..content import ScenarioBrief
from ..engine import (
    ScheduleConfig,
    SessionState,
    UserProfile,
    apply_event,
    begin_chat,
    is_complete,
    new_session,
)
from ..messages import ScenarioKind
from .codec import canonical_bytes, feedback_to_dict, payload_to_engine_event

SCHEMA_TAG = "transcript.v1"
REDACTED = "[redacted]"


class TranscriptError(ValueError):
    pass


def _schedule_config(meta: dict) -> ScheduleConfig:
    raw = meta.get("schedule_config") or {}
    return ScheduleConfig(
        free_turns=raw.get("free_turns", 2),
        rounds_per_kind=raw.get("rounds_per_kind", 2),
        kinds=tuple(ScenarioKind(k) for k in raw.get("kinds", [k.value for k in ScenarioKind])),
    )


def _turn_timings(meta: dict, events: list[dict]) -> dict[int, dict[str, str]]:
    """First/last event timestamp per turn, computed by exact replay: an
    event attaches to the turn that was active when it arrived."""
    state = new_session(
        UserProfile(**meta["profile"]),
        ScenarioBrief(**meta["brief"]),
        meta["character_name"],
        meta["order_seed"],
        config=_schedule_config(meta),
        session_id=meta["session_id"],
    )
    timings: dict[int, dict[str, str]] = {}
    for event in events:
        payload = event["payload"]
        if payload.get("type") == "chat_started":
            state, _ = begin_chat(state)
            continue
        active = len(state.turns) - 1
        if active >= 0 and payload.get("type") != "error_notice":
            slot = timings.setdefault(
                active, {"started_at": event["ts"], "resolved_at": event["ts"]}
            )
            slot["resolved_at"] = event["ts"]
        engine_event = payload_to_engine_event(payload)
        if engine_event is not None:
            state, _ = apply_event(state, engine_event)
    return timings


def build_transcript(
    state: SessionState,
    meta: dict,
    events: list[dict],
    redact_name: bool = False,
) -> dict:
    timings = _turn_timings(meta, events)
    turns = []
    for turn in state.turns:
        option_set = turn.option_set
        turns.append(
            {
                "index": turn.index,
                "assignment": (
                    turn.assignment if isinstance(turn.assignment, str) else turn.assignment.value
                ),
                "draft": turn.draft,
                "options": (
                    [
                        {"text": opt.text, "display_position": opt.display_position}
                        for opt in option_set.options
                    ]
                    if option_set
                    else None
                ),
                "appropriate_index": option_set.appropriate_index if option_set else None,
                "hidden_rationales": list(option_set.hidden_rationales) if option_set else None,
                "selected": turn.selected,
                "character_messages": [
                    {"role": msg.role.value, "text": msg.text} for msg in turn.character_messages
                ],
                "feedback": feedback_to_dict(turn.feedback) if turn.feedback else None,
                "continue_message": turn.continue_message,
                "timing": timings.get(turn.index),
            }
        )
    return {
        "schema": SCHEMA_TAG,
        "session_id": state.session_id,
        "character_name": state.character_name,
        "profile": {
            "first_name": REDACTED if redact_name else state.profile.first_name,
            "pronouns": state.profile.pronouns,
            "topic": state.profile.topic,
        },
        "brief": {
            "background": state.brief.background,
            "instruction": state.brief.instruction,
        },
        "config": meta.get("fingerprint", {}),
        "completed": is_complete(state),
        "turns": turns,
    }


def transcript_to_bytes(doc: dict) -> bytes:
    return canonical_bytes(doc)


def transcript_from_bytes(data: bytes) -> dict:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise TranscriptError(f"not a transcript document: {exc}") from exc
    if doc.get("schema") != SCHEMA_TAG:
        raise TranscriptError(f"unsupported transcript schema {doc.get('schema')!r}")
    for field in ("session_id", "character_name", "profile", "brief", "turns", "completed"):
        if field not in doc:
            raise TranscriptError(f"transcript missing field {field!r}")
    return doc


def render_markdown(doc: dict) -> str:
    lines = [
        f"# Session {doc['session_id']}",
        "",
        f"*{doc['profile']['first_name']}* chatting with *{doc['character_name']}* "
        f"about {doc['profile']['topic']}.",
        "",
        f"> {doc['brief']['background']}",
        "",
    ]
    for turn in doc["turns"]:
        lines.append(f"## Turn {turn['index']} ({turn['assignment']})")
        for msg in turn["character_messages"]:
            if msg["role"] == "blunt_trigger":
                lines.append(f"- **{doc['character_name']}** ({msg['role']}): {msg['text']}")
        if turn["draft"]:
            lines.append(f"- **draft**: {turn['draft']}")
        if turn["options"]:
            for opt in sorted(turn["options"], key=lambda o: o["display_position"]):
                lines.append(f"  - option: {opt['text']}")
        if turn["selected"] is not None and turn["options"]:
            lines.append(f"- **sent**: {turn['options'][turn['selected']]['text']}")
        for msg in turn["character_messages"]:
            if msg["role"] != "blunt_trigger":
                lines.append(f"- **{doc['character_name']}** ({msg['role']}): {msg['text']}")
        feedback = turn["feedback"]
        if feedback:
            lines.append(
                f"- **feedback** [{feedback['kind_tag']}] {feedback['heading']}: {feedback['body']}"
            )
            if feedback.get("best_alternative"):
                lines.append(f"  - alternative: {feedback['best_alternative']['text']}")
        if turn["continue_message"]:
            lines.append(f"- **continue**: {turn['continue_message']}")
        lines.append("")
    lines.append("complete" if doc["completed"] else "in progress")
    lines.append("")
    return "\n".join(lines)

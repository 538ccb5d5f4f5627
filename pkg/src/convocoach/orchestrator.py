"""Fulfills engine directives: composes prompts, calls the gateway, and
parses model output into typed artifacts.

Model output is requested in a line-tagged format and parsed strictly;
anything malformed triggers a regeneration rather than a repair heuristic,
bounded at three gateway calls per artifact. The well-phrased option's
identity is fixed here, at options-generation time, and every later branch
(response tone, feedback type, best alternative) derives from it.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field

from . import content
from .content import ScenarioBrief, TaskId
from .engine import Directive, DirectiveKind, SessionState, UserProfile
from .gateway import CompletionRequest, Gateway, GatewayError
from .messages import (
    FREE,
    BestAlternative,
    CharacterMessage,
    Feedback,
    FeedbackTag,
    MessageOptionSet,
    MessageRole,
    OptionCandidate,
    ScenarioKind,
    validate_feedback,
    validate_option_set,
)
from . import engine


class OrchestratorError(Exception):
    pass


class GenerationFailed(OrchestratorError):
    """The gateway could not produce any completion."""


class ValidationFailed(OrchestratorError):
    """Model output stayed malformed or out of contract across retries."""


class OptionValidationFailed(ValidationFailed):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class ParseError(ValueError):
    pass


_TAG_RE = re.compile(r"^([A-Z][A-Z0-9_]*):\s?(.*)$")


def parse_tagged(text: str, required: tuple[str, ...], optional: tuple[str, ...] = ()) -> dict[str, str]:
    """Parse a line-tagged output block.

    Grammar: lines of ``TAG: value``; untagged lines continue the previous
    value; optional surrounding code fences are part of the requested format.
    Each tag at most once, no unknown tags, all required tags non-empty.
    """
    allowed = set(required) | set(optional)
    lines = [line.rstrip() for line in text.strip().splitlines()]
    if lines and lines[0].startswith("```"):
        lines = lines[1:]
    if lines and lines and lines[-1].startswith("```"):
        lines = lines[:-1]
    fields: dict[str, str] = {}
    current: str | None = None
    for line in lines:
        match = _TAG_RE.match(line)
        if match:
            tag, value = match.group(1), match.group(2)
            if tag not in allowed:
                raise ParseError(f"unknown tag {tag}")
            if tag in fields:
                raise ParseError(f"duplicate tag {tag}")
            fields[tag] = value.strip()
            current = tag
        elif line.strip():
            if current is None:
                raise ParseError("text before the first tag")
            fields[current] = (fields[current] + " " + line.strip()).strip()
    for tag in required:
        if not fields.get(tag, "").strip():
            raise ParseError(f"missing required tag {tag}")
    return fields


def shuffle_display(seed: int) -> tuple[int, int, int]:
    """Deterministic display permutation for the three options."""
    positions = [0, 1, 2]
    random.Random(seed).shuffle(positions)
    return tuple(positions)  # type: ignore[return-value]


def render_profile(profile: UserProfile) -> str:
    return f"NAME: {profile.first_name}\nPRONOUNS: {profile.pronouns or '(not given)'}"


def render_history(history: list[tuple[str, str]], window: int = 12) -> str:
    if not history:
        return "(no messages yet)"
    lines = [f"{speaker.upper()}: {text}" for speaker, text in history[-window:]]
    return "\n".join(lines)


def render_option_block(option_set: MessageOptionSet) -> str:
    lines = []
    for i, option in enumerate(option_set.options):
        marker = " (WELL_PHRASED)" if i == option_set.appropriate_index else ""
        lines.append(f"OPTION_{i + 1}: {option.text}{marker}")
        lines.append(f"RATIONALE_{i + 1}: {option_set.hidden_rationales[i]}")
    return "\n".join(lines)


def build_history(state: SessionState) -> list[tuple[str, str]]:
    """Chronological sent messages; the user's bubble is the option they sent."""
    history: list[tuple[str, str]] = []
    for turn in state.turns:
        pre, post = [], []
        for msg in turn.character_messages:
            (pre if msg.role is MessageRole.BLUNT_TRIGGER else post).append(msg)
        history.extend(("character", msg.text) for msg in pre)
        sent = turn.draft
        if turn.option_set is not None and turn.selected is not None:
            sent = turn.option_set.options[turn.selected].text
        if sent is not None:
            history.append(("user", sent))
        for msg in post:
            if msg.role is MessageRole.CONTINUE_REPLY and turn.continue_message:
                history.append(("user", turn.continue_message))
            history.append(("character", msg.text))
    return history


@dataclass
class GenParams:
    temperature: float = 0.7
    max_output_tokens: int = 600


@dataclass
class Orchestrator:
    gateway: Gateway
    max_attempts: int = 3
    history_window: int = 12
    params_by_task: dict[TaskId, GenParams] = field(default_factory=dict)

    def __post_init__(self):
        self._templates = content.load_templates()
        self._bank = content.load_exemplar_bank()

    def _complete(
        self, task: TaskId, kind: ScenarioKind | None, context: dict[str, str], attempt: int
    ) -> str:
        prompt = content.render_prompt(self._templates[task], context, kind=kind, bank=self._bank)
        params = self.params_by_task.get(task, GenParams())
        try:
            result = self.gateway.complete(
                CompletionRequest(
                    prompt=prompt,
                    task_id=task,
                    scenario_kind=kind,
                    max_output_tokens=params.max_output_tokens,
                    temperature=params.temperature,
                    attempt=attempt,
                )
            )
        except GatewayError as exc:
            raise GenerationFailed(str(exc)) from exc
        return result.text

    def _generate(self, task, kind, context, parse_and_validate):
        """Shared retry loop: at most ``max_attempts`` gateway calls per artifact."""
        last_error: Exception | None = None
        for attempt in range(1, self.max_attempts + 1):
            text = self._complete(task, kind, context, attempt)
            try:
                return parse_and_validate(text)
            except (ParseError, ValidationFailed) as exc:
                last_error = exc
        if isinstance(last_error, ValidationFailed):
            raise last_error
        raise ValidationFailed(f"{task.value} output malformed after {self.max_attempts} attempts: {last_error}")

    # --- the four generator boxes -------------------------------------------

    def generate_scenario(self, profile: UserProfile, character_name: str) -> ScenarioBrief:
        context = {
            "profile": render_profile(profile),
            "topic": profile.topic,
            "character_name": character_name,
        }

        def check(text: str) -> ScenarioBrief:
            fields = parse_tagged(text, required=("BACKGROUND",))
            background = fields["BACKGROUND"]
            if not content.brief_is_grounded(background, profile.topic, character_name):
                raise ValidationFailed("background does not mention the topic and character")
            return ScenarioBrief(background=background, instruction=content.INSTRUCTION_TEXT)

        return self._generate(TaskId.SCENARIO, None, context, check)

    def generate_options(
        self,
        draft: str,
        kind: ScenarioKind,
        history: list[tuple[str, str]],
        character_name: str,
        shuffle_seed: int,
    ) -> MessageOptionSet:
        if not draft.strip():
            raise ValueError("draft must be non-empty")
        context = {
            "character_name": character_name,
            "kind": content.OPTION_NOTES[kind],
            "history": render_history(history, self.history_window),
            "draft": draft,
        }
        positions = shuffle_display(shuffle_seed)

        def check(text: str) -> MessageOptionSet:
            fields = parse_tagged(
                text,
                required=(
                    "OPTION_1", "OPTION_2", "OPTION_3", "APPROPRIATE",
                    "RATIONALE_1", "RATIONALE_2", "RATIONALE_3",
                ),
            )
            if fields["APPROPRIATE"] not in ("1", "2", "3"):
                raise ParseError(f"APPROPRIATE must be 1..3, got {fields['APPROPRIATE']!r}")
            option_set = MessageOptionSet(
                options=tuple(
                    OptionCandidate(text=fields[f"OPTION_{i + 1}"], display_position=positions[i])
                    for i in range(3)
                ),
                appropriate_index=int(fields["APPROPRIATE"]) - 1,
                hidden_rationales=tuple(fields[f"RATIONALE_{i + 1}"] for i in range(3)),
                kind=kind,
            )
            report = validate_option_set(option_set, kind)
            if not report.ok:
                raise OptionValidationFailed(report.violations)
            return option_set

        return self._generate(TaskId.OPTIONS, kind, context, check)

    def generate_character_response(
        self,
        selected: int,
        option_set: MessageOptionSet,
        kind: ScenarioKind,
        history: list[tuple[str, str]],
        character_name: str,
    ) -> CharacterMessage:
        if not 0 <= selected < 3:
            raise ValueError(f"selected index {selected} out of range")
        picked_right = selected == option_set.appropriate_index
        if picked_right:
            role, goal = MessageRole.NORMAL_REPLY, content.NORMAL_REPLY_GOAL
        elif kind is ScenarioKind.MISPERCEIVED_BLUNT:
            role, goal = MessageRole.BLUNT_FOLLOW_UP, content.BLUNT_FOLLOW_UP_GOAL
        else:
            role, goal = MessageRole.CLARIFICATION, content.CLARIFICATION_GOAL
        context = {
            "character_name": character_name,
            "kind": goal,
            "history": render_history(history, self.history_window),
            "selected": option_set.options[selected].text,
        }

        def check(text: str) -> CharacterMessage:
            fields = parse_tagged(text, required=("RESPONSE",))
            reply = fields["RESPONSE"]
            if role is MessageRole.CLARIFICATION:
                if "?" not in reply or not re.search(r"\bor\b", reply, re.IGNORECASE):
                    raise ValidationFailed("clarification must contrast two readings with 'or' and a question mark")
            return CharacterMessage(text=reply, role=role)

        return self._generate(TaskId.RESPONSE, kind, context, check)

    def generate_blunt_trigger(
        self, history: list[tuple[str, str]], topic: str, character_name: str
    ) -> CharacterMessage:
        context = {
            "character_name": character_name,
            "topic": topic,
            "history": render_history(history, self.history_window),
        }

        def check(text: str) -> CharacterMessage:
            fields = parse_tagged(text, required=("TRIGGER",))
            return CharacterMessage(text=fields["TRIGGER"], role=MessageRole.BLUNT_TRIGGER)

        return self._generate(TaskId.BLUNT_TRIGGER, ScenarioKind.MISPERCEIVED_BLUNT, context, check)

    def generate_feedback(
        self,
        option_set: MessageOptionSet,
        selected: int,
        kind: ScenarioKind,
        profile: UserProfile,
        character_name: str,
    ) -> Feedback:
        if not 0 <= selected < 3:
            raise ValueError(f"selected index {selected} out of range")
        constructive = selected != option_set.appropriate_index
        context = {
            "character_name": character_name,
            "profile": render_profile(profile),
            "kind": content.feedback_note(kind, constructive, character_name),
            "option_set": render_option_block(option_set),
            "selected": option_set.options[selected].text,
        }
        expected_tag = "CONSTRUCTIVE" if constructive else "POSITIVE"

        def check(text: str) -> Feedback:
            fields = parse_tagged(
                text,
                required=("FEEDBACK_TYPE", "HEADING", "BODY"),
                optional=("ALT_RATIONALE", "CONTINUE_MESSAGE"),
            )
            if fields["FEEDBACK_TYPE"].upper() != expected_tag:
                raise ValidationFailed(
                    f"feedback branch {fields['FEEDBACK_TYPE']!r} contradicts the selection"
                )
            if constructive:
                feedback = Feedback(
                    kind_tag=FeedbackTag.CONSTRUCTIVE,
                    heading=fields["HEADING"],
                    body=fields["BODY"],
                    best_alternative=BestAlternative(
                        text=option_set.appropriate_text(),
                        rationale=fields.get("ALT_RATIONALE", ""),
                    ),
                    continue_message=fields.get("CONTINUE_MESSAGE") or None,
                )
            else:
                feedback = Feedback(
                    kind_tag=FeedbackTag.POSITIVE,
                    heading=fields["HEADING"],
                    body=fields["BODY"],
                    best_alternative=None,
                    continue_message=None,
                )
                if fields.get("ALT_RATIONALE") or fields.get("CONTINUE_MESSAGE"):
                    raise ValidationFailed("positive feedback must not carry repair fields")
            violations = validate_feedback(feedback)
            if violations or (constructive and not feedback.best_alternative.rationale.strip()):
                raise ValidationFailed("; ".join(violations) or "missing alternative rationale")
            return feedback

        return self._generate(TaskId.FEEDBACK, kind, context, check)

    def generate_continue_reply(
        self, continue_text: str, history: list[tuple[str, str]], character_name: str
    ) -> CharacterMessage:
        if not continue_text.strip():
            raise ValueError("continue text must be non-empty")
        context = {
            "character_name": character_name,
            "kind": content.CONTINUE_REPLY_GOAL,
            "history": render_history(history, self.history_window),
            "selected": continue_text,
        }

        def check(text: str) -> CharacterMessage:
            fields = parse_tagged(text, required=("RESPONSE",))
            return CharacterMessage(text=fields["RESPONSE"], role=MessageRole.CONTINUE_REPLY)

        return self._generate(TaskId.CONTINUE_REPLY, None, context, check)

    # --- directive fulfillment ------------------------------------------------

    def fulfill(self, state: SessionState, directive: Directive) -> list[engine.EngineEvent]:
        """Produce the engine events that satisfy one directive."""
        turn = state.turns[directive.turn_index]
        history = build_history(state)
        name = state.character_name

        if directive.kind is DirectiveKind.NEED_BLUNT_TRIGGER:
            trigger = self.generate_blunt_trigger(history, state.profile.topic, name)
            return [engine.BluntTriggerIssued(trigger.text)]

        if directive.kind is DirectiveKind.NEED_CHARACTER_REPLY:
            assert turn.draft is not None
            context = {
                "character_name": name,
                "kind": content.FREE_REPLY_GOAL,
                "history": render_history(history, self.history_window),
                "selected": turn.draft,
            }
            reply = self._generate(
                TaskId.RESPONSE,
                None,
                context,
                lambda text: CharacterMessage(
                    parse_tagged(text, required=("RESPONSE",))["RESPONSE"],
                    MessageRole.NORMAL_REPLY,
                ),
            )
            return [engine.CharacterReplied(reply.text)]

        if directive.kind is DirectiveKind.NEED_OPTIONS:
            assert turn.draft is not None and turn.assignment != FREE
            shuffle_seed = state.schedule.order_seed * 8191 + turn.index
            option_set = self.generate_options(
                turn.draft, turn.assignment, history, name, shuffle_seed
            )
            return [engine.PresentOptions(option_set)]

        if directive.kind is DirectiveKind.NEED_RESPONSE_AND_FEEDBACK:
            assert turn.option_set is not None and turn.selected is not None
            events: list[engine.EngineEvent] = []
            if not turn.has_response():  # skip on resume after a partial failure
                response = self.generate_character_response(
                    turn.selected, turn.option_set, turn.assignment, history, name
                )
                events.append(engine.CharacterReplied(response.text))
            if turn.feedback is None:
                feedback = self.generate_feedback(
                    turn.option_set, turn.selected, turn.assignment, state.profile, name
                )
                events.append(engine.FeedbackIssued(feedback))
            return events

        if directive.kind is DirectiveKind.NEED_CONTINUE_REPLY:
            assert turn.continue_message is not None
            reply = self.generate_continue_reply(turn.continue_message, history, name)
            return [engine.CharacterReplied(reply.text)]

        raise OrchestratorError(f"unknown directive {directive.kind}")

"""Pure session state machine and scenario scheduler.

The engine owns the whole chat loop as data: which turn is active, what the
user may do next, and which side effects the orchestrator must perform. It
never touches the network or the clock; generation work is requested through
:class:`Directive` values and fed back in as events. ``apply_event`` is a
pure transition: it returns a fresh state and never mutates its input, and
illegal events raise without corrupting anything.
"""

from __future__ import annotations

import copy
import random
import uuid
from dataclasses import dataclass, field
from enum import Enum

from .content import ScenarioBrief
from .messages import (
    FREE,
    Assignment,
    CharacterMessage,
    Feedback,
    MessageOptionSet,
    MessageRole,
    ScenarioKind,
    validate_feedback,
    validate_option_set,
)


class EngineError(Exception):
    """Base for all engine-level failures."""


class InvalidProfile(EngineError):
    pass


class ScheduleExhausted(EngineError):
    pass


class IllegalEvent(EngineError):
    def __init__(self, phase: str, event: str, reason: str):
        super().__init__(f"{event} not allowed in phase {phase}: {reason}")
        self.phase = phase
        self.event = event
        self.reason = reason


class UnknownOptionIndex(EngineError):
    def __init__(self, index: int):
        super().__init__(f"option index {index} not in 0..2")
        self.index = index


@dataclass(frozen=True)
class UserProfile:
    first_name: str
    pronouns: str
    topic: str


def validate_profile(profile: UserProfile) -> None:
    if not profile.first_name.strip():
        raise InvalidProfile("first_name must be non-empty")
    if not profile.topic.strip():
        raise InvalidProfile("topic must be non-empty")


@dataclass(frozen=True)
class ScheduleConfig:
    """Session shape; the defaults give 2 warm-up turns + 2 rounds per kind.

    ``free_turns`` and ``rounds_per_kind`` exist as overrides for tests and
    golden flows only; production sessions use the defaults.
    """

    free_turns: int = 2
    rounds_per_kind: int = 2
    kinds: tuple[ScenarioKind, ...] = tuple(ScenarioKind)

    def total_scenario_rounds(self) -> int:
        return self.rounds_per_kind * len(self.kinds)


@dataclass
class ScheduleState:
    free_turns_remaining: int
    remaining_rounds: dict[ScenarioKind, int]
    order_seed: int
    emitted: list[ScenarioKind] = field(default_factory=list)

    def exhausted(self) -> bool:
        return self.free_turns_remaining == 0 and not any(self.remaining_rounds.values())

    def initial_rounds(self) -> dict[ScenarioKind, int]:
        counts = dict(self.remaining_rounds)
        for kind in self.emitted:
            counts[kind] = counts.get(kind, 0) + 1
        return counts


def fresh_schedule(order_seed: int, config: ScheduleConfig | None = None) -> ScheduleState:
    config = config or ScheduleConfig()
    return ScheduleState(
        free_turns_remaining=config.free_turns,
        remaining_rounds={kind: config.rounds_per_kind for kind in config.kinds},
        order_seed=order_seed,
    )


def _scenario_order(order_seed: int, rounds: dict[ScenarioKind, int]) -> list[ScenarioKind]:
    """Deterministic kind sequence: one shuffled pass per round.

    Each pass covers every kind that still has rounds, so counts come out
    exact; a pass never opens with the kind that closed the previous pass
    (always avoidable when more than one kind is in play).
    """
    rng = random.Random(order_seed)
    working = {kind: count for kind, count in rounds.items() if count > 0}
    order: list[ScenarioKind] = []
    while any(working.values()):
        batch = [kind for kind in ScenarioKind if working.get(kind, 0) > 0]
        rng.shuffle(batch)
        if order and len(batch) > 1 and batch[0] == order[-1]:
            batch[0], batch[1] = batch[1], batch[0]
        for kind in batch:
            working[kind] -= 1
        order.extend(batch)
    return order


def next_assignment(schedule: ScheduleState) -> tuple[Assignment, ScheduleState]:
    """Draw the next turn's assignment, returning an updated schedule."""
    if schedule.exhausted():
        raise ScheduleExhausted("all free turns and scenario rounds consumed")
    updated = copy.deepcopy(schedule)
    if updated.free_turns_remaining > 0:
        updated.free_turns_remaining -= 1
        return FREE, updated
    order = _scenario_order(updated.order_seed, updated.initial_rounds())
    kind = order[len(updated.emitted)]
    if updated.remaining_rounds.get(kind, 0) <= 0:
        raise ScheduleExhausted(f"no rounds left for {kind.value}")
    updated.remaining_rounds[kind] -= 1
    updated.emitted.append(kind)
    return kind, updated


class PhaseName(str, Enum):
    REGISTERING = "registering"
    BRIEFED = "briefed"
    AWAITING_DRAFT = "awaiting_draft"
    AWAITING_SELECTION = "awaiting_selection"
    AWAITING_CONTINUE = "awaiting_continue"
    COMPLETED = "completed"


@dataclass(frozen=True)
class SessionPhase:
    name: PhaseName
    assignment: Assignment | None = None  # set iff name == AWAITING_DRAFT

    @staticmethod
    def briefed() -> "SessionPhase":
        return SessionPhase(PhaseName.BRIEFED)

    @staticmethod
    def awaiting_draft(assignment: Assignment) -> "SessionPhase":
        return SessionPhase(PhaseName.AWAITING_DRAFT, assignment)


@dataclass
class TurnRecord:
    index: int
    assignment: Assignment
    draft: str | None = None
    option_set: MessageOptionSet | None = None
    selected: int | None = None
    character_messages: list[CharacterMessage] = field(default_factory=list)
    feedback: Feedback | None = None
    continue_message: str | None = None
    continue_message_sent: bool = False

    def has_role(self, role: MessageRole) -> bool:
        return any(msg.role is role for msg in self.character_messages)

    def has_response(self) -> bool:
        return any(
            msg.role
            in (MessageRole.NORMAL_REPLY, MessageRole.CLARIFICATION, MessageRole.BLUNT_FOLLOW_UP)
            for msg in self.character_messages
        )

    def resolved(self) -> bool:
        """True once nothing more is owed on this turn."""
        if self.assignment == FREE:
            return self.draft is not None and bool(self.character_messages)
        if self.feedback is None:
            return False
        if self.feedback.is_constructive():
            return self.continue_message_sent and self.has_role(MessageRole.CONTINUE_REPLY)
        return True


@dataclass
class SessionState:
    session_id: str
    profile: UserProfile
    brief: ScenarioBrief
    schedule: ScheduleState
    phase: SessionPhase
    turns: list[TurnRecord] = field(default_factory=list)
    character_name: str = ""

    def current_turn(self) -> TurnRecord:
        return self.turns[-1]


class DirectiveKind(str, Enum):
    NEED_CHARACTER_REPLY = "need_character_reply"  # free-turn reply
    NEED_OPTIONS = "need_options"
    NEED_RESPONSE_AND_FEEDBACK = "need_response_and_feedback"
    NEED_CONTINUE_REPLY = "need_continue_reply"
    NEED_BLUNT_TRIGGER = "need_blunt_trigger"


@dataclass(frozen=True)
class Directive:
    kind: DirectiveKind
    turn_index: int


# --- events -----------------------------------------------------------------


@dataclass(frozen=True)
class SubmitDraft:
    text: str


@dataclass(frozen=True)
class PresentOptions:
    option_set: MessageOptionSet


@dataclass(frozen=True)
class SelectOption:
    index: int


@dataclass(frozen=True)
class CharacterReplied:
    text: str


@dataclass(frozen=True)
class FeedbackIssued:
    feedback: Feedback


@dataclass(frozen=True)
class SubmitContinue:
    text: str


@dataclass(frozen=True)
class BluntTriggerIssued:
    text: str


EngineEvent = (
    SubmitDraft
    | PresentOptions
    | SelectOption
    | CharacterReplied
    | FeedbackIssued
    | SubmitContinue
    | BluntTriggerIssued
)


def new_session(
    profile: UserProfile,
    brief: ScenarioBrief,
    character_name: str,
    order_seed: int,
    config: ScheduleConfig | None = None,
    session_id: str | None = None,
) -> SessionState:
    """Create a briefed session with a fresh schedule and no turns."""
    validate_profile(profile)
    return SessionState(
        session_id=session_id or uuid.uuid4().hex,
        profile=profile,
        brief=brief,
        schedule=fresh_schedule(order_seed, config),
        phase=SessionPhase.briefed(),
        character_name=character_name,
    )


def begin_chat(state: SessionState) -> tuple[SessionState, list[Directive]]:
    """Open the first turn; corresponds to the brief screen's start action."""
    if state.phase.name is not PhaseName.BRIEFED:
        raise IllegalEvent(state.phase.name.value, "BeginChat", "chat already started")
    updated = copy.deepcopy(state)
    return updated, _advance(updated)


def _advance(state: SessionState) -> list[Directive]:
    """Open the next turn in place, or complete the session."""
    try:
        assignment, schedule = next_assignment(state.schedule)
    except ScheduleExhausted:
        state.phase = SessionPhase(PhaseName.COMPLETED)
        return []
    state.schedule = schedule
    turn = TurnRecord(index=len(state.turns), assignment=assignment)
    state.turns.append(turn)
    state.phase = SessionPhase.awaiting_draft(assignment)
    if assignment is ScenarioKind.MISPERCEIVED_BLUNT:
        return [Directive(DirectiveKind.NEED_BLUNT_TRIGGER, turn.index)]
    return []


def _illegal(state: SessionState, event: EngineEvent, reason: str) -> IllegalEvent:
    return IllegalEvent(state.phase.name.value, type(event).__name__, reason)


def apply_event(
    state: SessionState, event: EngineEvent
) -> tuple[SessionState, list[Directive]]:
    """Pure transition; raises IllegalEvent/UnknownOptionIndex on bad input."""
    updated = copy.deepcopy(state)
    phase = updated.phase

    if isinstance(event, SubmitDraft):
        if phase.name is not PhaseName.AWAITING_DRAFT:
            raise _illegal(state, event, "no draft expected now")
        if not event.text.strip():
            raise _illegal(state, event, "draft text empty")
        turn = updated.current_turn()
        if turn.draft is not None:
            raise _illegal(state, event, "draft already submitted this turn")
        if turn.assignment is ScenarioKind.MISPERCEIVED_BLUNT and not turn.has_role(
            MessageRole.BLUNT_TRIGGER
        ):
            raise _illegal(state, event, "blunt turn needs the character's opener first")
        turn.draft = event.text
        if turn.assignment == FREE:
            return updated, [Directive(DirectiveKind.NEED_CHARACTER_REPLY, turn.index)]
        return updated, [Directive(DirectiveKind.NEED_OPTIONS, turn.index)]

    if isinstance(event, BluntTriggerIssued):
        if phase.name is not PhaseName.AWAITING_DRAFT:
            raise _illegal(state, event, "no blunt opener expected now")
        turn = updated.current_turn()
        if turn.assignment is not ScenarioKind.MISPERCEIVED_BLUNT:
            raise _illegal(state, event, "turn is not a blunt scenario")
        if turn.has_role(MessageRole.BLUNT_TRIGGER):
            raise _illegal(state, event, "blunt opener already issued")
        if turn.draft is not None:
            raise _illegal(state, event, "draft already submitted")
        if not event.text.strip():
            raise _illegal(state, event, "trigger text empty")
        turn.character_messages.append(CharacterMessage(event.text, MessageRole.BLUNT_TRIGGER))
        return updated, []

    if isinstance(event, PresentOptions):
        if phase.name is not PhaseName.AWAITING_DRAFT:
            raise _illegal(state, event, "no options expected now")
        turn = updated.current_turn()
        if turn.assignment == FREE:
            raise _illegal(state, event, "free turns take no options")
        if turn.draft is None:
            raise _illegal(state, event, "options need a draft first")
        if turn.option_set is not None:
            raise _illegal(state, event, "options already presented")
        report = validate_option_set(event.option_set, turn.assignment)
        if not report.ok:
            raise _illegal(state, event, "; ".join(report.violations))
        turn.option_set = event.option_set
        updated.phase = SessionPhase(PhaseName.AWAITING_SELECTION)
        return updated, []

    if isinstance(event, SelectOption):
        if phase.name is not PhaseName.AWAITING_SELECTION:
            raise _illegal(state, event, "no selection expected now")
        turn = updated.current_turn()
        if turn.selected is not None:
            raise _illegal(state, event, "option already selected")
        if event.index not in (0, 1, 2):
            raise UnknownOptionIndex(event.index)
        turn.selected = event.index
        return updated, [Directive(DirectiveKind.NEED_RESPONSE_AND_FEEDBACK, turn.index)]

    if isinstance(event, CharacterReplied):
        if not event.text.strip():
            raise _illegal(state, event, "reply text empty")
        if phase.name is PhaseName.AWAITING_DRAFT:
            turn = updated.current_turn()
            if turn.assignment != FREE or turn.draft is None or turn.character_messages:
                raise _illegal(state, event, "no reply owed on this turn")
            turn.character_messages.append(CharacterMessage(event.text, MessageRole.NORMAL_REPLY))
            return updated, _advance(updated)
        if phase.name is PhaseName.AWAITING_SELECTION:
            turn = updated.current_turn()
            if turn.selected is None or turn.has_response():
                raise _illegal(state, event, "no reply owed before selection")
            assert turn.option_set is not None
            if turn.selected == turn.option_set.appropriate_index:
                role = MessageRole.NORMAL_REPLY
            elif turn.assignment is ScenarioKind.MISPERCEIVED_BLUNT:
                role = MessageRole.BLUNT_FOLLOW_UP
            else:
                role = MessageRole.CLARIFICATION
            turn.character_messages.append(CharacterMessage(event.text, role))
            return updated, []
        if phase.name is PhaseName.AWAITING_CONTINUE:
            turn = updated.current_turn()
            if not turn.continue_message_sent or turn.has_role(MessageRole.CONTINUE_REPLY):
                raise _illegal(state, event, "no continue reply owed")
            turn.character_messages.append(CharacterMessage(event.text, MessageRole.CONTINUE_REPLY))
            return updated, _advance(updated)
        raise _illegal(state, event, "no reply expected now")

    if isinstance(event, FeedbackIssued):
        if phase.name is not PhaseName.AWAITING_SELECTION:
            raise _illegal(state, event, "no feedback expected now")
        turn = updated.current_turn()
        if turn.selected is None or not turn.has_response():
            raise _illegal(state, event, "feedback follows the character's response")
        if turn.feedback is not None:
            raise _illegal(state, event, "feedback already issued")
        violations = validate_feedback(event.feedback)
        if violations:
            raise _illegal(state, event, "; ".join(violations))
        assert turn.option_set is not None
        picked_right = turn.selected == turn.option_set.appropriate_index
        if picked_right == event.feedback.is_constructive():
            raise _illegal(state, event, "feedback branch contradicts the selection")
        turn.feedback = event.feedback
        if event.feedback.is_constructive():
            updated.phase = SessionPhase(PhaseName.AWAITING_CONTINUE)
            return updated, []
        return updated, _advance(updated)

    if isinstance(event, SubmitContinue):
        if phase.name is not PhaseName.AWAITING_CONTINUE:
            raise _illegal(state, event, "no continue message expected now")
        if not event.text.strip():
            raise _illegal(state, event, "continue text empty")
        turn = updated.current_turn()
        if turn.continue_message_sent:
            raise _illegal(state, event, "continue message already sent")
        turn.continue_message = event.text
        turn.continue_message_sent = True
        return updated, [Directive(DirectiveKind.NEED_CONTINUE_REPLY, turn.index)]

    raise _illegal(state, event, "unknown event type")


def pending_directives(state: SessionState) -> list[Directive]:
    """Side effects still owed for the current state, derived structurally.

    Lets an orchestrator resume a session after a crash or generation
    failure without any directive bookkeeping in the log.
    """
    if state.phase.name not in (
        PhaseName.AWAITING_DRAFT,
        PhaseName.AWAITING_SELECTION,
        PhaseName.AWAITING_CONTINUE,
    ):
        return []
    turn = state.current_turn()
    if state.phase.name is PhaseName.AWAITING_DRAFT:
        if turn.assignment is ScenarioKind.MISPERCEIVED_BLUNT and not turn.has_role(
            MessageRole.BLUNT_TRIGGER
        ):
            return [Directive(DirectiveKind.NEED_BLUNT_TRIGGER, turn.index)]
        if turn.draft is not None:
            if turn.assignment == FREE and not turn.character_messages:
                return [Directive(DirectiveKind.NEED_CHARACTER_REPLY, turn.index)]
            if turn.assignment != FREE and turn.option_set is None:
                return [Directive(DirectiveKind.NEED_OPTIONS, turn.index)]
        return []
    if state.phase.name is PhaseName.AWAITING_SELECTION:
        if turn.selected is not None and (not turn.has_response() or turn.feedback is None):
            return [Directive(DirectiveKind.NEED_RESPONSE_AND_FEEDBACK, turn.index)]
        return []
    if turn.continue_message_sent and not turn.has_role(MessageRole.CONTINUE_REPLY):
        return [Directive(DirectiveKind.NEED_CONTINUE_REPLY, turn.index)]
    return []


def is_complete(state: SessionState) -> bool:
    if state.phase.name is not PhaseName.COMPLETED:
        return False
    return state.schedule.exhausted() and (not state.turns or state.turns[-1].resolved())


def check_invariants(state: SessionState, config: ScheduleConfig | None = None) -> list[str]:
    """Structural invariant sweep used by tests and the fuzz harness."""
    config = config or ScheduleConfig()
    problems: list[str] = []
    sched = state.schedule

    expected_total = config.total_scenario_rounds()
    if sum(sched.remaining_rounds.values()) + len(sched.emitted) != expected_total:
        problems.append("schedule rounds do not add up")
    if not 0 <= sched.free_turns_remaining <= config.free_turns:
        problems.append("free turn counter out of range")
    if any(count > config.rounds_per_kind or count < 0 for count in sched.remaining_rounds.values()):
        problems.append("per-kind round counter out of range")

    for i, turn in enumerate(state.turns):
        if turn.index != i:
            problems.append(f"turn indices not dense at {i}")
    for turn in state.turns[:-1]:
        if not turn.resolved():
            problems.append(f"turn {turn.index} left unresolved behind a newer turn")
        if turn.feedback is not None and turn.feedback.is_constructive():
            if not turn.continue_message_sent:
                problems.append(f"turn {turn.index} skipped the continue gate")

    phase = state.phase
    if phase.name is PhaseName.BRIEFED and state.turns:
        problems.append("briefed session must have no turns")
    if phase.name in (PhaseName.AWAITING_DRAFT, PhaseName.AWAITING_SELECTION, PhaseName.AWAITING_CONTINUE):
        if not state.turns:
            problems.append("active phase with no turns")
        else:
            turn = state.turns[-1]
            if phase.name is PhaseName.AWAITING_DRAFT and phase.assignment != turn.assignment:
                problems.append("phase assignment disagrees with the open turn")
            if phase.name is PhaseName.AWAITING_SELECTION and turn.option_set is None:
                problems.append("awaiting selection without options")
            if phase.name is PhaseName.AWAITING_CONTINUE:
                if turn.feedback is None or not turn.feedback.is_constructive():
                    problems.append("awaiting continue without constructive feedback")
    if phase.name is PhaseName.COMPLETED and not state.schedule.exhausted():
        problems.append("completed with schedule remaining")
    return problems

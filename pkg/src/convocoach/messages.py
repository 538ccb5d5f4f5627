"""Typed chat artifacts shared by the engine, orchestrator, and service.

Everything here is a plain value object: the engine stores these in turn
records, the orchestrator produces them from model output, and the service
serializes them onto the wire.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class ScenarioKind(str, Enum):
    """The four staged communication challenges."""

    INDIRECT_SPEECH_ACT = "indirect_speech_act"
    FIGURATIVE_EXPRESSION = "figurative_expression"
    EMOJI_VARIABLE = "emoji_variable"
    MISPERCEIVED_BLUNT = "misperceived_blunt"


# Turns either stage a scenario or are free warm-up chat; FREE marks the
# warm-up assignments.
FREE = "free"
Assignment = ScenarioKind | str


class MessageRole(str, Enum):
    NORMAL_REPLY = "normal_reply"
    CLARIFICATION = "clarification"
    BLUNT_TRIGGER = "blunt_trigger"
    BLUNT_FOLLOW_UP = "blunt_follow_up"
    CONTINUE_REPLY = "continue_reply"


@dataclass(frozen=True)
class CharacterMessage:
    """One utterance by the AI character, tagged with its role in the turn."""

    text: str
    role: MessageRole


@dataclass(frozen=True)
class OptionCandidate:
    """A single rephrasing plus where it appears in the UI (0-2)."""

    text: str
    display_position: int


@dataclass(frozen=True)
class MessageOptionSet:
    """Three rephrasings of a draft, exactly one of which is well-phrased.

    ``appropriate_index`` identifies the well-phrased option by canonical
    index (not display slot) and is the single source of truth for the
    feedback branch. ``hidden_rationales`` ground the later feedback and are
    never shown to the user directly.
    """

    options: tuple[OptionCandidate, OptionCandidate, OptionCandidate]
    appropriate_index: int
    hidden_rationales: tuple[str, str, str]
    kind: ScenarioKind

    def appropriate_text(self) -> str:
        return self.options[self.appropriate_index].text

    def in_display_order(self) -> list[OptionCandidate]:
        return sorted(self.options, key=lambda opt: opt.display_position)


class FeedbackTag(str, Enum):
    POSITIVE = "positive"
    CONSTRUCTIVE = "constructive"


@dataclass(frozen=True)
class BestAlternative:
    text: str
    rationale: str


@dataclass(frozen=True)
class Feedback:
    """Panel content shown after the character responds.

    Constructive feedback must carry both the best alternative and a
    ready-to-send continue message; positive feedback must carry neither.
    """

    kind_tag: FeedbackTag
    heading: str
    body: str
    best_alternative: BestAlternative | None = None
    continue_message: str | None = None

    def is_constructive(self) -> bool:
        return self.kind_tag is FeedbackTag.CONSTRUCTIVE


# Unicode pictographic ranges used for emoji detection. Covers the emoji
# presentation blocks plus the legacy symbol blocks that carry emoji when
# followed by VS16; keycap bases are excluded on purpose (plain digits).
_EMOJI_RANGES: tuple[tuple[int, int], ...] = (
    (0x1F300, 0x1F5FF),  # misc symbols and pictographs
    (0x1F600, 0x1F64F),  # emoticons
    (0x1F680, 0x1F6FF),  # transport and map
    (0x1F700, 0x1F77F),  # alchemical (pictographic)
    (0x1F900, 0x1F9FF),  # supplemental symbols and pictographs
    (0x1FA70, 0x1FAFF),  # symbols and pictographs extended-A
    (0x1F1E6, 0x1F1FF),  # regional indicators (flags)
    (0x2600, 0x26FF),  # misc symbols
    (0x2700, 0x27BF),  # dingbats
    (0x2B00, 0x2BFF),  # arrows and stars (2B50, 2B55)
    (0x1F0CF, 0x1F0CF),  # joker
    (0x1F18E, 0x1F18E),
    (0x1F191, 0x1F19A),
    (0x203C, 0x203C),
    (0x2049, 0x2049),
    (0x2122, 0x2122),
    (0x2139, 0x2139),
    (0x2194, 0x21AA),
    (0x231A, 0x231B),
    (0x2328, 0x2328),
    (0x23CF, 0x23FA),
    (0x24C2, 0x24C2),
    (0x25AA, 0x25FE),
    (0x2934, 0x2935),
    (0x3030, 0x3030),
    (0x303D, 0x303D),
    (0x3297, 0x3299),
)


def is_emoji_codepoint(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _EMOJI_RANGES)


def contains_emoji(text: str) -> bool:
    return any(is_emoji_codepoint(ch) for ch in text)


@dataclass
class OptionSetReport:
    """Structural validation outcome for a candidate option set."""

    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_option_set(option_set: MessageOptionSet, kind: ScenarioKind) -> OptionSetReport:
    """Check every structural invariant of a message-option set.

    Tone-level properties (e.g. that the wrong blunt options actually read
    as confrontational) are not machine-decidable and are covered by the
    curated prompt exemplars and stub fixtures instead.
    """
    report = OptionSetReport()
    texts = [opt.text for opt in option_set.options]

    if len(option_set.options) != 3:
        report.violations.append(f"expected 3 options, got {len(option_set.options)}")
        return report
    if any(not t.strip() for t in texts):
        report.violations.append("empty option text")
    if len(set(texts)) != len(texts):
        report.violations.append("options not distinct")
    if option_set.appropriate_index not in (0, 1, 2):
        report.violations.append(f"appropriate_index {option_set.appropriate_index} out of range")
    if sorted(opt.display_position for opt in option_set.options) != [0, 1, 2]:
        report.violations.append("display positions are not a permutation of 0..2")
    if len(option_set.hidden_rationales) != 3 or any(
        not r.strip() for r in option_set.hidden_rationales
    ):
        report.violations.append("each option needs a non-empty hidden rationale")
    if option_set.kind is not kind:
        report.violations.append(f"option set tagged {option_set.kind.value}, expected {kind.value}")
    if kind is ScenarioKind.EMOJI_VARIABLE:
        with_emoji = sum(1 for t in texts if contains_emoji(t))
        if with_emoji < 2:
            report.violations.append(
                f"emoji scenario needs >=2 emoji-bearing options, got {with_emoji}"
            )
    return report


def validate_feedback(feedback: Feedback) -> list[str]:
    """Return structural violations for a feedback artifact (empty if sound)."""
    violations: list[str] = []
    if not feedback.body.strip():
        violations.append("feedback body empty")
    if not feedback.heading.strip():
        violations.append("feedback heading empty")
    if feedback.is_constructive():
        if feedback.best_alternative is None:
            violations.append("constructive feedback missing best_alternative")
        if not (feedback.continue_message or "").strip():
            violations.append("constructive feedback missing continue_message")
    else:
        if feedback.best_alternative is not None:
            violations.append("positive feedback must not carry best_alternative")
        if feedback.continue_message is not None:
            violations.append("positive feedback must not carry continue_message")
    return violations

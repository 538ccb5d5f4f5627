from __future__ import annotations

import pytest

from convocoach.messages import (
    BestAlternative,
    Feedback,
    FeedbackTag,
    MessageOptionSet,
    OptionCandidate,
    ScenarioKind,
    contains_emoji,
    validate_feedback,
    validate_option_set,
)


def make_set(texts, appropriate=0, positions=(0, 1, 2), kind=ScenarioKind.INDIRECT_SPEECH_ACT,
             rationales=("a", "b", "c")):
    return MessageOptionSet(
        options=tuple(OptionCandidate(t, p) for t, p in zip(texts, positions)),
        appropriate_index=appropriate,
        hidden_rationales=tuple(rationales),
        kind=kind,
    )


@pytest.mark.parametrize(
    "text,expected",
    [
        ("plain words only", False),
        ("that was great \U0001f525", True),
        ("beach day ⛱", True),
        ("shooting star \U0001f320", True),
        ("digits 123 and ? marks", False),
        ("volcano \U0001f30b", True),
        ("arrows ↔ count as pictographs", True),
    ],
)
def test_contains_emoji(text, expected):
    assert contains_emoji(text) is expected


def test_valid_set_from_rephrasing_flow():
    option_set = make_set(
        [
            "What methods can be used to speed up a vision model on an embedded device?",
            "Is there a way to speed up a vision model on an embedded device?",
            "Do you know how to speed up a vision model on an embedded device?",
        ]
    )
    assert validate_option_set(option_set, ScenarioKind.INDIRECT_SPEECH_ACT).ok


def test_duplicate_options_flagged():
    option_set = make_set(["same", "same", "other"])
    report = validate_option_set(option_set, ScenarioKind.INDIRECT_SPEECH_ACT)
    assert any("distinct" in v for v in report.violations)


def test_display_positions_must_be_permutation():
    option_set = make_set(["a", "b", "c"], positions=(0, 0, 2))
    report = validate_option_set(option_set, ScenarioKind.INDIRECT_SPEECH_ACT)
    assert any("permutation" in v for v in report.violations)


def test_emoji_kind_requires_two_emoji_options():
    # the coastal-comparison set with emojis stripped from two options
    option_set = make_set(
        [
            "I explored coastal Maine. Is coastal Massachusetts similar?",
            "Yes I visited coastal Maine. I heard it resembles coastal Massachusetts ⛱",
            "I experienced coastal Maine. How does it compare to Massachusetts?",
        ],
        kind=ScenarioKind.EMOJI_VARIABLE,
    )
    report = validate_option_set(option_set, ScenarioKind.EMOJI_VARIABLE)
    assert any("emoji" in v for v in report.violations)

    intact = make_set(
        [
            "I explored coastal Maine. Is coastal Massachusetts similar? \U0001f30b",
            "Yes I visited coastal Maine. I heard it resembles coastal Massachusetts ⛱",
            "I experienced coastal Maine. How does it compare to Massachusetts? \U0001f3c4",
        ],
        kind=ScenarioKind.EMOJI_VARIABLE,
    )
    assert validate_option_set(intact, ScenarioKind.EMOJI_VARIABLE).ok


def test_kind_mismatch_flagged():
    option_set = make_set(["a", "b", "c"], kind=ScenarioKind.EMOJI_VARIABLE)
    report = validate_option_set(option_set, ScenarioKind.FIGURATIVE_EXPRESSION)
    assert not report.ok


def test_constructive_feedback_needs_repair_fields():
    bare = Feedback(kind_tag=FeedbackTag.CONSTRUCTIVE, heading="h", body="b")
    violations = validate_feedback(bare)
    assert any("best_alternative" in v for v in violations)
    assert any("continue_message" in v for v in violations)

    full = Feedback(
        kind_tag=FeedbackTag.CONSTRUCTIVE,
        heading="h",
        body="b",
        best_alternative=BestAlternative("alt", "why"),
        continue_message="sorry, here is what i meant",
    )
    assert validate_feedback(full) == []


def test_positive_feedback_must_not_carry_repair_fields():
    loaded = Feedback(
        kind_tag=FeedbackTag.POSITIVE,
        heading="h",
        body="b",
        continue_message="should not exist",
    )
    assert any("must not" in v for v in validate_feedback(loaded))
    clean = Feedback(kind_tag=FeedbackTag.POSITIVE, heading="h", body="b")
    assert validate_feedback(clean) == []

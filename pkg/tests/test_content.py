from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convocoach import content
from convocoach.content import (
    INSTRUCTION_TEXT,
    TASK_TABLE,
    MissingPlaceholder,
    TaskId,
    brief_is_grounded,
    builtin_scenario_seed,
    character_name_for_seed,
    feedback_note,
    lint_prompt,
    load_banned_terms,
    load_exemplar_bank,
    load_templates,
    render_prompt,
)
from convocoach.messages import ScenarioKind, contains_emoji
from convocoach.orchestrator import parse_tagged

FIXED_CONTEXT = {
    "profile": "NAME: Dana\nPRONOUNS: she/her",
    "topic": "gardening",
    "character_name": "Wendy",
    "history": "USER: hello\nCHARACTER: hi there",
    "draft": "Can you tell me more about pruning?",
    "kind": "placeholder note",
    "option_set": "OPTION_1: a\nOPTION_2: b\nOPTION_3: c",
    "selected": "Can you tell me more about pruning?",
}


def context_for(template) -> dict[str, str]:
    return {name: FIXED_CONTEXT[name] for name in template.placeholder_names()}


def test_every_task_has_a_template():
    templates = load_templates()
    assert set(templates) == set(TaskId)


def test_every_reachable_pair_has_exemplars():
    bank = load_exemplar_bank()
    for pair in TASK_TABLE:
        assert bank.for_task(*pair), f"no exemplars for {pair}"


def test_indirect_exemplars_include_the_window_example():
    bank = load_exemplar_bank()
    entries = bank.for_task(TaskId.OPTIONS, ScenarioKind.INDIRECT_SPEECH_ACT)
    assert any("Can you open the window?" in e.input for e in entries)


def test_render_is_deterministic_and_embeds_draft():
    templates = load_templates()
    template = templates[TaskId.OPTIONS]
    context = dict(context_for(template))
    context["draft"] = "How can I speed up a vision model running on an embedded device?"
    first = render_prompt(template, context, kind=ScenarioKind.INDIRECT_SPEECH_ACT)
    second = render_prompt(template, context, kind=ScenarioKind.INDIRECT_SPEECH_ACT)
    assert first == second
    assert "How can I speed up a vision model running on an embedded device?" in first
    assert "SAMPLE OUTPUT" in first  # exemplars appended


def test_missing_placeholder_raises():
    template = load_templates()[TaskId.OPTIONS]
    context = dict(context_for(template))
    context.pop("character_name")
    with pytest.raises(MissingPlaceholder) as err:
        render_prompt(template, context, kind=ScenarioKind.INDIRECT_SPEECH_ACT)
    assert err.value.name == "character_name"


@settings(max_examples=60)
@given(
    draft_a=st.text(min_size=1, max_size=60).filter(lambda s: s.strip()),
    draft_b=st.text(min_size=1, max_size=60).filter(lambda s: s.strip()),
)
def test_options_prompt_injective_in_draft(draft_a, draft_b):
    template = load_templates()[TaskId.OPTIONS]
    base = context_for(template)
    prompt_a = render_prompt(template, {**base, "draft": draft_a})
    prompt_b = render_prompt(template, {**base, "draft": draft_b})
    assert (prompt_a == prompt_b) == (draft_a == draft_b)


def test_lint_clean_text():
    assert lint_prompt("You are a character who prefers direct, literal language.").ok


def test_lint_flags_banned_term_with_offset():
    report = lint_prompt("Respond as an autistic person.")
    assert len(report.violations) == 1
    violation = report.violations[0]
    assert violation.term == "autistic"
    assert violation.offset == "Respond as an ".__len__()


def test_lint_matches_whole_word_for_short_terms():
    assert not lint_prompt("the hasdware flag").violations  # no bare-substring match
    assert lint_prompt("screening for ASD is out of scope").violations
    assert lint_prompt("Asperger's profile").violations


def test_lint_case_insensitive():
    assert lint_prompt("AUTISM").violations
    assert lint_prompt("NeuroDivergent styles").violations


def test_load_banned_terms_override(tmp_path):
    path = tmp_path / "terms.yaml"
    path.write_text('- "forbidden"\n', encoding="utf-8")
    terms = load_banned_terms(str(path))
    assert lint_prompt("a forbidden phrase", terms).violations
    assert lint_prompt("autism", terms).ok  # override replaces the default list


def test_exhaustive_render_and_lint_sweep():
    """Every template rendered for every kind and branch: zero violations."""
    templates = load_templates()
    rendered: list[str] = []
    for task, template in templates.items():
        base = context_for(template)
        for kind in ScenarioKind:
            if "kind" in base:
                for note in _kind_notes(kind):
                    rendered.append(render_prompt(template, {**base, "kind": note}, kind=kind))
            else:
                rendered.append(render_prompt(template, base, kind=kind))
    total = sum(len(lint_prompt(text).violations) for text in rendered)
    assert total == 0
    assert lint_prompt(INSTRUCTION_TEXT).ok


def _kind_notes(kind: ScenarioKind) -> list[str]:
    return [
        content.OPTION_NOTES[kind],
        content.FREE_REPLY_GOAL,
        content.NORMAL_REPLY_GOAL,
        content.CLARIFICATION_GOAL,
        content.BLUNT_FOLLOW_UP_GOAL,
        content.CONTINUE_REPLY_GOAL,
        feedback_note(kind, True, "Wendy"),
        feedback_note(kind, False, "Wendy"),
    ]


def test_all_exemplars_pass_lint_and_parse():
    bank = load_exemplar_bank()
    required_by_task = {
        TaskId.SCENARIO: ("BACKGROUND",),
        TaskId.OPTIONS: (
            "OPTION_1", "OPTION_2", "OPTION_3", "APPROPRIATE",
            "RATIONALE_1", "RATIONALE_2", "RATIONALE_3",
        ),
        TaskId.RESPONSE: ("RESPONSE",),
        TaskId.BLUNT_TRIGGER: ("TRIGGER",),
        TaskId.CONTINUE_REPLY: ("RESPONSE",),
    }
    for (task, kind), entries in bank.entries.items():
        for exemplar in entries:
            assert lint_prompt(exemplar.input).ok
            assert lint_prompt(exemplar.sample_output).ok
            if task is TaskId.FEEDBACK:
                fields = parse_tagged(
                    exemplar.sample_output,
                    required=("FEEDBACK_TYPE", "HEADING", "BODY"),
                    optional=("ALT_RATIONALE", "CONTINUE_MESSAGE"),
                )
                assert fields["FEEDBACK_TYPE"] in ("POSITIVE", "CONSTRUCTIVE")
            else:
                parse_tagged(exemplar.sample_output, required=required_by_task[task])


def test_emoji_exemplars_carry_emoji():
    bank = load_exemplar_bank()
    for exemplar in bank.for_task(TaskId.OPTIONS, ScenarioKind.EMOJI_VARIABLE):
        fields = parse_tagged(
            exemplar.sample_output,
            required=(
                "OPTION_1", "OPTION_2", "OPTION_3", "APPROPRIATE",
                "RATIONALE_1", "RATIONALE_2", "RATIONALE_3",
            ),
        )
        bearing = sum(1 for i in (1, 2, 3) if contains_emoji(fields[f"OPTION_{i}"]))
        assert bearing >= 2


@pytest.mark.parametrize(
    "kind,statement,fragment_a,fragment_b",
    [
        (ScenarioKind.INDIRECT_SPEECH_ACT, "Can you open the window?", "literal question", "polite request"),
        (ScenarioKind.FIGURATIVE_EXPRESSION, "She has a chip on her shoulder.", "literal reference", "grudge"),
        (ScenarioKind.EMOJI_VARIABLE, "That presentation was on", "impressive", "sarcasm"),
        (ScenarioKind.MISPERCEIVED_BLUNT, "I don't like your idea at all.", "neutral expression", "harshly expressed"),
    ],
)
def test_builtin_scenario_seeds(kind, statement, fragment_a, fragment_b):
    seed = builtin_scenario_seed(kind)
    assert statement in seed.statement
    assert fragment_a in seed.interpretation_a
    assert fragment_b in seed.interpretation_b


def test_character_names_deterministic_and_varied():
    assert character_name_for_seed(0) == character_name_for_seed(0)
    names = {character_name_for_seed(seed) for seed in range(10)}
    assert len(names) == 10
    assert {"Julia", "Jason", "Wendy", "Darrell", "Autumn"} <= names


def test_brief_grounding_check():
    background = "You recently became friends with Wendy, who loves gardening."
    assert brief_is_grounded(background, "gardening", "Wendy")
    assert not brief_is_grounded(background, "astronomy", "Wendy")
    assert not brief_is_grounded(background, "gardening", "Theo")


def test_instruction_mentions_selecting_options():
    assert "select" in INSTRUCTION_TEXT.lower()
    assert "message" in INSTRUCTION_TEXT.lower()

"""Scenario definitions, prompt templates, few-shot exemplars, and the
prompt-policy linter.

All generation content ships as editable YAML documents under ``data/``
(one file per template, one per exemplar bank entry; see
``docs/content-schema.md``). Everything rendered from here must pass
:func:`lint_prompt` with zero violations — the generation prompts describe
the character's direct, literal style and the staged misunderstandings in
behavioral terms only.
"""

from __future__ import annotations

import hashlib
import re
import string
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources

import yaml

from ..messages import ScenarioKind


class ContentError(Exception):
    pass


class MissingPlaceholder(ContentError):
    def __init__(self, name: str):
        super().__init__(f"context is missing placeholder {name!r}")
        self.name = name


class TaskId(str, Enum):
    SCENARIO = "scenario"
    OPTIONS = "options"
    RESPONSE = "response"
    BLUNT_TRIGGER = "blunt_trigger"
    FEEDBACK = "feedback"
    CONTINUE_REPLY = "continue_reply"


# Every (task, kind) pair the orchestrator can ask for during a session.
# ``None`` marks kind-independent tasks (warm-up replies, repairs, scenario).
TASK_TABLE: tuple[tuple[TaskId, ScenarioKind | None], ...] = (
    (TaskId.SCENARIO, None),
    *((TaskId.OPTIONS, kind) for kind in ScenarioKind),
    (TaskId.RESPONSE, None),
    *((TaskId.RESPONSE, kind) for kind in ScenarioKind),
    (TaskId.BLUNT_TRIGGER, ScenarioKind.MISPERCEIVED_BLUNT),
    *((TaskId.FEEDBACK, kind) for kind in ScenarioKind),
    (TaskId.CONTINUE_REPLY, None),
)


@dataclass(frozen=True)
class ScenarioBrief:
    """What the user reads before the chat starts (Background + Instruction)."""

    background: str
    instruction: str


@dataclass(frozen=True)
class PromptTemplate:
    task_id: TaskId
    template_text: str

    def placeholder_names(self) -> set[str]:
        return {
            name
            for _, name, _, _ in string.Formatter().parse(self.template_text)
            if name is not None
        }


@dataclass(frozen=True)
class Exemplar:
    input: str
    sample_output: str


@dataclass
class ExemplarBank:
    entries: dict[tuple[TaskId, ScenarioKind | None], list[Exemplar]] = field(
        default_factory=dict
    )

    def for_task(self, task: TaskId, kind: ScenarioKind | None) -> list[Exemplar]:
        return self.entries.get((task, kind), [])


@dataclass(frozen=True)
class LintViolation:
    term: str
    offset: int


@dataclass
class LintReport:
    violations: list[LintViolation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


# Case-insensitive; short abbreviations match whole words only so that e.g.
# ordinary words containing the letters are not flagged.
DEFAULT_BANNED_TERMS: tuple[str, ...] = (
    "autism",
    "autistic",
    "asperger",
    "neurodivergent",
    "ASD",
)
_WORD_ONLY_TERMS = frozenset({"asd"})


def lint_prompt(text: str, banned_terms: tuple[str, ...] | None = None) -> LintReport:
    """Report every occurrence of a banned term in a prompt or content doc."""
    terms = banned_terms if banned_terms is not None else DEFAULT_BANNED_TERMS
    report = LintReport()
    for term in terms:
        if term.lower() in _WORD_ONLY_TERMS:
            pattern = re.compile(rf"\b{re.escape(term)}\b", re.IGNORECASE)
        else:
            pattern = re.compile(re.escape(term), re.IGNORECASE)
        for match in pattern.finditer(text):
            report.violations.append(LintViolation(term=term, offset=match.start()))
    report.violations.sort(key=lambda v: (v.offset, v.term))
    return report


def load_banned_terms(path: str | None) -> tuple[str, ...]:
    if path is None:
        return DEFAULT_BANNED_TERMS
    with open(path, encoding="utf-8") as fh:
        loaded = yaml.safe_load(fh)
    if not isinstance(loaded, list) or not all(isinstance(t, str) for t in loaded):
        raise ContentError(f"banned-term file {path} must hold a list of strings")
    return tuple(loaded)


@dataclass(frozen=True)
class ScenarioSeed:
    """Canonical example of a staged challenge: one statement, two readings."""

    statement: str
    interpretation_a: str
    interpretation_b: str


_SCENARIO_SEEDS: dict[ScenarioKind, ScenarioSeed] = {
    ScenarioKind.INDIRECT_SPEECH_ACT: ScenarioSeed(
        statement="Can you open the window?",
        interpretation_a="a literal question about the possibility of opening the window",
        interpretation_b="a polite request to open it",
    ),
    ScenarioKind.FIGURATIVE_EXPRESSION: ScenarioSeed(
        statement="She has a chip on her shoulder.",
        interpretation_a="a literal reference to something on one's shoulder",
        interpretation_b="as an idiom, one holds a grudge",
    ),
    ScenarioKind.EMOJI_VARIABLE: ScenarioSeed(
        statement="That presentation was on \U0001f525 man...",
        interpretation_a="the presentation was impressive",
        interpretation_b="as sarcasm, it was poor",
    ),
    ScenarioKind.MISPERCEIVED_BLUNT: ScenarioSeed(
        statement="I don't like your idea at all.",
        interpretation_a="a neutral expression of opinion",
        interpretation_b="harshly expressed criticism",
    ),
}


def builtin_scenario_seed(kind: ScenarioKind) -> ScenarioSeed:
    return _SCENARIO_SEEDS[kind]


CHARACTER_NAMES: tuple[str, ...] = (
    "Julia",
    "Jason",
    "Wendy",
    "Darrell",
    "Autumn",
    "Jeremy",
    "Priya",
    "Theo",
    "Elena",
    "Noor",
)


def character_name_for_seed(seed: int) -> str:
    return CHARACTER_NAMES[seed % len(CHARACTER_NAMES)]


INSTRUCTION_TEXT = (
    "Enter your message in the input field to get started. Three alternative "
    "versions of it will be generated. Then, based on your understanding of "
    "direct, literal communication styles, select the best-phrased message."
)


def brief_is_grounded(background: str, topic: str, character_name: str) -> bool:
    lower = background.lower()
    return topic.lower() in lower and character_name.lower() in lower


# --- kind notes injected into the {kind} placeholder -------------------------

OPTION_NOTES: dict[ScenarioKind, str] = {
    ScenarioKind.INDIRECT_SPEECH_ACT: (
        "This turn practices indirect phrasing: a message that hints at a "
        "request or question instead of stating it. The well-phrased option "
        "states the request or question outright; the other two keep it "
        "indirect, so a literal reader could take them at face value, for "
        "example by answering just 'yes'."
    ),
    ScenarioKind.FIGURATIVE_EXPRESSION: (
        "This turn practices figurative language: idioms, metaphors, or "
        "images that say more than the literal words. The well-phrased "
        "option uses only literal wording; the other two each lean on a "
        "figure of speech that a literal reader could take word-for-word."
    ),
    ScenarioKind.EMOJI_VARIABLE: (
        "This turn practices emoji whose meaning shifts with context. At "
        "least two options must contain an emoji. The well-phrased option "
        "pairs its words with an emoji whose meaning is plain and matches "
        "the text; the other two each use an emoji that could be read "
        "several ways or that clashes with the words around it."
    ),
    ScenarioKind.MISPERCEIVED_BLUNT: (
        "This turn practices reacting to directness. The character's last "
        "message was plain and softener-free, which some readers take as "
        "blunt. The options are three ways the user could reply: the "
        "well-phrased option stays neutral and takes no offense; the other "
        "two read as if the user took the message as rude, for example "
        "challenging its tone or asking what the attitude is about."
    ),
}

FREE_REPLY_GOAL = (
    "Reply naturally to keep the warm-up chat going: a friendly, factual "
    "remark or a simple question about the topic."
)
NORMAL_REPLY_GOAL = (
    "The user's message was clear. Answer it helpfully and keep the "
    "conversation moving."
)
CLARIFICATION_GOAL = (
    "The message the user sent could reasonably be read in two different "
    "ways. Ask exactly one short clarifying question in the form 'do you "
    "mean X or Y?', where X and Y name the two plausible readings. The "
    "reply must contain the word 'or' and end with a question mark."
)
BLUNT_FOLLOW_UP_GOAL = (
    "The user seems to have taken your last plain message as rude and "
    "replied with a challenge. Explain calmly that it was not meant that "
    "way, restate what you wanted plainly, and invite them to continue."
)
CONTINUE_REPLY_GOAL = (
    "The user just sent a repair message clarifying what they meant "
    "earlier. Acknowledge it briefly, answer the clarified message "
    "directly, and keep the conversation moving."
)

_KIND_MISREAD: dict[ScenarioKind, str] = {
    ScenarioKind.INDIRECT_SPEECH_ACT: (
        "hinting at a point instead of stating it, which a literal reader "
        "takes at face value"
    ),
    ScenarioKind.FIGURATIVE_EXPRESSION: (
        "leaning on a figure of speech, which a literal reader takes "
        "word-for-word"
    ),
    ScenarioKind.EMOJI_VARIABLE: (
        "using an emoji whose meaning depends on context, which a literal "
        "reader takes at face value or finds puzzling"
    ),
    ScenarioKind.MISPERCEIVED_BLUNT: (
        "treating plain, direct wording as rudeness and reading intent into "
        "it that was not there"
    ),
}


def feedback_note(kind: ScenarioKind, constructive: bool, character_name: str) -> str:
    misread = _KIND_MISREAD[kind]
    if constructive:
        return (
            f"BRANCH: the sent option invites a misunderstanding by {misread}. "
            f"Write CONSTRUCTIVE feedback: contrast what the user likely meant "
            f"with how {character_name} read it, explain why the option marked "
            f"WELL_PHRASED avoids the problem, and supply a ready-to-send "
            f"repair message."
        )
    return (
        f"BRANCH: the user sent the well-phrased option. Write POSITIVE "
        f"feedback: reinforce what made it work for {character_name}, and "
        f"explain how each of the other two options risked {misread}."
    )


# --- loading ------------------------------------------------------------------


def _data_root():
    return resources.files(__package__).joinpath("data")


@lru_cache(maxsize=1)
def load_templates() -> dict[TaskId, PromptTemplate]:
    templates: dict[TaskId, PromptTemplate] = {}
    for entry in sorted(_data_root().joinpath("templates").iterdir(), key=lambda p: p.name):
        doc = yaml.safe_load(entry.read_text(encoding="utf-8"))
        task = TaskId(doc["task"])
        templates[task] = PromptTemplate(task_id=task, template_text=doc["text"])
    missing = set(TaskId) - set(templates)
    if missing:
        raise ContentError(f"no template shipped for tasks: {sorted(t.value for t in missing)}")
    return templates


@lru_cache(maxsize=1)
def load_exemplar_bank() -> ExemplarBank:
    bank = ExemplarBank()
    for entry in sorted(_data_root().joinpath("exemplars").iterdir(), key=lambda p: p.name):
        doc = yaml.safe_load(entry.read_text(encoding="utf-8"))
        task = TaskId(doc["task"])
        kind = ScenarioKind(doc["kind"]) if doc.get("kind") else None
        exemplars = [
            Exemplar(input=item["input"].strip(), sample_output=item["sample_output"].strip())
            for item in doc["entries"]
        ]
        if not exemplars:
            raise ContentError(f"exemplar document {entry.name} has no entries")
        bank.entries[(task, kind)] = exemplars
    for pair in TASK_TABLE:
        if not bank.entries.get(pair):
            task, kind = pair
            raise ContentError(
                f"no exemplars for ({task.value}, {kind.value if kind else 'any'})"
            )
    return bank


@lru_cache(maxsize=1)
def content_version() -> str:
    """Fingerprint of every shipped content document."""
    digest = hashlib.sha256()
    for subdir in ("templates", "exemplars"):
        for entry in sorted(_data_root().joinpath(subdir).iterdir(), key=lambda p: p.name):
            digest.update(entry.name.encode("utf-8"))
            digest.update(entry.read_bytes())
    return digest.hexdigest()[:16]


def render_prompt(
    template: PromptTemplate,
    context: dict[str, str],
    kind: ScenarioKind | None = None,
    bank: ExemplarBank | None = None,
) -> str:
    """Substitute placeholders and append the (task, kind) sample outputs."""
    for name in sorted(template.placeholder_names()):
        if name not in context:
            raise MissingPlaceholder(name)
    rendered = template.template_text.format(**context)
    bank = bank or load_exemplar_bank()
    exemplars = bank.for_task(template.task_id, kind)
    blocks = []
    for i, exemplar in enumerate(exemplars, start=1):
        blocks.append(
            f"SAMPLE INPUT {i}:\n{exemplar.input}\nSAMPLE OUTPUT {i}:\n{exemplar.sample_output}"
        )
    if blocks:
        rendered = rendered.rstrip() + "\n\nFollow the format of these sample outputs:\n\n"
        rendered += "\n\n".join(blocks) + "\n"
    return rendered

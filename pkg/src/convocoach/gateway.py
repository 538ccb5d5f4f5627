"""Uniform completion interface over live chat-completion providers and a
deterministic scripted stub.

Routing is a total pure function: emoji-option generation goes to the
dedicated emoji-capable model, everything else to the primary model, and a
global stub flag overrides both for hermetic runs. The stub provider answers
from a script keyed by (task, kind, occurrence ordinal) and falls back to
parametric defaults derived only from the prompt text, so stub output is a
pure function of the call sequence — zero network activity ever.
"""

from __future__ import annotations

import re
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import yaml

from .content import TaskId
from .messages import ScenarioKind


class GatewayError(Exception):
    pass


class ProviderUnavailable(GatewayError):
    def __init__(self, provider: "ProviderId", attempts: int, detail: str = ""):
        super().__init__(f"{provider.value} unavailable after {attempts} attempt(s): {detail}")
        self.provider = provider
        self.attempts = attempts


class GatewayTimeout(GatewayError):
    def __init__(self, budget: float):
        super().__init__(f"completion exceeded the {budget:.1f}s budget")
        self.budget = budget


class MalformedResponse(GatewayError):
    pass


class PromptPolicyViolation(GatewayError):
    def __init__(self, violations: Sequence[Any]):
        terms = ", ".join(sorted({getattr(v, "term", str(v)) for v in violations}))
        super().__init__(f"prompt contains banned terms: {terms}")
        self.violations = list(violations)


class ProviderId(str, Enum):
    PRIMARY_MODEL = "primary_model"
    EMOJI_MODEL = "emoji_model"
    STUB = "stub"


def route_for(
    task_id: TaskId, kind: ScenarioKind | None = None, stub_mode: bool = False
) -> ProviderId:
    """Pick the provider for a task; total over all (task, kind) pairs."""
    if stub_mode:
        return ProviderId.STUB
    if task_id is TaskId.OPTIONS and kind is ScenarioKind.EMOJI_VARIABLE:
        return ProviderId.EMOJI_MODEL
    return ProviderId.PRIMARY_MODEL


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    task_id: TaskId
    scenario_kind: ScenarioKind | None = None
    max_output_tokens: int = 600
    temperature: float = 0.7
    attempt: int = 1

    def __post_init__(self):
        if self.attempt < 1:
            raise ValueError("attempt must be >= 1")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")


@dataclass(frozen=True)
class CompletionResult:
    text: str
    provider: ProviderId
    latency: float


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    base_delay: float = 0.25
    factor: float = 2.0
    total_budget: float = 20.0


@dataclass(frozen=True)
class ProviderConfig:
    base_url: str
    model: str
    api_key: str = ""


# --- stub provider -----------------------------------------------------------

_DRAFT_RE = re.compile(r"^USER_DRAFT: (.*)$", re.MULTILINE)
_SENT_RE = re.compile(r"^THE USER JUST SENT: (.*)$", re.MULTILINE)
_TOPIC_RE = re.compile(r"^TOPIC: (.*)$", re.MULTILINE)
_NAME_RE = re.compile(r"^CHARACTER_NAME: (.*)$", re.MULTILINE)


def _extract(pattern: re.Pattern[str], prompt: str, fallback: str) -> str:
    match = pattern.search(prompt)
    return match.group(1).strip() if match else fallback


def _default_scenario(prompt: str) -> str:
    topic = _extract(_TOPIC_RE, prompt, "your interests")
    name = _extract(_NAME_RE, prompt, "your chat partner")
    return (
        f"BACKGROUND: You recently became friends with {name}, who is an "
        f"enthusiast in {topic} and is happy to share what they know. This is "
        f"an informal conversation, so swap stories about {topic}, ask "
        f"questions, or just see where the chat goes."
    )


def _default_options(prompt: str, kind: ScenarioKind | None) -> str:
    draft = _extract(_DRAFT_RE, prompt, "something about the topic")
    if kind is ScenarioKind.EMOJI_VARIABLE:
        opts = [f"{draft} \U0001f52e", f"{draft} \U0001f44d", f"{draft} \U0001f30b"]
        rationales = [
            "The crystal-ball emoji has no fixed meaning here, so a literal reader is left guessing.",
            "The thumbs-up matches the words exactly, so nothing is left open.",
            "The volcano emoji clashes with the text and invites a literal reading.",
        ]
    elif kind is ScenarioKind.MISPERCEIVED_BLUNT:
        opts = [f"Why are you being so dismissive? {draft}", draft, f"What's with the attitude? {draft}"]
        rationales = [
            "Accuses the other person of dismissiveness they did not intend.",
            "Takes the plain message at face value and keeps the chat moving.",
            "Reads hostility into a simple statement of preference.",
        ]
    elif kind is ScenarioKind.FIGURATIVE_EXPRESSION:
        opts = [f"It's like finding a needle in a haystack: {draft}", draft, f"Talk about climbing a mountain: {draft}"]
        rationales = [
            "The needle image can be taken word-for-word by a literal reader.",
            "Plain wording with no imagery to decode.",
            "The mountain image says more than the literal words and can mislead.",
        ]
    else:
        opts = [draft, f"Specifically, I'd like to know this: {draft}", f"I was wondering... {draft}"]
        rationales = [
            "Leaves the request implicit, so it can be answered with a bare yes.",
            "Names the request outright, leaving nothing to infer.",
            "Muses aloud without clearly asking for anything.",
        ]
    return "\n".join(
        [
            f"OPTION_1: {opts[0]}",
            f"OPTION_2: {opts[1]}",
            f"OPTION_3: {opts[2]}",
            "APPROPRIATE: 2",
            f"RATIONALE_1: {rationales[0]}",
            f"RATIONALE_2: {rationales[1]}",
            f"RATIONALE_3: {rationales[2]}",
        ]
    )


def _default_response(prompt: str) -> str:
    if "do you mean" in prompt:
        return "RESPONSE: do you mean that literally, or are you asking for specifics?"
    if "as rude" in prompt:
        return (
            "RESPONSE: i didn't mean it that way, i was just saying it plainly. "
            "can we keep going?"
        )
    return "RESPONSE: makes sense. tell me more about what you're thinking."


def _default_blunt_trigger(prompt: str) -> str:
    topic = _extract(_TOPIC_RE, prompt, "this")
    return (
        f"TRIGGER: i'm not interested in going over {topic} details again. "
        f"can we talk about something else?"
    )


def _default_feedback(prompt: str) -> str:
    if "Write CONSTRUCTIVE" in prompt:
        return "\n".join(
            [
                "FEEDBACK_TYPE: CONSTRUCTIVE",
                "HEADING: A Clearer Way to Say It",
                "BODY: You likely meant one thing, but a literal reading of the "
                "message you sent points another way, so the two of you ended up "
                "with different pictures of the conversation.",
                "ALT_RATIONALE: The well-phrased option states the intent "
                "directly, leaving nothing to infer.",
                "CONTINUE_MESSAGE: sorry for the mix-up. here is what i actually "
                "meant, said plainly.",
            ]
        )
    return "\n".join(
        [
            "FEEDBACK_TYPE: POSITIVE",
            "HEADING: Clear Message, Smooth Chat",
            "BODY: Your message said exactly what you meant, so it landed the "
            "first time. The other two options each left room for a different "
            "literal reading and could have needed a follow-up question.",
        ]
    )


def _default_continue_reply(prompt: str) -> str:
    return (
        "RESPONSE: thanks for clearing that up. that makes sense, let's pick "
        "up where we left off."
    )


_DEFAULT_GENERATORS: dict[TaskId, Callable[[str, ScenarioKind | None], str]] = {
    TaskId.SCENARIO: lambda prompt, kind: _default_scenario(prompt),
    TaskId.OPTIONS: _default_options,
    TaskId.RESPONSE: lambda prompt, kind: _default_response(prompt),
    TaskId.BLUNT_TRIGGER: lambda prompt, kind: _default_blunt_trigger(prompt),
    TaskId.FEEDBACK: lambda prompt, kind: _default_feedback(prompt),
    TaskId.CONTINUE_REPLY: lambda prompt, kind: _default_continue_reply(prompt),
}


@dataclass
class StubScript:
    """Canned outputs keyed by (task, kind, occurrence ordinal).

    The ordinal counts calls for a (task, kind) pair within one stub
    lifetime, starting at 1; a regeneration retry advances it. Lookups fall
    back from the exact ordinal to the script's per-task fallback text, then
    to parametric defaults that template valid output around markers pulled
    from the prompt — so any session shape is fully covered.
    """

    entries: dict[tuple[TaskId, ScenarioKind | None, int], str] = field(default_factory=dict)
    fallbacks: dict[TaskId, str] = field(default_factory=dict)

    def add(
        self, task: TaskId, kind: ScenarioKind | None, occurrence: int, output: str
    ) -> "StubScript":
        self.entries[(task, kind, occurrence)] = output.strip()
        return self

    @staticmethod
    def from_file(path: str) -> "StubScript":
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh) or {}
        script = StubScript()
        for item in doc.get("entries", []):
            script.add(
                TaskId(item["task"]),
                ScenarioKind(item["kind"]) if item.get("kind") else None,
                int(item.get("occurrence", 1)),
                item["output"],
            )
        for task, text in (doc.get("fallbacks") or {}).items():
            script.fallbacks[TaskId(task)] = text.strip()
        return script


class StubProvider:
    """Scripted stand-in for live models; no I/O, deterministic per call sequence."""

    def __init__(self, script: StubScript | None = None):
        self.script = script or StubScript()
        self._occurrences: dict[tuple[TaskId, ScenarioKind | None], int] = {}

    def reset(self) -> None:
        self._occurrences.clear()

    def complete_text(self, request: CompletionRequest) -> str:
        key = (request.task_id, request.scenario_kind)
        ordinal = self._occurrences.get(key, 0) + 1
        self._occurrences[key] = ordinal
        scripted = self.script.entries.get((request.task_id, request.scenario_kind, ordinal))
        if scripted is not None:
            return scripted
        fallback = self.script.fallbacks.get(request.task_id)
        if fallback is not None:
            return fallback
        return _DEFAULT_GENERATORS[request.task_id](request.prompt, request.scenario_kind)


# --- live transport -----------------------------------------------------------


class HttpChatTransport:
    """Chat-completions HTTP client: one user-role message per request."""

    def __init__(self):
        import httpx

        self._client = httpx.Client()
        self._httpx = httpx

    def send(self, config: ProviderConfig, request: CompletionRequest, timeout: float) -> str:
        headers = {"Content-Type": "application/json"}
        if config.api_key:
            headers["Authorization"] = f"Bearer {config.api_key}"
        response = self._client.post(
            f"{config.base_url.rstrip('/')}/chat/completions",
            json={
                "model": config.model,
                "messages": [{"role": "user", "content": request.prompt}],
                "temperature": request.temperature,
                "max_tokens": request.max_output_tokens,
            },
            headers=headers,
            timeout=timeout,
        )
        if response.status_code == 429 or response.status_code >= 500:
            raise TransientTransportError(f"HTTP {response.status_code}")
        if response.status_code != 200:
            raise FatalTransportError(f"HTTP {response.status_code}: {response.text[:200]}")
        try:
            text = response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise MalformedResponse(f"unexpected payload shape: {exc}") from exc
        if not isinstance(text, str):
            raise MalformedResponse("completion content is not text")
        return text


class TransientTransportError(Exception):
    """Retryable transport failure (connection trouble, 429, 5xx)."""


class FatalTransportError(Exception):
    """Non-retryable transport failure (bad credentials, bad request)."""


class Gateway:
    """Shared completion front door with routing, retries, and a lint hook.

    ``network_calls`` counts live transport attempts only; with stub mode on
    it must stay at zero for an entire session (hermeticity check).
    """

    def __init__(
        self,
        providers: dict[ProviderId, ProviderConfig] | None = None,
        stub_script: StubScript | None = None,
        stub_mode: bool = True,
        retry: RetryPolicy | None = None,
        transport: Any | None = None,
        lint_hook: Callable[[str], Sequence[Any]] | None = None,
        sleeper: Callable[[float], None] = time.sleep,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.providers = providers or {}
        self.stub = StubProvider(stub_script)
        self.stub_mode = stub_mode
        self.retry = retry or RetryPolicy()
        self._transport = transport
        self.lint_hook = lint_hook
        self._sleep = sleeper
        self._clock = clock
        self.network_calls = 0

    def route(self, task_id: TaskId, kind: ScenarioKind | None = None) -> ProviderId:
        return route_for(task_id, kind, stub_mode=self.stub_mode)

    def reset_stub(self) -> None:
        self.stub.reset()

    def complete(self, request: CompletionRequest) -> CompletionResult:
        if self.lint_hook is not None:
            violations = self.lint_hook(request.prompt)
            if violations:
                raise PromptPolicyViolation(violations)
        provider = self.route(request.task_id, request.scenario_kind)
        if provider is ProviderId.STUB:
            return CompletionResult(self.stub.complete_text(request), provider, 0.0)
        return self._complete_live(provider, request)

    def _complete_live(self, provider: ProviderId, request: CompletionRequest) -> CompletionResult:
        config = self.providers.get(provider)
        if config is None:
            raise ProviderUnavailable(provider, 0, "no provider configured")
        if self._transport is None:
            self._transport = HttpChatTransport()
        start = self._clock()
        deadline = start + self.retry.total_budget
        last_error = ""
        for attempt in range(1, self.retry.max_attempts + 1):
            remaining = deadline - self._clock()
            if remaining <= 0:
                raise GatewayTimeout(self.retry.total_budget)
            self.network_calls += 1
            try:
                text = self._transport.send(config, request, timeout=remaining)
                return CompletionResult(text, provider, self._clock() - start)
            except MalformedResponse:
                raise
            except FatalTransportError as exc:
                raise ProviderUnavailable(provider, attempt, str(exc)) from exc
            except Exception as exc:  # transient transport trouble
                last_error = str(exc)
                if attempt < self.retry.max_attempts:
                    self._sleep(self.retry.base_delay * self.retry.factor ** (attempt - 1))
        raise ProviderUnavailable(provider, self.retry.max_attempts, last_error)

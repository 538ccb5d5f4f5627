from __future__ import annotations

import pytest

from convocoach.content import TaskId, lint_prompt
from convocoach.gateway import (
    CompletionRequest,
    FatalTransportError,
    Gateway,
    GatewayTimeout,
    MalformedResponse,
    PromptPolicyViolation,
    ProviderConfig,
    ProviderId,
    ProviderUnavailable,
    RetryPolicy,
    StubScript,
    TransientTransportError,
    route_for,
)
from convocoach.messages import ScenarioKind


def request(task=TaskId.RESPONSE, kind=None, prompt="THE USER JUST SENT: hi"):
    return CompletionRequest(prompt=prompt, task_id=task, scenario_kind=kind)


# --- routing ---------------------------------------------------------------------


def test_emoji_options_route_to_emoji_model():
    assert route_for(TaskId.OPTIONS, ScenarioKind.EMOJI_VARIABLE) is ProviderId.EMOJI_MODEL


def test_other_options_route_to_primary():
    assert route_for(TaskId.OPTIONS, ScenarioKind.FIGURATIVE_EXPRESSION) is ProviderId.PRIMARY_MODEL


def test_stub_mode_overrides_everything():
    for task in TaskId:
        for kind in list(ScenarioKind) + [None]:
            assert route_for(task, kind, stub_mode=True) is ProviderId.STUB


def test_routing_total_and_exclusive():
    emoji_cells = [
        (task, kind)
        for task in TaskId
        for kind in list(ScenarioKind) + [None]
        if route_for(task, kind) is ProviderId.EMOJI_MODEL
    ]
    assert emoji_cells == [(TaskId.OPTIONS, ScenarioKind.EMOJI_VARIABLE)]


# --- stub provider -----------------------------------------------------------------


def test_scripted_entry_returned_with_zero_latency():
    script = StubScript().add(TaskId.RESPONSE, None, 1, "RESPONSE: scripted greeting")
    gateway = Gateway(stub_script=script, stub_mode=True)
    result = gateway.complete(request())
    assert result.text == "RESPONSE: scripted greeting"
    assert result.provider is ProviderId.STUB
    assert result.latency == 0.0
    assert gateway.network_calls == 0


def test_stub_occurrences_advance_per_task_kind():
    script = (
        StubScript()
        .add(TaskId.RESPONSE, None, 1, "RESPONSE: first")
        .add(TaskId.RESPONSE, None, 2, "RESPONSE: second")
    )
    gateway = Gateway(stub_script=script, stub_mode=True)
    assert gateway.complete(request()).text == "RESPONSE: first"
    assert gateway.complete(request()).text == "RESPONSE: second"
    gateway.reset_stub()
    assert gateway.complete(request()).text == "RESPONSE: first"


def test_stub_defaults_are_prompt_parametric():
    gateway = Gateway(stub_mode=True)
    prompt = "SCENARIO NOTE: x\nUSER_DRAFT: Can you pass the salt?"
    text = gateway.complete(
        CompletionRequest(prompt=prompt, task_id=TaskId.OPTIONS,
                          scenario_kind=ScenarioKind.INDIRECT_SPEECH_ACT)
    ).text
    assert "Can you pass the salt?" in text
    assert "APPROPRIATE: 2" in text


def test_stub_script_file_roundtrip(tmp_path):
    path = tmp_path / "script.yaml"
    path.write_text(
        "entries:\n"
        "  - task: response\n"
        "    kind: emoji_variable\n"
        "    occurrence: 1\n"
        "    output: 'RESPONSE: from file'\n"
        "fallbacks:\n"
        "  continue_reply: 'RESPONSE: fallback reply'\n",
        encoding="utf-8",
    )
    script = StubScript.from_file(str(path))
    gateway = Gateway(stub_script=script, stub_mode=True)
    got = gateway.complete(request(kind=ScenarioKind.EMOJI_VARIABLE)).text
    assert got == "RESPONSE: from file"
    fallback = gateway.complete(request(task=TaskId.CONTINUE_REPLY)).text
    assert fallback == "RESPONSE: fallback reply"


# --- live transport ---------------------------------------------------------------


class FlakyTransport:
    def __init__(self, failures: int, text: str = "ok", fatal: bool = False):
        self.failures = failures
        self.calls = 0
        self.text = text
        self.fatal = fatal

    def send(self, config, request, timeout):
        self.calls += 1
        if self.calls <= self.failures:
            if self.fatal:
                raise FatalTransportError("HTTP 401")
            raise TransientTransportError("HTTP 503")
        return self.text


def live_gateway(transport, **kwargs):
    providers = {ProviderId.PRIMARY_MODEL: ProviderConfig("http://example.invalid", "model-x")}
    sleeps: list[float] = []
    gateway = Gateway(
        providers=providers,
        stub_mode=False,
        transport=transport,
        sleeper=sleeps.append,
        **kwargs,
    )
    return gateway, sleeps


def test_retry_then_success_with_backoff():
    transport = FlakyTransport(failures=2)
    gateway, sleeps = live_gateway(transport)
    result = gateway.complete(request())
    assert result.text == "ok"
    assert transport.calls == 3
    assert gateway.network_calls == 3
    assert sleeps == [0.25, 0.5]


def test_exhaustion_raises_provider_unavailable():
    transport = FlakyTransport(failures=99)
    gateway, _ = live_gateway(transport)
    with pytest.raises(ProviderUnavailable) as err:
        gateway.complete(request())
    assert err.value.attempts == 3
    assert transport.calls == 3  # retry bound: never more than max_attempts


def test_fatal_transport_error_does_not_retry():
    transport = FlakyTransport(failures=99, fatal=True)
    gateway, sleeps = live_gateway(transport)
    with pytest.raises(ProviderUnavailable) as err:
        gateway.complete(request())
    assert err.value.attempts == 1
    assert transport.calls == 1
    assert sleeps == []


def test_budget_exhaustion_raises_timeout():
    class SlowClock:
        def __init__(self):
            self.now = 0.0

        def __call__(self):
            self.now += 30.0
            return self.now

    transport = FlakyTransport(failures=99)
    providers = {ProviderId.PRIMARY_MODEL: ProviderConfig("http://example.invalid", "model-x")}
    gateway = Gateway(
        providers=providers,
        stub_mode=False,
        transport=transport,
        retry=RetryPolicy(total_budget=20.0),
        sleeper=lambda s: None,
        clock=SlowClock(),
    )
    with pytest.raises(GatewayTimeout):
        gateway.complete(request())


def test_malformed_response_not_retried():
    class BadPayloadTransport:
        calls = 0

        def send(self, config, request, timeout):
            self.calls += 1
            raise MalformedResponse("content was a list")

    transport = BadPayloadTransport()
    gateway, _ = live_gateway(transport)
    with pytest.raises(MalformedResponse):
        gateway.complete(request())
    assert transport.calls == 1


def test_unconfigured_provider_fails_fast():
    gateway = Gateway(providers={}, stub_mode=False, transport=object())
    with pytest.raises(ProviderUnavailable):
        gateway.complete(request())


# --- hooks and request validation ----------------------------------------------------


def test_lint_hook_blocks_banned_prompt():
    gateway = Gateway(stub_mode=True, lint_hook=lambda t: lint_prompt(t).violations)
    with pytest.raises(PromptPolicyViolation):
        gateway.complete(request(prompt="please act autistic"))
    assert gateway.complete(request(prompt="please act direct and literal")).text


def test_request_invariants():
    with pytest.raises(ValueError):
        CompletionRequest(prompt="x", task_id=TaskId.RESPONSE, attempt=0)
    with pytest.raises(ValueError):
        CompletionRequest(prompt="x", task_id=TaskId.RESPONSE, max_output_tokens=0)
    with pytest.raises(ValueError):
        CompletionRequest(prompt="x", task_id=TaskId.RESPONSE, temperature=3.0)

"""Hermetic session driver: scripted and randomized full sessions against the
engine + orchestrator with the stub provider, plus an engine fuzzer.

Every run enumerates the structural invariants (scheduling, gating, branch
correctness, prompt policy, routing, hermeticity, event-sourcing) into an
:class:`InvariantReport`; engine or orchestrator failures become failed
checks, not crashes. Exit codes: 0 all checks pass, 1 check failure,
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from . import content, engine, goldens
from .content import TaskId
from .engine import PhaseName, ScheduleConfig, UserProfile
from .gateway import Gateway, ProviderId, StubScript, route_for
from .messages import (
    FREE,
    BestAlternative,
    Feedback,
    FeedbackTag,
    MessageOptionSet,
    MessageRole,
    OptionCandidate,
    ScenarioKind,
)
from .orchestrator import Orchestrator
from .service import codec
from .service.sessions import SessionService
from .service.store import MemoryStore


class ScriptExhausted(Exception):
    pass


# A pick is the canonical option index, or a rule resolved per option set.
PICK_APPROPRIATE = "appropriate"
PICK_WRONG = "wrong"


@dataclass(frozen=True)
class TurnAction:
    draft: str
    pick: int | str = PICK_APPROPRIATE


@dataclass
class SessionScript:
    profile: UserProfile
    seed: int
    actions: list[TurnAction]
    stub_script: StubScript | None = None
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)


DEFAULT_DRAFTS = (
    "hey! i've been getting more into {topic} lately",
    "what got you interested in it?",
    "Can you tell me more about the basics?",
    "I tried reading about it but it's a lot to take in",
    "That part went really well for me",
    "Ok, what do you want to talk about?",
    "Is there a simple way to get better at this?",
    "The last thing I tried worked out great",
    "Sure, happy to switch topics",
    "Do you know where I should start next?",
)


def resolve_pick(pick: int | str, option_set: MessageOptionSet) -> int:
    if pick == PICK_APPROPRIATE:
        return option_set.appropriate_index
    if pick == PICK_WRONG:
        return (option_set.appropriate_index + 1) % 3
    return int(pick)


def make_script(
    profile: UserProfile,
    seed: int,
    policy: str = PICK_APPROPRIATE,
    schedule: ScheduleConfig | None = None,
    stub_script: StubScript | None = None,
) -> SessionScript:
    """Build a full-session script under one pick policy.

    ``policy``: 'appropriate', 'wrong', 'random' (seeded), or a
    comma-separated index list like '0,2,1,...' covering the scenario turns.
    """
    schedule = schedule or ScheduleConfig()
    total = schedule.free_turns + schedule.total_scenario_rounds()
    rng = random.Random(seed)
    indexed: list[int] | None = None
    if policy not in (PICK_APPROPRIATE, PICK_WRONG, "random"):
        indexed = [int(p) for p in policy.split(",")]
        if len(indexed) < schedule.total_scenario_rounds():
            raise ValueError("indexed policy shorter than the scenario rounds")
    actions = []
    scenario_seen = 0
    for i in range(total):
        draft = DEFAULT_DRAFTS[i % len(DEFAULT_DRAFTS)].format(topic=profile.topic)
        if i < schedule.free_turns:
            actions.append(TurnAction(draft=draft, pick=PICK_APPROPRIATE))
            continue
        if indexed is not None:
            pick: int | str = indexed[scenario_seen]
        elif policy == "random":
            pick = rng.randrange(3)
        else:
            pick = policy
        scenario_seen += 1
        actions.append(TurnAction(draft=draft, pick=pick))
    return SessionScript(
        profile=profile, seed=seed, actions=actions, stub_script=stub_script, schedule=schedule
    )


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class InvariantReport:
    checks: list[CheckResult] = field(default_factory=list)

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(CheckResult(name, passed, detail))

    @property
    def overall(self) -> bool:
        return all(check.passed for check in self.checks)

    def to_dict(self) -> dict:
        return {
            "overall": self.overall,
            "checks": [
                {"name": c.name, "pass": c.passed, "detail": c.detail} for c in self.checks
            ],
        }

    def render_text(self) -> str:
        lines = []
        for check in self.checks:
            status = "PASS" if check.passed else "FAIL"
            suffix = f" ({check.detail})" if check.detail and not check.passed else ""
            lines.append(f"[{status}] {check.name}{suffix}")
        lines.append(f"overall: {'PASS' if self.overall else 'FAIL'}")
        return "\n".join(lines)


def _fake_clock():
    """Deterministic one-second-per-event clock for byte-stable output."""
    from datetime import datetime, timedelta, timezone

    epoch = datetime(2025, 1, 1, tzinfo=timezone.utc)
    counter = {"n": 0}

    def tick() -> str:
        stamp = (epoch + timedelta(seconds=counter["n"])).isoformat(timespec="milliseconds")
        counter["n"] += 1
        return stamp

    return tick


@dataclass
class RunResult:
    report: InvariantReport
    transcript: dict
    state: engine.SessionState
    events: list[dict]


def run_session(script: SessionScript, session_id: str = "harness-run") -> RunResult:
    """Drive one complete in-process session; never touches the network."""
    lint_hits: list = []

    def lint_hook(text: str):
        lint_hits.extend(content.lint_prompt(text).violations)
        return []  # record, never abort: failures must land in the report

    gateway = Gateway(stub_script=script.stub_script, stub_mode=True, lint_hook=lint_hook)
    service = SessionService(
        MemoryStore(),
        Orchestrator(gateway),
        schedule_config=script.schedule,
        clock=_fake_clock(),
        id_factory=lambda: session_id,
    )
    report = InvariantReport()
    failures: list[str] = []

    created = service.create_session(
        script.profile.first_name, script.profile.pronouns, script.profile.topic, seed=script.seed
    )
    sid = created["session_id"]

    def submit(payload: dict) -> None:
        for event in service.handle_client_payload(sid, payload):
            if event["payload"]["type"] == "error_notice":
                failures.append(f"{event['payload']['code']}: {event['payload']['message']}")

    for event in service.ensure_chat_started(sid):
        if event["payload"]["type"] == "error_notice":
            failures.append(event["payload"]["message"])

    action_index = 0
    total_turns = script.schedule.free_turns + script.schedule.total_scenario_rounds()
    for _ in range(total_turns * 8 + 16):  # generous step bound; loop exits on Completed
        state = service.load_state(sid)
        if engine.is_complete(state):
            break
        phase = state.phase.name
        if phase is PhaseName.AWAITING_DRAFT:
            if action_index >= len(script.actions):
                raise ScriptExhausted(
                    f"script has {len(script.actions)} actions but the session wants more"
                )
            submit({"type": "user_draft", "text": script.actions[action_index].draft})
            action_index += 1
        elif phase is PhaseName.AWAITING_SELECTION:
            turn = state.current_turn()
            assert turn.option_set is not None
            pick = resolve_pick(script.actions[turn.index].pick, turn.option_set)
            submit({"type": "option_selected", "index": pick})
        elif phase is PhaseName.AWAITING_CONTINUE:
            feedback = state.current_turn().feedback
            assert feedback is not None and feedback.continue_message
            submit({"type": "continue_submitted", "text": feedback.continue_message})
        else:
            failures.append(f"session stuck in phase {phase.value}")
            break

    state = service.load_state(sid)
    events = service.replay_events(sid)

    report.add("no_errors", not failures, "; ".join(failures[:3]))
    report.add("session_completed", engine.is_complete(state))
    _scheduler_checks(report, state, script.schedule)
    _gating_checks(report, state)
    _branch_checks(report, state)
    _blunt_order_checks(report, events)
    report.add("prompt_policy", not lint_hits, f"{len(lint_hits)} lint violations")
    report.add("stub_hermeticity", gateway.network_calls == 0, f"{gateway.network_calls} network calls")
    report.add("routing_table", _routing_ok(), "route_for deviates from the task table")
    report.add("event_sourcing", service.verify(sid), "fold(log) != snapshot")
    problems = engine.check_invariants(state, script.schedule)
    report.add("engine_invariants", not problems, "; ".join(problems))

    transcript_doc = service.get_transcript(sid)
    return RunResult(report=report, transcript=transcript_doc, state=state, events=events)


def _scheduler_checks(report: InvariantReport, state, schedule: ScheduleConfig) -> None:
    assignments = [turn.assignment for turn in state.turns]
    free_prefix = all(a == FREE for a in assignments[: schedule.free_turns])
    report.add("first_turns_free", free_prefix)
    counts = Counter(a for a in assignments[schedule.free_turns :])
    expected = {kind: schedule.rounds_per_kind for kind in schedule.kinds}
    report.add(
        "each_kind_exact_rounds",
        dict(counts) == expected,
        f"got {dict((getattr(k, 'value', k), v) for k, v in counts.items())}",
    )


def _gating_checks(report: InvariantReport, state) -> None:
    ok = True
    for turn in state.turns:
        if turn.feedback is not None and turn.feedback.is_constructive():
            later_draft = any(t.draft is not None for t in state.turns[turn.index + 1 :])
            if later_draft and not turn.continue_message_sent:
                ok = False
            if not turn.has_role(MessageRole.CONTINUE_REPLY) and later_draft:
                ok = False
    report.add("continue_gate", ok)


def _branch_checks(report: InvariantReport, state) -> None:
    ok = True
    details = []
    for turn in state.turns:
        if turn.option_set is None or turn.selected is None or turn.feedback is None:
            continue
        picked_right = turn.selected == turn.option_set.appropriate_index
        if picked_right == turn.feedback.is_constructive():
            ok = False
            details.append(f"turn {turn.index}")
        if turn.feedback.is_constructive():
            if turn.feedback.best_alternative is None or not turn.feedback.continue_message:
                ok = False
                details.append(f"turn {turn.index} missing repair fields")
    report.add("branch_correctness", ok, "; ".join(details))


def _blunt_order_checks(report: InvariantReport, events: list[dict]) -> None:
    """In every blunt turn the trigger must precede that turn's user draft."""
    tags = []
    for event in events:
        payload = event["payload"]
        tag = payload.get("type")
        if tag == "options_presented":
            tags.append(("options", payload["option_set"]["kind"]))
        elif tag == "character_message":
            tags.append(("message", payload.get("role")))
        elif tag == "user_draft":
            tags.append(("draft", None))
    ok = True
    for i, (tag, kind) in enumerate(tags):
        if tag != "options" or kind != ScenarioKind.MISPERCEIVED_BLUNT.value:
            continue
        draft_idx = next((j for j in range(i - 1, -1, -1) if tags[j][0] == "draft"), None)
        if draft_idx is None:
            ok = False
            continue
        # the trigger must sit between the previous draft and this one
        for j in range(draft_idx - 1, -1, -1):
            if tags[j][0] == "draft":
                ok = False
                break
            if tags[j] == ("message", MessageRole.BLUNT_TRIGGER.value):
                break
        else:
            ok = False
    report.add("blunt_trigger_precedes_draft", ok)


def _routing_ok() -> bool:
    for task in TaskId:
        for kind in list(ScenarioKind) + [None]:
            expected = (
                ProviderId.EMOJI_MODEL
                if (task, kind) == (TaskId.OPTIONS, ScenarioKind.EMOJI_VARIABLE)
                else ProviderId.PRIMARY_MODEL
            )
            if route_for(task, kind) is not expected:
                return False
            if route_for(task, kind, stub_mode=True) is not ProviderId.STUB:
                return False
    return True


# --- engine fuzzer ---------------------------------------------------------------


def _random_option_set(rng: random.Random, kind: ScenarioKind, valid: bool) -> MessageOptionSet:
    tag = rng.randrange(10_000)
    emoji = "\U0001f44d" if kind is ScenarioKind.EMOJI_VARIABLE else ""
    texts = [f"option a{tag} {emoji}", f"option b{tag} {emoji}", f"option c{tag}"]
    positions = [0, 1, 2]
    rng.shuffle(positions)
    if not valid:
        breakage = rng.randrange(3)
        if breakage == 0:
            texts[1] = texts[0]  # duplicates
        elif breakage == 1:
            positions = [0, 0, 2]  # not a permutation
        else:
            texts[2] = "   "  # empty option
    return MessageOptionSet(
        options=tuple(
            OptionCandidate(text=texts[i], display_position=positions[i]) for i in range(3)
        ),
        appropriate_index=rng.randrange(3),
        hidden_rationales=("r1", "r2", "r3"),
        kind=kind,
    )


def _random_feedback(rng: random.Random, constructive: bool, valid: bool) -> Feedback:
    if constructive:
        feedback = Feedback(
            kind_tag=FeedbackTag.CONSTRUCTIVE,
            heading="heads up",
            body="the readings differ",
            best_alternative=BestAlternative("alt text", "alt why"),
            continue_message="sorry, here is what i meant",
        )
        if not valid:
            feedback = Feedback(
                kind_tag=FeedbackTag.CONSTRUCTIVE, heading="heads up", body="readings differ"
            )
    else:
        feedback = Feedback(kind_tag=FeedbackTag.POSITIVE, heading="nice", body="that was clear")
        if not valid:
            feedback = Feedback(
                kind_tag=FeedbackTag.POSITIVE,
                heading="nice",
                body="clear",
                continue_message="should not be here",
            )
    return feedback


def _random_event(rng: random.Random, state: engine.SessionState) -> engine.EngineEvent:
    """Mix of plausible and deliberately illegal events."""
    turn = state.turns[-1] if state.turns else None
    kind: ScenarioKind = (
        turn.assignment
        if turn is not None and isinstance(turn.assignment, ScenarioKind)
        else rng.choice(list(ScenarioKind))
    )
    constructive = True
    if turn is not None and turn.option_set is not None and turn.selected is not None:
        constructive = turn.selected != turn.option_set.appropriate_index
    choices = [
        lambda: engine.SubmitDraft(rng.choice(["hello there", "", "what about this?"])),
        lambda: engine.PresentOptions(_random_option_set(rng, kind, valid=rng.random() < 0.8)),
        lambda: engine.SelectOption(rng.choice([0, 1, 2, 3, -1])),
        lambda: engine.CharacterReplied(rng.choice(["sounds good, or not?", "tell me more", ""])),
        lambda: engine.FeedbackIssued(
            _random_feedback(rng, constructive if rng.random() < 0.7 else not constructive,
                             valid=rng.random() < 0.8)
        ),
        lambda: engine.SubmitContinue(rng.choice(["sorry, i meant this", ""])),
        lambda: engine.BluntTriggerIssued(rng.choice(["let's move on.", ""])),
    ]
    return rng.choice(choices)()


def fuzz_events(seed: int, iterations: int) -> InvariantReport:
    """Replay random legal/illegal event interleavings against the engine."""
    if iterations <= 0:
        raise ValueError("iterations must be positive")
    rng = random.Random(seed)
    report = InvariantReport()
    profile = UserProfile("Fuzz", "they/them", "testing")
    brief = content.ScenarioBrief("A chat with Nova about testing.", content.INSTRUCTION_TEXT)

    def fresh() -> engine.SessionState:
        state = engine.new_session(profile, brief, "Nova", rng.randrange(2**31), session_id="fuzz")
        state, _ = engine.begin_chat(state)
        return state

    state = fresh()
    rejected = 0
    accepted = 0
    violations: list[str] = []
    for i in range(iterations):
        if state.phase.name is PhaseName.COMPLETED:
            state = fresh()
        event = _random_event(rng, state)
        before = codec.canonical_bytes(codec.state_to_dict(state))
        try:
            next_state, _ = engine.apply_event(state, event)
        except engine.EngineError:
            rejected += 1
            after = codec.canonical_bytes(codec.state_to_dict(state))
            if before != after:
                violations.append(f"iteration {i}: rejected event mutated state")
                break
            continue
        accepted += 1
        problems = engine.check_invariants(next_state)
        if problems:
            violations.append(f"iteration {i}: {problems}")
            break
        state = next_state
    report.add("fuzz_no_violations", not violations, "; ".join(violations))
    report.add("fuzz_progress", accepted > 0 and rejected > 0,
               f"accepted={accepted} rejected={rejected}")
    report.add(
        "fuzz_counts", True, f"iterations={iterations} accepted={accepted} rejected={rejected}"
    )
    return report


# --- CLI -------------------------------------------------------------------------


def _write_outputs(out: str | None, report: InvariantReport, extra: dict | None = None) -> None:
    print(report.render_text())
    if out:
        doc = report.to_dict()
        if extra:
            doc.update(extra)
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        print(f"report written to {path}")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="convocoach", description="Hermetic session harness and invariant checker"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="drive a full scripted stub session")
    run_parser.add_argument("--seed", type=int, default=7)
    run_parser.add_argument(
        "--policy",
        default=PICK_APPROPRIATE,
        help="appropriate | wrong | random | comma-separated indices",
    )
    run_parser.add_argument("--stub-script", default=None, help="YAML stub script path")
    run_parser.add_argument("--out", default=None, help="write the JSON report here")

    fuzz_parser = sub.add_parser("fuzz", help="random event sequences against the engine")
    fuzz_parser.add_argument("--seed", type=int, default=0)
    fuzz_parser.add_argument("--iterations", type=int, default=10_000)
    fuzz_parser.add_argument("--out", default=None)

    goldens_parser = sub.add_parser("goldens", help="export canonical golden transcripts")
    goldens_parser.add_argument("--out", default="goldens", help="output directory")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0

    if args.command == "run":
        stub_script = StubScript.from_file(args.stub_script) if args.stub_script else None
        profile = UserProfile("Robin", "they/them", "photography")
        try:
            script = make_script(profile, args.seed, args.policy, stub_script=stub_script)
        except ValueError as exc:
            print(f"usage error: {exc}", file=sys.stderr)
            return 2
        started = time.monotonic()
        result = run_session(script)
        elapsed = time.monotonic() - started
        _write_outputs(args.out, result.report, {"elapsed_seconds": round(elapsed, 3)})
        return 0 if result.report.overall else 1

    if args.command == "fuzz":
        try:
            report = fuzz_events(args.seed, args.iterations)
        except ValueError as exc:
            print(f"usage error: {exc}", file=sys.stderr)
            return 2
        _write_outputs(args.out, report)
        return 0 if report.overall else 1

    if args.command == "goldens":
        try:
            paths = goldens.export_goldens(args.out)
        except OSError as exc:
            print(f"io failure: {exc}", file=sys.stderr)
            return 1
        for path in paths:
            print(path)
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())

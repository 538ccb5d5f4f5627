from __future__ import annotations

import json

import pytest

from convocoach.engine import UserProfile
from convocoach.goldens import export_goldens, golden_flows, run_flow
from convocoach.harness import (
    PICK_APPROPRIATE,
    PICK_WRONG,
    ScriptExhausted,
    SessionScript,
    TurnAction,
    fuzz_events,
    main,
    make_script,
    resolve_pick,
    run_session,
)
from convocoach.messages import FeedbackTag, MessageRole, ScenarioKind


@pytest.fixture
def robin() -> UserProfile:
    return UserProfile("Robin", "they/them", "photography")


def feedbacks(state):
    return [turn.feedback for turn in state.turns if turn.feedback is not None]


def test_always_appropriate_policy(robin):
    result = run_session(make_script(robin, seed=5, policy=PICK_APPROPRIATE))
    assert result.report.overall, result.report.render_text()
    issued = feedbacks(result.state)
    assert len(issued) == 8
    assert all(f.kind_tag is FeedbackTag.POSITIVE for f in issued)
    assert not any(turn.continue_message_sent for turn in result.state.turns)


def test_always_wrong_policy(robin):
    result = run_session(make_script(robin, seed=5, policy=PICK_WRONG))
    assert result.report.overall, result.report.render_text()
    issued = feedbacks(result.state)
    assert len(issued) == 8
    assert all(f.kind_tag is FeedbackTag.CONSTRUCTIVE for f in issued)
    gated = [turn for turn in result.state.turns if turn.feedback is not None]
    assert all(turn.continue_message_sent for turn in gated)
    assert all(turn.has_role(MessageRole.CONTINUE_REPLY) for turn in gated)


def test_random_policy_deterministic(robin):
    first = run_session(make_script(robin, seed=9, policy="random"))
    second = run_session(make_script(robin, seed=9, policy="random"))
    assert [t.selected for t in first.state.turns] == [t.selected for t in second.state.turns]


def test_indexed_policy(robin):
    picks = "0,1,2,0,1,2,0,1"
    result = run_session(make_script(robin, seed=3, policy=picks))
    selected = [turn.selected for turn in result.state.turns if turn.selected is not None]
    assert selected == [0, 1, 2, 0, 1, 2, 0, 1]


def test_short_script_raises(robin):
    script = SessionScript(
        profile=robin,
        seed=1,
        actions=[TurnAction(draft=f"turn {i}") for i in range(5)],
    )
    with pytest.raises(ScriptExhausted):
        run_session(script)


def test_indexed_policy_must_cover_rounds(robin):
    with pytest.raises(ValueError):
        make_script(robin, seed=1, policy="0,1")


def test_resolve_pick_rules():
    from tests.test_engine import make_option_set

    option_set = make_option_set()
    assert resolve_pick(PICK_APPROPRIATE, option_set) == 1
    assert resolve_pick(PICK_WRONG, option_set) == 2
    assert resolve_pick(0, option_set) == 0


# --- fuzz ------------------------------------------------------------------------


def test_fuzz_clean_small_run():
    report = fuzz_events(seed=1, iterations=1500)
    assert report.overall, report.render_text()


def test_fuzz_rejects_zero_iterations():
    with pytest.raises(ValueError):
        fuzz_events(seed=1, iterations=0)


def test_fuzz_deterministic():
    first = fuzz_events(seed=77, iterations=500)
    second = fuzz_events(seed=77, iterations=500)
    assert first.to_dict() == second.to_dict()


# --- goldens ----------------------------------------------------------------------


def test_export_goldens_writes_four_stable_files(tmp_path):
    first_dir = tmp_path / "a"
    second_dir = tmp_path / "b"
    first = export_goldens(first_dir)
    second = export_goldens(second_dir)
    assert len(first) == 4
    names = sorted(path.name for path in first)
    assert names == [
        "golden_blunt.json",
        "golden_emoji.json",
        "golden_figurative.json",
        "golden_indirect.json",
    ]
    for a, b in zip(sorted(first), sorted(second)):
        assert a.read_bytes() == b.read_bytes()


def test_blunt_golden_trigger_precedes_draft(tmp_path):
    paths = export_goldens(tmp_path)
    blunt = json.loads((tmp_path / "golden_blunt.json").read_text())
    turn = blunt["turns"][0]
    roles = [m["role"] for m in turn["character_messages"]]
    assert roles[0] == "blunt_trigger"
    assert roles == ["blunt_trigger", "blunt_follow_up", "continue_reply"]
    assert turn["feedback"]["kind_tag"] == "constructive"


def test_golden_flows_cover_all_kinds():
    kinds = [flow.schedule.kinds for flow in golden_flows()]
    flat = {kind for bundle in kinds for kind in bundle}
    assert flat == set(ScenarioKind)


def test_golden_run_reports_pass():
    for flow in golden_flows():
        result = run_flow(flow)
        assert result.report.overall, f"{flow.name}: {result.report.render_text()}"


# --- CLI --------------------------------------------------------------------------


def test_cli_run_writes_report(tmp_path, capsys):
    out = tmp_path / "report.json"
    code = main(["run", "--seed", "4", "--policy", "appropriate", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["overall"] is True
    assert any(check["name"] == "stub_hermeticity" for check in doc["checks"])
    assert "overall: PASS" in capsys.readouterr().out


def test_cli_fuzz(tmp_path):
    out = tmp_path / "fuzz.json"
    assert main(["fuzz", "--seed", "2", "--iterations", "400", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["overall"] is True


def test_cli_goldens(tmp_path, capsys):
    assert main(["goldens", "--out", str(tmp_path / "g")]) == 0
    assert len(list((tmp_path / "g").glob("golden_*.json"))) == 4


def test_cli_usage_errors():
    assert main(["fuzz", "--iterations", "0"]) == 2
    assert main(["run", "--policy", "0,1"]) == 2
    assert main(["nonsense"]) == 2

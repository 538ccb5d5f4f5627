"""Canonical regression flows: one golden transcript per scenario kind.

Each flow pins a stub script, profile, seed, and pick sequence, so the
exported transcript is byte-stable run over run. The indirect flow covers a
wrong pick then a right pick across two rounds; the other three stage the
classic wrong-pick repair loop, with the bluntness flow opening on the
character's trigger message. Clarification texts follow the X-or-Y
contrast rule that response validation enforces.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .content import TaskId
from .engine import ScheduleConfig, UserProfile
from .gateway import StubScript
from .messages import ScenarioKind


@dataclass(frozen=True)
class GoldenFlow:
    name: str
    profile: UserProfile
    seed: int  # also selects the character name
    schedule: ScheduleConfig
    drafts: tuple[str, ...]
    picks: tuple[int, ...]  # canonical option index per scenario turn
    script: StubScript


def _indirect_flow() -> GoldenFlow:
    script = StubScript()
    script.add(TaskId.SCENARIO, None, 1, (
        "BACKGROUND: You recently became friends with Julia, who is an "
        "enthusiast in machine learning. They are eager to share their "
        "knowledge and insights about this fascinating field with you. In "
        "this informal conversation, you can share your own experiences, "
        "discuss ideas, or ask any questions that come to mind. Enjoy the "
        "conversation and let your curiosity lead the way!"
    ))
    script.add(TaskId.RESPONSE, None, 1, "RESPONSE: haha yeah, it's everywhere right now")
    script.add(TaskId.RESPONSE, None, 2, "RESPONSE: sure, what do you want to know more about?")
    options = "\n".join([
        "OPTION_1: What methods can be used to speed up a vision model on an embedded device?",
        "OPTION_2: Is there a way to speed up a vision model on an embedded device?",
        "OPTION_3: Do you know how to speed up a vision model on an embedded device?",
        "APPROPRIATE: 1",
        "RATIONALE_1: Asks for specific methods outright, so the request cannot be read as a yes-or-no question.",
        "RATIONALE_2: Asks whether a way exists, which a literal reader can answer with just 'yes'.",
        "RATIONALE_3: Asks about knowledge, which a literal reader can also answer with just 'yes'.",
    ])
    script.add(TaskId.OPTIONS, ScenarioKind.INDIRECT_SPEECH_ACT, 1, options)
    script.add(TaskId.OPTIONS, ScenarioKind.INDIRECT_SPEECH_ACT, 2, options)
    script.add(TaskId.RESPONSE, ScenarioKind.INDIRECT_SPEECH_ACT, 1, (
        "RESPONSE: do you want to know if it's technically possible or are "
        "you looking for specific methods to do it?"
    ))
    script.add(TaskId.FEEDBACK, ScenarioKind.INDIRECT_SPEECH_ACT, 1, "\n".join([
        "FEEDBACK_TYPE: CONSTRUCTIVE",
        "HEADING: Clarify Your Question for Julia",
        "BODY: The phrase 'Is there a way to speed up a vision model on an "
        "embedded device?' can be interpreted in two ways: Julia might think "
        "you're asking if it's technically possible, which could be answered "
        "with 'yes' or 'no', or she might think you're asking for specific "
        "methods on how to do it. Because people have different communication "
        "styles, Julia sought clarification. To avoid confusion, specify if "
        "you want a simple answer or detailed information.",
        "ALT_RATIONALE: The alternative message clearly asks for specific "
        "methods to speed up a vision model on an embedded device. This "
        "phrasing removes ambiguity by directly requesting detailed "
        "information, reducing the chance of misunderstanding.",
        "CONTINUE_MESSAGE: sorry for being unclear. i'd like to know what "
        "specific methods you might recommend to speed up a vision model on "
        "an embedded device.",
    ]))
    script.add(TaskId.CONTINUE_REPLY, None, 1, (
        "RESPONSE: no problem! quantization and pruning are the two i'd look "
        "at first. both shrink the model so it runs faster."
    ))
    script.add(TaskId.RESPONSE, ScenarioKind.INDIRECT_SPEECH_ACT, 2, (
        "RESPONSE: you can use quantization or pruning techniques. have you "
        "tried looking into those?"
    ))
    script.add(TaskId.FEEDBACK, ScenarioKind.INDIRECT_SPEECH_ACT, 2, "\n".join([
        "FEEDBACK_TYPE: POSITIVE",
        "HEADING: Effective Communication",
        "BODY: Mark, your question was clear because you directly asked Julia "
        "for specific methods to speed up a vision model, which made your "
        "intent clear. In comparison, asking 'Is there a way...' might only "
        "get a 'yes' response without details. Similarly, 'Do you know "
        "how...' could be answered with 'yes' too. Your direct question "
        "avoided these issues, making it easy for Julia to understand and "
        "provide helpful information. Keep using straightforward language!",
    ]))
    return GoldenFlow(
        name="indirect",
        profile=UserProfile("Mark", "he/him", "machine learning"),
        seed=0,  # Julia
        schedule=ScheduleConfig(free_turns=2, rounds_per_kind=2,
                                kinds=(ScenarioKind.INDIRECT_SPEECH_ACT,)),
        drafts=(
            "hey, i've been hearing a lot about machine learning recently!",
            "can i ask you some questions about it?",
            "How can I speed up a vision model running on an embedded device?",
            "How can I speed up a vision model running on an embedded device?",
        ),
        picks=(1, 0),
        script=script,
    )


def _figurative_flow() -> GoldenFlow:
    script = StubScript()
    script.add(TaskId.SCENARIO, None, 1, (
        "BACKGROUND: You've teamed up with Jeremy, a friend who spends most "
        "of his time deep in databases and loves explaining how they work. "
        "This is a casual chat, so ask anything about databases or share how "
        "your own learning is going."
    ))
    script.add(TaskId.OPTIONS, ScenarioKind.FIGURATIVE_EXPRESSION, 1, "\n".join([
        "OPTION_1: Yes, it's like navigating a labyrinth, but I'll come out the other side as a master.",
        "OPTION_2: Yes, it's confusing but by the end of this, I will be an expert at it.",
        "OPTION_3: Yes, it's like climbing a mountain, but by the end, I'll be at the summit.",
        "APPROPRIATE: 2",
        "RATIONALE_1: The labyrinth image can be taken word-for-word as wandering an actual maze.",
        "RATIONALE_2: Says plainly that the topic is confusing and that mastery is the goal.",
        "RATIONALE_3: The mountain image can be read literally as a plan to go climbing.",
    ]))
    script.add(TaskId.RESPONSE, ScenarioKind.FIGURATIVE_EXPRESSION, 1, (
        "RESPONSE: do you mean you'll actually go mountain climbing once "
        "you're done, or that learning databases is a big challenge?"
    ))
    script.add(TaskId.FEEDBACK, ScenarioKind.FIGURATIVE_EXPRESSION, 1, "\n".join([
        "FEEDBACK_TYPE: CONSTRUCTIVE",
        "HEADING: Clarify Your Meaning Clearly",
        "BODY: When you said 'like climbing a mountain' and 'I'll be at the "
        "summit,' you were likely describing the challenging learning process "
        "of databases. However, Jeremy interpreted it literally, thinking "
        "you'll actually go on a mountain climbing trip. People have "
        "different communication styles; Jeremy prefers direct statements to "
        "avoid confusion. Making sure your message is straightforward can "
        "prevent misunderstandings.",
        "ALT_RATIONALE: The alternative message is clear because it directly "
        "expresses that the process is confusing and you aim to become an "
        "expert by the end. This removes any figurative language which might "
        "be misinterpreted, so your intended meaning is unambiguous and "
        "Jeremy understands your point.",
        "CONTINUE_MESSAGE: oh haha, sorry for the confusion! i meant that "
        "learning databases feels challenging like climbing a mountain, but "
        "it feels rewarding when you reach the end",
    ]))
    script.add(TaskId.CONTINUE_REPLY, None, 1, (
        "RESPONSE: that makes sense, thanks for explaining. databases do "
        "take a while to click, and it pays off once they do."
    ))
    return GoldenFlow(
        name="figurative",
        profile=UserProfile("Sam", "they/them", "databases"),
        seed=5,  # Jeremy
        schedule=ScheduleConfig(free_turns=0, rounds_per_kind=1,
                                kinds=(ScenarioKind.FIGURATIVE_EXPRESSION,)),
        drafts=("Yea, it's confusing but by the end of this, I will be a master at it",),
        picks=(2,),
        script=script,
    )


def _emoji_flow() -> GoldenFlow:
    script = StubScript()
    script.add(TaskId.SCENARIO, None, 1, (
        "BACKGROUND: You're catching up with Jason, a friend who loves "
        "coastal travel and can compare shorelines from memory. Keep it "
        "casual: trade trip stories or ask about places worth visiting."
    ))
    script.add(TaskId.OPTIONS, ScenarioKind.EMOJI_VARIABLE, 1, "\n".join([
        "OPTION_1: I explored coastal Maine. Is coastal Massachusetts similar? \U0001f30b",
        "OPTION_2: Yes I visited coastal Maine. I heard it resembles coastal Massachusetts ⛱",
        "OPTION_3: I experienced coastal Maine. How does it compare to Massachusetts? \U0001f3c4",
        "APPROPRIATE: 2",
        "RATIONALE_1: The volcano emoji has nothing to do with either coast, so a literal reader hunts for a volcano connection.",
        "RATIONALE_2: The beach umbrella matches the coastal subject, so the emoji and the words agree.",
        "RATIONALE_3: The surfing emoji injects an activity the words never mention, leaving the intent open.",
    ]))
    script.add(TaskId.RESPONSE, ScenarioKind.EMOJI_VARIABLE, 1, (
        "RESPONSE: coastal massachusetts doesn't have any volcanoes though. "
        "do you mean the \U0001f30b as excitement, or something else?"
    ))
    script.add(TaskId.FEEDBACK, ScenarioKind.EMOJI_VARIABLE, 1, "\n".join([
        "FEEDBACK_TYPE: CONSTRUCTIVE",
        "HEADING: Unclear Emoji Use",
        "BODY: You added the volcano emoji for energy, but Jason reads emoji "
        "at face value, so it looked like a claim about volcanoes on the "
        "Massachusetts coast. Because the emoji didn't match the words "
        "around it, the message pointed two directions at once and Jason "
        "had to ask which one you meant.",
        "ALT_RATIONALE: The alternative message uses a beach umbrella emoji, "
        "which is clearly related to coastal areas and removes the confusion "
        "caused by the volcano emoji. It directly compares the regions by "
        "mentioning resemblance, making your intent clearer and easier to "
        "understand.",
        "CONTINUE_MESSAGE: oh sorry for the confusion! \U0001f30b was "
        "supposed to show excitement. coastal maine was great and i was "
        "wondering if it feels the same in massachusetts.",
    ]))
    script.add(TaskId.CONTINUE_REPLY, None, 1, (
        "RESPONSE: got it, that clears it up. i think you'd like the "
        "massachusetts coast, it has the same rocky stretches and little "
        "harbor towns."
    ))
    return GoldenFlow(
        name="emoji",
        profile=UserProfile("Ava", "she/her", "coastal travel"),
        seed=1,  # Jason
        schedule=ScheduleConfig(free_turns=0, rounds_per_kind=1,
                                kinds=(ScenarioKind.EMOJI_VARIABLE,)),
        drafts=(
            "Yes, I've been to coastal Maine, which I've heard is quite similar to coastal Massachusetts",
        ),
        picks=(0,),
        script=script,
    )


def _blunt_flow() -> GoldenFlow:
    script = StubScript()
    script.add(TaskId.SCENARIO, None, 1, (
        "BACKGROUND: You've been chatting with Darrell, a friend who says "
        "exactly what he thinks and has heard a lot about your cats lately. "
        "This is an informal conversation, so talk about whatever comes up."
    ))
    script.add(TaskId.BLUNT_TRIGGER, ScenarioKind.MISPERCEIVED_BLUNT, 1, (
        "TRIGGER: well, i'm not really interested in hearing about your cat "
        "anymore. can we discuss something else?"
    ))
    script.add(TaskId.OPTIONS, ScenarioKind.MISPERCEIVED_BLUNT, 1, "\n".join([
        "OPTION_1: Why are you being so dismissive? What do you want to talk about?",
        "OPTION_2: Sure, what would you like to discuss?",
        "OPTION_3: What's with the attitude? What do you want to talk about?",
        "APPROPRIATE: 2",
        "RATIONALE_1: Accuses Darrell of being dismissive, reading hostility into a plain request.",
        "RATIONALE_2: Takes the request at face value and keeps the conversation moving.",
        "RATIONALE_3: Treats a direct preference as an attitude problem and demands an account of it.",
    ]))
    script.add(TaskId.RESPONSE, ScenarioKind.MISPERCEIVED_BLUNT, 1, (
        "RESPONSE: i wasn't being dismissive, i just wanted to switch "
        "topics. what do you want to discuss?"
    ))
    script.add(TaskId.FEEDBACK, ScenarioKind.MISPERCEIVED_BLUNT, 1, "\n".join([
        "FEEDBACK_TYPE: CONSTRUCTIVE",
        "HEADING: Understanding Different Communication Styles",
        "BODY: Frank, Darrell might naturally express themselves in a "
        "straightforward manner without intending to be rude. Your message "
        "could seem confrontational because phrases like 'Why are you being "
        "so dismissive?' imply a negative assumption about Darrell's "
        "intentions. Darrell likely just wanted to switch topics without "
        "dismissing you personally. Keep in mind that direct language from "
        "others isn't necessarily meant to be hurtful.",
        "ALT_RATIONALE: The alternative message focuses on asking what "
        "Darrell would like to discuss, which removes any negative "
        "assumptions and confrontational tone. It conveys openness and "
        "willingness to engage, making Darrell feel more understood and "
        "respected, and helps avoid misunderstandings.",
        "CONTINUE_MESSAGE: sorry if i came off as confrontational, darrell. "
        "let's talk about something else. what do you have in mind?",
    ]))
    script.add(TaskId.CONTINUE_REPLY, None, 1, (
        "RESPONSE: no worries. i'd like to hear what you've been up to "
        "outside of cat stories, anything new this week?"
    ))
    return GoldenFlow(
        name="blunt",
        profile=UserProfile("Frank", "he/him", "cats"),
        seed=3,  # Darrell
        schedule=ScheduleConfig(free_turns=0, rounds_per_kind=1,
                                kinds=(ScenarioKind.MISPERCEIVED_BLUNT,)),
        drafts=("Sure. What would you like to talk about?",),
        picks=(0,),
        script=script,
    )


def golden_flows() -> list[GoldenFlow]:
    return [_indirect_flow(), _figurative_flow(), _emoji_flow(), _blunt_flow()]


def run_flow(flow: GoldenFlow):
    from .harness import SessionScript, TurnAction, run_session

    actions = []
    pick_iter = iter(flow.picks)
    for i, draft in enumerate(flow.drafts):
        if i < flow.schedule.free_turns:
            actions.append(TurnAction(draft=draft))
        else:
            actions.append(TurnAction(draft=draft, pick=next(pick_iter)))
    script = SessionScript(
        profile=flow.profile,
        seed=flow.seed,
        actions=actions,
        stub_script=flow.script,
        schedule=flow.schedule,
    )
    return run_session(script, session_id=f"golden-{flow.name}")


def export_goldens(directory: str | Path) -> list[Path]:
    """Write the four canonical transcripts; byte-stable across runs."""
    from .service.transcript import transcript_to_bytes

    out_dir = Path(directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for flow in golden_flows():
        result = run_flow(flow)
        if not result.report.overall:
            raise RuntimeError(
                f"golden flow {flow.name} failed checks:\n{result.report.render_text()}"
            )
        path = out_dir / f"golden_{flow.name}.json"
        path.write_bytes(transcript_to_bytes(result.transcript) + b"\n")
        paths.append(path)
    return paths

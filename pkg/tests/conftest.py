from __future__ import annotations

import pytest

from convocoach import content
from convocoach.content import ScenarioBrief
from convocoach.engine import UserProfile
from convocoach.gateway import Gateway
from convocoach.orchestrator import Orchestrator


@pytest.fixture
def profile() -> UserProfile:
    return UserProfile(first_name="Mark", pronouns="he/him", topic="machine learning")


@pytest.fixture
def brief() -> ScenarioBrief:
    return ScenarioBrief(
        background="You recently became friends with Julia, who is an enthusiast in machine learning.",
        instruction=content.INSTRUCTION_TEXT,
    )


@pytest.fixture
def stub_gateway() -> Gateway:
    return Gateway(stub_mode=True, lint_hook=lambda text: content.lint_prompt(text).violations)


@pytest.fixture
def orchestrator(stub_gateway) -> Orchestrator:
    return Orchestrator(stub_gateway)

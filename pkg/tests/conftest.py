"""Shared fixtures: offline managers, a scripted session, random drivers."""
from __future__ import annotations

import random

import pytest

from litsteer.mocks import (
    MockChatProvider,
    SyntheticArxivTransport,
    build_mock_manager,
)
from litsteer.session import EngineConfig, SessionManager

SCRIPT_QUERY = "human steering of language model research agents"


@pytest.fixture
def manager() -> SessionManager:
    return build_mock_manager()


@pytest.fixture
def fast_manager() -> SessionManager:
    """Manager tuned for speed: no projection recompute, small result sets."""
    return build_mock_manager(
        config=EngineConfig(auto_project=False),
        transport=SyntheticArxivTransport(results_per_query=3),
    )


def run_full_pipeline(manager: SessionManager, session_id: str, query: str):
    """Create a pipeline and walk it through all four checkpoints."""
    run = manager.create_pipeline(session_id, query)
    for _ in range(4):
        node = manager.step(run.pipeline_id)
        manager.approve(node.node_id)
    return run


def run_scripted_session(manager: SessionManager):
    """The reference interaction: explore, approve all stages, branch once.

    create -> step/approve x4 -> propose 3 directions -> materialize one ->
    run the child pipeline to synthesis.
    """
    session = manager.create_session()
    run = run_full_pipeline(manager, session.session_id, SCRIPT_QUERY)
    proposals = manager.propose_directions(run.tree_node_id, count=3)
    child = manager.materialize(proposals[0].node_id)
    for _ in range(4):
        node = manager.step(child.pipeline_id)
        manager.approve(node.node_id)
    return session, run, child


def make_fixture_chat(pairs) -> MockChatProvider:
    """Chat mock that only answers the given (request, text) pairs."""
    chat = MockChatProvider(synthesize_missing=False)
    for request, text in pairs:
        chat.add_fixture(request, text)
    return chat


def random_keywords(rng: random.Random, k: int = 4) -> frozenset[str]:
    bank = (
        "graph", "layout", "benchmark", "interpretability", "retrieval",
        "agents", "survey", "evaluation", "visualization", "provenance",
        "embedding", "steering",
    )
    return frozenset(rng.sample(bank, k))

"""Tests for the exploration tree, edge metrics, and proposal parsing."""
from __future__ import annotations

import math
import random

import pytest

from litsteer.errors import (
    AlreadyExplored,
    EmptyQuery,
    InvalidRequest,
    ProposalParse,
    UnknownNode,
    UnknownParent,
)
from litsteer.tree import (
    MINUS_SIGN,
    DirectionProposal,
    EdgeMetrics,
    ExplorationTree,
    QueryTreeNode,
    TreeNodeState,
    delta_label,
    normalize_keywords,
    parse_proposals,
    semantic_delta,
    semantic_offset,
)


def make_proposal(seed_query: str = "graph layout benchmarks") -> DirectionProposal:
    return DirectionProposal(
        title="benchmarks",
        rationale="several reviews called for shared baselines",
        seed_query=seed_query,
    )


# --- keyword normalization ----------------------------------------------------

class TestNormalizeKeywords:
    def test_lowercases_and_strips(self):
        assert normalize_keywords(["  Graph ", "LAYOUT"]) == {"graph", "layout"}

    def test_drops_blank_entries(self):
        assert normalize_keywords(["graph", "", "   "]) == {"graph"}

    def test_empty_input(self):
        assert normalize_keywords([]) == set()

    def test_deduplicates_case_variants(self):
        assert normalize_keywords(["Graph", "graph", "GRAPH"]) == {"graph"}


# --- semantic offset ----------------------------------------------------------

class TestSemanticOffset:
    def test_hand_case(self):
        # cos((1,2,2),(2,1,2)) = 8/9, so the offset is 100 * (1 - 8/9) = 100/9.
        got = semantic_offset((1.0, 2.0, 2.0), (2.0, 1.0, 2.0))
        assert got == pytest.approx(100.0 / 9.0, abs=1e-12)

    def test_identical_vectors_offset_zero(self):
        assert semantic_offset((3.0, 4.0), (3.0, 4.0)) == pytest.approx(0.0, abs=1e-12)

    def test_parallel_scaled_vectors_offset_zero(self):
        assert semantic_offset((1.0, 2.0), (2.0, 4.0)) == pytest.approx(0.0, abs=1e-12)

    def test_orthogonal_vectors_offset_hundred(self):
        assert semantic_offset((1.0, 0.0), (0.0, 1.0)) == pytest.approx(100.0)

    def test_antiparallel_clamped_to_hundred(self):
        # Raw value would be 200; the scale is clamped into [0, 100].
        assert semantic_offset((1.0, 0.0), (-1.0, 0.0)) == pytest.approx(100.0)

    def test_symmetric(self):
        rng = random.Random(7)
        for _ in range(50):
            a = tuple(rng.uniform(-1, 1) for _ in range(5))
            b = tuple(rng.uniform(-1, 1) for _ in range(5))
            assert semantic_offset(a, b) == pytest.approx(semantic_offset(b, a))

    def test_range_on_random_pairs(self):
        rng = random.Random(11)
        for _ in range(200):
            a = tuple(rng.gauss(0, 1) for _ in range(8))
            b = tuple(rng.gauss(0, 1) for _ in range(8))
            got = semantic_offset(a, b)
            assert 0.0 <= got <= 100.0
            assert math.isfinite(got)


# --- semantic delta and labels ------------------------------------------------

class TestSemanticDelta:
    def test_hand_case(self):
        added, removed = semantic_delta(
            ["graph", "layout"], ["graph", "benchmark"]
        )
        assert added == {"benchmark"}
        assert removed == {"layout"}

    def test_identical_sets_empty_delta(self):
        added, removed = semantic_delta(["a", "b"], ["b", "a"])
        assert added == frozenset()
        assert removed == frozenset()

    def test_normalizes_before_diffing(self):
        added, removed = semantic_delta(["Graph "], ["graph", "NEW"])
        assert added == {"new"}
        assert removed == frozenset()

    def test_reconstruction_property(self):
        rng = random.Random(23)
        bank = [f"kw{i}" for i in range(12)]
        for _ in range(200):
            parent = set(rng.sample(bank, rng.randint(1, 8)))
            child = set(rng.sample(bank, rng.randint(1, 8)))
            added, removed = semantic_delta(parent, child)
            assert (parent - removed) | added == child
            assert not added & removed


class TestDeltaLabel:
    def test_exact_label(self):
        got = delta_label({"benchmark"}, {"interpretability"})
        assert got == "+benchmark −interpretability"

    def test_uses_minus_sign_not_hyphen(self):
        assert MINUS_SIGN == "−"
        got = delta_label(set(), {"x"})
        assert "-x" not in got
        assert f"{MINUS_SIGN}x" in got

    def test_sorted_within_each_group(self):
        got = delta_label({"b", "a"}, {"d", "c"})
        assert got == f"+a +b {MINUS_SIGN}c {MINUS_SIGN}d"

    def test_added_before_removed(self):
        got = delta_label({"z"}, {"a"})
        assert got == f"+z {MINUS_SIGN}a"

    def test_empty_delta_empty_label(self):
        assert delta_label(set(), set()) == ""


class TestEdgeMetrics:
    def test_label_property(self):
        metrics = EdgeMetrics(
            semantic_offset_pct=12.5,
            added=frozenset({"benchmark"}),
            removed=frozenset({"survey"}),
        )
        assert metrics.label == f"+benchmark {MINUS_SIGN}survey"

    def test_offset_may_be_none(self):
        metrics = EdgeMetrics(
            semantic_offset_pct=None, added=frozenset(), removed=frozenset()
        )
        assert metrics.to_dict()["semantic_offset_pct"] is None

    def test_offset_out_of_range_rejected(self):
        with pytest.raises(InvalidRequest):
            EdgeMetrics(
                semantic_offset_pct=100.5, added=frozenset(), removed=frozenset()
            )
        with pytest.raises(InvalidRequest):
            EdgeMetrics(
                semantic_offset_pct=-0.1, added=frozenset(), removed=frozenset()
            )

    def test_overlapping_added_removed_rejected(self):
        with pytest.raises(InvalidRequest):
            EdgeMetrics(
                semantic_offset_pct=1.0,
                added=frozenset({"x"}),
                removed=frozenset({"x"}),
            )

    def test_to_dict_sorts_keywords(self):
        metrics = EdgeMetrics(
            semantic_offset_pct=3.0,
            added=frozenset({"b", "a"}),
            removed=frozenset(),
        )
        doc = metrics.to_dict()
        assert doc["added"] == ["a", "b"]
        assert doc["label"] == "+a +b"


# --- proposals ------------------------------------------------------------------

class TestDirectionProposal:
    def test_round_trip(self):
        proposal = make_proposal()
        assert DirectionProposal.from_dict(proposal.to_dict()) == proposal

    def test_blank_field_rejected(self):
        with pytest.raises(InvalidRequest):
            DirectionProposal(title=" ", rationale="r", seed_query="q")
        with pytest.raises(InvalidRequest):
            DirectionProposal(title="t", rationale="", seed_query="q")
        with pytest.raises(InvalidRequest):
            DirectionProposal(title="t", rationale="r", seed_query="\n")


class TestParseProposals:
    def test_parses_lines(self):
        text = (
            "benchmarks | reviewers asked for baselines | layout benchmarks\n"
            "\n"
            "surveys | context is thin | layout surveys\n"
        )
        got = parse_proposals(text, limit=5)
        assert [p.title for p in got] == ["benchmarks", "surveys"]
        assert got[1].seed_query == "layout surveys"

    def test_truncates_to_limit(self):
        text = "\n".join(f"t{i} | r{i} | q{i}" for i in range(5))
        got = parse_proposals(text, limit=2)
        assert [p.title for p in got] == ["t0", "t1"]

    def test_wrong_field_count_rejected(self):
        with pytest.raises(ProposalParse):
            parse_proposals("only a title | and a rationale", limit=3)
        with pytest.raises(ProposalParse):
            parse_proposals("a | b | c | d", limit=3)

    def test_blank_field_rejected(self):
        with pytest.raises(ProposalParse):
            parse_proposals("t |  | q", limit=3)

    def test_empty_completion_rejected(self):
        with pytest.raises(ProposalParse):
            parse_proposals("\n  \n", limit=3)

    def test_limit_below_one_rejected(self):
        with pytest.raises(InvalidRequest):
            parse_proposals("t | r | q", limit=0)


# --- tree nodes -----------------------------------------------------------------

class TestQueryTreeNode:
    def test_blank_query_rejected(self):
        with pytest.raises(EmptyQuery):
            QueryTreeNode(
                node_id="t1",
                parent_id=None,
                query_text="  ",
                state=TreeNodeState.EXPLORED,
                pipeline_id="p1",
            )

    def test_explored_requires_pipeline(self):
        with pytest.raises(InvalidRequest):
            QueryTreeNode(
                node_id="t1",
                parent_id=None,
                query_text="q",
                state=TreeNodeState.EXPLORED,
            )

    def test_proposed_requires_proposal(self):
        with pytest.raises(InvalidRequest):
            QueryTreeNode(
                node_id="t2",
                parent_id="t1",
                query_text="q",
                state=TreeNodeState.PROPOSED,
            )

    def test_explored_with_proposal_rejected(self):
        with pytest.raises(InvalidRequest):
            QueryTreeNode(
                node_id="t1",
                parent_id=None,
                query_text="q",
                state=TreeNodeState.EXPLORED,
                pipeline_id="p1",
                proposal=make_proposal(),
            )

    def test_round_trip(self):
        node = QueryTreeNode(
            node_id="t2",
            parent_id="t1",
            query_text="graph layout benchmarks",
            state=TreeNodeState.PROPOSED,
            keyword_set={"graph", "layout"},
            proposal=make_proposal(),
        )
        clone = QueryTreeNode.from_dict(node.to_dict())
        assert clone == node


class TestExplorationTree:
    def build(self) -> ExplorationTree:
        tree = ExplorationTree()
        tree.add_explored("t1", None, "graph layout", pipeline_id="p1")
        tree.add_proposed("t2", "t1", make_proposal())
        return tree

    def test_root_and_membership(self):
        tree = self.build()
        assert tree.root_id == "t1"
        assert len(tree) == 2
        assert "t2" in tree
        assert "t9" not in tree

    def test_second_root_rejected(self):
        tree = self.build()
        with pytest.raises(InvalidRequest):
            tree.add_explored("t3", None, "another root", pipeline_id="p2")

    def test_unknown_parent_rejected(self):
        tree = self.build()
        with pytest.raises(UnknownParent):
            tree.add_proposed("t3", "t9", make_proposal())

    def test_duplicate_id_rejected(self):
        tree = self.build()
        with pytest.raises(InvalidRequest):
            tree.add_proposed("t2", "t1", make_proposal())

    def test_get_unknown_rejected(self):
        with pytest.raises(UnknownNode):
            ExplorationTree().get("t1")

    def test_children(self):
        tree = self.build()
        tree.add_proposed("t3", "t1", make_proposal("another query"))
        assert {n.node_id for n in tree.children("t1")} == {"t2", "t3"}
        assert tree.children("t2") == []

    def test_mark_explored(self):
        tree = self.build()
        node = tree.mark_explored("t2", pipeline_id="p2")
        assert node.state is TreeNodeState.EXPLORED
        assert node.pipeline_id == "p2"
        assert node.proposal is None

    def test_mark_explored_twice_rejected(self):
        tree = self.build()
        tree.mark_explored("t2", pipeline_id="p2")
        with pytest.raises(AlreadyExplored):
            tree.mark_explored("t2", pipeline_id="p3")

    def test_root_already_explored(self):
        tree = self.build()
        with pytest.raises(AlreadyExplored):
            tree.mark_explored("t1", pipeline_id="p9")

    def test_round_trip(self):
        tree = self.build()
        clone = ExplorationTree.from_dict(tree.to_dict())
        assert clone.root_id == tree.root_id
        assert clone.to_dict() == tree.to_dict()
        clone.check()

    def test_empty_round_trip(self):
        clone = ExplorationTree.from_dict(ExplorationTree().to_dict())
        assert len(clone) == 0
        assert clone.root_id is None

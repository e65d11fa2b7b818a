"""Exploration tree: one node per research direction, explored or proposed.

Edges to the parent carry two comparisons: a semantic offset (how far the
child's query moved in embedding space, as a percentage) and a keyword delta
(which search terms were added or removed).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Sequence

from .errors import (
    AlreadyExplored,
    EmptyQuery,
    InvalidRequest,
    ProposalParse,
    UnknownNode,
    UnknownParent,
)
from .gateway import EmbeddingVector
from .semantic import cosine_similarity

logger = logging.getLogger(__name__)

# "−" (U+2212) in removed-keyword labels, so the sign reads as math, not
# punctuation.
MINUS_SIGN = "−"

SYSTEM_PROPOSE = (
    "You propose follow-up research directions after a literature review round."
)


class TreeNodeState(str, Enum):
    EXPLORED = "explored"
    PROPOSED = "proposed"


@dataclass(frozen=True)
class DirectionProposal:
    title: str
    rationale: str
    seed_query: str

    def __post_init__(self) -> None:
        if not (self.title.strip() and self.rationale.strip() and self.seed_query.strip()):
            raise InvalidRequest("proposal fields must all be nonempty")

    def to_dict(self) -> dict[str, Any]:
        return {
            "title": self.title,
            "rationale": self.rationale,
            "seed_query": self.seed_query,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> DirectionProposal:
        return cls(
            title=doc["title"],
            rationale=doc["rationale"],
            seed_query=doc["seed_query"],
        )


@dataclass
class QueryTreeNode:
    """Explored nodes own a pipeline; proposed nodes own a proposal."""

    node_id: str
    parent_id: str | None
    query_text: str
    state: TreeNodeState
    keyword_set: set[str] = field(default_factory=set)
    pipeline_id: str | None = None
    proposal: DirectionProposal | None = None

    def __post_init__(self) -> None:
        if not self.query_text.strip():
            raise EmptyQuery("tree node needs a query text")
        self.check()

    def check(self) -> None:
        if self.state is TreeNodeState.EXPLORED:
            if self.pipeline_id is None or self.proposal is not None:
                raise InvalidRequest(
                    f"explored node {self.node_id} must have a pipeline "
                    "and no proposal"
                )
        else:
            if self.pipeline_id is not None or self.proposal is None:
                raise InvalidRequest(
                    f"proposed node {self.node_id} must have a proposal "
                    "and no pipeline"
                )

    def to_dict(self) -> dict[str, Any]:
        return {
            "node_id": self.node_id,
            "parent_id": self.parent_id,
            "query_text": self.query_text,
            "state": self.state.value,
            "keyword_set": sorted(self.keyword_set),
            "pipeline_id": self.pipeline_id,
            "proposal": self.proposal.to_dict() if self.proposal else None,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> QueryTreeNode:
        proposal = doc.get("proposal")
        return cls(
            node_id=doc["node_id"],
            parent_id=doc.get("parent_id"),
            query_text=doc["query_text"],
            state=TreeNodeState(doc["state"]),
            keyword_set=set(doc.get("keyword_set", [])),
            pipeline_id=doc.get("pipeline_id"),
            proposal=DirectionProposal.from_dict(proposal) if proposal else None,
        )


class ExplorationTree:
    """Single-rooted tree; acyclic by construction (parents must exist)."""

    def __init__(self) -> None:
        self._nodes: dict[str, QueryTreeNode] = {}
        self.root_id: str | None = None

    def __len__(self) -> int:
        return len(self._nodes)

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._nodes

    def get(self, node_id: str) -> QueryTreeNode:
        node = self._nodes.get(node_id)
        if node is None:
            raise UnknownNode(f"no tree node {node_id}")
        return node

    def nodes(self) -> list[QueryTreeNode]:
        return list(self._nodes.values())

    def children(self, parent_id: str) -> list[QueryTreeNode]:
        self.get(parent_id)
        return [n for n in self._nodes.values() if n.parent_id == parent_id]

    def _insert(self, node: QueryTreeNode) -> QueryTreeNode:
        if node.node_id in self._nodes:
            raise InvalidRequest(f"tree node id {node.node_id} already used")
        if node.parent_id is None:
            if self.root_id is not None:
                raise InvalidRequest("tree already has a root")
            self.root_id = node.node_id
        elif node.parent_id not in self._nodes:
            raise UnknownParent(f"no tree node {node.parent_id}")
        self._nodes[node.node_id] = node
        return node

    def add_explored(
        self,
        node_id: str,
        parent_id: str | None,
        query_text: str,
        pipeline_id: str,
    ) -> QueryTreeNode:
        return self._insert(
            QueryTreeNode(
                node_id=node_id,
                parent_id=parent_id,
                query_text=query_text,
                state=TreeNodeState.EXPLORED,
                pipeline_id=pipeline_id,
            )
        )

    def add_proposed(
        self, node_id: str, parent_id: str, proposal: DirectionProposal
    ) -> QueryTreeNode:
        return self._insert(
            QueryTreeNode(
                node_id=node_id,
                parent_id=parent_id,
                query_text=proposal.seed_query,
                state=TreeNodeState.PROPOSED,
                proposal=proposal,
            )
        )

    def mark_explored(self, node_id: str, pipeline_id: str) -> QueryTreeNode:
        node = self.get(node_id)
        if node.state is TreeNodeState.EXPLORED:
            raise AlreadyExplored(f"tree node {node_id} already has a pipeline")
        node.state = TreeNodeState.EXPLORED
        node.pipeline_id = pipeline_id
        node.proposal = None
        node.check()
        return node

    def check(self) -> None:
        roots = [n for n in self._nodes.values() if n.parent_id is None]
        if self._nodes and len(roots) != 1:
            raise InvalidRequest(f"tree has {len(roots)} roots")
        for node in self._nodes.values():
            node.check()
            if node.parent_id is not None and node.parent_id not in self._nodes:
                raise InvalidRequest(f"node {node.node_id} has a dangling parent")

    def to_dict(self) -> dict[str, Any]:
        return {"nodes": [n.to_dict() for n in self._nodes.values()]}

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> ExplorationTree:
        tree = cls()
        for ndoc in doc.get("nodes", []):
            tree._insert(QueryTreeNode.from_dict(ndoc))
        return tree


# --- keywords and edge metrics ----------------------------------------------

def normalize_keywords(words: Iterable[str]) -> set[str]:
    return {w.strip().lower() for w in words if w.strip()}


def semantic_offset(
    parent_vec: EmbeddingVector | Sequence[float],
    child_vec: EmbeddingVector | Sequence[float],
) -> float:
    """(1 - cosine) scaled to a percentage, clamped into [0, 100]."""
    offset = (1.0 - cosine_similarity(parent_vec, child_vec)) * 100.0
    return max(0.0, min(100.0, offset))


def semantic_delta(
    parent_keywords: Iterable[str], child_keywords: Iterable[str]
) -> tuple[frozenset[str], frozenset[str]]:
    parent = normalize_keywords(parent_keywords)
    child = normalize_keywords(child_keywords)
    return frozenset(child - parent), frozenset(parent - child)


def delta_label(added: Iterable[str], removed: Iterable[str]) -> str:
    """Human-readable delta: "+new terms" then "−dropped terms", sorted."""
    parts = [f"+{k}" for k in sorted(added)]
    parts += [f"{MINUS_SIGN}{k}" for k in sorted(removed)]
    return " ".join(parts)


@dataclass(frozen=True)
class EdgeMetrics:
    """Comparison of a child direction against its parent."""

    semantic_offset_pct: float | None
    added: frozenset[str]
    removed: frozenset[str]

    def __post_init__(self) -> None:
        pct = self.semantic_offset_pct
        if pct is not None and not 0.0 <= pct <= 100.0:
            raise InvalidRequest(f"offset {pct} outside [0, 100]")
        if self.added & self.removed:
            raise InvalidRequest("a keyword cannot be both added and removed")

    @property
    def label(self) -> str:
        return delta_label(self.added, self.removed)

    def to_dict(self) -> dict[str, Any]:
        return {
            "semantic_offset_pct": self.semantic_offset_pct,
            "added": sorted(self.added),
            "removed": sorted(self.removed),
            "label": self.label,
        }


# --- direction proposals -----------------------------------------------------

def parse_proposals(text: str, limit: int) -> list[DirectionProposal]:
    """Parse "title | rationale | seed query" lines, truncated to limit."""
    if limit < 1:
        raise InvalidRequest("proposal limit must be >= 1")
    proposals: list[DirectionProposal] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split("|")]
        if len(parts) != 3 or not all(parts):
            raise ProposalParse(
                f"expected 'title | rationale | seed query': {line!r}"
            )
        proposals.append(
            DirectionProposal(title=parts[0], rationale=parts[1], seed_query=parts[2])
        )
    if not proposals:
        raise ProposalParse("no proposals in completion")
    return proposals[:limit]

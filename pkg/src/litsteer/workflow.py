"""Pipeline state machine: four stages, each pausing for human judgment.

A pipeline is a fixed chain QueryExpansion -> Search -> Review -> Synthesis.
A stage only runs once every earlier stage has been accepted (approved or
edited), and anything downstream of a change is invalidated back to Pending.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .errors import (
    EmptyKeywordSet,
    InvalidRequest,
    InvalidStatus,
    PayloadKindMismatch,
    UnknownNode,
)
from .review import ReviewResult, SynthesisReport
from .tree import normalize_keywords

logger = logging.getLogger(__name__)


class NodeKind(str, Enum):
    QUERY_EXPANSION = "query_expansion"
    SEARCH = "search"
    REVIEW = "review"
    SYNTHESIS = "synthesis"


STAGE_ORDER: tuple[NodeKind, ...] = (
    NodeKind.QUERY_EXPANSION,
    NodeKind.SEARCH,
    NodeKind.REVIEW,
    NodeKind.SYNTHESIS,
)


class NodeStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    AWAITING_APPROVAL = "awaiting_approval"
    APPROVED = "approved"
    EDITED = "edited"
    FAILED = "failed"


# Accepting states: the stage's output is settled and the next may run.
ACCEPTING_STATUSES = frozenset({NodeStatus.APPROVED, NodeStatus.EDITED})

# Every move the engine is allowed to make. Reruns of accepted nodes pass
# through Pending; downstream invalidation is the *->Pending family.
LEGAL_TRANSITIONS: dict[NodeStatus, frozenset[NodeStatus]] = {
    NodeStatus.PENDING: frozenset({NodeStatus.RUNNING}),
    NodeStatus.RUNNING: frozenset(
        {NodeStatus.AWAITING_APPROVAL, NodeStatus.FAILED}
    ),
    NodeStatus.AWAITING_APPROVAL: frozenset(
        {
            NodeStatus.APPROVED,
            NodeStatus.EDITED,
            NodeStatus.RUNNING,
            NodeStatus.PENDING,
        }
    ),
    NodeStatus.APPROVED: frozenset({NodeStatus.EDITED, NodeStatus.PENDING}),
    NodeStatus.EDITED: frozenset({NodeStatus.EDITED, NodeStatus.PENDING}),
    NodeStatus.FAILED: frozenset({NodeStatus.RUNNING, NodeStatus.PENDING}),
}


# --- payloads ---------------------------------------------------------------

@dataclass(frozen=True)
class KeywordSet:
    """Output of QueryExpansion: normalized search terms."""

    keywords: frozenset[str]

    def __post_init__(self) -> None:
        cleaned = frozenset(normalize_keywords(self.keywords))
        if not cleaned:
            raise EmptyKeywordSet("keyword set cannot be empty")
        object.__setattr__(self, "keywords", cleaned)

    def to_dict(self) -> dict[str, Any]:
        return {"keywords": sorted(self.keywords)}

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> KeywordSet:
        return cls(keywords=frozenset(doc["keywords"]))


@dataclass(frozen=True)
class PaperList:
    """Output of Search: arxiv ids in retrieval order, deduplicated."""

    arxiv_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        deduped: list[str] = []
        seen: set[str] = set()
        for arxiv_id in self.arxiv_ids:
            if not arxiv_id.strip():
                raise InvalidRequest("paper list contains an empty id")
            if arxiv_id not in seen:
                seen.add(arxiv_id)
                deduped.append(arxiv_id)
        object.__setattr__(self, "arxiv_ids", tuple(deduped))

    def to_dict(self) -> dict[str, Any]:
        return {"arxiv_ids": list(self.arxiv_ids)}

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> PaperList:
        return cls(arxiv_ids=tuple(doc["arxiv_ids"]))


NodePayload = KeywordSet | PaperList | ReviewResult | SynthesisReport

_PAYLOAD_BY_KIND: dict[NodeKind, type] = {
    NodeKind.QUERY_EXPANSION: KeywordSet,
    NodeKind.SEARCH: PaperList,
    NodeKind.REVIEW: ReviewResult,
    NodeKind.SYNTHESIS: SynthesisReport,
}

_PAYLOAD_TAGS: dict[type, str] = {
    KeywordSet: "keyword_set",
    PaperList: "paper_list",
    ReviewResult: "review_result",
    SynthesisReport: "report",
}


def payload_kind(payload: NodePayload) -> NodeKind:
    for kind, cls in _PAYLOAD_BY_KIND.items():
        if isinstance(payload, cls):
            return kind
    raise PayloadKindMismatch(f"not a node payload: {type(payload).__name__}")


def payload_to_dict(payload: NodePayload) -> dict[str, Any]:
    return {"kind": _PAYLOAD_TAGS[type(payload)], "data": payload.to_dict()}


def payload_from_dict(doc: dict[str, Any]) -> NodePayload:
    by_tag = {tag: cls for cls, tag in _PAYLOAD_TAGS.items()}
    tag = doc.get("kind")
    if tag not in by_tag:
        raise PayloadKindMismatch(f"unknown payload kind {tag!r}")
    return by_tag[tag].from_dict(doc["data"])


# --- node record ---------------------------------------------------------------

@dataclass
class NodeRecord:
    """One stage of one pipeline; all mutation goes through the guards."""

    node_id: str
    kind: NodeKind
    status: NodeStatus = NodeStatus.PENDING
    input_ref: str = ""
    output: NodePayload | None = None
    error: str | None = None
    revision: int = 0
    started_at: str | None = None
    finished_at: str | None = None

    def _transition(self, new: NodeStatus) -> None:
        if new not in LEGAL_TRANSITIONS[self.status]:
            raise InvalidStatus(
                f"node {self.node_id}: illegal transition "
                f"{self.status.value} -> {new.value}"
            )
        self.status = new

    def _check_payload_kind(self, payload: NodePayload) -> None:
        if payload_kind(payload) is not self.kind:
            raise PayloadKindMismatch(
                f"node {self.node_id} is {self.kind.value}, payload is "
                f"{payload_kind(payload).value}"
            )

    def begin_run(self, revision: int, at: str | None = None) -> None:
        if self.status in ACCEPTING_STATUSES:
            self._transition(NodeStatus.PENDING)
        self._transition(NodeStatus.RUNNING)
        self.output = None
        self.error = None
        self.revision = revision
        self.started_at = at
        self.finished_at = None

    def finish_awaiting(self, payload: NodePayload, at: str | None = None) -> None:
        self._check_payload_kind(payload)
        self._transition(NodeStatus.AWAITING_APPROVAL)
        self.output = payload
        self.finished_at = at

    def finish_failed(self, error: str, at: str | None = None) -> None:
        self._transition(NodeStatus.FAILED)
        self.error = error
        self.finished_at = at

    def mark_approved(self) -> None:
        if self.status is not NodeStatus.AWAITING_APPROVAL:
            raise InvalidStatus(
                f"node {self.node_id} is {self.status.value}, "
                "only awaiting_approval nodes can be approved"
            )
        self._transition(NodeStatus.APPROVED)

    def mark_edited(self, payload: NodePayload, revision: int) -> None:
        if self.status not in (
            NodeStatus.AWAITING_APPROVAL,
            NodeStatus.APPROVED,
            NodeStatus.EDITED,
        ):
            raise InvalidStatus(
                f"node {self.node_id} is {self.status.value}; only nodes with "
                "an output can be edited"
            )
        self._check_payload_kind(payload)
        self._transition(NodeStatus.EDITED)
        self.output = payload
        self.error = None
        self.revision = revision

    def reset_pending(self) -> bool:
        """Invalidate back to Pending. Returns False if already there."""
        if self.status is NodeStatus.PENDING:
            return False
        self._transition(NodeStatus.PENDING)
        self.output = None
        self.error = None
        self.started_at = None
        self.finished_at = None
        return True

    def check(self) -> None:
        has_output = self.output is not None
        should = self.status in (
            NodeStatus.AWAITING_APPROVAL,
            NodeStatus.APPROVED,
            NodeStatus.EDITED,
        )
        if has_output != should:
            raise InvalidStatus(
                f"node {self.node_id} in {self.status.value} "
                f"{'has' if has_output else 'lacks'} an output"
            )
        if has_output:
            self._check_payload_kind(self.output)
        if self.revision < 0:
            raise InvalidRequest(f"node {self.node_id} has revision {self.revision}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "node_id": self.node_id,
            "kind": self.kind.value,
            "status": self.status.value,
            "input_ref": self.input_ref,
            "output": payload_to_dict(self.output) if self.output else None,
            "error": self.error,
            "revision": self.revision,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> NodeRecord:
        output = doc.get("output")
        record = cls(
            node_id=doc["node_id"],
            kind=NodeKind(doc["kind"]),
            status=NodeStatus(doc["status"]),
            input_ref=doc.get("input_ref", ""),
            output=payload_from_dict(output) if output else None,
            error=doc.get("error"),
            revision=int(doc.get("revision", 0)),
            started_at=doc.get("started_at"),
            finished_at=doc.get("finished_at"),
        )
        record.check()
        return record


# --- pipeline ------------------------------------------------------------------

@dataclass
class PipelineRun:
    """A four-node chain bound to one exploration-tree node."""

    pipeline_id: str
    tree_node_id: str
    nodes: list[NodeRecord]
    auto_approve: dict[NodeKind, bool] = field(
        default_factory=lambda: {kind: False for kind in STAGE_ORDER}
    )
    run_to_next_checkpoint: bool = False
    created_at: str | None = None

    def __post_init__(self) -> None:
        kinds = tuple(n.kind for n in self.nodes)
        if kinds != STAGE_ORDER:
            raise InvalidRequest(f"pipeline stages out of order: {kinds}")
        for kind in STAGE_ORDER:
            self.auto_approve.setdefault(kind, False)

    @property
    def current_index(self) -> int:
        """Index of the first stage not yet accepted; len(nodes) when done."""
        for i, node in enumerate(self.nodes):
            if node.status not in ACCEPTING_STATUSES:
                return i
        return len(self.nodes)

    @property
    def is_complete(self) -> bool:
        return self.current_index == len(self.nodes)

    def node(self, node_id: str) -> NodeRecord:
        for node in self.nodes:
            if node.node_id == node_id:
                return node
        raise UnknownNode(f"pipeline {self.pipeline_id} has no node {node_id}")

    def index_of(self, node_id: str) -> int:
        for i, node in enumerate(self.nodes):
            if node.node_id == node_id:
                return i
        raise UnknownNode(f"pipeline {self.pipeline_id} has no node {node_id}")

    def invalidate_downstream(self, index: int) -> list[str]:
        """Reset every node after index to Pending; returns the ids reset."""
        reset = []
        for node in self.nodes[index + 1 :]:
            if node.reset_pending():
                reset.append(node.node_id)
        return reset

    def check(self) -> None:
        running = [n for n in self.nodes if n.status is NodeStatus.RUNNING]
        if len(running) > 1:
            raise InvalidStatus(
                f"pipeline {self.pipeline_id} has {len(running)} running nodes"
            )
        for i, node in enumerate(self.nodes):
            node.check()
            if i and node.status is not NodeStatus.PENDING:
                prev = self.nodes[i - 1]
                if prev.status not in ACCEPTING_STATUSES:
                    raise InvalidStatus(
                        f"node {node.node_id} is {node.status.value} but "
                        f"{prev.node_id} is {prev.status.value}"
                    )

    def to_dict(self) -> dict[str, Any]:
        return {
            "pipeline_id": self.pipeline_id,
            "tree_node_id": self.tree_node_id,
            "nodes": [n.to_dict() for n in self.nodes],
            "auto_approve": {k.value: v for k, v in self.auto_approve.items()},
            "run_to_next_checkpoint": self.run_to_next_checkpoint,
            "created_at": self.created_at,
            "current_index": self.current_index,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> PipelineRun:
        run = cls(
            pipeline_id=doc["pipeline_id"],
            tree_node_id=doc["tree_node_id"],
            nodes=[NodeRecord.from_dict(n) for n in doc["nodes"]],
            auto_approve={
                NodeKind(k): bool(v)
                for k, v in doc.get("auto_approve", {}).items()
            },
            run_to_next_checkpoint=bool(doc.get("run_to_next_checkpoint", False)),
            created_at=doc.get("created_at"),
        )
        run.check()
        return run


def new_pipeline(
    pipeline_id: str,
    tree_node_id: str,
    node_ids: tuple[str, str, str, str],
    auto_approve: dict[NodeKind, bool] | None = None,
    run_to_next_checkpoint: bool = False,
    created_at: str | None = None,
) -> PipelineRun:
    """Fresh pipeline with all four stages Pending and inputs wired up."""
    nodes = []
    for i, kind in enumerate(STAGE_ORDER):
        if i == 0:
            input_ref = f"query:{tree_node_id}"
        else:
            input_ref = f"node:{node_ids[i - 1]}"
        nodes.append(NodeRecord(node_id=node_ids[i], kind=kind, input_ref=input_ref))
    return PipelineRun(
        pipeline_id=pipeline_id,
        tree_node_id=tree_node_id,
        nodes=nodes,
        auto_approve=auto_approve or {kind: False for kind in STAGE_ORDER},
        run_to_next_checkpoint=run_to_next_checkpoint,
        created_at=created_at,
    )

"""Event-sourced session state.

Commands never mutate a session directly: they build events, and every
mutation happens inside apply(). Events carry the results of external
effects (fetched papers, vectors, verdicts, coordinates), so replaying a
log reconstructs the exact same state with no providers involved.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Iterable

from .arxiv import PaperRecord, merge_into_corpus
from .errors import CorruptSnapshot, InvalidRequest
from .review import Chunk, ReviewResult, ReviewVerdict, SynthesisReport, UserState
from .semantic import (
    EmbeddingRecord,
    EmbeddingStore,
    ProjectionConfig,
    ProjectionPoint,
)
from .tree import DirectionProposal, ExplorationTree
from .workflow import (
    NodeKind,
    PipelineRun,
    new_pipeline,
    payload_from_dict,
)

logger = logging.getLogger(__name__)

EVENT_KINDS = frozenset(
    {
        "session_created",
        "pipeline_created",
        "node_invalidated",
        "node_started",
        "node_finished",
        "node_approved",
        "node_edited",
        "papers_ingested",
        "embeddings_added",
        "projection_updated",
        "directions_proposed",
        "node_materialized",
        "user_state_set",
    }
)


@dataclass(frozen=True)
class Event:
    """One log entry. seq is gapless from 1 within a session."""

    seq: int
    timestamp: str
    kind: str
    payload: dict[str, Any]

    def __post_init__(self) -> None:
        if self.seq < 1:
            raise InvalidRequest("event seq starts at 1")
        if self.kind not in EVENT_KINDS:
            raise InvalidRequest(f"unknown event kind {self.kind!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "seq": self.seq,
            "timestamp": self.timestamp,
            "kind": self.kind,
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> Event:
        return cls(
            seq=int(doc["seq"]),
            timestamp=doc["timestamp"],
            kind=doc["kind"],
            payload=doc["payload"],
        )


@dataclass
class ProjectionState:
    config: ProjectionConfig
    points: list[ProjectionPoint]

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "points": [p.to_dict() for p in self.points],
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> ProjectionState:
        return cls(
            config=ProjectionConfig.from_dict(doc["config"]),
            points=[ProjectionPoint.from_dict(p) for p in doc["points"]],
        )


@dataclass
class Session:
    """Everything one research session owns."""

    session_id: str
    created_at: str
    tree: ExplorationTree = field(default_factory=ExplorationTree)
    pipelines: dict[str, PipelineRun] = field(default_factory=dict)
    corpus: dict[str, PaperRecord] = field(default_factory=dict)
    embeddings: EmbeddingStore = field(default_factory=EmbeddingStore)
    verdicts: dict[str, ReviewVerdict] = field(default_factory=dict)
    chunks: dict[str, Chunk] = field(default_factory=dict)
    reports: dict[str, SynthesisReport] = field(default_factory=dict)
    projection: ProjectionState | None = None
    last_seq: int = 0

    def pipeline(self, pipeline_id: str) -> PipelineRun | None:
        return self.pipelines.get(pipeline_id)

    def check(self) -> None:
        """Cross-cutting invariants, used by tests and snapshot load."""
        self.tree.check()
        for run in self.pipelines.values():
            run.check()
        for node in self.tree.nodes():
            if node.pipeline_id is not None and node.pipeline_id not in self.pipelines:
                raise CorruptSnapshot(
                    f"tree node {node.node_id} points at missing pipeline"
                )
        for chunk in self.chunks.values():
            paper = self.corpus.get(chunk.arxiv_id)
            if paper is None:
                raise CorruptSnapshot(
                    f"chunk {chunk.chunk_id} cites unknown paper {chunk.arxiv_id}"
                )
            if paper.abstract[chunk.start : chunk.end] != chunk.text:
                raise CorruptSnapshot(
                    f"chunk {chunk.chunk_id} does not match its abstract span"
                )
        for report in self.reports.values():
            for _, chunk_id in report.citations:
                if chunk_id not in self.chunks:
                    raise CorruptSnapshot(
                        f"report cites missing chunk {chunk_id}"
                    )


# --- the fold -----------------------------------------------------------------

def apply(session: Session | None, event: Event) -> Session:
    """Pure fold step: (state, event) -> state. The only place state changes."""
    payload = event.payload

    if event.kind == "session_created":
        if session is not None:
            raise InvalidRequest("session_created on an existing session")
        return Session(
            session_id=payload["session_id"],
            created_at=event.timestamp,
            last_seq=event.seq,
        )

    if session is None:
        raise InvalidRequest(f"{event.kind} before session_created")
    if event.seq != session.last_seq + 1:
        raise InvalidRequest(
            f"event seq {event.seq} does not follow {session.last_seq}"
        )
    session.last_seq = event.seq

    if event.kind == "pipeline_created":
        run = new_pipeline(
            pipeline_id=payload["pipeline_id"],
            tree_node_id=payload["tree_node_id"],
            node_ids=tuple(payload["node_ids"]),
            auto_approve={
                NodeKind(k): bool(v) for k, v in payload["auto_approve"].items()
            },
            run_to_next_checkpoint=payload["run_to_next_checkpoint"],
            created_at=event.timestamp,
        )
        session.pipelines[run.pipeline_id] = run
        session.tree.add_explored(
            node_id=payload["tree_node_id"],
            parent_id=payload.get("parent_id"),
            query_text=payload["query_text"],
            pipeline_id=run.pipeline_id,
        )
        return session

    if event.kind == "node_invalidated":
        run = _run_of(session, payload)
        for node_id in payload["node_ids"]:
            run.node(node_id).reset_pending()
        return session

    if event.kind == "node_started":
        run = _run_of(session, payload)
        node = run.node(payload["node_id"])
        node.begin_run(revision=int(payload["revision"]), at=event.timestamp)
        return session

    if event.kind == "node_finished":
        run = _run_of(session, payload)
        node = run.node(payload["node_id"])
        if payload["status"] == "failed":
            node.finish_failed(payload["error"], at=event.timestamp)
        else:
            output = payload_from_dict(payload["output"])
            node.finish_awaiting(output, at=event.timestamp)
            _absorb_payload(session, run, output)
        return session

    if event.kind == "node_approved":
        run = _run_of(session, payload)
        node = run.node(payload["node_id"])
        node.mark_approved()
        if node.kind is NodeKind.QUERY_EXPANSION and node.output is not None:
            session.tree.get(run.tree_node_id).keyword_set = set(
                node.output.keywords
            )
        return session

    if event.kind == "node_edited":
        run = _run_of(session, payload)
        node = run.node(payload["node_id"])
        output = payload_from_dict(payload["payload"])
        node.mark_edited(output, revision=int(payload["revision"]))
        _absorb_payload(session, run, output)
        if node.kind is NodeKind.QUERY_EXPANSION:
            session.tree.get(run.tree_node_id).keyword_set = set(output.keywords)
        return session

    if event.kind == "papers_ingested":
        records = [PaperRecord.from_dict(doc) for doc in payload["papers"]]
        merge_into_corpus(session.corpus, records)
        return session

    if event.kind == "embeddings_added":
        for doc in payload["records"]:
            record = EmbeddingRecord.from_dict(doc)
            session.embeddings.add(record.owner, record.vector)
        return session

    if event.kind == "projection_updated":
        session.projection = ProjectionState.from_dict(payload)
        return session

    if event.kind == "directions_proposed":
        for doc in payload["proposals"]:
            session.tree.add_proposed(
                node_id=doc["node_id"],
                parent_id=payload["parent_node_id"],
                proposal=DirectionProposal(
                    title=doc["title"],
                    rationale=doc["rationale"],
                    seed_query=doc["seed_query"],
                ),
            )
        return session

    if event.kind == "node_materialized":
        session.tree.mark_explored(payload["tree_node_id"], payload["pipeline_id"])
        run = new_pipeline(
            pipeline_id=payload["pipeline_id"],
            tree_node_id=payload["tree_node_id"],
            node_ids=tuple(payload["node_ids"]),
            auto_approve={
                NodeKind(k): bool(v) for k, v in payload["auto_approve"].items()
            },
            run_to_next_checkpoint=payload["run_to_next_checkpoint"],
            created_at=event.timestamp,
        )
        session.pipelines[run.pipeline_id] = run
        return session

    if event.kind == "user_state_set":
        verdict = session.verdicts.get(payload["arxiv_id"])
        if verdict is None:
            raise InvalidRequest(
                f"user_state_set for unreviewed paper {payload['arxiv_id']}"
            )
        verdict.user_state = UserState(payload["state"])
        return session

    raise InvalidRequest(f"unhandled event kind {event.kind}")


def _run_of(session: Session, payload: dict[str, Any]) -> PipelineRun:
    run = session.pipelines.get(payload["pipeline_id"])
    if run is None:
        raise InvalidRequest(f"event names unknown pipeline {payload['pipeline_id']}")
    return run


def _absorb_payload(session: Session, run: PipelineRun, output: Any) -> None:
    # Review and synthesis outputs feed session-level stores the views and
    # later stages read; keyword sets only land on the tree once accepted.
    if isinstance(output, ReviewResult):
        for verdict in output.verdicts:
            session.verdicts[verdict.arxiv_id] = ReviewVerdict.from_dict(
                verdict.to_dict()
            )
        for chunk in output.chunks:
            session.chunks[chunk.chunk_id] = chunk
    elif isinstance(output, SynthesisReport):
        session.reports[run.pipeline_id] = output


def replay(events: Iterable[Event]) -> Session:
    """Fold a full event log back into a session."""
    session: Session | None = None
    for event in events:
        session = apply(session, event)
    if session is None:
        raise InvalidRequest("empty event log")
    return session

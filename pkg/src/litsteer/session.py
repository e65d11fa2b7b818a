"""Session manager: validates commands, runs effects, commits events.

One manager owns all sessions. Every state change flows through _commit,
which folds the event into the session (events.apply), appends it to the
per-session log, and fans it out to live subscribers. Ids are minted from
sequential counters so identical command sequences produce identical state.
"""
from __future__ import annotations

import json
import logging
import queue
import re
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Iterable

from . import snapshot as snapshot_mod
from .arxiv import ArxivClient, SortOrder
from .errors import (
    AlreadyExplored,
    EmptyInput,
    EmptyQuery,
    InvalidRequest,
    InvalidStatus,
    LitsteerError,
    NoOutput,
    NotPending,
    NotProjected,
    PayloadKindMismatch,
    PipelineComplete,
    ReviewNotApproved,
    StorageError,
    UnknownNode,
    UnknownPaper,
    UnknownParent,
    UnknownPipeline,
    UnknownSession,
)
from .events import Event, ProjectionState, Session, apply
from .gateway import Gateway
from .review import (
    ReviewResult,
    ReviewVerdict,
    SynthesisReport,
    UserState,
    display_state,
)
from .semantic import (
    EmbeddingRecord,
    Owner,
    ProjectionConfig,
    project,
    query_centroid,
)
from .tree import EdgeMetrics, QueryTreeNode, semantic_delta, semantic_offset
from .workflow import (
    ACCEPTING_STATUSES,
    NodeKind,
    NodePayload,
    NodeRecord,
    NodeStatus,
    PipelineRun,
    payload_from_dict,
    payload_kind,
    payload_to_dict,
)
from . import stages

logger = logging.getLogger(__name__)

_ID_RE = re.compile(r"^([a-z]+)(\d+)$")


@dataclass(frozen=True)
class EngineConfig:
    """Knobs for pipeline execution; none of this is per-session state."""

    max_results: int = 25
    sort: SortOrder = SortOrder.RELEVANCE
    review_batch_size: int = 10
    synthesis_threshold: float = 0.5
    proposal_count: int = 3
    auto_project: bool = True
    projection: ProjectionConfig = ProjectionConfig()
    templates_dir: Path | None = None


class SessionManager:
    def __init__(
        self,
        gateway: Gateway,
        arxiv_client: ArxivClient,
        config: EngineConfig | None = None,
        data_dir: str | Path | None = None,
        clock: Callable[[], datetime] | None = None,
    ) -> None:
        self.gateway = gateway
        self.arxiv = arxiv_client
        self.config = config or EngineConfig()
        self._clock = clock or (lambda: datetime.now(timezone.utc))
        self._data_dir = Path(data_dir) if data_dir else None
        self._registry_lock = threading.Lock()
        self._counters: dict[str, int] = {}
        self._sessions: dict[str, Session] = {}
        self._logs: dict[str, list[Event]] = {}
        self._locks: dict[str, threading.RLock] = {}
        self._subscribers: dict[str, list[queue.Queue]] = {}
        self._pipeline_index: dict[str, str] = {}
        self._node_index: dict[str, tuple[str, str]] = {}
        self._tree_index: dict[str, str] = {}
        if self._data_dir is not None:
            self._load_existing()

    # --- plumbing --------------------------------------------------------

    def _now(self) -> str:
        return self._clock().isoformat()

    def _mint(self, prefix: str) -> str:
        with self._registry_lock:
            n = self._counters.get(prefix, 0) + 1
            self._counters[prefix] = n
            return f"{prefix}{n}"

    def _bump_counter_past(self, identifier: str) -> None:
        match = _ID_RE.match(identifier)
        if match:
            prefix, num = match.group(1), int(match.group(2))
            self._counters[prefix] = max(self._counters.get(prefix, 0), num)

    def _lock_for(self, session_id: str) -> threading.RLock:
        lock = self._locks.get(session_id)
        if lock is None:
            raise UnknownSession(f"no session {session_id}")
        return lock

    def _commit(self, session: Session, kind: str, payload: dict[str, Any]) -> Event:
        event = Event(
            seq=session.last_seq + 1,
            timestamp=self._now(),
            kind=kind,
            payload=payload,
        )
        apply(session, event)
        self._logs[session.session_id].append(event)
        self._append_to_disk(session.session_id, event)
        for q in self._subscribers.get(session.session_id, []):
            q.put(event)
        return event

    def _log_path(self, session_id: str) -> Path:
        assert self._data_dir is not None
        return self._data_dir / f"{session_id}.events.jsonl"

    def _append_to_disk(self, session_id: str, event: Event) -> None:
        if self._data_dir is None:
            return
        try:
            self._data_dir.mkdir(parents=True, exist_ok=True)
            with self._log_path(session_id).open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(event.to_dict(), ensure_ascii=False) + "\n")
        except OSError as exc:
            raise StorageError(f"cannot append event log: {exc}") from exc

    def _load_existing(self) -> None:
        assert self._data_dir is not None
        if not self._data_dir.exists():
            return
        for path in sorted(self._data_dir.glob("*.events.jsonl")):
            try:
                lines = path.read_text(encoding="utf-8").splitlines()
            except OSError as exc:
                raise StorageError(f"cannot read {path}: {exc}") from exc
            events = [Event.from_dict(json.loads(line)) for line in lines if line]
            if not events:
                continue
            session: Session | None = None
            for event in events:
                session = apply(session, event)
            assert session is not None
            self._register(session, events)
        for session in self._sessions.values():
            self._reindex(session)

    def _register(self, session: Session, events: list[Event]) -> None:
        self._sessions[session.session_id] = session
        self._logs[session.session_id] = events
        self._locks[session.session_id] = threading.RLock()
        self._subscribers[session.session_id] = []

    def _reindex(self, session: Session) -> None:
        self._bump_counter_past(session.session_id)
        for run in session.pipelines.values():
            self._pipeline_index[run.pipeline_id] = session.session_id
            self._bump_counter_past(run.pipeline_id)
            for node in run.nodes:
                self._node_index[node.node_id] = (session.session_id, run.pipeline_id)
                self._bump_counter_past(node.node_id)
        for tnode in session.tree.nodes():
            self._tree_index[tnode.node_id] = session.session_id
            self._bump_counter_past(tnode.node_id)
        for chunk_id in session.chunks:
            self._bump_counter_past(chunk_id)

    # --- lookups -----------------------------------------------------------

    def session_ids(self) -> list[str]:
        return list(self._sessions)

    def get_session(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"no session {session_id}")
        return session

    def get_pipeline(self, pipeline_id: str) -> tuple[Session, PipelineRun]:
        session_id = self._pipeline_index.get(pipeline_id)
        if session_id is None:
            raise UnknownPipeline(f"no pipeline {pipeline_id}")
        session = self._sessions[session_id]
        run = session.pipelines[pipeline_id]
        return session, run

    def get_node(self, node_id: str) -> tuple[Session, PipelineRun, NodeRecord]:
        hit = self._node_index.get(node_id)
        if hit is None:
            raise UnknownNode(f"no pipeline node {node_id}")
        session_id, pipeline_id = hit
        session = self._sessions[session_id]
        run = session.pipelines[pipeline_id]
        return session, run, run.node(node_id)

    def get_tree_node(self, tree_node_id: str) -> tuple[Session, QueryTreeNode]:
        session_id = self._tree_index.get(tree_node_id)
        if session_id is None:
            raise UnknownNode(f"no tree node {tree_node_id}")
        session = self._sessions[session_id]
        return session, session.tree.get(tree_node_id)

    def events_since(self, session_id: str, since: int = 0) -> list[Event]:
        self.get_session(session_id)
        with self._lock_for(session_id):
            return [e for e in self._logs[session_id] if e.seq > since]

    def subscribe(
        self, session_id: str, since: int = 0
    ) -> tuple[list[Event], queue.Queue]:
        """Backlog plus a live queue, atomically, so no event is missed."""
        self.get_session(session_id)
        with self._lock_for(session_id):
            backlog = [e for e in self._logs[session_id] if e.seq > since]
            q: queue.Queue = queue.Queue()
            self._subscribers[session_id].append(q)
            return backlog, q

    def unsubscribe(self, session_id: str, q: queue.Queue) -> None:
        subs = self._subscribers.get(session_id)
        if subs is not None and q in subs:
            subs.remove(q)

    # --- commands ------------------------------------------------------------

    def create_session(self) -> Session:
        session_id = self._mint("s")
        event = Event(
            seq=1,
            timestamp=self._now(),
            kind="session_created",
            payload={"session_id": session_id},
        )
        session = apply(None, event)
        with self._registry_lock:
            self._register(session, [event])
        self._append_to_disk(session_id, event)
        logger.info("created session %s", session_id)
        return session

    def create_pipeline(
        self,
        session_id: str,
        query_text: str,
        auto_approve: bool | dict[str, bool] | dict[NodeKind, bool] | None = None,
        run_to_next_checkpoint: bool = False,
        parent_node_id: str | None = None,
    ) -> PipelineRun:
        session = self.get_session(session_id)
        text = query_text.strip()
        if not text:
            raise EmptyQuery("query_text must be nonempty")
        approve_map = _normalize_auto_approve(auto_approve)
        with self._lock_for(session_id):
            if len(session.tree) == 0:
                if parent_node_id is not None:
                    raise UnknownParent(
                        f"tree is empty; cannot attach to {parent_node_id}"
                    )
                parent_id = None
            else:
                parent_id = parent_node_id or session.tree.root_id
                if parent_id not in session.tree:
                    raise UnknownParent(f"no tree node {parent_id}")
            tree_node_id = self._mint("t")
            pipeline_id = self._mint("p")
            node_ids = tuple(self._mint("n") for _ in range(4))
            self._commit(
                session,
                "pipeline_created",
                {
                    "pipeline_id": pipeline_id,
                    "tree_node_id": tree_node_id,
                    "parent_id": parent_id,
                    "query_text": text,
                    "node_ids": list(node_ids),
                    "auto_approve": {k.value: v for k, v in approve_map.items()},
                    "run_to_next_checkpoint": run_to_next_checkpoint,
                },
            )
            self._pipeline_index[pipeline_id] = session_id
            self._tree_index[tree_node_id] = session_id
            for node_id in node_ids:
                self._node_index[node_id] = (session_id, pipeline_id)
            return session.pipelines[pipeline_id]

    def step(self, pipeline_id: str) -> NodeRecord:
        session, run = self.get_pipeline(pipeline_id)
        with self._lock_for(session.session_id):
            if run.is_complete:
                raise PipelineComplete(f"pipeline {pipeline_id} has nothing to run")
            node = run.nodes[run.current_index]
            if node.status not in (NodeStatus.PENDING, NodeStatus.FAILED):
                raise NotPending(
                    f"node {node.node_id} is {node.status.value}; resolve the "
                    "checkpoint before stepping again"
                )
            self._run_node(session, run, node, bump_revision=False)
            return node

    def approve(self, node_id: str, pipeline_id: str | None = None) -> PipelineRun:
        session, run, node = self.get_node(node_id)
        if pipeline_id is not None and run.pipeline_id != pipeline_id:
            raise UnknownNode(f"node {node_id} is not in pipeline {pipeline_id}")
        with self._lock_for(session.session_id):
            if node.status is not NodeStatus.AWAITING_APPROVAL:
                raise InvalidStatus(
                    f"node {node_id} is {node.status.value}, not awaiting approval"
                )
            self._approve_node(session, run, node)
            return run

    def edit_output(
        self,
        pipeline_id: str,
        node_id: str,
        payload: NodePayload | dict[str, Any],
    ) -> PipelineRun:
        session, run = self.get_pipeline(pipeline_id)
        node = run.node(node_id)
        if isinstance(payload, dict):
            payload = payload_from_dict(payload)
        with self._lock_for(session.session_id):
            if node.status not in (
                NodeStatus.AWAITING_APPROVAL,
                NodeStatus.APPROVED,
                NodeStatus.EDITED,
            ):
                raise InvalidStatus(
                    f"node {node_id} is {node.status.value}; there is no "
                    "output to edit"
                )
            if payload_kind(payload) is not node.kind:
                raise PayloadKindMismatch(
                    f"node {node_id} is {node.kind.value}, payload is "
                    f"{payload_kind(payload).value}"
                )
            index = run.index_of(node_id)
            self._commit(
                session,
                "node_edited",
                {
                    "pipeline_id": pipeline_id,
                    "node_id": node_id,
                    "payload": payload_to_dict(payload),
                    "revision": node.revision + 1,
                },
            )
            stale = [
                n.node_id
                for n in run.nodes[index + 1 :]
                if n.status is not NodeStatus.PENDING
            ]
            if stale:
                self._commit(
                    session,
                    "node_invalidated",
                    {"pipeline_id": pipeline_id, "node_ids": stale},
                )
            return run

    def rerun(self, node_id: str, pipeline_id: str | None = None) -> NodeRecord:
        session, run, node = self.get_node(node_id)
        if pipeline_id is not None and run.pipeline_id != pipeline_id:
            raise UnknownNode(f"node {node_id} is not in pipeline {pipeline_id}")
        with self._lock_for(session.session_id):
            if node.status not in (
                NodeStatus.AWAITING_APPROVAL,
                NodeStatus.APPROVED,
                NodeStatus.EDITED,
                NodeStatus.FAILED,
            ):
                raise InvalidStatus(
                    f"node {node_id} is {node.status.value}; only executed "
                    "nodes can be rerun"
                )
            self._run_node(session, run, node, bump_revision=True)
            return node

    def inspect(self, node_id: str) -> dict[str, Any]:
        session, run, node = self.get_node(node_id)
        with self._lock_for(session.session_id):
            if node.output is None:
                raise NoOutput(f"node {node_id} has no output to inspect")
            return {
                "node": node.to_dict(),
                "pipeline_id": run.pipeline_id,
                "provenance": _provenance_of(session, node.output),
            }

    def propose_directions(
        self, tree_node_id: str, count: int | None = None
    ) -> list[QueryTreeNode]:
        session, tnode = self.get_tree_node(tree_node_id)
        count = count if count is not None else self.config.proposal_count
        if count < 1:
            raise InvalidRequest("proposal count must be >= 1")
        with self._lock_for(session.session_id):
            if tnode.pipeline_id is None:
                raise ReviewNotApproved(
                    f"tree node {tree_node_id} has not been explored yet"
                )
            run = session.pipelines[tnode.pipeline_id]
            review_node = run.nodes[2]
            if review_node.status not in ACCEPTING_STATUSES:
                raise ReviewNotApproved(
                    f"review node is {review_node.status.value}; approve it first"
                )
            assert isinstance(review_node.output, ReviewResult)
            proposals = stages.run_proposals(
                self.gateway,
                query_text=tnode.query_text,
                keywords=tnode.keyword_set,
                review_result=review_node.output,
                count=count,
                templates_dir=self.config.templates_dir,
            )
            docs = [
                {"node_id": self._mint("t"), **proposal.to_dict()}
                for proposal in proposals
            ]
            self._commit(
                session,
                "directions_proposed",
                {"parent_node_id": tree_node_id, "proposals": docs},
            )
            for doc in docs:
                self._tree_index[doc["node_id"]] = session.session_id
            return [session.tree.get(doc["node_id"]) for doc in docs]

    def materialize(
        self,
        tree_node_id: str,
        auto_approve: bool | dict[str, bool] | None = None,
        run_to_next_checkpoint: bool = False,
    ) -> PipelineRun:
        session, tnode = self.get_tree_node(tree_node_id)
        approve_map = _normalize_auto_approve(auto_approve)
        with self._lock_for(session.session_id):
            if tnode.pipeline_id is not None:
                raise AlreadyExplored(
                    f"tree node {tree_node_id} already has pipeline "
                    f"{tnode.pipeline_id}"
                )
            pipeline_id = self._mint("p")
            node_ids = tuple(self._mint("n") for _ in range(4))
            self._commit(
                session,
                "node_materialized",
                {
                    "tree_node_id": tree_node_id,
                    "pipeline_id": pipeline_id,
                    "node_ids": list(node_ids),
                    "auto_approve": {k.value: v for k, v in approve_map.items()},
                    "run_to_next_checkpoint": run_to_next_checkpoint,
                },
            )
            self._pipeline_index[pipeline_id] = session.session_id
            for node_id in node_ids:
                self._node_index[node_id] = (session.session_id, pipeline_id)
            return session.pipelines[pipeline_id]

    def set_user_state(
        self,
        arxiv_id: str,
        state: str | UserState,
        session_id: str | None = None,
    ) -> ReviewVerdict:
        try:
            user_state = UserState(state)
        except ValueError as exc:
            raise InvalidRequest(f"unknown user state {state!r}") from exc
        if session_id is not None:
            session = self.get_session(session_id)
            if arxiv_id not in session.verdicts:
                raise UnknownPaper(
                    f"paper {arxiv_id} has no verdict in session {session_id}"
                )
        else:
            holders = [
                s for s in self._sessions.values() if arxiv_id in s.verdicts
            ]
            if not holders:
                raise UnknownPaper(f"paper {arxiv_id} has not been reviewed")
            if len(holders) > 1:
                raise InvalidRequest(
                    f"paper {arxiv_id} is reviewed in several sessions; "
                    "pass session_id"
                )
            session = holders[0]
        with self._lock_for(session.session_id):
            self._commit(
                session,
                "user_state_set",
                {"arxiv_id": arxiv_id, "state": user_state.value},
            )
            return session.verdicts[arxiv_id]

    def refresh_projection(self, session_id: str) -> ProjectionState:
        session = self.get_session(session_id)
        with self._lock_for(session_id):
            payload = self._projection_payload(session)
            if payload is None:
                raise EmptyInput("session has no embeddings to project")
            self._commit(session, "projection_updated", payload)
            assert session.projection is not None
            return session.projection

    def export_snapshot(self, session_id: str, path: str | Path) -> dict[str, Any]:
        session = self.get_session(session_id)
        with self._lock_for(session_id):
            return snapshot_mod.save_snapshot(session, path)

    def centroid(self, session_id: str, tree_node_id: str) -> dict[str, Any]:
        session = self.get_session(session_id)
        with self._lock_for(session_id):
            session.tree.get(tree_node_id)
            if session.projection is None:
                raise NotProjected("no projection computed yet")
            point = query_centroid(session.projection.points, tree_node_id)
            return point.to_dict()

    # --- execution ---------------------------------------------------------------

    def _run_node(
        self,
        session: Session,
        run: PipelineRun,
        node: NodeRecord,
        bump_revision: bool,
    ) -> None:
        index = run.index_of(node.node_id)
        stale = [
            n.node_id
            for n in run.nodes[index + 1 :]
            if n.status is not NodeStatus.PENDING
        ]
        if stale:
            self._commit(
                session,
                "node_invalidated",
                {"pipeline_id": run.pipeline_id, "node_ids": stale},
            )
        self._commit(
            session,
            "node_started",
            {
                "pipeline_id": run.pipeline_id,
                "node_id": node.node_id,
                "revision": node.revision + (1 if bump_revision else 0),
            },
        )
        # Any domain error raised while executing the stage must finish the
        # node as Failed; a started node that never finishes would strand the
        # pipeline with a Running node no command can touch.
        try:
            pre_events, payload = self._execute(session, run, node)
        except LitsteerError as exc:
            logger.warning("node %s failed: %s", node.node_id, exc)
            self._commit(
                session,
                "node_finished",
                {
                    "pipeline_id": run.pipeline_id,
                    "node_id": node.node_id,
                    "status": "failed",
                    "error": f"{exc.code}: {exc}",
                },
            )
            return
        for kind, pre_payload in pre_events:
            self._commit(session, kind, pre_payload)
        self._commit(
            session,
            "node_finished",
            {
                "pipeline_id": run.pipeline_id,
                "node_id": node.node_id,
                "status": "awaiting_approval",
                "output": payload_to_dict(payload),
            },
        )
        if run.auto_approve.get(node.kind, False):
            self._approve_node(session, run, node)

    def _approve_node(
        self, session: Session, run: PipelineRun, node: NodeRecord
    ) -> None:
        self._commit(
            session,
            "node_approved",
            {"pipeline_id": run.pipeline_id, "node_id": node.node_id},
        )
        if run.run_to_next_checkpoint and not run.is_complete:
            next_node = run.nodes[run.current_index]
            if next_node.status is NodeStatus.PENDING:
                self._run_node(session, run, next_node, bump_revision=False)

    def _execute(
        self, session: Session, run: PipelineRun, node: NodeRecord
    ) -> tuple[list[tuple[str, dict[str, Any]]], NodePayload]:
        tnode = session.tree.get(run.tree_node_id)
        if node.kind is NodeKind.QUERY_EXPANSION:
            payload = stages.run_query_expansion(
                self.gateway, tnode.query_text, self.config.templates_dir
            )
            return [], payload

        if node.kind is NodeKind.SEARCH:
            keywords_payload = run.nodes[0].output
            assert keywords_payload is not None
            outcome = stages.run_search(
                self.gateway,
                self.arxiv,
                keywords=keywords_payload.keywords,
                tree_node_id=run.tree_node_id,
                query_text=tnode.query_text,
                corpus=session.corpus,
                embedded_owner_keys=frozenset(
                    r.owner.key for r in session.embeddings.records()
                ),
                max_results=self.config.max_results,
                sort=self.config.sort,
            )
            pre: list[tuple[str, dict[str, Any]]] = []
            if outcome.papers:
                pre.append(
                    (
                        "papers_ingested",
                        {
                            "tree_node_id": run.tree_node_id,
                            "papers": [p.to_dict() for p in outcome.papers],
                        },
                    )
                )
            if outcome.new_embeddings:
                pre.append(
                    (
                        "embeddings_added",
                        {"records": [r.to_dict() for r in outcome.new_embeddings]},
                    )
                )
            if self.config.auto_project:
                payload = self._projection_payload(
                    session,
                    extra_embeddings=outcome.new_embeddings,
                    extra_papers=outcome.papers,
                )
                if payload is not None:
                    pre.append(("projection_updated", payload))
            return pre, outcome.paper_list

        if node.kind is NodeKind.REVIEW:
            papers_payload = run.nodes[1].output
            assert papers_payload is not None
            papers = [
                session.corpus[arxiv_id]
                for arxiv_id in papers_payload.arxiv_ids
                if arxiv_id in session.corpus
            ]
            payload = stages.run_review(
                self.gateway,
                query_text=tnode.query_text,
                papers=papers,
                chunk_id_alloc=lambda: self._mint("c"),
                known_states={
                    arxiv_id: verdict.user_state
                    for arxiv_id, verdict in session.verdicts.items()
                },
                batch_size=self.config.review_batch_size,
                templates_dir=self.config.templates_dir,
            )
            return [], payload

        if node.kind is NodeKind.SYNTHESIS:
            review_payload = run.nodes[2].output
            assert isinstance(review_payload, ReviewResult)
            merged = ReviewResult(
                verdicts=tuple(
                    _with_live_state(session, verdict)
                    for verdict in review_payload.verdicts
                ),
                chunks=review_payload.chunks,
            )
            payload = stages.run_synthesis(
                self.gateway,
                query_text=tnode.query_text,
                review_result=merged,
                threshold=self.config.synthesis_threshold,
                templates_dir=self.config.templates_dir,
            )
            return [], payload

        raise InvalidRequest(f"no executor for node kind {node.kind}")

    def _projection_payload(
        self,
        session: Session,
        extra_embeddings: Iterable[EmbeddingRecord] = (),
        extra_papers: Iterable[Any] = (),
    ) -> dict[str, Any] | None:
        records = session.embeddings.records()
        have = {r.owner.key for r in records}
        for record in extra_embeddings:
            if record.owner.key not in have:
                have.add(record.owner.key)
                records.append(record)
        if not records:
            return None
        tags: dict[str, set[str]] = {}
        for record in records:
            owner = record.owner
            if owner.kind == "paper":
                paper = session.corpus.get(owner.id)
                tags[owner.key] = set(paper.iteration_tags) if paper else set()
            else:
                tags[owner.key] = {owner.id}
        for paper in extra_papers:
            key = Owner.paper(paper.arxiv_id).key
            tags[key] = tags.get(key, set()) | set(paper.iteration_tags)
        points = project(records, self.config.projection, tags=tags)
        return ProjectionState(config=self.config.projection, points=points).to_dict()


def _with_live_state(session: Session, verdict: ReviewVerdict) -> ReviewVerdict:
    live = session.verdicts.get(verdict.arxiv_id)
    if live is None or live.user_state is verdict.user_state:
        return verdict
    doc = verdict.to_dict()
    doc["user_state"] = live.user_state.value
    return ReviewVerdict.from_dict(doc)


def _normalize_auto_approve(
    value: bool | dict[str, bool] | dict[NodeKind, bool] | None,
) -> dict[NodeKind, bool]:
    if value is None:
        return {kind: False for kind in NodeKind}
    if isinstance(value, bool):
        return {kind: value for kind in NodeKind}
    out = {kind: False for kind in NodeKind}
    for key, flag in value.items():
        try:
            kind = key if isinstance(key, NodeKind) else NodeKind(key)
        except ValueError as exc:
            raise InvalidRequest(f"unknown stage {key!r} in auto_approve") from exc
        out[kind] = bool(flag)
    return out


def _provenance_of(session: Session, output: NodePayload) -> list[dict[str, Any]]:
    """Resolve a payload's references against the session stores."""
    entries: list[dict[str, Any]] = []
    if isinstance(output, ReviewResult):
        for chunk in output.chunks:
            paper = session.corpus.get(chunk.arxiv_id)
            entries.append(
                {
                    "chunk_id": chunk.chunk_id,
                    "arxiv_id": chunk.arxiv_id,
                    "start": chunk.start,
                    "end": chunk.end,
                    "text": chunk.text,
                    "title": paper.title if paper else None,
                    "abs_url": paper.abs_url if paper else None,
                }
            )
    elif isinstance(output, SynthesisReport):
        for marker, chunk_id in output.citations:
            chunk = session.chunks.get(chunk_id)
            paper = session.corpus.get(chunk.arxiv_id) if chunk else None
            entries.append(
                {
                    "marker": marker,
                    "chunk_id": chunk_id,
                    "arxiv_id": chunk.arxiv_id if chunk else None,
                    "text": chunk.text if chunk else None,
                    "title": paper.title if paper else None,
                    "abs_url": paper.abs_url if paper else None,
                }
            )
    elif hasattr(output, "arxiv_ids"):
        for arxiv_id in output.arxiv_ids:
            paper = session.corpus.get(arxiv_id)
            entries.append(
                {
                    "arxiv_id": arxiv_id,
                    "title": paper.title if paper else None,
                    "abs_url": paper.abs_url if paper else None,
                }
            )
    return entries


# --- views -------------------------------------------------------------------

def pipeline_view(run: PipelineRun) -> dict[str, Any]:
    return run.to_dict()


def node_view(node: NodeRecord) -> dict[str, Any]:
    return node.to_dict()


def edge_metrics_for(
    session: Session, parent: QueryTreeNode, child: QueryTreeNode
) -> EdgeMetrics:
    parent_emb = session.embeddings.get(Owner.query(parent.node_id))
    child_emb = session.embeddings.get(Owner.query(child.node_id))
    offset = None
    if parent_emb is not None and child_emb is not None:
        offset = semantic_offset(parent_emb.vector, child_emb.vector)
    # Keyword deltas only mean something once both sides have keywords; a
    # fresh proposal with none would otherwise read as "everything removed".
    if parent.keyword_set and child.keyword_set:
        added, removed = semantic_delta(parent.keyword_set, child.keyword_set)
    else:
        added, removed = frozenset(), frozenset()
    return EdgeMetrics(semantic_offset_pct=offset, added=added, removed=removed)


def tree_view(session: Session) -> dict[str, Any]:
    nodes = []
    edges = []
    for node in session.tree.nodes():
        nodes.append(node.to_dict())
        if node.parent_id is not None:
            parent = session.tree.get(node.parent_id)
            metrics = edge_metrics_for(session, parent, node)
            edges.append(
                {
                    "parent_id": parent.node_id,
                    "child_id": node.node_id,
                    **metrics.to_dict(),
                }
            )
    return {"root_id": session.tree.root_id, "nodes": nodes, "edges": edges}


def projection_view(
    session: Session, iterations: Iterable[str] | None = None
) -> dict[str, Any]:
    if session.projection is None:
        raise NotProjected("no projection computed yet")
    wanted = set(iterations) if iterations is not None else None
    points = []
    for point in session.projection.points:
        if wanted is not None and not (point.iteration_tags & wanted):
            continue
        doc = point.to_dict()
        doc["owner_kind"] = point.owner.kind
        doc["owner_id"] = point.owner.id
        if point.owner.kind == "paper":
            verdict = session.verdicts.get(point.owner.id)
            doc["display_state"] = display_state(verdict).value if verdict else None
            paper = session.corpus.get(point.owner.id)
            doc["title"] = paper.title if paper else None
        else:
            doc["display_state"] = None
            tnode = (
                session.tree.get(point.owner.id)
                if point.owner.id in session.tree
                else None
            )
            doc["title"] = tnode.query_text if tnode else None
        points.append(doc)
    projected_keys = {p.owner.key for p in session.projection.points}
    store_keys = {r.owner.key for r in session.embeddings.records()}
    return {
        "config": session.projection.config.to_dict(),
        "points": points,
        "stale": store_keys != projected_keys,
    }


def paper_view(session: Session, arxiv_id: str) -> dict[str, Any]:
    paper = session.corpus.get(arxiv_id)
    if paper is None:
        raise UnknownPaper(f"paper {arxiv_id} is not in this session")
    doc = paper.to_dict()
    verdict = session.verdicts.get(arxiv_id)
    if verdict is not None:
        doc["verdict"] = verdict.to_dict()
        doc["display_state"] = display_state(verdict).value
    else:
        doc["verdict"] = None
        doc["display_state"] = None
    doc["chunk_ids"] = [
        c.chunk_id for c in session.chunks.values() if c.arxiv_id == arxiv_id
    ]
    return doc


def session_view(session: Session) -> dict[str, Any]:
    return {
        "session_id": session.session_id,
        "created_at": session.created_at,
        "pipelines": [pipeline_view(run) for run in session.pipelines.values()],
        "tree": tree_view(session),
        "paper_count": len(session.corpus),
        "reviewed_count": len(session.verdicts),
        "has_projection": session.projection is not None,
        "last_seq": session.last_seq,
    }

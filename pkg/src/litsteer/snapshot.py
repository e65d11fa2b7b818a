"""Canonical JSON snapshots of session state.

Serialization is canonical (sorted keys, fixed separators, no NaN), so
saving the same state twice produces identical bytes. Timestamps can be
stripped for comparisons where wall-clock noise is irrelevant.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

from .errors import CorruptSnapshot, StorageError, UnknownSchemaVersion
from .arxiv import PaperRecord
from .events import ProjectionState, Session
from .review import Chunk, ReviewVerdict, SynthesisReport
from .semantic import EmbeddingStore
from .tree import ExplorationTree
from .workflow import PipelineRun

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

# Wall-clock fields; paper dates (published/updated) are data and stay.
TIMESTAMP_KEYS = frozenset({"created_at", "started_at", "finished_at", "timestamp"})


def canonical_dumps(doc: Any) -> str:
    return json.dumps(
        doc,
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
        allow_nan=False,
    )


def strip_timestamps(doc: Any) -> Any:
    """Recursive copy with wall-clock keys removed at every level."""
    if isinstance(doc, dict):
        return {
            key: strip_timestamps(value)
            for key, value in doc.items()
            if key not in TIMESTAMP_KEYS
        }
    if isinstance(doc, list):
        return [strip_timestamps(item) for item in doc]
    return doc


def state_dict(session: Session) -> dict[str, Any]:
    """Plain-JSON form of everything a session owns.

    Collections keep their insertion order; that order is itself replay
    output, so equal histories give equal documents.
    """
    return {
        "session_id": session.session_id,
        "created_at": session.created_at,
        "tree": session.tree.to_dict(),
        "pipelines": [run.to_dict() for run in session.pipelines.values()],
        "corpus": [paper.to_dict() for paper in session.corpus.values()],
        "embeddings": session.embeddings.to_dict(),
        "verdicts": [v.to_dict() for v in session.verdicts.values()],
        "chunks": [c.to_dict() for c in session.chunks.values()],
        "reports": {
            pipeline_id: report.to_dict()
            for pipeline_id, report in session.reports.items()
        },
        "projection": session.projection.to_dict() if session.projection else None,
        "last_seq": session.last_seq,
    }


def session_from_state(doc: dict[str, Any]) -> Session:
    try:
        session = Session(
            session_id=doc["session_id"],
            created_at=doc["created_at"],
            tree=ExplorationTree.from_dict(doc["tree"]),
            pipelines={
                run["pipeline_id"]: PipelineRun.from_dict(run)
                for run in doc["pipelines"]
            },
            corpus={
                paper["arxiv_id"]: PaperRecord.from_dict(paper)
                for paper in doc["corpus"]
            },
            embeddings=EmbeddingStore.from_dict(doc["embeddings"]),
            verdicts={
                v["arxiv_id"]: ReviewVerdict.from_dict(v) for v in doc["verdicts"]
            },
            chunks={c["chunk_id"]: Chunk.from_dict(c) for c in doc["chunks"]},
            reports={
                pipeline_id: SynthesisReport.from_dict(report)
                for pipeline_id, report in doc.get("reports", {}).items()
            },
            projection=(
                ProjectionState.from_dict(doc["projection"])
                if doc.get("projection")
                else None
            ),
            last_seq=int(doc.get("last_seq", 0)),
        )
    except CorruptSnapshot:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptSnapshot(f"malformed session document: {exc}") from exc
    session.check()
    return session


def snapshot_doc(session: Session) -> dict[str, Any]:
    return {"schema_version": SCHEMA_VERSION, "sessions": [state_dict(session)]}


def save_snapshot(session: Session, path: str | Path) -> dict[str, Any]:
    doc = snapshot_doc(session)
    try:
        Path(path).write_text(canonical_dumps(doc) + "\n", encoding="utf-8")
    except OSError as exc:
        raise StorageError(f"cannot write snapshot: {exc}") from exc
    logger.info("saved snapshot of %s to %s", session.session_id, path)
    return doc


def load_snapshot(path: str | Path) -> Session:
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise StorageError(f"cannot read snapshot: {exc}") from exc
    try:
        doc = json.loads(raw)
    except ValueError as exc:
        raise CorruptSnapshot(f"snapshot is not JSON: {exc}") from exc
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise CorruptSnapshot("snapshot has no schema_version")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise UnknownSchemaVersion(
            f"snapshot schema {doc['schema_version']}, expected {SCHEMA_VERSION}"
        )
    sessions = doc.get("sessions", [])
    if len(sessions) != 1:
        raise CorruptSnapshot(f"expected one session, found {len(sessions)}")
    return session_from_state(sessions[0])

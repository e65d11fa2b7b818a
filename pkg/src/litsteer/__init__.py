"""Steerable literature-research pipelines over arXiv.

Checkpointed QueryExpansion, Search, Review, and Synthesis stages run under
human control, an exploration tree tracks pivots between research directions,
and a shared 2D projection keeps every paper and query in one semantic map.
"""
from __future__ import annotations

from .arxiv import ArxivClient, PaperRecord, SearchSpec, SortOrder
from .errors import LitsteerError
from .events import Event, Session, apply, replay
from .gateway import (
    ChatRequest,
    ChatResponse,
    EmbeddingVector,
    Gateway,
    ProviderConfig,
    gateway_from_env,
)
from .review import (
    Chunk,
    DisplayState,
    ReviewResult,
    ReviewVerdict,
    SynthesisReport,
    UserState,
    display_state,
)
from .semantic import (
    EmbeddingStore,
    Owner,
    ProjectionConfig,
    ProjectionPoint,
    cosine_similarity,
    project,
    trustworthiness,
)
from .session import EngineConfig, SessionManager
from .snapshot import load_snapshot, save_snapshot
from .tree import (
    DirectionProposal,
    EdgeMetrics,
    ExplorationTree,
    QueryTreeNode,
    TreeNodeState,
    delta_label,
    semantic_delta,
    semantic_offset,
)
from .workflow import (
    KeywordSet,
    NodeKind,
    NodeRecord,
    NodeStatus,
    PaperList,
    PipelineRun,
)

__version__ = "0.1.0"

__all__ = [
    "ArxivClient",
    "ChatRequest",
    "ChatResponse",
    "Chunk",
    "DirectionProposal",
    "DisplayState",
    "EdgeMetrics",
    "EmbeddingStore",
    "EmbeddingVector",
    "EngineConfig",
    "Event",
    "ExplorationTree",
    "Gateway",
    "KeywordSet",
    "LitsteerError",
    "NodeKind",
    "NodeRecord",
    "NodeStatus",
    "Owner",
    "PaperList",
    "PaperRecord",
    "PipelineRun",
    "ProjectionConfig",
    "ProjectionPoint",
    "ProviderConfig",
    "QueryTreeNode",
    "ReviewResult",
    "ReviewVerdict",
    "SearchSpec",
    "Session",
    "SessionManager",
    "SortOrder",
    "SynthesisReport",
    "TreeNodeState",
    "UserState",
    "apply",
    "cosine_similarity",
    "delta_label",
    "display_state",
    "gateway_from_env",
    "load_snapshot",
    "project",
    "replay",
    "save_snapshot",
    "semantic_delta",
    "semantic_offset",
    "trustworthiness",
]

"""Shared semantic space: similarity, 2D projection, and its quality metric.

Embeddings for papers and query nodes live in one store so the projection
places them in a common plane. Projection falls back to exact PCA when there
are too few points for a neighbor graph.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import projection
from .errors import (
    DimensionMismatch,
    EmptyInput,
    InvalidRequest,
    NotProjected,
    SizeMismatch,
    TooFewPoints,
    ZeroVector,
)
from .gateway import EmbeddingVector

logger = logging.getLogger(__name__)

OWNER_KINDS = frozenset({"paper", "query"})


@dataclass(frozen=True)
class Owner:
    """What an embedding or projected point belongs to."""

    kind: str
    id: str

    def __post_init__(self) -> None:
        if self.kind not in OWNER_KINDS:
            raise InvalidRequest(f"owner kind must be one of {sorted(OWNER_KINDS)}")
        if not self.id:
            raise InvalidRequest("owner id must be nonempty")

    @property
    def key(self) -> str:
        return f"{self.kind}:{self.id}"

    @classmethod
    def paper(cls, arxiv_id: str) -> Owner:
        return cls("paper", arxiv_id)

    @classmethod
    def query(cls, tree_node_id: str) -> Owner:
        return cls("query", tree_node_id)

    @classmethod
    def from_key(cls, key: str) -> Owner:
        kind, _, ident = key.partition(":")
        return cls(kind, ident)


@dataclass(frozen=True)
class EmbeddingRecord:
    owner: Owner
    vector: EmbeddingVector

    def to_dict(self) -> dict[str, Any]:
        return {
            "owner": self.owner.key,
            "values": self.vector.to_list(),
            "model_id": self.vector.model_id,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> EmbeddingRecord:
        return cls(
            owner=Owner.from_key(doc["owner"]),
            vector=EmbeddingVector(tuple(doc["values"]), doc["model_id"]),
        )


@dataclass(frozen=True)
class ProjectionConfig:
    n_neighbors: int = 15
    min_dist: float = 0.1
    epochs: int = 200
    seed: int = 42

    def __post_init__(self) -> None:
        if self.n_neighbors < 2:
            raise InvalidRequest("n_neighbors must be >= 2")
        if not 0.0 < self.min_dist <= 1.0:
            raise InvalidRequest("min_dist must be in (0, 1]")
        if self.epochs < 1:
            raise InvalidRequest("epochs must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_neighbors": self.n_neighbors,
            "min_dist": self.min_dist,
            "epochs": self.epochs,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> ProjectionConfig:
        return cls(**doc)


@dataclass(frozen=True)
class ProjectionPoint:
    owner: Owner
    x: float
    y: float
    iteration_tags: frozenset[str] = frozenset()

    def to_dict(self) -> dict[str, Any]:
        return {
            "owner": self.owner.key,
            "x": self.x,
            "y": self.y,
            "iteration_tags": sorted(self.iteration_tags),
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> ProjectionPoint:
        return cls(
            owner=Owner.from_key(doc["owner"]),
            x=float(doc["x"]),
            y=float(doc["y"]),
            iteration_tags=frozenset(doc.get("iteration_tags", [])),
        )


# --- similarity -------------------------------------------------------------

def _as_array(vector: EmbeddingVector | Sequence[float]) -> np.ndarray:
    if isinstance(vector, EmbeddingVector):
        return np.asarray(vector.values, dtype=float)
    return np.asarray(list(vector), dtype=float)


def cosine_similarity(
    a: EmbeddingVector | Sequence[float], b: EmbeddingVector | Sequence[float]
) -> float:
    """Cosine of the angle between a and b, clamped into [-1, 1]."""
    va, vb = _as_array(a), _as_array(b)
    if va.ndim != 1 or vb.ndim != 1 or va.shape != vb.shape:
        raise DimensionMismatch(
            f"vectors have shapes {va.shape} and {vb.shape}"
        )
    norm_a = float(np.linalg.norm(va))
    norm_b = float(np.linalg.norm(vb))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector("cosine similarity is undefined for a zero vector")
    sim = float(np.dot(va, vb) / (norm_a * norm_b))
    return max(-1.0, min(1.0, sim))


# --- projection ----------------------------------------------------------------

def _owner_of(record: Any) -> Owner | None:
    return record.owner if isinstance(record, EmbeddingRecord) else None


def _vectors_matrix(records: Sequence[Any]) -> np.ndarray:
    rows = []
    for r in records:
        vec = r.vector if isinstance(r, EmbeddingRecord) else r
        rows.append(_as_array(vec))
    dims = {row.shape[0] for row in rows}
    if len(dims) > 1:
        raise DimensionMismatch(f"mixed embedding dims: {sorted(dims)}")
    return np.vstack(rows)


def project(
    records: Sequence[EmbeddingRecord],
    config: ProjectionConfig | None = None,
    tags: Mapping[str, Iterable[str]] | None = None,
) -> list[ProjectionPoint]:
    """Project embeddings to 2D, deterministically for a given seed.

    Fewer than n_neighbors + 2 points cannot support a neighbor graph, so
    small inputs get an exact PCA layout instead (1 point lands at the
    origin, 2 points at +-half their distance on the x axis). ``tags`` maps
    owner keys to iteration tags to copy onto the output points.
    """
    if not records:
        raise EmptyInput("nothing to project")
    config = config or ProjectionConfig()
    data = _vectors_matrix(records)
    n = data.shape[0]

    if n < config.n_neighbors + 2:
        coords = projection.pca_coords(data)
    else:
        coords = projection.neighbor_graph_layout(
            data,
            n_neighbors=config.n_neighbors,
            min_dist=config.min_dist,
            n_epochs=config.epochs,
            seed=config.seed,
        )

    tags = tags or {}
    points: list[ProjectionPoint] = []
    for record, (x, y) in zip(records, coords):
        owner = _owner_of(record)
        if owner is None:
            raise InvalidRequest("project requires EmbeddingRecords")
        points.append(
            ProjectionPoint(
                owner=owner,
                x=float(x),
                y=float(y),
                iteration_tags=frozenset(tags.get(owner.key, ())),
            )
        )
    return points


# --- quality metric ---------------------------------------------------------------

def _rank_matrix(dists: np.ndarray) -> np.ndarray:
    """ranks[i, j] = position of j ordered by distance from i (self is 0)."""
    ranked = dists.copy()
    np.fill_diagonal(ranked, -1.0)
    order = np.argsort(ranked, axis=1, kind="stable")
    n = dists.shape[0]
    ranks = np.empty((n, n), dtype=np.int64)
    rows = np.arange(n)[:, None]
    ranks[rows, order] = np.arange(n)[None, :]
    return ranks


def trustworthiness(
    original: Sequence[Any], projected: Sequence[Any], k: int
) -> float:
    """Rank-based neighborhood preservation in [0, 1]; 1 is perfect.

    Penalizes points that enter a 2D k-neighborhood without being in the
    high-dimensional one, weighted by how far down the true ranking they sit.
    Ranks use euclidean distance in both spaces, so any isometry of the
    input scores exactly 1.0.
    """
    if len(original) != len(projected):
        raise SizeMismatch(
            f"{len(original)} original vs {len(projected)} projected points"
        )
    if k < 1:
        raise InvalidRequest("k must be >= 1")
    n = len(original)
    if n < k + 2:
        raise TooFewPoints(f"need at least k + 2 = {k + 2} points, got {n}")

    high = _vectors_matrix(original)
    low_rows = []
    for p in projected:
        if isinstance(p, ProjectionPoint):
            low_rows.append([p.x, p.y])
        else:
            low_rows.append([float(v) for v in p])
    low = np.asarray(low_rows, dtype=float)

    def sq_dists(m: np.ndarray) -> np.ndarray:
        sq = np.sum(m * m, axis=1)
        d = sq[:, None] + sq[None, :] - 2.0 * (m @ m.T)
        return np.clip(d, 0.0, None)

    ranks_high = _rank_matrix(sq_dists(high))
    order_low = np.argsort(
        np.where(np.eye(n, dtype=bool), -1.0, sq_dists(low)), axis=1, kind="stable"
    )

    penalty = 0
    for i in range(n):
        for j in order_low[i, 1 : k + 1]:
            r = int(ranks_high[i, j])
            if r > k:
                penalty += r - k
    if 2 * k < n:
        scale = 2.0 / (n * k * (2.0 * n - 3.0 * k - 1.0))
    else:
        scale = 2.0 / (n * (n - k) * (n - k - 1.0))
    return 1.0 - scale * penalty


# --- embedding store ----------------------------------------------------------------

class EmbeddingStore:
    """Insertion-ordered owner -> embedding map with a locked dimension."""

    def __init__(self) -> None:
        self._records: dict[str, EmbeddingRecord] = {}
        self._dim: int | None = None

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, owner: Owner) -> bool:
        return owner.key in self._records

    @property
    def dim(self) -> int | None:
        return self._dim

    def add(self, owner: Owner, vector: EmbeddingVector) -> EmbeddingRecord:
        if self._dim is not None and vector.dim != self._dim:
            raise DimensionMismatch(
                f"store holds {self._dim}-dim vectors, got {vector.dim}"
            )
        record = EmbeddingRecord(owner=owner, vector=vector)
        self._records[owner.key] = record
        self._dim = vector.dim
        return record

    def get(self, owner: Owner) -> EmbeddingRecord | None:
        return self._records.get(owner.key)

    def records(self) -> list[EmbeddingRecord]:
        return list(self._records.values())

    def to_dict(self) -> dict[str, Any]:
        return {"records": [r.to_dict() for r in self._records.values()]}

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> EmbeddingStore:
        store = cls()
        for rdoc in doc.get("records", []):
            record = EmbeddingRecord.from_dict(rdoc)
            store.add(record.owner, record.vector)
        return store


def query_centroid(
    points: Sequence[ProjectionPoint], tree_node_id: str
) -> ProjectionPoint:
    """The projected point standing in for a query node's position."""
    for point in points:
        if point.owner.kind == "query" and point.owner.id == tree_node_id:
            return point
    raise NotProjected(f"query node {tree_node_id} has no projected point")

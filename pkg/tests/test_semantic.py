"""Similarity, projection entry point, trustworthiness, and the store."""
from __future__ import annotations

import math

import numpy as np
import pytest

from litsteer.errors import (
    DimensionMismatch,
    EmptyInput,
    InvalidRequest,
    NotProjected,
    SizeMismatch,
    TooFewPoints,
    ZeroVector,
)
from litsteer.gateway import EmbeddingVector
from litsteer.semantic import (
    EmbeddingRecord,
    EmbeddingStore,
    Owner,
    ProjectionConfig,
    ProjectionPoint,
    cosine_similarity,
    project,
    query_centroid,
    trustworthiness,
)


def vec(*values: float) -> EmbeddingVector:
    return EmbeddingVector(values=tuple(float(v) for v in values), model_id="m")


def record(key: str, *values: float) -> EmbeddingRecord:
    return EmbeddingRecord(owner=Owner.from_key(key), vector=vec(*values))


def naive_trustworthiness(high, low, k: int) -> float:
    """Direct transcription of the rank-penalty definition, loops and all."""
    n = len(high)

    def sqdist(a, b):
        return sum((x - y) ** 2 for x, y in zip(a, b))

    ranks: dict[tuple[int, int], int] = {}
    for i in range(n):
        order = sorted(
            (j for j in range(n) if j != i), key=lambda j: sqdist(high[i], high[j])
        )
        for pos, j in enumerate(order, start=1):
            ranks[i, j] = pos

    penalty = 0
    for i in range(n):
        order_low = sorted(
            (j for j in range(n) if j != i), key=lambda j: sqdist(low[i], low[j])
        )
        for j in order_low[:k]:
            penalty += max(0, ranks[i, j] - k)

    if 2 * k < n:
        scale = 2.0 / (n * k * (2.0 * n - 3.0 * k - 1.0))
    else:
        scale = 2.0 / (n * (n - k) * (n - k - 1.0))
    return 1.0 - scale * penalty


class TestOwner:
    def test_key_round_trip(self):
        owner = Owner.paper("2401.01234")
        assert owner.key == "paper:2401.01234"
        assert Owner.from_key(owner.key) == owner

    def test_query_owner(self):
        assert Owner.query("t3").key == "query:t3"

    def test_old_style_id_survives_key(self):
        owner = Owner.paper("cs/0303012")
        assert Owner.from_key(owner.key) == owner

    def test_bad_kind_rejected(self):
        with pytest.raises(InvalidRequest):
            Owner("tree", "t1")

    def test_empty_id_rejected(self):
        with pytest.raises(InvalidRequest):
            Owner("paper", "")


class TestCosineSimilarity:
    def test_known_value(self):
        # (1,2,2).(2,1,2) = 8, norms 3 and 3 -> 8/9.
        assert abs(cosine_similarity(vec(1, 2, 2), vec(2, 1, 2)) - 8.0 / 9.0) < 1e-12

    def test_identical(self):
        assert cosine_similarity(vec(0.3, 0.4), vec(0.3, 0.4)) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine_similarity(vec(1, 0), vec(0, 1)) == 0.0

    def test_antiparallel(self):
        assert cosine_similarity(vec(1, 1), vec(-1, -1)) == pytest.approx(-1.0)

    def test_accepts_plain_sequences(self):
        assert cosine_similarity([1, 2, 2], [2, 1, 2]) == pytest.approx(8.0 / 9.0)

    def test_clamped_into_range(self):
        a = vec(1e-8, 1.0)
        for b in (a, vec(-1e-8, -1.0)):
            s = cosine_similarity(a, b)
            assert -1.0 <= s <= 1.0

    def test_zero_vector_rejected(self):
        with pytest.raises(ZeroVector):
            cosine_similarity(vec(0, 0), vec(1, 0))

    def test_dim_mismatch_rejected(self):
        with pytest.raises(DimensionMismatch):
            cosine_similarity(vec(1, 0), vec(1, 0, 0))


class TestProjectionConfig:
    def test_defaults(self):
        config = ProjectionConfig()
        assert config.n_neighbors == 15
        assert config.seed == 42

    def test_validation(self):
        with pytest.raises(InvalidRequest):
            ProjectionConfig(n_neighbors=1)
        with pytest.raises(InvalidRequest):
            ProjectionConfig(min_dist=0.0)
        with pytest.raises(InvalidRequest):
            ProjectionConfig(epochs=0)

    def test_round_trip(self):
        config = ProjectionConfig(n_neighbors=5, min_dist=0.2, epochs=50, seed=7)
        assert ProjectionConfig.from_dict(config.to_dict()) == config


class TestProject:
    def test_empty_rejected(self):
        with pytest.raises(EmptyInput):
            project([])

    def test_single_point_at_origin(self):
        points = project([record("paper:a", 1, 2, 3)])
        assert (points[0].x, points[0].y) == (0.0, 0.0)

    def test_two_points_split_on_x(self):
        a = record("paper:a", 1, 0)
        b = record("paper:b", 0, 1)
        points = project([a, b])
        gap = math.sqrt(2.0)
        assert abs(abs(points[0].x) - gap / 2) < 1e-9
        assert abs(abs(points[1].x) - gap / 2) < 1e-9
        assert points[0].y == pytest.approx(0.0, abs=1e-9)
        assert points[1].y == pytest.approx(0.0, abs=1e-9)
        assert points[0].x == pytest.approx(-points[1].x)

    def test_small_input_uses_exact_pca(self):
        rng = np.random.default_rng(21)
        data = rng.standard_normal((5, 6))
        records = [record(f"paper:p{i}", *data[i]) for i in range(5)]
        points = project(records, ProjectionConfig(n_neighbors=15))
        centered = data - data.mean(axis=0)
        _, _, vt = np.linalg.svd(centered, full_matrices=False)
        reference = centered @ vt[:2].T
        ours = np.array([[p.x, p.y] for p in points])
        for c in range(2):
            assert np.allclose(ours[:, c], reference[:, c], atol=1e-9) or np.allclose(
                ours[:, c], -reference[:, c], atol=1e-9
            )

    def test_deterministic_for_seed(self):
        rng = np.random.default_rng(22)
        data = rng.standard_normal((24, 8))
        records = [record(f"paper:p{i}", *data[i]) for i in range(24)]
        config = ProjectionConfig(n_neighbors=5, epochs=30, seed=9)
        first = [(p.x, p.y) for p in project(records, config)]
        second = [(p.x, p.y) for p in project(records, config)]
        assert first == second

    def test_tags_attached_by_owner(self):
        a = record("paper:a", 1, 0)
        b = record("query:t1", 0, 1)
        points = project([a, b], tags={"paper:a": {"t1", "t2"}})
        assert points[0].iteration_tags == frozenset({"t1", "t2"})
        assert points[1].iteration_tags == frozenset()

    def test_requires_embedding_records(self):
        with pytest.raises(InvalidRequest):
            project([vec(1, 2)])

    def test_mixed_dims_rejected(self):
        with pytest.raises(DimensionMismatch):
            project([record("paper:a", 1, 0), record("paper:b", 1, 0, 0)])


class TestTrustworthiness:
    def test_identity_is_perfect(self):
        rng = np.random.default_rng(31)
        data = rng.standard_normal((20, 2))
        assert trustworthiness(data.tolist(), data.tolist(), k=5) == 1.0

    def test_isometry_is_perfect(self):
        rng = np.random.default_rng(32)
        data = rng.standard_normal((20, 2))
        theta = 1.1
        rot = np.array(
            [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
        )
        moved = data @ rot.T + np.array([5.0, -3.0])
        assert trustworthiness(data.tolist(), moved.tolist(), k=5) == 1.0

    def test_matches_naive_definition(self):
        rng = np.random.default_rng(33)
        high = rng.standard_normal((30, 6)).tolist()
        low = rng.standard_normal((30, 2)).tolist()
        for k in (1, 3, 5, 10):
            ours = trustworthiness(high, low, k=k)
            naive = naive_trustworthiness(high, low, k=k)
            assert abs(ours - naive) < 1e-12, k

    def test_generalized_normalizer_branch(self):
        rng = np.random.default_rng(34)
        high = rng.standard_normal((12, 5)).tolist()
        low = rng.standard_normal((12, 2)).tolist()
        for k in (6, 9, 10):
            ours = trustworthiness(high, low, k=k)
            naive = naive_trustworthiness(high, low, k=k)
            assert abs(ours - naive) < 1e-12, k
            assert 0.0 <= ours <= 1.0

    def test_shuffled_projection_scores_low(self):
        rng = np.random.default_rng(35)
        data = rng.standard_normal((60, 2))
        shuffled = data[rng.permutation(60)]
        assert trustworthiness(data.tolist(), shuffled.tolist(), k=10) < 0.8

    def test_size_mismatch(self):
        with pytest.raises(SizeMismatch):
            trustworthiness([[1.0, 0.0]], [], k=1)

    def test_too_few_points(self):
        pts = [[0.0, 0.0], [1.0, 0.0]]
        with pytest.raises(TooFewPoints):
            trustworthiness(pts, pts, k=1)

    def test_k_must_be_positive(self):
        pts = [[float(i), 0.0] for i in range(5)]
        with pytest.raises(InvalidRequest):
            trustworthiness(pts, pts, k=0)


class TestEmbeddingStore:
    def test_insertion_order_and_lookup(self):
        store = EmbeddingStore()
        store.add(Owner.paper("b"), vec(1, 0))
        store.add(Owner.paper("a"), vec(0, 1))
        keys = [r.owner.key for r in store.records()]
        assert keys == ["paper:b", "paper:a"]
        assert store.get(Owner.paper("a")).vector.values == (0.0, 1.0)
        assert Owner.paper("b") in store
        assert len(store) == 2

    def test_overwrite_keeps_position(self):
        store = EmbeddingStore()
        store.add(Owner.paper("b"), vec(1, 0))
        store.add(Owner.paper("a"), vec(0, 1))
        store.add(Owner.paper("b"), vec(0.5, 0.5))
        keys = [r.owner.key for r in store.records()]
        assert keys == ["paper:b", "paper:a"]
        assert store.get(Owner.paper("b")).vector.values == (0.5, 0.5)

    def test_dim_locked(self):
        store = EmbeddingStore()
        store.add(Owner.paper("a"), vec(1, 0))
        with pytest.raises(DimensionMismatch):
            store.add(Owner.paper("b"), vec(1, 0, 0))

    def test_round_trip(self):
        store = EmbeddingStore()
        store.add(Owner.paper("a"), vec(1, 0))
        store.add(Owner.query("t1"), vec(0, 1))
        again = EmbeddingStore.from_dict(store.to_dict())
        assert again.to_dict() == store.to_dict()
        assert again.dim == 2


class TestQueryCentroid:
    def test_found(self):
        points = [
            ProjectionPoint(Owner.paper("a"), 1.0, 2.0),
            ProjectionPoint(Owner.query("t1"), -1.0, 0.5),
        ]
        point = query_centroid(points, "t1")
        assert (point.x, point.y) == (-1.0, 0.5)

    def test_missing(self):
        with pytest.raises(NotProjected):
            query_centroid([ProjectionPoint(Owner.paper("a"), 0.0, 0.0)], "t9")

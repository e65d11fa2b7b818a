"""Neighbor-graph 2D layout, written out rather than imported.

Pipeline: cosine kNN graph -> smooth-kNN calibration (binary search per
point) -> fuzzy membership union -> SGD over edges with negative sampling.
Everything is seeded and single-threaded, so identical inputs and seeds give
identical coordinates.
"""
from __future__ import annotations

import logging
import math
import random

import numpy as np
from scipy.optimize import curve_fit

logger = logging.getLogger(__name__)

SMOOTH_K_TOLERANCE = 1e-5
MIN_K_DIST_SCALE = 1e-3
INIT_RANGE = 10.0
GRAD_CLIP = 4.0
NEGATIVE_SAMPLE_RATE = 5
REPULSION_STRENGTH = 1.0
INITIAL_ALPHA = 1.0


# --- graph construction ----------------------------------------------------

def pairwise_cosine_distances(data: np.ndarray) -> np.ndarray:
    """Dense (n, n) cosine distance matrix with a zero diagonal."""
    norms = np.linalg.norm(data, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = data / safe[:, None]
    sims = np.clip(unit @ unit.T, -1.0, 1.0)
    dists = 1.0 - sims
    np.fill_diagonal(dists, 0.0)
    return np.clip(dists, 0.0, None)


def nearest_neighbors(
    dists: np.ndarray, n_neighbors: int
) -> tuple[np.ndarray, np.ndarray]:
    """Indices and distances of each point's n_neighbors nearest others."""
    ranked = dists.copy()
    # Self must sort first even among duplicate points.
    np.fill_diagonal(ranked, -1.0)
    order = np.argsort(ranked, axis=1, kind="stable")
    idx = order[:, 1 : n_neighbors + 1]
    knn_dists = np.take_along_axis(dists, idx, axis=1)
    return idx, knn_dists


def smooth_knn_dist(
    knn_dists: np.ndarray,
    k: int,
    n_iter: int = 64,
    bandwidth: float = 1.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-point (sigma, rho) such that the kernel sums match log2(k)."""
    target = math.log2(k) * bandwidth
    n = knn_dists.shape[0]
    rho = np.zeros(n)
    sigma = np.zeros(n)
    mean_all = float(np.mean(knn_dists)) or 1.0

    for i in range(n):
        row = knn_dists[i]
        non_zero = row[row > 0.0]
        if non_zero.size > 0:
            rho[i] = float(non_zero[0])

        lo, hi, mid = 0.0, math.inf, 1.0
        for _ in range(n_iter):
            psum = 0.0
            for j in range(1, row.shape[0]):
                d = row[j] - rho[i]
                psum += math.exp(-d / mid) if d > 0 else 1.0
            if abs(psum - target) < SMOOTH_K_TOLERANCE:
                break
            if psum > target:
                hi = mid
                mid = (lo + hi) / 2.0
            else:
                lo = mid
                mid = mid * 2.0 if hi == math.inf else (lo + hi) / 2.0
        sigma[i] = mid

        if rho[i] > 0.0:
            mean_row = float(np.mean(row)) or 1.0
            sigma[i] = max(sigma[i], MIN_K_DIST_SCALE * mean_row)
        else:
            sigma[i] = max(sigma[i], MIN_K_DIST_SCALE * mean_all)
    return sigma, rho


def membership_strengths(
    knn_idx: np.ndarray,
    knn_dists: np.ndarray,
    sigma: np.ndarray,
    rho: np.ndarray,
) -> np.ndarray:
    """Directed membership weights as a dense (n, n) matrix."""
    n = knn_idx.shape[0]
    weights = np.zeros((n, n))
    for i in range(n):
        for j in range(knn_idx.shape[1]):
            t = knn_idx[i, j]
            if t == i:
                continue
            d = knn_dists[i, j] - rho[i]
            if d <= 0.0 or sigma[i] == 0.0:
                w = 1.0
            else:
                w = math.exp(-d / sigma[i])
            weights[i, t] = w
    return weights


def fuzzy_union(weights: np.ndarray) -> np.ndarray:
    """Symmetrize via probabilistic t-conorm: W + Wt - W*Wt."""
    transpose = weights.T
    return weights + transpose - weights * transpose


def find_ab_params(spread: float, min_dist: float) -> tuple[float, float]:
    """Fit the low-dimensional similarity curve 1/(1 + a*d^(2b))."""

    def curve(x: np.ndarray, a: float, b: float) -> np.ndarray:
        return 1.0 / (1.0 + a * x ** (2.0 * b))

    xv = np.linspace(0.0, spread * 3.0, 300)
    yv = np.where(xv < min_dist, 1.0, np.exp(-(xv - min_dist) / spread))
    params, _ = curve_fit(curve, xv, yv)
    return float(params[0]), float(params[1])


def make_epochs_per_sample(weights: np.ndarray, n_epochs: int) -> np.ndarray:
    """How many epochs separate consecutive samples of each edge."""
    result = -1.0 * np.ones(weights.shape[0])
    n_samples = n_epochs * (weights / weights.max())
    result[n_samples > 0] = float(n_epochs) / n_samples[n_samples > 0]
    return result


# --- initialization ----------------------------------------------------------

def pca_coords(data: np.ndarray) -> np.ndarray:
    """Exact top-2 PCA projection with a deterministic sign convention."""
    centered = data - data.mean(axis=0)
    cov = centered.T @ centered
    eigvals, eigvecs = np.linalg.eigh(cov)
    components = eigvecs[:, ::-1][:, :2]
    if components.shape[1] < 2:
        components = np.hstack(
            [components, np.zeros((components.shape[0], 2 - components.shape[1]))]
        )
    # Largest-magnitude loading of each component made positive, so the
    # layout never flips between identical runs.
    for c in range(components.shape[1]):
        col = components[:, c]
        pivot = int(np.argmax(np.abs(col)))
        if col[pivot] < 0:
            components[:, c] = -col
    return centered @ components


def initial_layout(data: np.ndarray) -> np.ndarray:
    coords = pca_coords(data)
    extent = float(np.abs(coords).max())
    if extent > 0:
        coords = coords * (INIT_RANGE / extent)
    return coords


# --- stochastic optimization --------------------------------------------------

def _clip(value: float) -> float:
    if value > GRAD_CLIP:
        return GRAD_CLIP
    if value < -GRAD_CLIP:
        return -GRAD_CLIP
    return value


def optimize_layout(
    coords: list[list[float]],
    head: list[int],
    tail: list[int],
    epochs_per_sample: list[float],
    n_epochs: int,
    a: float,
    b: float,
    rng: random.Random,
    gamma: float = REPULSION_STRENGTH,
    initial_alpha: float = INITIAL_ALPHA,
    negative_sample_rate: int = NEGATIVE_SAMPLE_RATE,
) -> list[list[float]]:
    """Attract edge endpoints, repulse sampled non-neighbors, decay the step."""
    n_points = len(coords)
    n_edges = len(head)
    eps_negative = [e / negative_sample_rate for e in epochs_per_sample]
    next_sample = list(epochs_per_sample)
    next_negative = list(eps_negative)

    for epoch in range(n_epochs):
        alpha = initial_alpha * (1.0 - epoch / n_epochs)
        for e in range(n_edges):
            if next_sample[e] > epoch:
                continue
            j = head[e]
            k = tail[e]
            cur = coords[j]
            oth = coords[k]
            dx = cur[0] - oth[0]
            dy = cur[1] - oth[1]
            dist_sq = dx * dx + dy * dy
            if dist_sq > 0.0:
                coeff = (-2.0 * a * b * dist_sq ** (b - 1.0)) / (
                    a * dist_sq**b + 1.0
                )
                gx = _clip(coeff * dx)
                gy = _clip(coeff * dy)
                cur[0] += alpha * gx
                cur[1] += alpha * gy
                oth[0] -= alpha * gx
                oth[1] -= alpha * gy
            next_sample[e] += epochs_per_sample[e]

            n_negative = int((epoch - next_negative[e]) / eps_negative[e])
            for _ in range(n_negative):
                t = rng.randrange(n_points)
                oth = coords[t]
                dx = cur[0] - oth[0]
                dy = cur[1] - oth[1]
                dist_sq = dx * dx + dy * dy
                if dist_sq > 0.0:
                    coeff = (2.0 * gamma * b) / (
                        (0.001 + dist_sq) * (a * dist_sq**b + 1.0)
                    )
                elif j == t:
                    continue
                else:
                    coeff = 0.0
                gx = _clip(coeff * dx) if coeff > 0.0 else GRAD_CLIP
                gy = _clip(coeff * dy) if coeff > 0.0 else GRAD_CLIP
                cur[0] += alpha * gx
                cur[1] += alpha * gy
            next_negative[e] += n_negative * eps_negative[e]
    return coords


# --- entry point ---------------------------------------------------------------

def neighbor_graph_layout(
    data: np.ndarray,
    n_neighbors: int,
    min_dist: float,
    n_epochs: int,
    seed: int,
) -> np.ndarray:
    """Full pipeline: graph, calibration, union, init, SGD. Returns (n, 2)."""
    dists = pairwise_cosine_distances(data)
    knn_idx, knn_dists = nearest_neighbors(dists, n_neighbors)
    sigma, rho = smooth_knn_dist(knn_dists, n_neighbors)
    weights = membership_strengths(knn_idx, knn_dists, sigma, rho)
    graph = fuzzy_union(weights)

    # Edges sampled less than once per run contribute nothing; drop them.
    cutoff = graph.max() / float(n_epochs)
    graph = np.where(graph < cutoff, 0.0, graph)

    heads, tails = np.nonzero(graph)
    edge_weights = graph[heads, tails]
    epochs_per_sample = make_epochs_per_sample(edge_weights, n_epochs)

    a, b = find_ab_params(1.0, min_dist)
    coords = [[float(x), float(y)] for x, y in initial_layout(data)]
    rng = random.Random(seed)
    coords = optimize_layout(
        coords,
        head=[int(h) for h in heads],
        tail=[int(t) for t in tails],
        epochs_per_sample=[float(e) for e in epochs_per_sample],
        n_epochs=n_epochs,
        a=a,
        b=b,
        rng=rng,
    )
    logger.debug(
        "layout: %d points, %d edges, a=%.3f b=%.3f", len(coords), len(heads), a, b
    )
    return np.asarray(coords)

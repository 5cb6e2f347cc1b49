"""Landmark multidimensional scaling on graph distances.

A handful of landmark nodes is embedded by classical MDS on their hop
distances; every other node is then placed by distance-based triangulation
against those landmarks (de Silva and Tenenbaum). Cost is O(L N) distances
plus an L x L eigendecomposition, so it scales to large graphs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .graph import Graph

__all__ = [
    "LandmarkDistances",
    "bfs_distances",
    "maxmin_landmarks",
    "landmark_mds",
    "community_penalty",
    "mds_init",
    "stress",
]


@dataclass(frozen=True)
class LandmarkDistances:
    """Hop distances from ``landmarks[k]`` to every node, as ``dist[k, :]``."""

    landmarks: np.ndarray
    dist: np.ndarray

    @property
    def n_landmarks(self) -> int:
        return len(self.landmarks)

    def landmark_matrix(self) -> np.ndarray:
        return self.dist[:, self.landmarks]


def bfs_distances(g: Graph, landmarks: Sequence[int]) -> LandmarkDistances:
    """Exact unweighted shortest-path lengths from each landmark."""
    lm = np.asarray(landmarks, dtype=np.int64)
    if lm.ndim != 1 or not 1 <= len(lm) <= g.n:
        raise ValueError(f"need between 1 and {g.n} landmarks")
    if lm.min() < 0 or lm.max() >= g.n:
        raise ValueError("landmark index out of range")
    if g.n == 1:
        return LandmarkDistances(lm, np.zeros((len(lm), 1)))
    dist = shortest_path(g.to_csr(), method="D", directed=False,
                         unweighted=True, indices=lm)
    dist = np.atleast_2d(dist)
    if not np.all(np.isfinite(dist)):
        raise ValueError("graph is disconnected; pass its largest connected component")
    return LandmarkDistances(lm, dist)


def maxmin_landmarks(g: Graph, count: int, seed: int = 0) -> LandmarkDistances:
    """Farthest-point landmark selection from a seeded random start.

    Each new landmark is the node farthest (in hops) from all landmarks chosen
    so far, ties going to the smallest index.
    """
    count = int(min(max(count, 1), g.n))
    rng = np.random.default_rng(seed)
    first = int(rng.integers(g.n))
    chosen = [first]
    rows = [bfs_distances(g, [first]).dist[0]]
    nearest = rows[0].copy()
    while len(chosen) < count:
        nearest[chosen] = -1.0
        nxt = int(np.argmax(nearest))
        if nearest[nxt] <= 0:
            break
        chosen.append(nxt)
        rows.append(bfs_distances(g, [nxt]).dist[0])
        nearest = np.minimum(nearest, rows[-1])
    if len(chosen) < count:
        # fewer distinct nodes than requested; should not happen on a simple graph
        rest = [i for i in range(g.n) if i not in set(chosen)][: count - len(chosen)]
        chosen.extend(rest)
        rows.extend(bfs_distances(g, rest).dist)
    return LandmarkDistances(np.asarray(chosen, dtype=np.int64), np.vstack(rows))


def community_penalty(ld: LandmarkDistances, assignment: Sequence[int],
                      penalty: float) -> LandmarkDistances:
    """Add ``penalty`` to the distance of every landmark/node pair lying in
    different communities, pulling communities apart in the embedding."""
    c = np.asarray(assignment)
    extra = penalty * (c[ld.landmarks][:, None] != c[None, :])
    return LandmarkDistances(ld.landmarks, ld.dist + extra)


def landmark_mds(ld: LandmarkDistances, dim: int, g: Graph | None = None,
                 spacing: float | None = None) -> np.ndarray:
    """Embed all nodes in ``dim`` dimensions from landmark distances.

    When ``g`` and ``spacing`` are both given the result is rescaled so the
    mean edge length equals ``spacing``; otherwise coordinates are in hops.
    """
    n = ld.dist.shape[1]
    L = ld.n_landmarks
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if n == 1:
        return np.zeros((1, dim))
    if L < dim + 1 and L < n:
        raise ValueError(f"need at least {dim + 1} landmarks for a {dim}-d embedding")

    d2 = ld.landmark_matrix() ** 2
    mean_cols = d2.mean(axis=0)
    J = np.eye(L) - 1.0 / L
    B = -0.5 * J @ d2 @ J
    evals, evecs = np.linalg.eigh(B)
    order = np.argsort(evals)[::-1][:dim]
    evals, evecs = evals[order], evecs[:, order]
    tol = 1e-9 * max(abs(evals[0]), 1.0)
    usable = int(np.sum(evals > tol))
    if usable < dim:
        warnings.warn(
            f"landmark distances support only {usable} positive dimensions; "
            f"padding the remaining {dim - usable} with zeros",
            RuntimeWarning,
            stacklevel=2,
        )
    pinv = np.zeros((dim, L))
    pinv[:usable] = (evecs[:, :usable] / np.sqrt(evals[:usable])).T
    # triangulation: x = -1/2 L# (delta^2 - mean landmark delta^2)
    x = -0.5 * pinv @ (ld.dist**2 - mean_cols[:, None])
    x = x.T
    x -= x.mean(axis=0)
    # fix the sign of each axis so output does not depend on the eigensolver
    for k in range(usable):
        j = np.argmax(np.abs(x[:, k]))
        if x[j, k] < 0:
            x[:, k] = -x[:, k]

    if g is not None and spacing is not None and g.m > 0:
        e = g.edges
        mean_len = np.linalg.norm(x[e[:, 0]] - x[e[:, 1]], axis=1).mean()
        if mean_len > 0:
            x *= spacing / mean_len
    return x


def mds_init(g: Graph, dim: int, n_landmarks: int = 100, seed: int = 0,
             spacing: float | None = None, communities: Sequence[int] | None = None,
             penalty: float = 0.0, jitter: float = 0.3) -> np.ndarray:
    """Initial layout from landmark MDS on hop distances of a connected ``g``.

    Nodes with identical distance profiles (sibling leaves, say) land on the
    same point, which would hand the layout a near-singular Coulomb kick. Every
    coordinate is therefore perturbed by a seeded uniform offset of up to
    ``jitter`` times the mean edge length.
    """
    ld = maxmin_landmarks(g, min(n_landmarks, g.n), seed)
    if communities is not None and penalty:
        ld = community_penalty(ld, communities, penalty)
    if ld.n_landmarks < dim + 1:
        # tiny graph: every node is a landmark, embed what the metric allows
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            x = landmark_mds(ld, dim, g, spacing)
    else:
        x = landmark_mds(ld, dim, g, spacing)
    if jitter > 0 and g.m > 0 and g.n > 1:
        e = g.edges
        scale = np.linalg.norm(x[e[:, 0]] - x[e[:, 1]], axis=1).mean()
        if scale > 0:
            rng = np.random.default_rng(seed)
            x = x + rng.uniform(-1.0, 1.0, size=x.shape) * (jitter * scale)
    return x


def stress(x: np.ndarray, delta: np.ndarray, pairs: np.ndarray | None = None) -> float:
    """Sum of squared misfits ``(|x_i - x_j| - delta_ij)^2`` over ``i < j``.

    ``delta`` is a full square matrix indexed like ``x``; ``pairs`` optionally
    restricts the sum to a subset of node indices.
    """
    idx = np.arange(len(x)) if pairs is None else np.asarray(pairs)
    xs = x[idx]
    dx = np.linalg.norm(xs[:, None, :] - xs[None, :, :], axis=-1)
    iu = np.triu_indices(len(idx), 1)
    return float(np.sum((dx[iu] - delta[np.ix_(idx, idx)][iu]) ** 2))

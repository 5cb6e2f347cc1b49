"""Seeded synthetic graphs used as fixtures and demos."""

from __future__ import annotations

import numpy as np

from .graph import Graph

__all__ = ["planted_partition", "ring_with_trees", "scale_free", "random_gnm"]


def _triangular_pairs(idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # linear index over {(c, r): c < r} ordered by r, then c
    r = ((np.sqrt(8.0 * idx + 1.0) - 1.0) // 2).astype(np.int64) + 1
    # guard against float rounding at block boundaries
    r -= (r * (r - 1) // 2 > idx).astype(np.int64)
    r += ((r + 1) * r // 2 <= idx).astype(np.int64)
    c = idx - r * (r - 1) // 2
    return c, r


def planted_partition(blocks: int, size: int, p_in: float, p_out: float,
                      seed: int = 0) -> tuple[Graph, np.ndarray]:
    """Stochastic block model with ``blocks`` equal blocks.

    Returns the graph and the planted block of every node. Nodes of block
    ``b`` are ``b*size .. (b+1)*size - 1``.
    """
    if blocks < 1 or size < 1:
        raise ValueError("blocks and size must be >= 1")
    if not (0 <= p_in <= 1 and 0 <= p_out <= 1):
        raise ValueError("probabilities must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    pairs = []
    for a in range(blocks):
        for b in range(a, blocks):
            if a == b:
                total = size * (size - 1) // 2
                k = rng.binomial(total, p_in) if total else 0
                idx = rng.choice(total, size=k, replace=False) if k else np.empty(0, np.int64)
                u, v = _triangular_pairs(np.sort(idx))
            else:
                total = size * size
                k = rng.binomial(total, p_out)
                idx = np.sort(rng.choice(total, size=k, replace=False)) if k else np.empty(0, np.int64)
                u, v = idx // size, idx % size
            pairs.append(np.column_stack([u + a * size, v + b * size]))
    n = blocks * size
    labels = np.repeat(np.arange(blocks), size)
    return Graph.from_edges(n, np.concatenate(pairs)), labels


def ring_with_trees(ring: int, trees: int, seed: int = 0) -> Graph:
    """A cycle of ``ring`` nodes with ``trees`` extra nodes hung off it.

    Each extra node links to one uniformly chosen earlier node, so the extras
    form random recursive trees rooted on the cycle.
    """
    if ring < 3:
        raise ValueError("ring needs at least 3 nodes")
    if trees < 0:
        raise ValueError("trees must be >= 0")
    rng = np.random.default_rng(seed)
    cyc = np.arange(ring)
    pairs = [np.column_stack([cyc, (cyc + 1) % ring])]
    if trees:
        new = np.arange(ring, ring + trees)
        parent = (rng.random(trees) * new).astype(np.int64)
        pairs.append(np.column_stack([parent, new]))
    return Graph.from_edges(ring + trees, np.concatenate(pairs))


def scale_free(n: int, m: int, seed: int = 0) -> Graph:
    """Preferential attachment: each new node links to ``m`` distinct earlier
    nodes chosen with probability proportional to degree."""
    if m < 1 or n <= m:
        raise ValueError("need n > m >= 1")
    rng = np.random.default_rng(seed)
    pairs: list[tuple[int, int]] = []
    # seed with a star on m + 1 nodes so every early node has degree > 0
    ends: list[int] = []
    for v in range(1, m + 1):
        pairs.append((0, v))
        ends += [0, v]
    for v in range(m + 1, n):
        targets: set[int] = set()
        while len(targets) < m:
            targets.add(ends[int(rng.integers(len(ends)))])
        for t in sorted(targets):
            pairs.append((t, v))
            ends += [t, v]
    return Graph.from_edges(n, pairs)


def random_gnm(n: int, m: int, seed: int = 0) -> Graph:
    """Uniform random simple graph with exactly ``m`` edges."""
    total = n * (n - 1) // 2
    if not 0 <= m <= total:
        raise ValueError("m out of range")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(total, size=m, replace=False))
    c, r = _triangular_pairs(idx)
    return Graph.from_edges(n, np.column_stack([c, r]))

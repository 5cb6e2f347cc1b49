"""Modularity-based community detection.

Greedy agglomeration in the style of Clauset, Newman and Moore: every node
starts alone, the pair of adjacent communities with the largest modularity
gain is merged, and the partition at the best point of the merge sequence is
returned. Large communities can then be split again by re-running the greedy
optimisation on their induced subgraphs, which yields a hierarchy.

Edge fractions use the half-edge convention: ``e[p][q]`` is the number of
ordered adjacent pairs ``(u, v)`` with ``u`` in ``p`` and ``v`` in ``q``,
divided by ``2M``, so all entries sum to one and ``a[p] = sum_q e[p][q]``.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .graph import Graph, induced_subgraph

__all__ = [
    "Partition",
    "ModularityState",
    "Dendrogram",
    "modularity",
    "greedy_modularity",
    "refine_recursive",
    "label_agreement",
    "DEFAULT_SIZE_THRESHOLD",
]

DEFAULT_SIZE_THRESHOLD = 10_000


@dataclass(frozen=True, eq=False)
class Partition:
    """Assignment of every node to a community id in ``0..count-1``."""

    assignment: np.ndarray

    @classmethod
    def from_labels(cls, labels: Sequence) -> "Partition":
        """Relabel arbitrary community keys densely, in order of first node."""
        ids: dict = {}
        out = np.empty(len(labels), dtype=np.int64)
        for i, lab in enumerate(labels):
            key = lab.item() if isinstance(lab, np.generic) else lab
            out[i] = ids.setdefault(key, len(ids))
        return cls(out)

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(np.arange(n, dtype=np.int64))

    @property
    def n(self) -> int:
        return len(self.assignment)

    @property
    def count(self) -> int:
        return int(self.assignment.max()) + 1 if self.n else 0

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.count)

    def members(self, p: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == p)

    def groups(self) -> list[np.ndarray]:
        order = np.argsort(self.assignment, kind="stable")
        bounds = np.cumsum(self.sizes)[:-1]
        return np.split(order, bounds)


def modularity(g: Graph, part: Partition) -> float:
    """Modularity ``Q = sum_p (e_pp - a_p^2)`` of ``part`` on ``g``."""
    if part.n != g.n:
        raise ValueError(f"partition covers {part.n} nodes, graph has {g.n}")
    if g.m == 0:
        raise ValueError("modularity is undefined for a graph without edges")
    two_m = 2.0 * g.m
    c = part.assignment
    u, v = g.edges[:, 0], g.edges[:, 1]
    inside = c[u] == c[v]
    e_pp = np.bincount(c[u][inside], minlength=part.count) * 2.0 / two_m
    a = np.bincount(c, weights=g.degrees().astype(float), minlength=part.count) / two_m
    return float(np.sum(e_pp) - np.sum(a * a))


class ModularityState:
    """Community-level edge fractions under a sequence of merges.

    ``rows[p]`` maps each adjacent community ``q != p`` to ``e_pq``; ``e_in[p]``
    is ``e_pp``. ``Q`` is updated incrementally by :meth:`merge`.
    """

    def __init__(self, e_in: np.ndarray, rows: list[dict[int, float]], a: np.ndarray):
        # plain lists: scalar access dominates the greedy loop
        self.e_in = [float(v) for v in e_in]
        self.rows = rows
        self.a = [float(v) for v in a]
        self.alive = [True] * len(self.a)
        self.Q = sum(ep - ap * ap for ep, ap in zip(self.e_in, self.a))

    @classmethod
    def from_partition(cls, g: Graph, part: Partition) -> "ModularityState":
        if part.n != g.n:
            raise ValueError(f"partition covers {part.n} nodes, graph has {g.n}")
        if g.m == 0:
            raise ValueError("graph has no edges")
        two_m = 2.0 * g.m
        c = part.assignment
        k = part.count
        e_in = np.zeros(k)
        rows: list[dict[int, float]] = [{} for _ in range(k)]
        for u, v in g.edges:
            p, q = c[u], c[v]
            if p == q:
                e_in[p] += 2.0 / two_m
            else:
                rows[p][q] = rows[p].get(q, 0.0) + 1.0 / two_m
                rows[q][p] = rows[q].get(p, 0.0) + 1.0 / two_m
        a = np.bincount(c, weights=g.degrees().astype(float), minlength=k) / two_m
        return cls(e_in, rows, a)

    @classmethod
    def singletons(cls, g: Graph) -> "ModularityState":
        return cls.from_partition(g, Partition.singletons(g.n))

    def _check(self, p: int, q: int) -> None:
        if p == q:
            raise ValueError("cannot merge a community with itself")
        for c in (p, q):
            if not (0 <= c < len(self.a)) or not self.alive[c]:
                raise ValueError(f"community {c} is not live")

    def e(self, p: int, q: int) -> float:
        if p == q:
            return self.e_in[p]
        return self.rows[p].get(q, 0.0)

    def delta_q(self, p: int, q: int) -> float:
        """Modularity gain of merging ``p`` and ``q``: ``2 (e_pq - a_p a_q)``."""
        self._check(p, q)
        return 2.0 * (self.rows[p].get(q, 0.0) - self.a[p] * self.a[q])

    def merge(self, p: int, q: int) -> int:
        """Merge ``p`` and ``q``; the smaller id survives and is returned."""
        dq = self.delta_q(p, q)
        keep, gone = (p, q) if p < q else (q, p)
        rk, rg = self.rows[keep], self.rows[gone]
        e_kg = rk.pop(gone, 0.0)
        rg.pop(keep, None)
        self.e_in[keep] += self.e_in[gone] + 2.0 * e_kg
        self.a[keep] += self.a[gone]
        gone_nbrs = list(rg)
        big, small = (rk, rg) if len(rk) >= len(rg) else (rg, rk)
        for k, val in small.items():
            big[k] = big.get(k, 0.0) + val
        for k in gone_nbrs:
            row = self.rows[k]
            del row[gone]
            row[keep] = big[k]
        self.rows[keep] = big
        self.rows[gone] = {}
        self.e_in[gone] = 0.0
        self.a[gone] = 0.0
        self.alive[gone] = False
        self.Q += dq
        return keep


def _replay(n: int, merges: list[tuple[int, int]], steps: int) -> Partition:
    parent = np.arange(n)

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p, q in merges[:steps]:
        rp, rq = find(p), find(q)
        parent[max(rp, rq)] = min(rp, rq)
    return Partition.from_labels([find(i) for i in range(n)])


def greedy_modularity(g: Graph) -> tuple[Partition, list[float]]:
    """Greedy agglomerative modularity maximisation.

    Returns the partition at the merge step with the highest modularity and
    the modularity after every step (entry 0 is the all-singleton start).
    Among equal gains the lexicographically smallest pair ``(p, q)`` wins.
    """
    if g.m == 0:
        return Partition.singletons(g.n), [0.0]
    state = ModularityState.singletons(g)
    a, rows, alive = state.a, state.rows, state.alive

    def row_best(p: int):
        # smallest (-dq, lo, hi) key over the row of p
        ap = a[p]
        best = None
        for k, e in rows[p].items():
            key = (-2.0 * (e - ap * a[k]), p, k) if p < k else (-2.0 * (e - ap * a[k]), k, p)
            if best is None or key < best:
                best = key
        return best

    # the heap holds each community's best pair, stamped with a per-community
    # version; bumping the version retires the old entry lazily
    best: list[tuple | None] = [row_best(p) for p in range(g.n)]
    version = [0] * g.n
    heap = [(*b, p, 0) for p, b in enumerate(best) if b is not None]
    heapq.heapify(heap)
    pop, push = heapq.heappop, heapq.heappush

    trace = [state.Q]
    merges: list[tuple[int, int]] = []
    while heap:
        _, lo, hi, p, ver = pop(heap)
        if not alive[p] or version[p] != ver:
            continue
        keep = state.merge(lo, hi)
        gone = hi if keep == lo else lo
        merges.append((lo, hi))
        trace.append(state.Q)
        version[gone] += 1
        best[gone] = None
        ak = a[keep]
        kbest = None
        # only pairs involving keep changed gain; gone's pairs now belong to keep
        for k, e in rows[keep].items():
            key = (-2.0 * (e - ak * a[k]), keep, k) if keep < k else (-2.0 * (e - ak * a[k]), k, keep)
            if kbest is None or key < kbest:
                kbest = key
            bk = best[k]
            partner = bk[1] if bk[2] == k else bk[2]
            if partner == keep or partner == gone:
                nb = row_best(k)
            elif key < bk:
                nb = key
            else:
                continue
            best[k] = nb
            version[k] += 1
            push(heap, (*nb, k, version[k]))
        nb = best[keep] = kbest
        version[keep] += 1
        if nb is not None:
            push(heap, (*nb, keep, version[keep]))

    top = int(np.argmax(trace))
    return _replay(g.n, merges, top), trace


@dataclass
class Dendrogram:
    """Community hierarchy.

    ``members`` are node indices of the original graph. The root holds every
    node; a node without children is a leaf community. ``q_split`` is the
    modularity of the split into ``children`` measured on the node's own
    induced subgraph (``None`` for the root and for leaves).
    """

    members: np.ndarray
    children: list["Dendrogram"] = field(default_factory=list)
    q_split: float | None = None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def leaves(self, prefix: tuple[int, ...] = ()) -> Iterator[tuple[tuple[int, ...], "Dendrogram"]]:
        """Yield ``(path, leaf)`` pairs; ``path`` holds one child id per level."""
        if self.is_leaf:
            yield prefix, self
            return
        for k, child in enumerate(self.children):
            yield from child.leaves(prefix + (k,))

    def depth(self) -> int:
        return 0 if self.is_leaf else 1 + max(c.depth() for c in self.children)

    def paths(self, n: int) -> list[str]:
        """Dot-separated leaf path for each of the ``n`` nodes, e.g. ``"3.1"``."""
        out = [""] * n
        for path, leaf in self.leaves():
            s = ".".join(map(str, path))
            for i in leaf.members:
                out[i] = s
        return out

    def leaf_partition(self, n: int) -> Partition:
        return Partition.from_labels(self.paths(n))


def refine_recursive(g: Graph, part: Partition,
                     size_threshold: int = DEFAULT_SIZE_THRESHOLD) -> Dendrogram:
    """Split communities larger than ``size_threshold`` by re-optimising them.

    Each oversized community is passed to :func:`greedy_modularity` on its
    induced subgraph. The split is kept only if it has more than one part and
    its modularity on that subgraph is positive; accepted parts are refined
    again in the same way.
    """
    if part.n != g.n:
        raise ValueError(f"partition covers {part.n} nodes, graph has {g.n}")
    root = Dendrogram(np.arange(g.n, dtype=np.int64))
    root.children = [_refine(g, m, size_threshold) for m in part.groups()]
    return root


def _refine(g: Graph, members: np.ndarray, size_threshold: int) -> Dendrogram:
    node = Dendrogram(np.asarray(members, dtype=np.int64))
    if len(members) <= size_threshold:
        return node
    sub = induced_subgraph(g, members)
    if sub.m == 0:
        return node
    sub_part, _ = greedy_modularity(sub)
    if sub_part.count < 2:
        return node
    q = modularity(sub, sub_part)
    if q <= 0.0:
        return node
    node.q_split = q
    # induced_subgraph keeps members in ascending order
    ordered = np.sort(node.members)
    node.children = [_refine(g, ordered[grp], size_threshold) for grp in sub_part.groups()]
    return node


def label_agreement(pred: Sequence[int], truth: Sequence[int]) -> float:
    """Fraction of nodes correctly labelled under the best one-to-one matching
    of predicted communities to true groups."""
    pred = Partition.from_labels(pred).assignment
    truth = Partition.from_labels(truth).assignment
    table = np.zeros((pred.max() + 1, truth.max() + 1), dtype=np.int64)
    np.add.at(table, (pred, truth), 1)
    rows, cols = linear_sum_assignment(-table)
    return float(table[rows, cols].sum()) / len(pred)

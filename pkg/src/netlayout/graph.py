"""Undirected simple graphs with dense integer indexing.

Edge lists are read as plain text, two whitespace separated labels per line.
Direction, self-loops and repeated pairs are discarded at parse time, so every
downstream computation can assume a simple undirected graph whose nodes are
``0..N-1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _cc

__all__ = [
    "Graph",
    "ParseError",
    "ParseReport",
    "parse_edge_list",
    "read_edge_list",
    "format_edge_list",
    "connected_components",
    "largest_connected_component",
    "induced_subgraph",
]


class ParseError(ValueError):
    """Malformed edge-list input."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


@dataclass
class ParseReport:
    lines: int = 0
    comments: int = 0
    self_loops: int = 0
    duplicates: int = 0


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected simple graph.

    ``indptr``/``indices`` hold the adjacency in CSR form with each neighbour
    list sorted; ``edges`` is the (M, 2) array of canonical pairs ``u < v`` in
    lexicographic order; ``labels[i]`` is the original identifier of node ``i``.
    """

    indptr: np.ndarray
    indices: np.ndarray
    edges: np.ndarray
    labels: tuple[str, ...]
    report: ParseReport | None = field(default=None, compare=False)

    @classmethod
    def from_edges(cls, n: int, pairs: Iterable[tuple[int, int]],
                   labels: Sequence[str] | None = None,
                   report: ParseReport | None = None) -> "Graph":
        """Build from index pairs, dropping self-loops and duplicates."""
        arr = np.asarray(list(pairs) if not isinstance(pairs, np.ndarray) else pairs,
                         dtype=np.int64).reshape(-1, 2)
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise ValueError("edge endpoint out of range")
        arr = arr[arr[:, 0] != arr[:, 1]]
        arr = np.sort(arr, axis=1)
        arr = np.unique(arr, axis=0) if len(arr) else arr.reshape(0, 2)
        both = np.concatenate([arr, arr[:, ::-1]])
        order = np.lexsort((both[:, 1], both[:, 0]))
        both = both[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, both[:, 0] + 1, 1)
        np.cumsum(indptr, out=indptr)
        if labels is None:
            labels = [str(i) for i in range(n)]
        if len(labels) != n:
            raise ValueError("need one label per node")
        return cls(indptr, both[:, 1].copy(), arr, tuple(labels), report)

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def m(self) -> int:
        return len(self.edges)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def to_csr(self) -> csr_matrix:
        data = np.ones(len(self.indices), dtype=np.float64)
        return csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def index_of(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.labels)}

    def __repr__(self) -> str:
        return f"Graph(N={self.n}, M={self.m})"


def parse_edge_list(text: str) -> Graph:
    """Parse edge-list text into a :class:`Graph`.

    Nodes are indexed in order of first appearance. Lines starting with ``#``
    and blank lines are skipped. Self-loops and repeated pairs (in either
    direction) are dropped and tallied in ``graph.report``.
    """
    report = ParseReport()
    index: dict[str, int] = {}
    labels: list[str] = []
    pairs: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        report.lines += 1
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            report.comments += 1
            continue
        tokens = stripped.split()
        if len(tokens) != 2:
            raise ParseError(f"expected 2 node labels, got {len(tokens)}", lineno)
        ids = []
        for tok in tokens:
            if tok not in index:
                index[tok] = len(labels)
                labels.append(tok)
            ids.append(index[tok])
        u, v = ids
        if u == v:
            report.self_loops += 1
            continue
        key = (u, v) if u < v else (v, u)
        if key in seen:
            report.duplicates += 1
            continue
        seen.add(key)
        pairs.append(key)
    if not pairs:
        raise ParseError("no edges")
    return Graph.from_edges(len(labels), pairs, labels, report)


def read_edge_list(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh.read())


def format_edge_list(g: Graph) -> str:
    """Canonical text form: one ``label_u label_v`` line per edge, u < v."""
    lab = g.labels
    return "".join(f"{lab[u]} {lab[v]}\n" for u, v in g.edges)


def connected_components(g: Graph) -> list[np.ndarray]:
    """Node index arrays of every component, largest first.

    Equal-sized components are ordered by their smallest original label.
    """
    _, comp = _cc(g.to_csr(), directed=False)
    groups: dict[int, list[int]] = {}
    for i, c in enumerate(comp):
        groups.setdefault(int(c), []).append(i)
    comps = [np.asarray(v, dtype=np.int64) for v in groups.values()]
    comps.sort(key=lambda a: (-len(a), min(g.labels[i] for i in a)))
    return comps


def induced_subgraph(g: Graph, nodes: Sequence[int]) -> Graph:
    """Subgraph on ``nodes`` (kept in ascending index order), reindexed densely."""
    nodes = np.unique(np.asarray(nodes, dtype=np.int64))
    remap = np.full(g.n, -1, dtype=np.int64)
    remap[nodes] = np.arange(len(nodes))
    e = g.edges
    keep = (remap[e[:, 0]] >= 0) & (remap[e[:, 1]] >= 0)
    sub = remap[e[keep]]
    return Graph.from_edges(len(nodes), sub, [g.labels[i] for i in nodes])


def largest_connected_component(g: Graph) -> Graph:
    """Induced subgraph of the largest component (ties: smallest min label)."""
    comps = connected_components(g)
    if len(comps) == 1:
        return g
    return induced_subgraph(g, comps[0])

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netlayout.community import (
    Dendrogram,
    ModularityState,
    Partition,
    greedy_modularity,
    label_agreement,
    modularity,
    refine_recursive,
)
from netlayout.generators import planted_partition
from netlayout.graph import Graph

from oracles import brute_force_max_modularity, modularity_from_scratch, random_graph


def two_cliques_bridge():
    pairs = [(u, v) for u in range(4) for v in range(u + 1, 4)]
    pairs += [(u + 4, v + 4) for u, v in pairs]
    pairs.append((3, 4))
    return Graph.from_edges(8, pairs)


def test_all_in_one_is_zero():
    g = two_cliques_bridge()
    assert modularity(g, Partition(np.zeros(8, dtype=np.int64))) == pytest.approx(0.0, abs=1e-15)


def test_two_triangles_half():
    g = Graph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
    assert modularity(g, Partition.from_labels([0, 0, 0, 1, 1, 1])) == pytest.approx(0.5)


def test_single_edge_singletons():
    g = Graph.from_edges(2, [(0, 1)])
    assert modularity(g, Partition.singletons(2)) == pytest.approx(-0.5)


def test_size_mismatch_raises():
    with pytest.raises(ValueError):
        modularity(two_cliques_bridge(), Partition.singletons(3))


def test_triangle_delta_q():
    g = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    state = ModularityState.singletons(g)
    assert state.delta_q(1, 2) == pytest.approx(1 / 9)


def test_unconnected_merge_is_negative():
    g = Graph.from_edges(4, [(0, 1), (2, 3)])
    state = ModularityState.singletons(g)
    assert state.delta_q(0, 2) < 0


def test_delta_q_rejects_bad_ids():
    state = ModularityState.singletons(two_cliques_bridge())
    with pytest.raises(ValueError):
        state.delta_q(1, 1)
    state.merge(0, 1)
    with pytest.raises(ValueError):
        state.delta_q(1, 2)
    with pytest.raises(ValueError):
        state.delta_q(0, 99)


def test_state_invariants_after_merges():
    g = two_cliques_bridge()
    state = ModularityState.singletons(g)
    for p, q in [(0, 1), (0, 2), (5, 6), (4, 5)]:
        state.merge(p, q)
    total = sum(state.e_in) + sum(sum(r.values()) for r in state.rows)
    assert total == pytest.approx(1.0)
    for p, row in enumerate(state.rows):
        for q, v in row.items():
            assert state.rows[q][p] == v
        if state.alive[p]:
            assert state.a[p] == pytest.approx(state.e_in[p] + sum(row.values()))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(5, 40))
def test_incremental_q_matches_scratch(seed, n):
    rng = np.random.default_rng(seed)
    pairs = random_graph(rng, n, 0.2)
    if not pairs:
        return
    g = Graph.from_edges(n, pairs)
    state = ModularityState.singletons(g)
    labels = np.arange(n)
    for _ in range(n - 1):
        live = [p for p in range(n) if state.alive[p]]
        if len(live) < 2:
            break
        p, q = sorted(rng.choice(live, size=2, replace=False).tolist())
        before = state.Q
        dq = state.delta_q(p, q)
        state.merge(p, q)
        labels[labels == q] = p
        scratch = modularity_from_scratch(n, pairs, labels)
        assert state.Q == pytest.approx(scratch, abs=1e-9)
        assert state.Q - before == pytest.approx(dq, abs=1e-12)


def test_greedy_two_cliques():
    g = two_cliques_bridge()
    part, trace = greedy_modularity(g)
    assert part.assignment.tolist() == [0, 0, 0, 0, 1, 1, 1, 1]
    best = brute_force_max_modularity(8, g.edges.tolist())
    assert modularity(g, part) == pytest.approx(best)
    assert max(trace) == pytest.approx(modularity(g, part))
    assert len(trace) == g.n


def test_greedy_trace_starts_at_singletons():
    g = two_cliques_bridge()
    _, trace = greedy_modularity(g)
    assert trace[0] == pytest.approx(modularity(g, Partition.singletons(8)))


def test_greedy_is_deterministic():
    g, _ = planted_partition(4, 20, 0.3, 0.02, seed=5)
    a, ta = greedy_modularity(g)
    b, tb = greedy_modularity(g)
    assert np.array_equal(a.assignment, b.assignment)
    assert ta == tb


def test_greedy_tie_break_is_lexicographic():
    # a 4-cycle: all four edges tie, so (0, 1) merges first
    g = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
    state = ModularityState.singletons(g)
    gains = {e: state.delta_q(*e) for e in map(tuple, g.edges.tolist())}
    assert len(set(gains.values())) == 1
    part, _ = greedy_modularity(g)
    assert part.assignment[0] == part.assignment[1]


def test_greedy_planted_recovers_blocks():
    g, truth = planted_partition(4, 32, 0.3, 0.01, seed=0)
    part, _ = greedy_modularity(g)
    assert modularity(g, part) > 0.55
    assert label_agreement(part.assignment, truth) >= 0.9


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_greedy_nonnegative(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 30))
    pairs = random_graph(rng, n, 0.3)
    if not pairs:
        return
    g = Graph.from_edges(n, pairs)
    part, trace = greedy_modularity(g)
    q = modularity(g, part)
    assert -1.0 <= q < 1.0
    assert q >= 0.0
    assert q == pytest.approx(max(trace), abs=1e-12)


def test_clique_is_not_split():
    pairs = [(u, v) for u in range(12) for v in range(u + 1, 12)]
    g = Graph.from_edges(12, pairs)
    tree = refine_recursive(g, Partition(np.zeros(12, dtype=np.int64)), size_threshold=5)
    assert tree.depth() == 1
    assert tree.children[0].is_leaf


def test_refinement_splits_merged_blocks():
    g, truth = planted_partition(2, 40, 0.4, 0.01, seed=2)
    merged = Partition(np.zeros(g.n, dtype=np.int64))
    tree = refine_recursive(g, merged, size_threshold=50)
    leaves = tree.leaf_partition(g.n)
    assert leaves.count >= 2
    assert label_agreement(leaves.assignment, truth) >= 0.9


def test_large_threshold_gives_flat_dendrogram():
    g, truth = planted_partition(3, 10, 0.5, 0.05, seed=1)
    part, _ = greedy_modularity(g)
    tree = refine_recursive(g, part, size_threshold=1000)
    assert tree.depth() == 1
    assert np.array_equal(tree.leaf_partition(g.n).assignment, part.assignment)
    assert tree.paths(g.n) == [str(c) for c in part.assignment]


def test_dendrogram_leaves_partition_nodes():
    g, _ = planted_partition(4, 25, 0.3, 0.02, seed=4)
    merged = Partition.from_labels(np.arange(g.n) // 50)
    tree = refine_recursive(g, merged, size_threshold=30)
    seen = np.concatenate([leaf.members for _, leaf in tree.leaves()])
    assert sorted(seen.tolist()) == list(range(g.n))
    for path in tree.paths(g.n):
        assert all(part.isdigit() for part in path.split("."))


def test_dendrogram_paths_are_dotted():
    leaf = lambda *m: Dendrogram(np.array(m))
    root = Dendrogram(np.arange(4), [Dendrogram(np.array([0, 1]), [leaf(0), leaf(1)]), leaf(2, 3)])
    assert root.paths(4) == ["0.0", "0.1", "1", "1"]


def test_label_agreement_is_permutation_invariant():
    assert label_agreement([2, 2, 0, 0, 1], [0, 0, 1, 1, 2]) == 1.0
    assert label_agreement([0, 0, 0, 1], [0, 0, 1, 1]) == 0.75


def test_partition_from_labels_is_dense():
    p = Partition.from_labels(["b", "a", "b", "c"])
    assert p.assignment.tolist() == [0, 1, 0, 2]
    assert p.count == 3
    assert p.sizes.tolist() == [2, 1, 1]
    assert p.sizes.sum() == p.n

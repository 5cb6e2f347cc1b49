import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netlayout.graph import (
    Graph,
    ParseError,
    connected_components,
    format_edge_list,
    induced_subgraph,
    largest_connected_component,
    parse_edge_list,
)


def test_parse_simple_path():
    g = parse_edge_list("1 2\n2 3")
    assert (g.n, g.m) == (3, 2)
    assert g.labels == ("1", "2", "3")


def test_parse_collapses_duplicates_and_reversals():
    g = parse_edge_list("a b\nb a\na b")
    assert (g.n, g.m) == (2, 1)
    assert g.report.duplicates == 2


def test_parse_drops_self_loops():
    g = parse_edge_list("x x\nx y")
    assert (g.n, g.m) == (2, 1)
    assert g.report.self_loops == 1


def test_parse_skips_comments_and_blank_lines():
    g = parse_edge_list("# header\n\n1 2\n  # indented\n2\t3\n")
    assert g.m == 2
    assert g.report.comments == 2


def test_parse_malformed_line_names_line_number():
    with pytest.raises(ParseError, match="line 2") as info:
        parse_edge_list("1 2\n1 2 3\n")
    assert info.value.lineno == 2


@pytest.mark.parametrize("text", ["", "# only a comment\n", "\n\n"])
def test_parse_empty_input(text):
    with pytest.raises(ParseError, match="no edges"):
        parse_edge_list(text)


def test_only_self_loops_is_no_edges():
    with pytest.raises(ParseError, match="no edges"):
        parse_edge_list("a a\nb b\n")


def test_adjacency_is_sorted_and_symmetric():
    g = parse_edge_list("c a\nb a\nc b\nd a\n")
    for u in range(g.n):
        nb = g.neighbors(u)
        assert list(nb) == sorted(nb)
        for v in nb:
            assert u in g.neighbors(v)
    assert g.degrees().sum() == 2 * g.m


def test_from_edges_rejects_out_of_range():
    with pytest.raises(ValueError):
        Graph.from_edges(2, [(0, 2)])


def test_lcc_picks_bigger_component():
    g = parse_edge_list("a b\nb c\nx y\n")
    lcc = largest_connected_component(g)
    assert lcc.n == 3
    assert set(lcc.labels) == {"a", "b", "c"}


def test_lcc_of_connected_graph_is_identity():
    g = parse_edge_list("1 2\n2 3\n3 1\n")
    assert largest_connected_component(g) is g


def test_lcc_tie_goes_to_smallest_label():
    g = parse_edge_list("z y\nb c\n")
    assert set(largest_connected_component(g).labels) == {"b", "c"}


def test_lcc_planted_component_sizes():
    # components of 1000, 50 and 3 nodes, each a path, shuffled in the text
    rng = np.random.default_rng(3)
    lines = []
    start = 0
    for size in (3, 1000, 50):
        lines += [f"n{start + i} n{start + i + 1}" for i in range(size - 1)]
        start += size
    rng.shuffle(lines)
    g = parse_edge_list("\n".join(lines))
    assert g.n == 1053
    comps = connected_components(g)
    assert [len(c) for c in comps] == [1000, 50, 3]
    assert largest_connected_component(g).n == 1000


def test_induced_subgraph_reindexes():
    g = parse_edge_list("0 1\n1 2\n2 3\n3 0\n")
    sub = induced_subgraph(g, [3, 1, 2])
    assert sub.labels == ("1", "2", "3")
    assert sub.edges.tolist() == [[0, 1], [1, 2]]


edge_lists = st.lists(
    st.tuples(st.integers(0, 15), st.integers(0, 15)), min_size=1, max_size=60
).filter(lambda es: any(u != v for u, v in es))


@settings(max_examples=100, deadline=None)
@given(edge_lists)
def test_roundtrip_is_idempotent(pairs):
    text = "\n".join(f"{u} {v}" for u, v in pairs)
    g1 = parse_edge_list(text)
    g2 = parse_edge_list(format_edge_list(g1))
    canon = lambda g: {frozenset((g.labels[u], g.labels[v])) for u, v in g.edges}
    assert canon(g1) == canon(g2)
    # labels seen only in self-loops become isolated nodes, which an edge list cannot carry
    assert g2.m == g1.m


@settings(max_examples=100, deadline=None)
@given(edge_lists)
def test_invariants_hold(pairs):
    g = parse_edge_list("\n".join(f"{u} {v}" for u, v in pairs))
    assert g.degrees().sum() == 2 * g.m
    assert np.all(g.edges[:, 0] < g.edges[:, 1])
    assert len({tuple(e) for e in g.edges.tolist()}) == g.m
    assert sum(len(c) for c in connected_components(g)) == g.n
    lcc = largest_connected_component(g)
    assert lcc.degrees().sum() == 2 * lcc.m
    assert len(connected_components(lcc)) == 1

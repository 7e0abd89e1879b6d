import numpy as np
import pytest

from treeopt.graph import (
    CandidateSet,
    Edge,
    GraphError,
    ParseError,
    VertexRangeError,
    WeightDomainError,
    WeightedGraph,
    count_components,
    edge_vector,
    incidence_columns,
    is_connected,
    laplacian,
    parse_graph,
    read_edge_list,
    reduced_laplacian,
    transform_minus_to_plus,
)
from treeopt.oracle import exhaustive_esp
from treeopt.treeconn import log_tree_count

from _instances import cands, complete, path


def test_parse_path():
    g = parse_graph("n 3\n0 1 1\n1 2 1")
    assert g.n == 3 and g.m == 2
    assert g.pairs() == {(0, 1), (1, 2)}


def test_parse_merges_parallel_edges():
    g, diag = read_edge_list("n 3\n0 1 1\n0 1 2")
    assert g.edges == (Edge(0, 1, 3.0),)
    assert diag.parallel_merged == 1


def test_parse_drops_loops():
    g, diag = read_edge_list("n 3\n0 0 1\n0 1 1")
    assert g.m == 1 and diag.loops_dropped == 1


def test_parse_default_weight_and_comments():
    g = parse_graph("# a comment\nn 2\n\n1 0   # reversed\n")
    assert g.edges == (Edge(0, 1, 1.0),)


@pytest.mark.parametrize(
    "text, exc, line",
    [
        ("0 1 1", ParseError, 1),
        ("n 3\n0 5 1", VertexRangeError, 2),
        ("n 3\n0 1 -2", WeightDomainError, 2),
        ("n 3\n0 1 nan", WeightDomainError, 2),
        ("n 3\n0 1 x", ParseError, 2),
        ("n 3\n0 1 1 1", ParseError, 2),
        ("", ParseError, None),
    ],
)
def test_parse_errors_carry_line(text, exc, line):
    with pytest.raises(exc) as info:
        parse_graph(text)
    assert info.value.lineno == line


def test_round_trip_text():
    g = WeightedGraph(4, (Edge(0, 1, 0.5), Edge(2, 3, 1.25), Edge(1, 3, 2.0)))
    assert parse_graph(g.to_text()) == g


def test_edge_canonical_and_validation():
    assert Edge(2, 0, 1.0) == Edge(0, 2, 1.0)
    with pytest.raises(GraphError):
        Edge(1, 1, 1.0)
    with pytest.raises(GraphError):
        Edge(0, 1, 0.0)


def test_duplicate_edges_rejected():
    with pytest.raises(GraphError):
        WeightedGraph(3, (Edge(0, 1, 1.0), Edge(1, 0, 2.0)))
    with pytest.raises(GraphError):
        cands((0, 1), (1, 0))


@pytest.mark.parametrize(
    "g, expected",
    [(path(3), True), (WeightedGraph(3, ()), False), (complete(3), True)],
)
def test_is_connected(g, expected):
    assert is_connected(g) is expected


def test_count_components():
    assert count_components(5, [(0, 1), (2, 3)]) == 3


def test_reduced_laplacian_k3():
    rl = reduced_laplacian(complete(3), anchor=2)
    np.testing.assert_array_equal(rl.matrix, [[2, -1], [-1, 2]])


def test_reduced_laplacian_p3():
    rl = reduced_laplacian(path(3), anchor=2)
    np.testing.assert_array_equal(rl.matrix, [[1, -1], [-1, 2]])


def test_reduced_laplacian_single_edge():
    g = WeightedGraph(2, (Edge(0, 1, 5.0),))
    np.testing.assert_array_equal(reduced_laplacian(g, anchor=1).matrix, [[5]])


def test_reduced_laplacian_default_anchor_is_last():
    g = complete(4)
    assert reduced_laplacian(g).anchor == 3
    np.testing.assert_array_equal(reduced_laplacian(g).matrix, laplacian(g)[:3, :3])


def test_reduced_laplacian_any_anchor_same_det():
    g = WeightedGraph(4, (Edge(0, 1, 2.0), Edge(1, 2, 0.5), Edge(2, 3, 3.0), Edge(0, 3, 1.0)))
    dets = [np.linalg.det(reduced_laplacian(g, a).matrix) for a in range(4)]
    np.testing.assert_allclose(dets, dets[0], rtol=1e-12)


@pytest.mark.parametrize(
    "n, e, anchor, expected",
    [(3, Edge(0, 1, 1.0), 2, [1, -1]), (3, Edge(0, 2, 1.0), 2, [1, 0]), (2, Edge(0, 1, 1.0), 0, [-1])],
)
def test_edge_vector(n, e, anchor, expected):
    np.testing.assert_array_equal(edge_vector(e, anchor, n), expected)


def test_incidence_columns_shape():
    A = incidence_columns(complete(4).edges, 4)
    assert A.shape == (3, 6)


def test_complement_candidates():
    cs = CandidateSet.complement(path(4))
    assert [e.pair for e in cs] == [(0, 2), (0, 3), (1, 3)]
    with pytest.raises(GraphError):
        cands((0, 1)).check_disjoint(path(3))


def test_transform_forced_deletion():
    nb, cs, d = transform_minus_to_plus(complete(3), cands((0, 1)), 1)
    assert nb.m == 2 and d == 0 and cs.origin == "deletion-transformed"


def test_transform_remove_all():
    nb, cs, d = transform_minus_to_plus(complete(3), CandidateSet(complete(3).edges), 1)
    assert nb.m == 0 and d == 2 and len(cs) == 3


def test_transform_keeps_base_weights():
    g = WeightedGraph(3, (Edge(0, 1, 4.0), Edge(1, 2, 1.0)))
    _, cs, _ = transform_minus_to_plus(g, cands((0, 1)), 0)
    assert cs[0].weight == 4.0


def test_transform_matches_direct_deletion_on_k4():
    g = complete(4)
    removable = cands((0, 1), (2, 3))
    nb, cs, d = transform_minus_to_plus(g, removable, 1)
    assert d == 1
    # direct: best single deletion among the two removable edges
    direct = max(log_tree_count(g.without_edges([e])) for e in removable)
    via, _ = exhaustive_esp(nb, cs, d)
    assert via == pytest.approx(direct, abs=1e-12)
    assert direct == pytest.approx(np.log(8))


def test_transform_rejects_foreign_edge():
    with pytest.raises(GraphError):
        transform_minus_to_plus(path(3), cands((0, 2)), 0)

import math
import warnings

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from flgc.errors import DegenerateInput, IndexOutOfRange, InputError, ParseError
from flgc.graph import (
    SparseAdjacency,
    default_k,
    knn_graph,
    load_edge_list,
    parse_edge_list,
    renormalize,
)
from oracles import dense_propagation


def random_adjacency(rng, n, density=0.3):
    upper = np.triu(rng.random((n, n)) < density, k=1)
    a = (upper | upper.T).astype(float)
    return a


# ---------------------------------------------------------------- adjacency


def test_from_edges_symmetrizes_and_collapses_duplicates():
    adj = SparseAdjacency.from_edges(3, [(0, 1), (1, 0, 2.0), (1, 2)])
    assert adj.edge_count == 2
    assert adj.edges() == [(0, 1, 2.0), (1, 2, 1.0)]
    dense = adj.matrix.toarray()
    np.testing.assert_array_equal(dense, dense.T)


def test_adjacency_validation():
    with pytest.raises(IndexOutOfRange):
        SparseAdjacency.from_edges(2, [(0, 2)])
    with pytest.raises(InputError):
        SparseAdjacency.from_edges(2, [(1, 1)])
    with pytest.raises(InputError):
        SparseAdjacency(sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]])))
    with pytest.raises(InputError):
        SparseAdjacency(sp.csr_matrix(np.array([[0.0, -1.0], [-1.0, 0.0]])))


# ---------------------------------------------------------------- renormalize


def test_renormalize_single_node():
    p = renormalize(SparseAdjacency.from_edges(1, []))
    np.testing.assert_array_equal(p.toarray(), [[1.0]])


def test_renormalize_two_nodes():
    p = renormalize(SparseAdjacency.from_edges(2, [(0, 1)]))
    np.testing.assert_allclose(p.toarray(), [[0.5, 0.5], [0.5, 0.5]], rtol=0, atol=1e-15)


def test_renormalize_path_graph():
    p = renormalize(SparseAdjacency.from_edges(3, [(0, 1), (1, 2)])).toarray()
    r6 = 1 / math.sqrt(6)
    expected = np.array([[0.5, r6, 0.0], [r6, 1 / 3, r6], [0.0, r6, 0.5]])
    np.testing.assert_allclose(p, expected, rtol=0, atol=1e-15)


def test_renormalize_isolated_node_keeps_unit_diagonal():
    p = renormalize(SparseAdjacency.from_edges(3, [(0, 1)])).toarray()
    assert p[2, 2] == 1.0
    assert p[2, :2].sum() == 0.0


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 50), st.floats(0.0, 1.0), st.integers(0, 2**32 - 1))
def test_renormalize_matches_formula_and_is_symmetric(n, density, seed):
    rng = np.random.default_rng(seed)
    a = random_adjacency(rng, n, density)
    a *= rng.uniform(0.5, 2.0, size=a.shape)
    a = np.triu(a, 1) + np.triu(a, 1).T
    p = renormalize(SparseAdjacency(sp.csr_matrix(a))).toarray()
    np.testing.assert_array_equal(p, p.T)
    np.testing.assert_allclose(p, dense_propagation(a), rtol=0, atol=1e-14)
    assert np.all(np.diag(p) > 0)
    eig = np.linalg.eigvalsh(p)
    assert eig.min() >= -1 - 1e-8 and eig.max() <= 1 + 1e-8


# ---------------------------------------------------------------------- knn


def test_knn_collinear_points():
    adj = knn_graph(np.array([[0.0], [1.0], [10.0]]), 1)
    assert [(i, j) for i, j, _ in adj.edges()] == [(0, 1), (1, 2)]
    assert all(w == 1.0 for *_, w in adj.edges())


def test_knn_complete_graph():
    x = np.random.default_rng(0).normal(size=(6, 2))
    adj = knn_graph(x, 5)
    assert adj.edge_count == 15


def test_knn_distance_ties_prefer_smaller_index():
    # node 1 sits at equal distance from 0 and 2
    adj = knn_graph(np.array([[0.0], [1.0], [2.0]]), 1)
    dense = adj.matrix.toarray()
    assert dense[1, 0] == 1.0
    # 2 picks 1; 1 picks 0; 0 picks 1
    assert [(i, j) for i, j, _ in adj.edges()] == [(0, 1), (1, 2)]


def test_default_k():
    assert default_k(150, 3) == 10
    assert default_k(178, 3) == 11
    assert default_k(4, 3) == 1


def test_knn_errors():
    with pytest.raises(DegenerateInput):
        knn_graph(np.zeros((1, 2)), 1)
    with pytest.raises(InputError):
        knn_graph(np.zeros((3, 2)), 3)
    with pytest.raises(InputError):
        knn_graph(np.zeros((3, 2)), 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), st.data())
def test_knn_degree_and_translation_invariance(n, data):
    k = data.draw(st.integers(1, n - 1))
    seed = data.draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    # integer-valued coordinates keep the translated distances exact
    x = rng.integers(-5, 6, size=(n, 3)).astype(float)
    adj = knn_graph(x, k)
    assert adj.degrees().min() >= k
    shifted = knn_graph(x + np.array([7.0, -3.0, 11.0]), k)
    assert adj.edges() == shifted.edges()


def test_knn_chunked_matches_single_block(monkeypatch):
    import flgc.graph as graph

    x = np.random.default_rng(2).normal(size=(37, 4))
    whole = knn_graph(x, 4).edges()
    monkeypatch.setattr(graph, "_KNN_CHUNK", 5)
    assert knn_graph(x, 4).edges() == whole


# ---------------------------------------------------------------- edge lists


def test_parse_path_graph():
    adj, dropped = parse_edge_list(["0 1", "1 2"], 3)
    assert dropped == 0
    assert adj.edges() == [(0, 1, 1.0), (1, 2, 1.0)]


def test_parse_self_loop_dropped():
    adj, dropped = parse_edge_list(["0 0", "0 1"], 2)
    assert dropped == 1
    assert adj.edge_count == 1


def test_parse_duplicate_directions_collapse():
    adj, _ = parse_edge_list(["0 1", "1 0"], 2)
    assert adj.edge_count == 1


def test_parse_weights_comments_and_commas():
    adj, _ = parse_edge_list(["# header", "", "0,1,2.5", "1 2 0.5", "0 1 3"], 3)
    assert adj.edges() == [(0, 1, 3.0), (1, 2, 0.5)]


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ParseError) as exc:
        parse_edge_list(["0 1", "1 x"], 3)
    assert exc.value.line == 2
    with pytest.raises(ParseError) as exc:
        parse_edge_list(["0 1 2 3"], 3)
    assert exc.value.line == 1
    with pytest.raises(ParseError):
        parse_edge_list(["0 1 -1"], 3)
    with pytest.raises(IndexOutOfRange):
        parse_edge_list(["0 3"], 3)


def test_load_edge_list_warns_on_self_loops(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("0 1\n1 1\n1 2\n")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        adj = load_edge_list(path, 3)
    assert adj.edge_count == 2
    assert any("1 self-loop" in str(w.message) for w in caught)

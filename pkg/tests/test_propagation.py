"""Normalized adjacency, feature smoothing, and row normalization."""

import numpy as np
import pytest
import scipy.sparse as sp

from graphactive import Graph, normalize_adjacency, propagate_features, row_normalize

from conftest import dense_adjacency, random_graph
from oracles import oracle_normalized_adjacency, oracle_propagate, oracle_row_normalize


def _path_graph():
    return Graph.from_edges(3, [[0, 1], [1, 2]], 2, [0, 1, 0])


class TestNormalizedAdjacency:
    def test_path_graph_entries(self):
        """Path 0-1-2 with self-loops: degrees (2, 3, 2)."""
        s = normalize_adjacency(_path_graph()).toarray()
        assert s[0, 0] == pytest.approx(0.5, abs=1e-15)
        assert s[1, 1] == pytest.approx(1.0 / 3.0, abs=1e-15)
        assert s[0, 1] == pytest.approx(1.0 / np.sqrt(6.0), abs=1e-15)
        assert s[0, 2] == 0.0

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(0)
        for n in (2, 5, 17, 40):
            graph = random_graph(rng, n)
            s = normalize_adjacency(graph).toarray()
            np.testing.assert_allclose(
                s, oracle_normalized_adjacency(dense_adjacency(graph)), atol=1e-14
            )

    def test_exactly_symmetric(self):
        rng = np.random.default_rng(1)
        graph = random_graph(rng, 25)
        s = normalize_adjacency(graph)
        assert (s != s.T).nnz == 0  # bitwise, not just approximately

    def test_spectral_radius_at_most_one(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            graph = random_graph(rng, int(rng.integers(2, 30)))
            s = normalize_adjacency(graph).toarray()
            radius = np.abs(np.linalg.eigvalsh(s)).max()
            assert radius <= 1.0 + 1e-12

    def test_weighted_graph(self):
        adj = sp.csr_matrix(np.array([[0.0, 2.0], [2.0, 0.0]]))
        graph = Graph(adjacency=adj, n_classes=2, labels=np.array([0, 1]))
        s = normalize_adjacency(graph).toarray()
        np.testing.assert_allclose(
            s, oracle_normalized_adjacency(adj.toarray()), atol=1e-15
        )


class TestPropagation:
    def test_zero_hops_is_identity(self):
        rng = np.random.default_rng(3)
        graph = random_graph(rng, 8)
        x = rng.normal(size=(8, 4))
        s = normalize_adjacency(graph)
        np.testing.assert_array_equal(propagate_features(s, x, 0), x)

    def test_composition(self):
        """hops compose: applying a then b equals a+b in one shot."""
        rng = np.random.default_rng(4)
        graph = random_graph(rng, 12)
        x = rng.normal(size=(12, 3))
        s = normalize_adjacency(graph)
        two_step = propagate_features(s, propagate_features(s, x, 1), 2)
        np.testing.assert_allclose(two_step, propagate_features(s, x, 3), atol=1e-12)

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(5)
        for hops in (1, 2, 4):
            graph = random_graph(rng, 15)
            x = rng.normal(size=(15, 6))
            got = propagate_features(normalize_adjacency(graph), x, hops)
            np.testing.assert_allclose(
                got, oracle_propagate(dense_adjacency(graph), x, hops), atol=1e-12
            )

    def test_sparse_features_accepted(self):
        rng = np.random.default_rng(6)
        graph = random_graph(rng, 10)
        x = sp.random(10, 5, density=0.4, random_state=7, format="csr")
        got = propagate_features(normalize_adjacency(graph), x, 2)
        assert isinstance(got, np.ndarray)
        np.testing.assert_allclose(
            got, oracle_propagate(dense_adjacency(graph), x.toarray(), 2), atol=1e-12
        )

    def test_constant_vector_preserved_on_regular_graph(self):
        """On a d-regular graph the all-ones vector is an eigenvector with
        eigenvalue one, so smoothing leaves it untouched."""
        # 4-cycle: every node has degree 2.
        graph = Graph.from_edges(4, [[0, 1], [1, 2], [2, 3], [0, 3]], 2, [0, 1, 0, 1])
        x = np.ones((4, 1))
        out = propagate_features(normalize_adjacency(graph), x, 5)
        np.testing.assert_allclose(out, x, atol=1e-12)

    def test_negative_hops_rejected(self):
        rng = np.random.default_rng(8)
        graph = random_graph(rng, 5)
        with pytest.raises(ValueError):
            propagate_features(normalize_adjacency(graph), np.ones((5, 1)), -1)


class TestRowNormalize:
    def test_dense(self):
        x = np.array([[2.0, -2.0], [0.0, 0.0], [1.0, 3.0]])
        got = row_normalize(x)
        np.testing.assert_allclose(got, oracle_row_normalize(x), atol=1e-15)
        np.testing.assert_array_equal(got[1], [0.0, 0.0])  # zero row unchanged
        assert np.abs(got[0]).sum() == pytest.approx(1.0, abs=1e-15)

    def test_sparse_matches_dense(self):
        rng = np.random.default_rng(9)
        dense = rng.normal(size=(12, 6))
        dense[3] = 0.0
        sparse = sp.csr_matrix(dense)
        got = row_normalize(sparse)
        np.testing.assert_allclose(
            got.toarray() if sp.issparse(got) else got,
            oracle_row_normalize(dense),
            atol=1e-14,
        )

    def test_input_not_mutated(self):
        x = np.array([[2.0, 2.0]])
        row_normalize(x)
        np.testing.assert_array_equal(x, [[2.0, 2.0]])

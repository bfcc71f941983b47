"""Dataset container, graph validation, and component extraction."""

import json

import numpy as np
import pytest
import scipy.sparse as sp

from graphactive import DatasetError, Graph, load_dataset, save_dataset
from graphactive.data import largest_connected_component, resolve_dataset_path

from conftest import random_graph


def _toy_container(tmp_path, **overrides):
    doc = {
        "n": 4,
        "d": 2,
        "k": 2,
        "edges": [[0, 1], [1, 2], [2, 3]],
        "features": [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, 0.25]],
        "labels": [0, 1, 0, 1],
        "name": "toy",
    }
    doc.update(overrides)
    path = tmp_path / "toy.json"
    path.write_text(json.dumps(doc))
    return str(path)


class TestContainer:
    def test_roundtrip_dense(self, tmp_path):
        rng = np.random.default_rng(3)
        graph = random_graph(rng, 12, n_classes=3)
        features = rng.normal(size=(12, 5))
        path = tmp_path / "g.json"
        save_dataset(graph, features, path)
        loaded, feats = load_dataset(path)
        assert (loaded.adjacency != graph.adjacency).nnz == 0
        np.testing.assert_array_equal(loaded.labels, graph.labels)
        assert loaded.n_classes == graph.n_classes
        np.testing.assert_allclose(feats, features)

    def test_roundtrip_sparse(self, tmp_path):
        rng = np.random.default_rng(4)
        graph = random_graph(rng, 10, n_classes=2)
        features = sp.random(10, 7, density=0.3, random_state=5, format="csr")
        path = tmp_path / "g.json"
        save_dataset(graph, features, path)
        loaded, feats = load_dataset(path)
        assert sp.issparse(feats)
        np.testing.assert_allclose(feats.toarray(), features.toarray())

    def test_roundtrip_is_byte_stable(self, tmp_path):
        """Saving the same dataset twice yields identical bytes."""
        rng = np.random.default_rng(5)
        graph = random_graph(rng, 9, n_classes=2)
        features = rng.normal(size=(9, 3))
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        save_dataset(graph, features, p1)
        save_dataset(graph, features, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_basic_load(self, tmp_path):
        graph, feats = load_dataset(_toy_container(tmp_path))
        assert graph.n_nodes == 4
        assert graph.n_edges == 3
        assert graph.name == "toy"
        np.testing.assert_array_equal(graph.degrees(), [1, 2, 2, 1])
        np.testing.assert_array_equal(graph.neighbors(1), [0, 2])

    @pytest.mark.parametrize(
        "overrides",
        [
            {"labels": [0, 1, 0, 2]},  # class index >= k
            {"labels": [0, 1, 0]},  # wrong length
            {"edges": [[0, 0]]},  # self-loop
            {"edges": [[0, 1], [1, 0], [1, 2], [2, 3]]},  # duplicate edge
            {"edges": [[0, 7]]},  # endpoint out of range
            {"features": [[1.0, 0.0]]},  # wrong row count
            {"n": 0},
            {"k": 0},
        ],
    )
    def test_invalid_containers_raise(self, tmp_path, overrides):
        with pytest.raises(DatasetError):
            load_dataset(_toy_container(tmp_path, **overrides))

    def test_missing_field_raises(self, tmp_path):
        doc = json.loads(open(_toy_container(tmp_path)).read())
        del doc["edges"]
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(DatasetError):
            load_dataset(path)

    def test_unparseable_file_raises(self, tmp_path):
        path = tmp_path / "junk.json"
        path.write_text("{not json")
        with pytest.raises(DatasetError):
            load_dataset(path)

    def test_missing_file_raises(self, tmp_path):
        with pytest.raises(DatasetError):
            load_dataset(tmp_path / "nope.json")


class TestGraphValidation:
    def test_asymmetric_adjacency_rejected(self):
        adj = sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))
        with pytest.raises(DatasetError):
            Graph(adjacency=adj, n_classes=2, labels=np.array([0, 1]))

    def test_self_loop_rejected(self):
        adj = sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 0.0]]))
        with pytest.raises(DatasetError):
            Graph(adjacency=adj, n_classes=2, labels=np.array([0, 1]))

    def test_label_range_rejected(self):
        adj = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
        with pytest.raises(DatasetError):
            Graph(adjacency=adj, n_classes=2, labels=np.array([0, 5]))


class TestLargestComponent:
    def test_two_components(self):
        # 0-1-2 triangle plus an isolated 3-4 edge: keep the triangle.
        graph = Graph.from_edges(
            5, [[0, 1], [1, 2], [0, 2], [3, 4]], 2, [0, 1, 0, 1, 1]
        )
        features = np.arange(10.0).reshape(5, 2)
        sub, feats, kept = largest_connected_component(graph, features)
        np.testing.assert_array_equal(kept, [0, 1, 2])
        assert sub.n_nodes == 3 and sub.n_edges == 3
        np.testing.assert_allclose(feats, features[:3])
        np.testing.assert_array_equal(sub.labels, [0, 1, 0])

    def test_already_connected_is_identity(self):
        rng = np.random.default_rng(8)
        graph = random_graph(rng, 11)
        features = rng.normal(size=(11, 3))
        sub, feats, kept = largest_connected_component(graph, features)
        np.testing.assert_array_equal(kept, np.arange(11))
        assert (sub.adjacency != graph.adjacency).nnz == 0

    def test_sparse_features_sliced(self):
        graph = Graph.from_edges(4, [[0, 1], [2, 3]], 2, [0, 1, 0, 1])
        features = sp.csr_matrix(np.eye(4))
        sub, feats, kept = largest_connected_component(graph, features)
        assert sub.n_nodes == 2
        assert feats.shape == (2, 4)


class TestResolver:
    def test_literal_path_wins(self, tmp_path):
        path = _toy_container(tmp_path)
        assert resolve_dataset_path(path) == path

    def test_search_dir(self, tmp_path):
        path = _toy_container(tmp_path)
        assert resolve_dataset_path("toy", search_dirs=[str(tmp_path)]) == path
        assert (
            resolve_dataset_path("toy.json", search_dirs=[str(tmp_path)]) == path
        )

    def test_env_var(self, tmp_path, monkeypatch):
        path = _toy_container(tmp_path)
        monkeypatch.setenv("GRAPHACTIVE_DATA", str(tmp_path))
        assert resolve_dataset_path("toy") == path

    def test_unresolvable_raises(self, tmp_path):
        with pytest.raises(DatasetError):
            resolve_dataset_path("missing-name", search_dirs=[str(tmp_path)])

"""Dataset containers: loading, validation, and component extraction.

The on-disk container is a single JSON document::

    {"name": str, "n": int, "d": int, "k": int,
     "edges": [[u, v], ...],
     "features": [[...], ...] | {"indptr": [...], "indices": [...], "data": [...]},
     "labels": [int, ...]}

Edges are undirected and stored once per unordered pair.  Sparse features
are CSR arrays with shape ``(n, d)`` implied by the header fields.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

__all__ = [
    "DatasetError",
    "Graph",
    "load_dataset",
    "save_dataset",
    "largest_connected_component",
    "resolve_dataset_path",
]


class DatasetError(ValueError):
    """A dataset container failed validation."""


@dataclass(frozen=True)
class Graph:
    """Undirected attributed-graph topology plus ground-truth labels.

    The adjacency is a symmetric CSR matrix with an empty diagonal.
    Ground-truth labels ride along for oracle simulation only; the
    selection engine never reads them directly.
    """

    adjacency: sp.csr_matrix
    n_classes: int
    labels: np.ndarray
    name: str = ""

    def __post_init__(self) -> None:
        adj = self.adjacency
        if adj.shape[0] != adj.shape[1]:
            raise DatasetError("adjacency must be square")
        if adj.diagonal().any():
            raise DatasetError("self-loops are not allowed in the raw graph")
        if (adj != adj.T).nnz != 0:
            raise DatasetError("adjacency must be symmetric")
        if self.n_classes < 1:
            raise DatasetError("class count must be positive")
        labels = self.labels
        if labels.shape != (adj.shape[0],):
            raise DatasetError("labels must have one entry per node")
        if labels.size and (labels.min() < 0 or labels.max() >= self.n_classes):
            raise DatasetError("label indices must lie in [0, k)")

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        """Number of undirected edges."""
        return self.adjacency.nnz // 2

    def degrees(self) -> np.ndarray:
        return np.asarray(self.adjacency.sum(axis=1)).ravel()

    def neighbors(self, node: int) -> np.ndarray:
        adj = self.adjacency
        return adj.indices[adj.indptr[node] : adj.indptr[node + 1]]

    @classmethod
    def from_edges(
        cls,
        n_nodes: int,
        edges,
        n_classes: int,
        labels,
        name: str = "",
        weights=None,
    ) -> "Graph":
        """Build a graph from an undirected edge list.

        Each edge is stored in both directions; ``weights`` defaults to 1.
        """
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            if edges.min() < 0 or edges.max() >= n_nodes:
                raise DatasetError("edge endpoint out of range")
            if (edges[:, 0] == edges[:, 1]).any():
                raise DatasetError("self-loops are not allowed")
            lo = np.minimum(edges[:, 0], edges[:, 1])
            hi = np.maximum(edges[:, 0], edges[:, 1])
            if len(np.unique(lo * n_nodes + hi)) != len(edges):
                raise DatasetError("duplicate edges")
        if weights is None:
            weights = np.ones(len(edges), dtype=np.float64)
        else:
            weights = np.asarray(weights, dtype=np.float64)
            if weights.shape != (len(edges),):
                raise DatasetError("one weight per edge required")
        row = np.concatenate([edges[:, 0], edges[:, 1]])
        col = np.concatenate([edges[:, 1], edges[:, 0]])
        dat = np.concatenate([weights, weights])
        adj = sp.csr_matrix((dat, (row, col)), shape=(n_nodes, n_nodes))
        adj.sort_indices()
        return cls(
            adjacency=adj,
            n_classes=int(n_classes),
            labels=np.asarray(labels, dtype=np.int64),
            name=name,
        )


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise DatasetError(message)


def load_dataset(path):
    """Load a dataset container.

    Returns ``(graph, features)`` where ``features`` is a dense ndarray or
    a CSR matrix, matching the storage used in the container.  Labels and
    the class count ride on the graph.
    """
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetError(f"cannot parse dataset container {path!r}: {exc}") from exc
    _require(isinstance(doc, dict), "container must be a JSON object")
    for key in ("n", "d", "k", "edges", "features", "labels"):
        _require(key in doc, f"container is missing field {key!r}")
    n, d, k = doc["n"], doc["d"], doc["k"]
    _require(isinstance(n, int) and n >= 1, "n must be a positive integer")
    _require(isinstance(d, int) and d >= 1, "d must be a positive integer")
    _require(isinstance(k, int) and k >= 1, "k must be a positive integer")
    labels = np.asarray(doc["labels"])
    _require(
        labels.shape == (n,) and np.issubdtype(labels.dtype, np.integer),
        "labels must be n integers",
    )
    _require(
        labels.size > 0 and labels.min() >= 0 and labels.max() < k,
        "class index out of range (must be < k)",
    )
    edges = doc["edges"]
    _require(isinstance(edges, list), "edges must be a list of pairs")
    for e in edges:
        _require(
            isinstance(e, list) and len(e) == 2 and all(isinstance(v, int) for v in e),
            "each edge must be a pair of integer node indices",
        )
    features = _parse_features(doc["features"], n, d)
    name = doc.get("name", "")
    _require(isinstance(name, str), "name must be a string")
    graph = Graph.from_edges(n, edges, k, labels, name=name)
    return graph, features


def _parse_features(raw, n: int, d: int):
    if isinstance(raw, dict):
        for key in ("indptr", "indices", "data"):
            _require(key in raw, f"sparse features missing {key!r}")
        indptr = np.asarray(raw["indptr"], dtype=np.int64)
        indices = np.asarray(raw["indices"], dtype=np.int64)
        data = np.asarray(raw["data"], dtype=np.float64)
        _require(indptr.shape == (n + 1,), "indptr must have n+1 entries")
        _require(indptr[0] == 0 and indptr[-1] == len(indices), "bad indptr bounds")
        _require((np.diff(indptr) >= 0).all(), "indptr must be non-decreasing")
        _require(len(indices) == len(data), "indices and data length mismatch")
        if len(indices):
            _require(
                indices.min() >= 0 and indices.max() < d,
                "feature column index out of range",
            )
        _require(np.isfinite(data).all(), "features must be finite")
        mat = sp.csr_matrix((data, indices, indptr), shape=(n, d))
        mat.sort_indices()
        return mat
    _require(isinstance(raw, list) and len(raw) == n, "dense features must have n rows")
    arr = np.asarray(raw, dtype=np.float64)
    _require(arr.shape == (n, d), "dense feature rows must have d columns")
    _require(np.isfinite(arr).all(), "features must be finite")
    return arr


def save_dataset(graph: Graph, features, path) -> None:
    """Write a dataset container for ``graph`` and ``features``."""
    coo = sp.triu(graph.adjacency, k=1).tocoo()
    order = np.lexsort((coo.col, coo.row))
    edges = [[int(coo.row[i]), int(coo.col[i])] for i in order]
    if sp.issparse(features):
        csr = features.tocsr()
        csr.sort_indices()
        feat = {
            "indptr": [int(v) for v in csr.indptr],
            "indices": [int(v) for v in csr.indices],
            "data": [float(v) for v in csr.data],
        }
    else:
        feat = [[float(v) for v in row] for row in np.asarray(features)]
    doc = {
        "name": graph.name,
        "n": graph.n_nodes,
        "d": features.shape[1],
        "k": graph.n_classes,
        "edges": edges,
        "features": feat,
        "labels": [int(v) for v in graph.labels],
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, separators=(",", ":"))


def largest_connected_component(graph: Graph, features):
    """Extract the induced subgraph on the largest connected component.

    Returns ``(graph, features, original_indices)`` with node indices
    remapped to a contiguous range; ``original_indices[i]`` is the index
    the new node ``i`` had in the input graph.  Ties between equal-sized
    components go to the one containing the smallest original index; a
    graph with no edges yields the single node 0.
    """
    n_comp, membership = connected_components(graph.adjacency, directed=False)
    sizes = np.bincount(membership, minlength=n_comp)
    best = np.flatnonzero(sizes == sizes.max())
    if len(best) > 1:
        # smallest minimum original index wins
        first_index = np.full(n_comp, graph.n_nodes, dtype=np.int64)
        np.minimum.at(first_index, membership, np.arange(graph.n_nodes))
        best = best[np.argmin(first_index[best])]
    else:
        best = best[0]
    keep = np.flatnonzero(membership == best)
    sub = graph.adjacency[keep][:, keep].tocsr()
    sub.sort_indices()
    out = Graph(
        adjacency=sub,
        n_classes=graph.n_classes,
        labels=graph.labels[keep],
        name=graph.name,
    )
    return out, features[keep], keep


def resolve_dataset_path(spec: str, search_dirs=None) -> str:
    """Resolve a dataset name or path to a container file.

    A string that points at an existing file is used as-is; otherwise
    ``<name>.json`` is looked up in ``search_dirs``, the
    ``GRAPHACTIVE_DATA`` environment variable, and ``./data``.
    """
    if os.path.isfile(spec):
        return spec
    dirs = list(search_dirs or [])
    env = os.environ.get("GRAPHACTIVE_DATA")
    if env:
        dirs.append(env)
    dirs.append("data")
    for base in dirs:
        candidate = os.path.join(base, spec if spec.endswith(".json") else spec + ".json")
        if os.path.isfile(candidate):
            return candidate
    raise DatasetError(f"dataset {spec!r} not found (searched {dirs})")

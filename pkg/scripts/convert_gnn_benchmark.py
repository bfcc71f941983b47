"""Convert a gnn-benchmark-style .npz citation graph into the JSON container.

The archives store a directed adjacency and a sparse attribute matrix
as CSR blocks.  The conversion symmetrizes the adjacency, drops
self-loops, restricts everything to the largest connected component,
and writes the canonical JSON dataset container.

Usage::

    python scripts/convert_gnn_benchmark.py data/cora.npz data/cora.json
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from graphactive import Graph, largest_connected_component, save_dataset  # noqa: E402


def load_npz(path: Path):
    with np.load(path, allow_pickle=True) as archive:
        adjacency = sp.csr_matrix(
            (archive["adj_data"], archive["adj_indices"], archive["adj_indptr"]),
            shape=tuple(archive["adj_shape"]),
        )
        features = sp.csr_matrix(
            (archive["attr_data"], archive["attr_indices"], archive["attr_indptr"]),
            shape=tuple(archive["attr_shape"]),
        )
        labels = np.asarray(archive["labels"], dtype=np.int64)
    return adjacency, features, labels


def main(argv) -> int:
    if len(argv) != 3:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    source, target = Path(argv[1]), Path(argv[2])
    adjacency, features, labels = load_npz(source)

    adjacency = adjacency.maximum(adjacency.T)  # symmetrize (binary weights)
    adjacency.setdiag(0)
    adjacency.eliminate_zeros()
    adjacency = (adjacency > 0).astype(np.float64).tocsr()
    features = features.astype(np.float64).tocsr()

    graph = Graph(
        adjacency=adjacency,
        n_classes=int(labels.max()) + 1,
        labels=labels,
        name=target.stem,
    )
    graph, features, original = largest_connected_component(graph, features)
    save_dataset(graph, features, target)
    print(
        f"{target}: {graph.n_nodes} nodes, {graph.n_edges} edges, "
        f"{features.shape[1]} features, {graph.n_classes} classes "
        f"(kept {len(original)}/{len(labels)} nodes)"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main(sys.argv))

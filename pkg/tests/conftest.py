"""Shared instance generators for the test suite."""

from __future__ import annotations

import time

import numpy as np
import scipy.sparse as sp

from graphactive import Graph, LabelState

# One line per acceptance check, echoed in the terminal summary so the
# verdicts survive pytest's output capture.
ACCEPTANCE_VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.write_sep("-", "acceptance")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)


def random_graph(rng, n, extra_edges=None, n_classes=3, labels=None):
    """A random connected undirected graph: a random spanning tree plus
    `extra_edges` additional random edges (default ~n)."""
    if extra_edges is None:
        extra_edges = n
    edges = set()
    for i in range(1, n):
        edges.add((int(rng.integers(0, i)), i))
    for _ in range(extra_edges):
        a, b = sorted(int(v) for v in rng.integers(0, n, size=2))
        if a != b:
            edges.add((a, b))
    rows = [e[0] for e in edges] + [e[1] for e in edges]
    cols = [e[1] for e in edges] + [e[0] for e in edges]
    adj = sp.csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(n, n), dtype=np.float64
    )
    if labels is None:
        labels = rng.integers(0, n_classes, size=n)
    return Graph(adjacency=adj, n_classes=n_classes, labels=np.asarray(labels))


def random_state(rng, n, n_classes, n_labelled, excluded=()):
    """A LabelState whose labelled set covers every class at least once."""
    assert n_labelled >= n_classes
    candidates = [i for i in range(n) if i not in set(excluded)]
    picks = rng.permutation(candidates)[:n_labelled]
    labels = np.concatenate(
        [np.arange(n_classes), rng.integers(0, n_classes, size=n_labelled - n_classes)]
    )
    return LabelState(
        n_nodes=n,
        n_classes=n_classes,
        indices=tuple(int(v) for v in picks),
        labels=tuple(int(v) for v in labels),
        excluded=frozenset(int(v) for v in excluded),
    )


def dense_adjacency(graph):
    return graph.adjacency.toarray()


def planted_clusters(n=30, n_classes=3, seed=84, name="tiny"):
    """Equal-size planted clusters: intra-cluster paths plus random
    chords, one bridge between consecutive clusters, and features that
    echo the cluster with positive noise."""
    rng = np.random.default_rng(seed)
    per = n // n_classes
    edges = set()
    for c in range(n_classes):
        lo = c * per
        edges.update((i, i + 1) for i in range(lo, lo + per - 1))
        for _ in range(2 * per):
            a, b = sorted(int(v) for v in rng.integers(lo, lo + per, size=2))
            if a != b:
                edges.add((a, b))
    edges.update((c * per - 1, c * per) for c in range(1, n_classes))
    labels = np.repeat(np.arange(n_classes), per)
    graph = Graph.from_edges(n, sorted(edges), n_classes, labels=labels, name=name)
    features = 1.2 * np.eye(n_classes)[labels] + np.abs(
        rng.normal(scale=0.25, size=(n, n_classes))
    )
    return graph, features


def wait_until(predicate, timeout=30.0):
    deadline = time.perf_counter() + timeout
    while time.perf_counter() < deadline:
        if predicate():
            return True
        time.sleep(0.002)
    return False

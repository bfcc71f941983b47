"""Normalized adjacency construction and hop-wise feature propagation."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .data import Graph

__all__ = ["normalize_adjacency", "propagate_features", "row_normalize"]


def normalize_adjacency(graph: Graph) -> sp.csr_matrix:
    """Return ``S = D̃^{-1/2} (A + I) D̃^{-1/2}`` with ``D̃ = D + I``.

    Self-loops are added here and only here; isolated nodes therefore end
    up with ``S[i, i] = 1``.  Each entry is computed as
    ``a_ij * (s_min * s_max)`` with the two scale factors multiplied in a
    canonical order, so the output is exactly symmetric.
    """
    n = graph.n_nodes
    a_tilde = (
        graph.adjacency.astype(np.float64)
        + sp.identity(n, format="csr", dtype=np.float64)
    ).tocoo()
    degree = np.zeros(n, dtype=np.float64)
    np.add.at(degree, a_tilde.row, a_tilde.data)
    inv_sqrt = 1.0 / np.sqrt(degree)  # degree >= 1 thanks to the self-loop
    lo = np.minimum(a_tilde.row, a_tilde.col)
    hi = np.maximum(a_tilde.row, a_tilde.col)
    data = a_tilde.data * (inv_sqrt[lo] * inv_sqrt[hi])
    out = sp.csr_matrix((data, (a_tilde.row, a_tilde.col)), shape=(n, n))
    out.sort_indices()
    return out


def row_normalize(features):
    """Scale every feature row to unit L1 norm; zero rows are left alone."""
    if sp.issparse(features):
        sums = np.asarray(np.abs(features).sum(axis=1)).ravel()
        scale = np.where(sums > 0, 1.0 / np.where(sums > 0, sums, 1.0), 1.0)
        return (sp.diags(scale) @ features.tocsr()).tocsr()
    arr = np.asarray(features, dtype=np.float64)
    sums = np.abs(arr).sum(axis=1)
    scale = np.where(sums > 0, 1.0 / np.where(sums > 0, sums, 1.0), 1.0)
    return arr * scale[:, None]


def propagate_features(s: sp.spmatrix, features, hops: int) -> np.ndarray:
    """Return ``X̃ = S^hops @ X`` by ``hops`` successive sparse multiplies.

    ``S^hops`` is never materialized.  ``hops = 0`` returns ``X`` itself
    (densified).  The result is always a dense float64 array.
    """
    if hops < 0:
        raise ValueError("hop count must be non-negative")
    if s.shape[0] != s.shape[1]:
        raise ValueError("S must be square")
    if s.shape[1] != features.shape[0]:
        raise ValueError(
            f"dimension mismatch: S is {s.shape} but X has {features.shape[0]} rows"
        )
    out = features
    for _ in range(hops):
        out = s @ out
    if sp.issparse(out):
        out = out.toarray()
    return np.ascontiguousarray(np.asarray(out, dtype=np.float64))

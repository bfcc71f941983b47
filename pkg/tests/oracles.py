"""Independent straight-line oracles for the test suite.

Everything here is deliberately naive: dense algebra, cold refits, plain
textbook Newton loops, literal translations of the definitions with no
batching, no warm starts, no Gram tricks, and no shared code with the
package internals.  The module constants were computed once with the
stated method and frozen.
"""

from __future__ import annotations

import numpy as np

# Frozen from brentq on dJ/dw = 0 for J(w) = 2*log(1 + e^-w) + w^2
# (the 1-D two-point binary problem with lam = 1), xtol = 1e-15.  The
# minimizer satisfies w = sigma(-w), so sigma(w*) = 1 - w* exactly.
ONE_D_W_STAR = 0.401058137542
ONE_D_P_PLUS = 0.598941862458  # sigma(w*) = 1 - w*
ONE_D_EVIDENCE = -1.025181486485  # 2 * log(sigma(w*))
ONE_D_OBJECTIVE = 1.186029116173  # J(w*)

# Frozen from brentq on u = 2*sigma(-u): the softmax counterpart of the
# same two-point problem, where u = w_1 - w_0 and the penalty splits as
# u^2/2 across the two symmetric columns.
ONE_D_U_STAR = 0.674831614342
ONE_D_P_SOFTMAX = 0.662584192829  # sigma(u*)


def sigmoid(z):
    z = np.clip(np.asarray(z, dtype=np.float64), -500.0, 500.0)
    return 1.0 / (1.0 + np.exp(-z))


def one_hot(labels, n_classes):
    out = np.zeros((len(labels), n_classes))
    out[np.arange(len(labels)), np.asarray(labels, dtype=np.int64)] = 1.0
    return out


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------


def oracle_normalized_adjacency(adj_dense):
    """Dense D^-1/2 (A + I) D^-1/2 with D the self-loop-added degrees."""
    a = np.asarray(adj_dense, dtype=np.float64) + np.eye(len(adj_dense))
    inv_sqrt = 1.0 / np.sqrt(a.sum(axis=1))
    return inv_sqrt[:, None] * a * inv_sqrt[None, :]


def oracle_row_normalize(x):
    x = np.asarray(x, dtype=np.float64).copy()
    norms = np.abs(x).sum(axis=1)
    keep = norms > 0
    x[keep] /= norms[keep, None]
    return x


def oracle_propagate(adj_dense, x, hops):
    s = oracle_normalized_adjacency(adj_dense)
    out = np.asarray(x, dtype=np.float64)
    for _ in range(hops):
        out = s @ out
    return out


# ---------------------------------------------------------------------------
# logistic regression (plain dense Newton, cold starts, machine tolerance)
# ---------------------------------------------------------------------------


def oracle_objective(w, x, y, lam, mode):
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    penalty = lam * (w**2).sum()
    if mode == "softmax":
        z = x @ w
        z -= z.max(axis=1, keepdims=True)
        logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        return -logp[np.arange(len(y)), y].sum() + penalty
    # One-vs-all training: K independent binary problems, each with its
    # own lam * ||w_k||^2 penalty (so the total matches the Frobenius
    # penalty of the stacked matrix).
    loss = 0.0
    for k in range(w.shape[1]):
        t = (y == k).astype(np.float64)
        z = x @ w[:, k]
        # -[t log sig(z) + (1-t) log(1 - sig(z))] written stably
        loss += (np.logaddexp(0.0, -z) * t + np.logaddexp(0.0, z) * (1.0 - t)).sum()
    return loss + penalty


def _newton_softmax_dense(x, y, n_classes, lam, tol, max_iter):
    n, d = x.shape
    k = n_classes
    onehot = one_hot(y, k)
    w = np.zeros((d, k))
    for _ in range(max_iter):
        z = x @ w
        z -= z.max(axis=1, keepdims=True)
        p = np.exp(z)
        p /= p.sum(axis=1, keepdims=True)
        grad = x.T @ (p - onehot) + 2.0 * lam * w
        gnorm = np.linalg.norm(grad)
        if gnorm <= tol:
            break
        # Dense (d*k, d*k) Hessian assembled blockwise.
        hess = np.zeros((d * k, d * k))
        for a in range(k):
            for b in range(k):
                coeff = p[:, a] * ((a == b) - p[:, b])
                hess[a * d : (a + 1) * d, b * d : (b + 1) * d] = x.T @ (coeff[:, None] * x)
        hess += 2.0 * lam * np.eye(d * k)
        step = np.linalg.solve(hess, grad.T.ravel()).reshape(k, d).T
        obj = oracle_objective(w, x, y, lam, "softmax")
        scale = 1.0
        while scale > 1e-8:
            trial = w - scale * step
            if oracle_objective(trial, x, y, lam, "softmax") <= obj:
                break
            scale /= 2.0
        w = w - scale * step
    return w


def _newton_binary_dense(x, t, lam, tol, max_iter):
    n, d = x.shape
    w = np.zeros(d)
    for _ in range(max_iter):
        p = sigmoid(x @ w)
        grad = x.T @ (p - t) + 2.0 * lam * w
        if np.linalg.norm(grad) <= tol:
            break
        hess = x.T @ ((p * (1.0 - p))[:, None] * x) + 2.0 * lam * np.eye(d)
        step = np.linalg.solve(hess, grad)
        base = (np.logaddexp(0.0, -(x @ w)) * t + np.logaddexp(0.0, x @ w) * (1.0 - t)).sum() + lam * w @ w
        scale = 1.0
        while scale > 1e-8:
            trial = w - scale * step
            obj = (np.logaddexp(0.0, -(x @ trial)) * t + np.logaddexp(0.0, x @ trial) * (1.0 - t)).sum() + lam * trial @ trial
            if obj <= base:
                break
            scale /= 2.0
        w = w - scale * step
    return w


def oracle_fit(x, y, n_classes, lam, mode, tol=1e-12, max_iter=200):
    """Cold dense Newton solve from zeros, far past the engine tolerance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if mode == "softmax":
        return _newton_softmax_dense(x, y, n_classes, lam, tol, max_iter)
    cols = [
        _newton_binary_dense(x, (y == k).astype(np.float64), lam, tol, max_iter)
        for k in range(n_classes)
    ]
    return np.stack(cols, axis=1)


def oracle_predict(w, x, mode):
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    z = x @ np.asarray(w, dtype=np.float64)
    if mode == "softmax":
        z -= z.max(axis=1, keepdims=True)
        p = np.exp(z)
        return p / p.sum(axis=1, keepdims=True)
    sig = sigmoid(z)
    return sig / sig.sum(axis=1, keepdims=True)


def oracle_log_evidence(w, x, y, mode):
    p = oracle_predict(w, x, mode)
    return float(np.log(p[np.arange(len(y)), np.asarray(y, dtype=np.int64)]).sum())


# ---------------------------------------------------------------------------
# expected risk (literal definition: cold refit per class hypothesis)
# ---------------------------------------------------------------------------


def oracle_expected_risk(q, labelled, labels, x, n_classes, lam, mode, eval_subset):
    """R^{+q} = (1/|Uq|) sum_k sum_{i in Uq} (1 - max_k' p(y_i=k'|Y,y_q=k)) p(y_q=k|Y)

    with Uq the evaluation subset minus q, every fit cold from zeros.
    """
    x = np.asarray(x, dtype=np.float64)
    labelled = list(int(v) for v in labelled)
    labels = list(int(v) for v in labels)
    eval_u = np.asarray(sorted(set(int(v) for v in eval_subset) - {int(q)}), dtype=np.int64)
    w_base = oracle_fit(x[labelled], labels, n_classes, lam, mode)
    posterior = oracle_predict(w_base, x[int(q)][None, :], mode)[0]
    total = 0.0
    for k in range(n_classes):
        w_k = oracle_fit(x[labelled + [int(q)]], labels + [k], n_classes, lam, mode)
        p = oracle_predict(w_k, x[eval_u], mode)
        phi = 1.0 - p.max(axis=1)
        total += posterior[k] * phi.sum()
    return float(total / len(eval_u))


# ---------------------------------------------------------------------------
# label propagation (dense solves over all of V \ L)
# ---------------------------------------------------------------------------


def _lp_system(adj_dense, labelled, labels, n_classes, eps):
    adj = np.asarray(adj_dense, dtype=np.float64)
    n = len(adj)
    labelled = [int(v) for v in labelled]
    unknown = sorted(set(range(n)) - set(labelled))
    deg = adj.sum(axis=1)
    m = np.diag(deg[unknown] + eps) - adj[np.ix_(unknown, unknown)]
    b = adj[np.ix_(unknown, labelled)] @ one_hot(labels, n_classes)
    return unknown, m, b


def oracle_harmonic(adj_dense, labelled, labels, n_classes, eps, rows=None):
    """Clipped + renormalized solve of (L_uu + eps I) F = W_ul Y; zero rows
    fall back to uniform.  Returns rows for `rows` (default: all unknowns,
    sorted), as a dict node -> distribution."""
    unknown, m, b = _lp_system(adj_dense, labelled, labels, n_classes, eps)
    f = np.linalg.solve(m, b)
    f = np.clip(f, 0.0, None)
    sums = f.sum(axis=1)
    out = np.full_like(f, 1.0 / n_classes)
    keep = sums > 0
    out[keep] = f[keep] / sums[keep, None]
    table = {node: out[j] for j, node in enumerate(unknown)}
    if rows is None:
        rows = unknown
    return {int(r): table[int(r)] for r in rows}


def oracle_grounded(adj_dense, labelled, labels, n_classes, eps, rows):
    """Prior-grounded conditionals: (L_uu + eps I) F = W_ul Y + (eps/K) 1.
    Rows sum to one exactly and stay strictly positive."""
    unknown, m, b = _lp_system(adj_dense, labelled, labels, n_classes, eps)
    f = np.linalg.solve(m, b + eps / n_classes)
    table = {node: f[j] for j, node in enumerate(unknown)}
    return {int(r): table[int(r)] for r in rows}


def oracle_lp_evidence(adj_dense, labelled, labels, n_classes, eps):
    """Chain rule over the labels in insertion order; the first factor is
    the uniform prior, later factors are grounded conditionals given the
    prefix."""
    labelled = [int(v) for v in labelled]
    labels = [int(v) for v in labels]
    total = np.log(1.0 / n_classes)
    for j in range(1, len(labelled)):
        cond = oracle_grounded(
            adj_dense, labelled[:j], labels[:j], n_classes, eps, rows=[labelled[j]]
        )
        total += np.log(cond[labelled[j]][labels[j]])
    return float(total)


def oracle_lp_risk(q, adj_dense, labelled, labels, n_classes, eps, eval_subset):
    """Expected risk under the propagation model: posterior from the
    current clipped-renormalized solution, error terms from full re-solves
    with the hypothesized label added."""
    q = int(q)
    labelled = [int(v) for v in labelled]
    labels = [int(v) for v in labels]
    eval_u = sorted(set(int(v) for v in eval_subset) - {q})
    posterior = oracle_harmonic(adj_dense, labelled, labels, n_classes, eps, rows=[q])[q]
    total = 0.0
    for k in range(n_classes):
        f = oracle_harmonic(
            adj_dense, labelled + [q], labels + [k], n_classes, eps, rows=eval_u
        )
        phi = sum(1.0 - f[i].max() for i in eval_u)
        total += posterior[k] * phi
    return float(total / len(eval_u))


# ---------------------------------------------------------------------------
# bootstrap
# ---------------------------------------------------------------------------


def oracle_bootstrap_ci(values, resamples=10000, levels=(0.05, 0.95), seed=0):
    """Percentile bootstrap of the mean with an independent resampling
    loop (its own generator stream; comparisons are tolerance-based)."""
    values = np.asarray(values, dtype=np.float64)
    rng = np.random.default_rng([seed, 2027])
    means = np.empty(resamples)
    for r in range(resamples):
        means[r] = values[rng.integers(0, len(values), size=len(values))].mean()
    lo, hi = np.quantile(means, levels)
    return float(lo), float(hi)

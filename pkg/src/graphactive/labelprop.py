"""Gaussian-random-field label propagation and model-averaged selection.

The second member of the model ensemble is a harmonic-function
(Gaussian random field) predictor on the graph: unlabelled nodes take
the average of their neighbours' class scores, with labelled nodes
clamped to their one-hot labels.  A small diagonal shift ``eps`` keeps
the grounded Laplacian invertible even for components that contain no
labels; such components fall back to the uniform distribution.

Model averaging weighs the logistic-regression model and the
propagation model by their (approximate) evidences.  The propagation
evidence factorizes over the labels in insertion order via the chain
rule: each conditional is the propagation probability of the observed
class given only the earlier labels, with the first term the uniform
prior 1/K.  Chain-rule conditionals must be strictly positive, so they
are computed from the prior-grounded system

    (L_uu + eps I) f = W_ul Y + (eps / K) 1

whose rows sum to one exactly and are strictly positive; it agrees with
the plain harmonic solution as eps -> 0.  The combined selector then
minimizes the model-averaged expected risk.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .data import Graph
from .logistic import LabelState, SolverConfig, _one_hot, fit, log_evidence
from .risk import RiskReport, _candidate_risks, _checked_pool, _draw_eval_subset

__all__ = [
    "PropagationModel",
    "ModelPosterior",
    "evidence_weights",
    "harmonic_predict",
    "lp_evidence",
    "lp_expected_risk",
    "model_posterior",
    "combined_select",
]


class PropagationModel:
    """Grounded-Laplacian system for one label set, with its factorization.

    The unknowns are all non-labelled nodes (held-out nodes still
    conduct even though they can never be queried).  The factorization
    is tied to the label set; build a new model after every label
    change.
    """

    def __init__(self, state: LabelState, graph: Graph, eps: float):
        if len(state.indices) == 0:
            raise ValueError("propagation requires at least one labelled node")
        if eps < 0:
            raise ValueError("eps must be non-negative")
        if state.n_nodes != graph.n_nodes or state.n_classes != graph.n_classes:
            raise ValueError("label state does not match the graph")
        w = graph.adjacency.tocsr()
        labelled = state.labelled_array
        mask = np.ones(state.n_nodes, dtype=bool)
        mask[labelled] = False
        self.unknowns = np.flatnonzero(mask)
        self.eps = float(eps)
        self.n_classes = state.n_classes

        w_u = w[self.unknowns]
        self.w_ul = w_u[:, labelled].tocsr()
        self.w_uu = w_u[:, self.unknowns].tocsr()
        degrees = np.asarray(w_u.sum(axis=1)).ravel()
        m = sp.diags(degrees + self.eps) - self.w_uu
        self._lu = spla.splu(m.tocsc())

        self.y_onehot = _one_hot(state.label_array, state.n_classes)
        self.base = self.solve(self.w_ul @ self.y_onehot)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return self._lu.solve(np.asarray(rhs, dtype=np.float64))

    def positions(self, nodes) -> np.ndarray:
        """Rows of the unknown block corresponding to ``nodes``."""
        nodes = np.asarray(nodes, dtype=np.int64)
        pos = np.searchsorted(self.unknowns, nodes)
        if pos.size and (
            pos.max(initial=-1) >= len(self.unknowns)
            or not np.array_equal(self.unknowns[pos], nodes)
        ):
            raise ValueError("node is labelled and has no propagation row")
        return pos

    def probabilities(self, nodes) -> np.ndarray:
        """Clipped, renormalized harmonic rows; label-free rows → uniform."""
        return _normalize_rows(self.base[self.positions(nodes)], self.n_classes)

    def grounded(self, nodes) -> np.ndarray:
        """Strictly positive conditionals from the prior-grounded system."""
        rhs = self.w_ul @ self.y_onehot + self.eps / self.n_classes
        return self.solve(rhs)[self.positions(nodes)]


@dataclass(frozen=True)
class ModelPosterior:
    """Normalized model weights (equal priors) and their log-evidences."""

    lam_lg: float
    lam_lp: float
    log_evidence_lg: float
    log_evidence_lp: float

    def to_dict(self) -> dict:
        return {
            "lam_lg": float(self.lam_lg),
            "lam_lp": float(self.lam_lp),
            "log_evidence_lg": float(self.log_evidence_lg),
            "log_evidence_lp": float(self.log_evidence_lp),
        }


def _normalize_rows(scores: np.ndarray, n_classes: int) -> np.ndarray:
    probs = np.clip(scores, 0.0, None)
    totals = probs.sum(axis=1, keepdims=True)
    empty = totals[:, 0] <= 0.0
    safe = np.where(totals > 0.0, totals, 1.0)
    probs = probs / safe
    probs[empty] = 1.0 / n_classes
    return probs


def harmonic_predict(state: LabelState, graph: Graph, eps: float = 1e-6) -> np.ndarray:
    """Per-class harmonic scores at the unlabelled nodes, as probabilities.

    Rows align with ``state.unlabelled``.  The underlying system solves
    for every non-labelled node, so held-out nodes participate in the
    propagation even though they are not returned.
    """
    model = PropagationModel(state, graph, eps)
    return model.probabilities(state.unlabelled)


def lp_evidence(state: LabelState, graph: Graph, eps: float = 1e-6) -> float:
    """Chain-rule log-evidence of the labels under propagation.

    log p(Y_L) ≈ Σ_t log p(y_t | y_1 .. y_{t-1}); the first factor is
    the uniform prior.  Depends on insertion order by construction.
    """
    if len(state.indices) == 0:
        raise ValueError("evidence of an empty label set is undefined")
    total = -np.log(state.n_classes)
    prefix = LabelState(
        n_nodes=state.n_nodes, n_classes=state.n_classes, excluded=state.excluded
    )
    for t in range(1, len(state.indices)):
        prefix = prefix.add(state.indices[t - 1], state.labels[t - 1])
        model = PropagationModel(prefix, graph, eps)
        conditionals = model.grounded([state.indices[t]])
        total += float(np.log(conditionals[0, state.labels[t]]))
    return float(total)


def lp_expected_risk(q: int, state: LabelState, graph: Graph, eps, eval_subset) -> float:
    """Expected risk of querying ``q`` under the propagation model.

    Mirrors the regression risk: for each hypothesized class the
    harmonic system is re-solved with q clamped, and the resulting
    misclassification probabilities on the evaluation subset (excluding
    q) are averaged under the current posterior for q.
    """
    unlabelled = state.unlabelled
    if q not in unlabelled:
        raise ValueError(f"candidate {q} is not available for labelling")
    eval_idx = np.unique(np.asarray(eval_subset, dtype=np.int64))
    eval_idx = eval_idx[eval_idx != q]
    if len(eval_idx) == 0:
        raise ValueError("evaluation subset minus the candidate is empty")
    base = PropagationModel(state, graph, eps)
    posterior = base.probabilities([q])[0]
    risk = 0.0
    for k in range(state.n_classes):
        refit = PropagationModel(state.add(q, k), graph, eps)
        phi = 1.0 - refit.probabilities(eval_idx).max(axis=1)
        risk += posterior[k] * phi.mean()
    return float(risk)


def _lp_candidate_risks(state, graph, eps, candidates, eval_idx) -> np.ndarray:
    """Vectorized propagation risks via rank-one (grounded-Laplacian) updates.

    Clamping candidate q removes one unknown from the system.  With
    M = L_uu + eps I over the current unknowns, F = M⁻¹ W_ul Y,
    g = M⁻¹ e_q and h = M⁻¹ W_uq, the refit scores at the remaining
    unknowns are

        F' = F − (g / g_q) F[q]  +  (h − (h_q / g_q) g) e_kᵀ

    which is the quotient identity for deleting row/column q; only the
    hypothesized class column differs across k.
    """
    base = PropagationModel(state, graph, eps)
    cands = np.asarray(candidates, dtype=np.int64)
    eval_idx = np.asarray(eval_idx, dtype=np.int64)
    n_classes = state.n_classes
    cand_pos = base.positions(cands)
    eval_pos = base.positions(eval_idx)

    unit_rhs = np.zeros((len(base.unknowns), len(cands)))
    unit_rhs[cand_pos, np.arange(len(cands))] = 1.0
    g = base.solve(unit_rhs)  # (u, C)
    h = base.solve(base.w_uu[:, cand_pos].toarray())  # (u, C): M⁻¹ W_{U,q}
    posterior = _normalize_rows(base.base[cand_pos], n_classes)  # (C, K)

    f_eval = base.base[eval_pos]  # (E, K)
    g_eval = g[eval_pos]  # (E, C)
    h_eval = h[eval_pos]  # (E, C)
    g_qq = g[cand_pos, np.arange(len(cands))]  # (C,)
    h_qq = h[cand_pos, np.arange(len(cands))]  # (C,)
    f_q = base.base[cand_pos]  # (C, K)

    risks = np.empty(len(cands))
    for c in range(len(cands)):
        t0 = f_eval - np.outer(g_eval[:, c] / g_qq[c], f_q[c])  # (E, K)
        t1 = h_eval[:, c] - (h_qq[c] / g_qq[c]) * g_eval[:, c]  # (E,)
        keep = eval_idx != cands[c]
        risks[c] = _risk_from_update(t0[keep], t1[keep], posterior[c], n_classes)
    return risks


def _risk_from_update(t0, t1, posterior, n_classes):
    """Expected risk from the k-independent parts of the refit scores.

    For hypothesized class k the refit row is t0 with column k bumped by
    t1; clipping and renormalizing per row gives the class probabilities
    whose max determines the misclassification term.
    """
    base_clip = np.clip(t0, 0.0, None)  # (E, K)
    base_sum = base_clip.sum(axis=1)  # (E,)
    order = np.argsort(base_clip, axis=1)
    top = base_clip[np.arange(len(t0)), order[:, -1]]
    second = base_clip[np.arange(len(t0)), order[:, -2]] if n_classes > 1 else np.zeros(len(t0))
    argtop = order[:, -1]

    risk = 0.0
    for k in range(n_classes):
        bumped = np.clip(t0[:, k] + t1, 0.0, None)
        others = np.where(argtop == k, second, top)
        maxval = np.maximum(others, bumped)
        totals = base_sum - base_clip[:, k] + bumped
        safe = np.where(totals > 0.0, totals, 1.0)
        phi = np.where(totals > 0.0, 1.0 - maxval / safe, 1.0 - 1.0 / n_classes)
        risk += posterior[k] * phi.mean()
    return float(risk)


def model_posterior(
    state: LabelState,
    x_tilde: np.ndarray,
    graph: Graph,
    config: SolverConfig,
    eps: float = 1e-6,
) -> ModelPosterior:
    """Normalized model weights from the two evidence approximations.

    Equal prior belief in the models; the weights are a stable softmax
    of the log-evidences (shift by the max before exponentiating).
    """
    if len(state.indices) == 0:
        raise ValueError("model posterior of an empty label set is undefined")
    weights = fit(x_tilde[state.labelled_array], state.label_array, state.n_classes, config)
    ev_lg = log_evidence(weights, np.asarray(x_tilde[state.labelled_array]), state.label_array)
    ev_lp = lp_evidence(state, graph, eps)
    lam_lg, lam_lp = evidence_weights(ev_lg, ev_lp)
    return ModelPosterior(
        lam_lg=lam_lg,
        lam_lp=lam_lp,
        log_evidence_lg=float(ev_lg),
        log_evidence_lp=float(ev_lp),
    )


def evidence_weights(ev_lg: float, ev_lp: float) -> tuple:
    """Equal-prior model weights from two log-evidences: a stable softmax
    (shift by the max before exponentiating, so only differences matter)."""
    shift = max(ev_lg, ev_lp)
    raw = np.exp(np.array([ev_lg, ev_lp], dtype=np.float64) - shift)
    lam = raw / raw.sum()
    return float(lam[0]), float(lam[1])


def combined_select(
    state: LabelState,
    x_tilde: np.ndarray,
    graph: Graph,
    config: SolverConfig,
    eps: float = 1e-6,
    pool=None,
    eval_subset_size: int = 500,
    *,
    rng=None,
    warm_starts: bool = True,
    posterior: ModelPosterior | None = None,
):
    """Model-averaged query selection.

    Both risk models are evaluated over one shared evaluation subset,
    and the candidate minimizing lam_lg·R_lg + lam_lp·R_lp wins, ties
    to the smallest node index.  ``posterior`` can be supplied to skip
    recomputing the evidences (e.g. in tests of degenerate weights).
    """
    unlabelled = state.unlabelled
    pool_arr = _checked_pool(pool, unlabelled)
    eval_idx = _draw_eval_subset(unlabelled, eval_subset_size, rng)
    if posterior is None:
        posterior = model_posterior(state, x_tilde, graph, config, eps)
    start = time.perf_counter()
    risks_lg = (
        _candidate_risks(state, x_tilde, config, pool_arr, eval_idx, warm_starts)
        if posterior.lam_lg != 0.0
        else np.zeros(len(pool_arr))
    )
    risks_lp = (
        _lp_candidate_risks(state, graph, eps, pool_arr, eval_idx)
        if posterior.lam_lp != 0.0
        else np.zeros(len(pool_arr))
    )
    elapsed = time.perf_counter() - start
    combined = posterior.lam_lg * risks_lg + posterior.lam_lp * risks_lp
    best = int(pool_arr[int(np.argmin(combined))])
    report = RiskReport(
        risks={int(node): float(value) for node, value in zip(pool_arr, combined)},
        selected=best,
        pool=tuple(int(node) for node in pool_arr),
        seconds_per_candidate=elapsed / len(pool_arr),
    )
    return best, report

"""Preemptive query selection and the logistic-stability risk-error bounds.

While the oracle is busy labelling the pending query q*, the next query
can already be computed by standing in the predicted label of q* — the
mode of the current model — for the real one.  The selection itself is
exactly GEEM run on the augmented label view; once the true label
arrives it replaces the prediction in the real label state.

The bound operations quantify how far the preemptively computed risk can
drift from the risk under the true label.  They derive from the
stability of L2-regularized logistic regression: two fits whose label
sets differ on nodes q and q_prev have weights within
``eta = (||x_q|| + ||x_prev||) / (2 lam)`` of each other, which caps
every per-node sigmoid shift.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .logistic import LabelState, SolverConfig, fit, predict_proba, _sigmoid
from .risk import RiskReport, select_query

__all__ = [
    "PreemptiveContext",
    "BoundReport",
    "predicted_label",
    "make_preemptive_context",
    "select_query_preemptive",
    "commit_label",
    "logistic_stability_eta",
    "binary_risk_bound",
    "multiclass_risk_bound",
]


@dataclass(frozen=True)
class PreemptiveContext:
    """The pending query and the label stood in for it."""

    pending: int
    predicted: int

    def augmented(self, state: LabelState) -> LabelState:
        """The label view Y' = Y ∪ {(pending, predicted)}.

        ``LabelState.add`` rejects duplicates, so the pending node appears
        in Y' exactly once.
        """
        return state.add(self.pending, self.predicted)


def predicted_label(state: LabelState, x_tilde, config: SolverConfig, node: int) -> int:
    """Mode of p(y_node | Y_L) under the current model; ties take the
    smallest class index."""
    weights = fit(x_tilde[state.labelled_array], state.label_array, state.n_classes, config)
    probs = predict_proba(weights, np.asarray(x_tilde[node])[None, :])
    return int(np.argmax(probs[0]))


def make_preemptive_context(
    state: LabelState, x_tilde, config: SolverConfig, pending: int
) -> PreemptiveContext:
    return PreemptiveContext(
        pending=int(pending),
        predicted=predicted_label(state, x_tilde, config, pending),
    )


def select_query_preemptive(
    ctx: PreemptiveContext,
    state: LabelState,
    x_tilde,
    config: SolverConfig,
    pool=None,
    eval_subset_size: int = 500,
    *,
    rng=None,
    warm_starts: bool = True,
):
    """GEEM selection over the augmented label view — never waits on the
    true label of the pending query."""
    augmented = ctx.augmented(state)
    return select_query(
        augmented,
        x_tilde,
        config,
        pool=pool,
        eval_subset_size=eval_subset_size,
        rng=rng,
        warm_starts=warm_starts,
    )


def commit_label(state: LabelState, ctx: PreemptiveContext, true_label: int) -> LabelState:
    """Append the oracle's true label for the pending query.

    The prediction in the context was only ever used for risk
    computation; the real state always records the submitted label.
    """
    return state.add(ctx.pending, int(true_label))


# ---------------------------------------------------------------------------
# stability bounds
# ---------------------------------------------------------------------------


def logistic_stability_eta(q: int, q_prev: int, lam: float, x_tilde) -> float:
    """``eta_q = (||x̃_q|| + ||x̃_{q_prev}||) / (2 lam)`` (Euclidean norms)."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    xq = np.asarray(x_tilde[q], dtype=np.float64)
    xp = np.asarray(x_tilde[q_prev], dtype=np.float64)
    return float((np.linalg.norm(xq) + np.linalg.norm(xp)) / (2.0 * lam))


@dataclass(frozen=True)
class BoundReport:
    """A risk-error bound, its per-node terms, and (optionally) the
    realized error once the true label is known."""

    eta: float
    bound: float
    per_node: tuple
    vacuous_nodes: int = 0
    realized: float | None = None

    def with_realized(self, value: float) -> "BoundReport":
        return replace(self, realized=float(value))

    def to_dict(self) -> dict:
        return {
            "eta": float(self.eta),
            "bound": float(self.bound),
            "per_node": [float(v) for v in self.per_node],
            "vacuous_nodes": int(self.vacuous_nodes),
            "realized": None if self.realized is None else float(self.realized),
        }


def _sigma_shift(z: np.ndarray, shift: np.ndarray) -> np.ndarray:
    """``b_{±eta}(w, i) = σ(z_i) − σ(z_i ± shift_i)`` stacked as (+, −)."""
    base = _sigmoid(z)
    return np.stack([base - _sigmoid(z + shift), base - _sigmoid(z - shift)])


def _augmented_fits(q, ctx, state, x_tilde, config):
    """One-vs-all weights fitted on Y' ∪ {(q, k)} for every class k."""
    augmented = ctx.augmented(state)
    rows = np.concatenate([augmented.labelled_array, [q]])
    x_rows = np.asarray(x_tilde[rows], dtype=np.float64)
    y_base = list(augmented.labels)
    fits = []
    for k in range(state.n_classes):
        weights = fit(x_rows, np.asarray(y_base + [k]), state.n_classes, config)
        fits.append(weights.weights)
    return fits


def _eval_rows(q, eval_subset):
    eval_idx = np.unique(np.asarray(eval_subset, dtype=np.int64))
    eval_idx = eval_idx[eval_idx != q]
    if len(eval_idx) == 0:
        raise ValueError("evaluation subset minus the candidate is empty")
    return eval_idx


def binary_risk_bound(
    q: int,
    ctx: PreemptiveContext,
    state: LabelState,
    x_tilde,
    config: SolverConfig,
    eval_subset,
) -> BoundReport:
    """Risk-error bound for binary classification.

    ``B = mean_i  max_{k∈{0,1}} max(|b_{+eta}(w_{2,k}, i)|, |b_{-eta}(w_{2,k}, i)|)``
    with ``w_{2,k}`` the (one-vs-all) weights refit on Y' ∪ {(q, k)}; in
    the binary case the class-1 column is the classical single weight
    vector (the class-0 column is its exact negation).
    """
    if state.n_classes != 2:
        raise ValueError("binary bound requires exactly two classes")
    if config.mode != "one-vs-all-normalized":
        raise ValueError("risk bounds are stated for one-vs-all-normalized fits")
    eval_idx = _eval_rows(q, eval_subset)
    x_eval = np.asarray(x_tilde[eval_idx], dtype=np.float64)
    norms = np.linalg.norm(x_eval, axis=1)
    eta = logistic_stability_eta(q, ctx.pending, config.lam, x_tilde)
    shift = 2.0 * eta * norms
    per_node = np.zeros(len(eval_idx))
    for w_mat in _augmented_fits(q, ctx, state, x_tilde, config):
        z = x_eval @ w_mat[:, 1]
        per_node = np.maximum(per_node, np.abs(_sigma_shift(z, shift)).max(axis=0))
    return BoundReport(eta=eta, bound=float(per_node.mean()), per_node=tuple(per_node))


def multiclass_risk_bound(
    q: int,
    ctx: PreemptiveContext,
    state: LabelState,
    x_tilde,
    config: SolverConfig,
    eval_subset,
) -> BoundReport:
    """Risk-error bound for one-vs-all-normalized multiclass regression.

    Per evaluation node i and hypothesized class k, with per-class
    sigmoid outputs ``σ_{k'} = σ(w^{(k')T}_{2,k} x̃_i)``, normalizer
    ``C = Σ_{k'} σ_{k'}`` and ``rho = max_{k'} max_± |b_{±eta}|``::

        beta = max_{k'} max( |σ_{k'}/C − (σ_{k'} − rho)/(C + 4 rho)| ,
                             |σ_{k'}/C − (σ_{k'} + rho)/(C − 4 rho)| )

    The node term is the max over k.  Wherever ``C − 4 rho <= 0`` the
    ratio is undefined and the node term is clamped to 1 and flagged
    vacuous (risks live in [0, 1], so the clamp stays a valid bound).
    """
    if config.mode != "one-vs-all-normalized":
        raise ValueError("multiclass bound requires one-vs-all-normalized mode")
    eval_idx = _eval_rows(q, eval_subset)
    x_eval = np.asarray(x_tilde[eval_idx], dtype=np.float64)
    norms = np.linalg.norm(x_eval, axis=1)
    eta = logistic_stability_eta(q, ctx.pending, config.lam, x_tilde)
    shift = 2.0 * eta * norms
    per_node = np.zeros(len(eval_idx))
    vacuous = np.zeros(len(eval_idx), dtype=bool)
    for w_mat in _augmented_fits(q, ctx, state, x_tilde, config):
        z = x_eval @ w_mat  # (E, K) per-class logits
        sig = _sigmoid(z)
        c = sig.sum(axis=1)
        rho = np.abs(_sigma_shift(z, shift[:, None])).max(axis=(0, 2))  # (E,)
        ok = c - 4.0 * rho > 0
        term = np.ones(len(eval_idx))
        if ok.any():
            ratio = sig[ok] / c[ok, None]
            low = (sig[ok] - rho[ok, None]) / (c[ok, None] + 4.0 * rho[ok, None])
            high = (sig[ok] + rho[ok, None]) / (c[ok, None] - 4.0 * rho[ok, None])
            beta = np.maximum(np.abs(ratio - low), np.abs(ratio - high)).max(axis=1)
            term[ok] = beta
        vacuous |= ~ok
        per_node = np.maximum(per_node, term)
    return BoundReport(
        eta=eta,
        bound=float(per_node.mean()),
        per_node=tuple(per_node),
        vacuous_nodes=int(vacuous.sum()),
    )

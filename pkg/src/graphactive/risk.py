"""Expected-error-minimization query selection over the SGC model (GEEM).

Scoring a candidate q means: for every hypothesized class k, refit the
classifier on the labelled set augmented with (q, k), measure the mean
misclassification probability over an evaluation subset, and average the
K results under the base model's posterior for y_q.  The selected query
minimizes that risk.

Every refit for one selection step lives in the span of at most
m = |L| + 1 feature rows, so the whole sweep reduces to batched dense
linear algebra on m x m bordered Gram matrices — one per candidate —
regardless of the raw feature dimension.  Candidates are processed in
chunks; each fit is an independent damped-Newton solve warm-started from
the base model, so chunking cannot change any value.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .logistic import (
    LabelState,
    SolverConfig,
    _gram_basis,
    _one_hot,
    _proba_from_logits,
    _reduced_to_dual,
    _softmax,
    _sigmoid,
    _log_sigmoid,
    _solve,
)

__all__ = ["RiskReport", "expected_risk", "select_query"]

_ARMIJO_C = 1e-4
_MAX_BACKTRACKS = 60
# Below this gradient norm the objective decrease of a Newton step falls
# under float64 resolution, so line-search tests are pure noise; the raw
# step is provably contractive there (strong convexity, bounded third
# derivative at these scales).
_PURE_NEWTON_GNORM = 1e-6
_RANGE_SLACK = 1e-12


@dataclass(frozen=True)
class RiskReport:
    """Risks for every candidate scored in one selection call."""

    risks: dict  # node -> expected risk R^{+q}
    selected: int
    pool: tuple
    seconds_per_candidate: float

    def to_dict(self) -> dict:
        return {
            "risks": {str(int(q)): float(r) for q, r in self.risks.items()},
            "selected": int(self.selected),
            "pool": [int(q) for q in self.pool],
            "seconds_per_candidate": float(self.seconds_per_candidate),
        }


def expected_risk(
    q: int,
    state: LabelState,
    x_tilde: np.ndarray,
    config: SolverConfig,
    eval_subset,
    *,
    warm_starts: bool = True,
) -> float:
    """Risk of querying node ``q`` given the current labels.

    ``eval_subset`` is the node set over which misclassification
    probability is averaged (q itself is excluded from it).
    """
    eval_idx = np.unique(np.asarray(eval_subset, dtype=np.int64))
    unlabelled = state.unlabelled
    if int(q) not in set(unlabelled.tolist()):
        raise ValueError(f"candidate {q} is not unlabelled")
    if len(np.setdiff1d(eval_idx, [q])) == 0:
        raise ValueError("evaluation subset minus the candidate is empty")
    risks = _candidate_risks(
        state, x_tilde, config, np.asarray([q], dtype=np.int64), eval_idx, warm_starts
    )
    return float(risks[0])


def select_query(
    state: LabelState,
    x_tilde: np.ndarray,
    config: SolverConfig,
    pool=None,
    eval_subset_size: int = 500,
    *,
    rng=None,
    warm_starts: bool = True,
):
    """Pick the risk-minimizing query from ``pool``.

    The evaluation subset is drawn once from the unlabelled set (all of
    it when it is no larger than ``eval_subset_size``) and shared across
    every candidate.  Ties break toward the smaller node index.  With a
    seeded ``rng`` the call is fully deterministic.
    """
    unlabelled = state.unlabelled
    pool = _checked_pool(pool, unlabelled)
    eval_idx = _draw_eval_subset(unlabelled, eval_subset_size, rng)
    start = time.perf_counter()
    risks = _candidate_risks(state, x_tilde, config, pool, eval_idx, warm_starts)
    seconds = (time.perf_counter() - start) / len(pool)
    best = int(pool[int(np.argmin(risks))])
    report = RiskReport(
        risks={int(q): float(r) for q, r in zip(pool, risks)},
        selected=best,
        pool=tuple(int(q) for q in pool),
        seconds_per_candidate=seconds,
    )
    return best, report


def _checked_pool(pool, unlabelled: np.ndarray) -> np.ndarray:
    if pool is None:
        pool = unlabelled
    pool = np.unique(np.asarray(pool, dtype=np.int64))
    if len(pool) == 0:
        raise ValueError("candidate pool is empty")
    if len(np.setdiff1d(pool, unlabelled)) != 0:
        raise ValueError("candidate pool must be a subset of the unlabelled set")
    return pool


def _draw_eval_subset(unlabelled: np.ndarray, eval_subset_size, rng) -> np.ndarray:
    if eval_subset_size is not None and len(unlabelled) > eval_subset_size:
        gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        return np.sort(gen.choice(unlabelled, size=eval_subset_size, replace=False))
    return unlabelled


# ---------------------------------------------------------------------------
# batched engine
# ---------------------------------------------------------------------------


def _candidate_risks(state, x_tilde, config, candidates, eval_idx, warm_starts):
    """Expected risk for each candidate (ascending order preserved)."""
    rows_l = state.labelled_array
    y_l = state.label_array
    n_classes = state.n_classes
    m0 = len(rows_l)
    if m0 == 0:
        raise ValueError("base model undefined: the labelled set is empty")
    eval_idx = np.asarray(eval_idx, dtype=np.int64)
    cands = np.asarray(candidates, dtype=np.int64)

    x_l = np.asarray(x_tilde[rows_l], dtype=np.float64)
    x_c = np.asarray(x_tilde[cands], dtype=np.float64)
    x_e = np.asarray(x_tilde[eval_idx], dtype=np.float64)

    base_cfg = replace(config, warm_start=None)
    gram_ll = x_l @ x_l.T
    f0, u0, inv_s0 = _gram_basis(gram_ll)
    v_base, _, _, _ = _solve(f0, y_l, n_classes, base_cfg, np.zeros((m0, n_classes)))
    a_base = _reduced_to_dual(v_base, u0, inv_s0)  # (m0, K): w_base = X_L^T a_base

    k_cl = x_c @ x_l.T  # (C, m0)
    k_el = x_e @ x_l.T  # (E, m0)
    k_ec = x_e @ x_c.T  # (E, C)
    k_cc = np.einsum("ij,ij->i", x_c, x_c)  # (C,)
    z_l = gram_ll @ a_base  # (m0, K): base logits at labelled rows
    z_c = k_cl @ a_base  # (C, K): base logits at candidates
    posterior = _proba_from_logits(z_c, config.mode)

    n_cand = len(cands)
    n_eval = len(eval_idx)
    m = m0 + 1
    risks = np.empty(n_cand)

    per_item = (m * n_classes) ** 2 if config.mode == "softmax" else m * m * n_classes
    chunk = int(max(8, min(n_cand, 6e6 // max(per_item, 1) + 1)))

    for lo in range(0, n_cand, chunk):
        hi = min(lo + chunk, n_cand)
        sl = slice(lo, hi)
        b = hi - lo
        # bordered Gram matrices for this chunk of candidates
        gram = np.empty((b, m, m))
        gram[:, :m0, :m0] = gram_ll
        gram[:, m0, :m0] = k_cl[sl]
        gram[:, :m0, m0] = k_cl[sl]
        gram[:, m0, m0] = k_cc[sl]
        s, u = np.linalg.eigh(gram)
        s = np.clip(s, 0.0, None)
        floor = s.max(axis=1, keepdims=True) * 1e-12
        keep = s > floor
        sqrt_s = np.where(keep, np.sqrt(np.where(keep, s, 1.0)), 0.0)
        inv_sqrt_s = np.where(keep, 1.0 / np.where(keep, sqrt_s, 1.0), 0.0)
        f = u * sqrt_s[:, None, :]  # (b, m, m): rows reproduce the bordered Gram
        ut = np.swapaxes(u, 1, 2)

        if warm_starts:
            z0 = np.empty((b, m, n_classes))
            z0[:, :m0, :] = z_l
            z0[:, m0, :] = z_c[sl]
            v_warm = inv_sqrt_s[:, :, None] * (ut @ z0)
        else:
            v_warm = np.zeros((b, m, n_classes))

        excl = eval_idx[None, :] == cands[sl, None]  # (b, E) rows to drop
        counts = n_eval - excl.sum(axis=1)
        if (counts == 0).any():
            raise ValueError("evaluation subset minus the candidate is empty")

        per_class = np.empty((b, n_classes))
        y_aug = np.concatenate([y_l, [0]])
        for hyp in range(n_classes):
            y_aug[m0] = hyp
            y1h = _one_hot(y_aug, n_classes)  # (m, K), shared across the chunk
            if config.mode == "softmax":
                v = _batched_newton_softmax(
                    f, y1h, config.lam, config.tol, config.max_iter, v_warm
                )
            else:
                v = _batched_newton_ova(
                    f, y1h, config.lam, config.tol, config.max_iter, v_warm
                )
            a = u @ (inv_sqrt_s[:, :, None] * v)  # (b, m, K) dual coefficients
            logits = np.matmul(k_el[None, :, :], a[:, :m0, :])
            logits += k_ec[:, sl].T[:, :, None] * a[:, m0:, :]
            p_eval = _proba_from_logits(logits, config.mode)  # (b, E, K)
            phi = 1.0 - p_eval.max(axis=2)
            per_class[:, hyp] = (phi.sum(axis=1) - (phi * excl).sum(axis=1)) / counts
        risks[sl] = (posterior[sl] * per_class).sum(axis=1)

    upper = 1.0 - 1.0 / n_classes + _RANGE_SLACK
    assert risks.min() >= -_RANGE_SLACK and risks.max() <= upper, "risk left [0, 1 - 1/K]"
    return risks


# ---------------------------------------------------------------------------
# batched Newton solvers (same objectives as logistic._solve, stacked)
# ---------------------------------------------------------------------------


def _batched_objective_softmax(v, f, y1h, lam):
    z = f @ v
    mx = z.max(axis=2, keepdims=True)
    lse = (mx + np.log(np.exp(z - mx).sum(axis=2, keepdims=True)))[:, :, 0]
    return lse.sum(axis=1) - (z * y1h).sum(axis=(1, 2)) + lam * (v * v).sum(axis=(1, 2))


def _batched_newton_softmax(f, y1h, lam, tol, max_iter, v0):
    """Damped Newton on a stack of multinomial problems sharing labels."""
    b, m, r = f.shape
    k = y1h.shape[1]
    v = v0.copy()
    y = y1h[None, :, :]
    ft = np.swapaxes(f, 1, 2)
    rows = np.arange(r * k)
    # One extra full step after crossing the tolerance: the quadratic
    # tail pushes the gradient to the machine floor, so warm and cold
    # starts land on the same point instead of anywhere inside the
    # tolerance ball.
    was_conv = np.zeros(b, dtype=bool)
    for _ in range(max_iter):
        z = f @ v
        p = _softmax(z)
        g = ft @ (p - y) + 2.0 * lam * v
        gnorm = np.sqrt((g * g).sum(axis=(1, 2)))
        conv = gnorm <= tol
        live = np.flatnonzero(~(conv & was_conv))
        was_conv = conv
        if live.size == 0:
            break
        fl, pl, gl, vl = f[live], p[live], g[live], v[live]
        ftl = np.swapaxes(fl, 1, 2)
        h = np.empty((live.size, r * k, r * k))
        for a in range(k):
            fwa = fl * pl[:, :, a : a + 1]
            fwat = np.swapaxes(fwa, 1, 2)
            for c in range(a, k):
                if c == a:
                    blk = fwat @ (fl * (1.0 - pl[:, :, a : a + 1]))
                else:
                    blk = -(fwat @ (fl * pl[:, :, c : c + 1]))
                h[:, a * r : (a + 1) * r, c * r : (c + 1) * r] = blk
                if c != a:
                    h[:, c * r : (c + 1) * r, a * r : (a + 1) * r] = np.swapaxes(blk, 1, 2)
        h[:, rows, rows] += 2.0 * lam
        vec_g = np.swapaxes(gl, 1, 2).reshape(live.size, r * k)
        delta = -np.linalg.solve(h, vec_g[:, :, None])[:, :, 0]
        direction = np.swapaxes(delta.reshape(live.size, k, r), 1, 2)
        # Batched Armijo backtracking for globalization only: inside the
        # quadratic basin the objective changes fall below float
        # resolution and the test becomes noise, so small-gradient items
        # take the raw Newton step.
        j0 = _batched_objective_softmax(vl, fl, y1h, lam)
        slope = (gl * direction).sum(axis=(1, 2))
        step = np.ones(live.size)
        pure = gnorm[live] <= _PURE_NEWTON_GNORM
        for _ in range(_MAX_BACKTRACKS):
            trial = vl + step[:, None, None] * direction
            bad = (
                _batched_objective_softmax(trial, fl, y1h, lam) > j0 + _ARMIJO_C * step * slope
            ) & ~pure
            if not bad.any():
                break
            step[bad] *= 0.5
        v[live] = vl + step[:, None, None] * direction
    return v


def _batched_objective_binary(v, f, t, lam):
    z = (f @ v[:, :, None])[:, :, 0]
    loss = -(t * _log_sigmoid(z) + (1.0 - t) * _log_sigmoid(-z)).sum(axis=1)
    return loss + lam * (v * v).sum(axis=1)


def _batched_newton_ova(f, y1h, lam, tol, max_iter, v0):
    """One-vs-all: K independent stacks of binary Newton solves."""
    k = y1h.shape[1]
    v = np.empty_like(v0)
    per_tol = tol / np.sqrt(k)
    for cls in range(k):
        v[:, :, cls] = _batched_newton_binary(
            f, y1h[:, cls], lam, per_tol, max_iter, v0[:, :, cls]
        )
    return v


def _batched_newton_binary(f, t, lam, tol, max_iter, v0):
    b, m, r = f.shape
    v = v0.copy()
    tt = t[None, :]
    ft = np.swapaxes(f, 1, 2)
    rows = np.arange(r)
    was_conv = np.zeros(b, dtype=bool)  # polish step, as in the softmax stack
    for _ in range(max_iter):
        z = (f @ v[:, :, None])[:, :, 0]
        p = _sigmoid(z)
        g = ft @ (p - tt)[:, :, None]
        g = g[:, :, 0] + 2.0 * lam * v
        gnorm = np.sqrt((g * g).sum(axis=1))
        conv = gnorm <= tol
        live = np.flatnonzero(~(conv & was_conv))
        was_conv = conv
        if live.size == 0:
            break
        fl, pl, gl, vl = f[live], p[live], g[live], v[live]
        w = pl * (1.0 - pl)
        h = np.swapaxes(fl, 1, 2) @ (fl * w[:, :, None])
        h[:, rows, rows] += 2.0 * lam
        direction = -np.linalg.solve(h, gl[:, :, None])[:, :, 0]
        j0 = _batched_objective_binary(vl, fl, t, lam)
        slope = (gl * direction).sum(axis=1)
        step = np.ones(live.size)
        pure = gnorm[live] <= _PURE_NEWTON_GNORM  # raw steps inside the basin
        for _ in range(_MAX_BACKTRACKS):
            trial = vl + step[:, None] * direction
            bad = (
                _batched_objective_binary(trial, fl, t, lam) > j0 + _ARMIJO_C * step * slope
            ) & ~pure
            if not bad.any():
                break
            step[bad] *= 0.5
        v[live] = vl + step[:, None] * direction
    return v

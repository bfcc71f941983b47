"""L2-regularized logistic regression on propagated features.

Two likelihood modes are supported:

* ``"softmax"`` — multinomial logistic regression,
  ``p(y=k | x) = exp(x·w_k) / sum_j exp(x·w_j)``.
* ``"one-vs-all-normalized"`` — K independent binary fits whose sigmoid
  outputs are renormalized per row, ``p(y=k | x) = σ(x·w_k) / C(x)`` with
  ``C(x) = sum_j σ(x·w_j)``.

Both minimize a strongly convex objective

    J(W) = -sum_i log-likelihood_i + lam * ||W||_F^2

(in one-vs-all mode the likelihood factorizes per class so each column is
fit independently with penalty ``lam * ||w_k||^2``).  There is no
intercept: the model is exactly ``σ(X̃ W)``.

The solver is a damped Newton method with an Armijo backtracking line
search.  When the number of labelled rows ``m`` is smaller than the
feature dimension ``d`` — always the case early in active learning on
bag-of-words graphs — the optimum lies in the span of the data rows, so
the solve is carried out in that span via an eigendecomposition of the
``m × m`` Gram matrix.  The reduced-space gradient norm equals the full
primal gradient norm, so the convergence report is representation-free.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import cho_factor, cho_solve
from scipy.special import logsumexp

__all__ = [
    "MODES",
    "SolverConfig",
    "RegressionWeights",
    "LabelState",
    "fit",
    "predict_proba",
    "log_evidence",
    "objective",
    "gradient",
]

MODES = ("softmax", "one-vs-all-normalized")

_ARMIJO_C = 1e-4
_MAX_BACKTRACKS = 60
# Below this gradient norm a Newton step's objective decrease falls under
# float64 resolution and line-search tests become noise; the raw step is
# contractive there, so the line search is skipped.
_PURE_NEWTON_GNORM = 1e-6
_EIG_FLOOR = 1e-12  # relative cutoff below which Gram eigenvalues count as zero


@dataclass(frozen=True)
class RegressionWeights:
    """Fitted weights plus a convergence report."""

    weights: np.ndarray  # (d, K); no intercept column
    mode: str
    lam: float
    n_iter: int
    grad_norm: float
    converged: bool

    @property
    def n_classes(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings shared by every fit in one experiment."""

    lam: float = 1.0
    mode: str = "softmax"
    tol: float = 1e-6
    max_iter: int = 100
    warm_start: RegressionWeights | None = None

    def __post_init__(self) -> None:
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")


@dataclass(frozen=True)
class LabelState:
    """The labelled set L (in insertion order) and its complement.

    ``excluded`` holds nodes that are neither labelled nor available —
    e.g. a held-out test set — so the unlabelled set is
    ``V \\ L \\ excluded``.  States are immutable; ``add`` returns a new
    state, preserving insertion order for the evidence chain rule.
    """

    n_nodes: int
    n_classes: int
    indices: tuple = ()
    labels: tuple = ()
    excluded: frozenset = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if len(self.indices) != len(self.labels):
            raise ValueError("one label per labelled node required")
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("labelled nodes must be distinct")
        for node in self.indices:
            if not 0 <= node < self.n_nodes:
                raise ValueError(f"node {node} out of range")
            if node in self.excluded:
                raise ValueError(f"node {node} is excluded and cannot be labelled")
        for label in self.labels:
            if not 0 <= label < self.n_classes:
                raise ValueError(f"label {label} out of range")

    def add(self, node: int, label: int) -> "LabelState":
        if node in self.indices:
            raise ValueError(f"node {node} is already labelled")
        return LabelState(
            n_nodes=self.n_nodes,
            n_classes=self.n_classes,
            indices=self.indices + (int(node),),
            labels=self.labels + (int(label),),
            excluded=self.excluded,
        )

    @property
    def unlabelled(self) -> np.ndarray:
        """Sorted array of nodes that may still be queried or evaluated."""
        mask = np.ones(self.n_nodes, dtype=bool)
        if self.indices:
            mask[list(self.indices)] = False
        if self.excluded:
            mask[list(self.excluded)] = False
        return np.flatnonzero(mask)

    @property
    def labelled_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.int64)

    @property
    def label_array(self) -> np.ndarray:
        return np.asarray(self.labels, dtype=np.int64)


# ---------------------------------------------------------------------------
# probability helpers
# ---------------------------------------------------------------------------


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _log_sigmoid(z: np.ndarray) -> np.ndarray:
    return -np.logaddexp(0.0, -z)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return np.exp(_log_sigmoid(z))


def _log_proba_from_logits(z: np.ndarray, mode: str) -> np.ndarray:
    if mode == "softmax":
        return z - logsumexp(z, axis=-1, keepdims=True)
    ls = _log_sigmoid(z)
    return ls - logsumexp(ls, axis=-1, keepdims=True)


def _proba_from_logits(z: np.ndarray, mode: str) -> np.ndarray:
    return np.exp(_log_proba_from_logits(z, mode))


def _one_hot(y: np.ndarray, n_classes: int) -> np.ndarray:
    out = np.zeros((len(y), n_classes))
    out[np.arange(len(y)), y] = 1.0
    return out


# ---------------------------------------------------------------------------
# objective / gradient (primal form, any representation with rows f)
# ---------------------------------------------------------------------------


def _objective_value(v: np.ndarray, f: np.ndarray, y1h: np.ndarray, lam: float, mode: str) -> float:
    z = f @ v
    if mode == "softmax":
        data = logsumexp(z, axis=1).sum() - float((z * y1h).sum())
    else:
        # independent binary log-losses: -t*logσ(z) - (1-t)*logσ(-z)
        data = -float((y1h * _log_sigmoid(z)).sum() + ((1.0 - y1h) * _log_sigmoid(-z)).sum())
    return data + lam * float((v * v).sum())


def _gradient_value(v: np.ndarray, f: np.ndarray, y1h: np.ndarray, lam: float, mode: str) -> np.ndarray:
    z = f @ v
    if mode == "softmax":
        p = _softmax(z)
    else:
        p = _sigmoid(z)
    return f.T @ (p - y1h) + 2.0 * lam * v


def objective(w: np.ndarray, x: np.ndarray, y: np.ndarray, n_classes: int, lam: float, mode: str) -> float:
    """The full training objective J(W) at the given primal weights."""
    return _objective_value(w, np.asarray(x, dtype=np.float64), _one_hot(np.asarray(y), n_classes), lam, mode)


def gradient(w: np.ndarray, x: np.ndarray, y: np.ndarray, n_classes: int, lam: float, mode: str) -> np.ndarray:
    """Analytic gradient of J(W) at the given primal weights."""
    return _gradient_value(w, np.asarray(x, dtype=np.float64), _one_hot(np.asarray(y), n_classes), lam, mode)


# ---------------------------------------------------------------------------
# Newton solvers (operate on an explicit feature representation f)
# ---------------------------------------------------------------------------


def _newton_softmax(f, y1h, lam, tol, max_iter, v0):
    """Damped Newton for the multinomial objective.  Returns (v, iters, gnorm, ok)."""
    m, r = f.shape
    k = y1h.shape[1]
    v = v0.copy()
    # After first crossing the tolerance the solver takes one more full
    # step: the quadratic tail lands on the machine-precision optimum, so
    # warm and cold starts agree far beyond the stopping tolerance.
    was_conv = False
    for it in range(max_iter + 1):
        z = f @ v
        p = _softmax(z)
        g = f.T @ (p - y1h) + 2.0 * lam * v
        gnorm = float(np.linalg.norm(g))
        if gnorm <= tol and (was_conv or it == max_iter):
            return v, it, gnorm, True
        if it == max_iter:
            return v, it, gnorm, gnorm <= tol
        was_conv = gnorm <= tol
        h = np.empty((r * k, r * k))
        for a in range(k):
            fa = f * p[:, a : a + 1]
            for b in range(a, k):
                if a == b:
                    blk = fa.T @ (f * (1.0 - p[:, a : a + 1]))
                else:
                    blk = -(fa.T @ (f * p[:, b : b + 1]))
                h[a * r : (a + 1) * r, b * r : (b + 1) * r] = blk
                if b != a:
                    h[b * r : (b + 1) * r, a * r : (a + 1) * r] = blk.T
        h[np.diag_indices_from(h)] += 2.0 * lam
        vec_g = g.reshape(-1, order="F")
        direction = -cho_solve(cho_factor(h, lower=True), vec_g).reshape((r, k), order="F")
        if gnorm <= _PURE_NEWTON_GNORM:
            v = v + direction
        else:
            v = _armijo(v, direction, g, f, y1h, lam, "softmax")
    return v, max_iter, gnorm, False  # pragma: no cover


def _newton_binary(f, t, lam, tol, max_iter, v0):
    """Damped Newton for one binary column.  Returns (v, iters, gnorm, ok)."""
    v = v0.copy()
    t1h = t[:, None]
    was_conv = False  # polish step, as in the softmax solver
    for it in range(max_iter + 1):
        z = f @ v
        p = _sigmoid(z)
        g = f.T @ (p - t) + 2.0 * lam * v
        gnorm = float(np.linalg.norm(g))
        if gnorm <= tol and (was_conv or it == max_iter):
            return v, it, gnorm, True
        if it == max_iter:
            return v, it, gnorm, gnorm <= tol
        was_conv = gnorm <= tol
        w = p * (1.0 - p)
        h = f.T @ (f * w[:, None])
        h[np.diag_indices_from(h)] += 2.0 * lam
        direction = -cho_solve(cho_factor(h, lower=True), g)
        if gnorm <= _PURE_NEWTON_GNORM:
            v = v + direction
        else:
            v = _armijo(
                v[:, None], direction[:, None], g[:, None], f, t1h, lam, "one-vs-all-normalized"
            )[:, 0]
    return v, max_iter, gnorm, False  # pragma: no cover


def _armijo(v, direction, g, f, y1h, lam, mode):
    """Backtracking line search; Newton directions on a strongly convex
    objective always admit a step, so the loop is a safeguard only."""
    j0 = _objective_value(v, f, y1h, lam, mode)
    slope = float((g * direction).sum())
    step = 1.0
    for _ in range(_MAX_BACKTRACKS):
        candidate = v + step * direction
        if _objective_value(candidate, f, y1h, lam, mode) <= j0 + _ARMIJO_C * step * slope:
            return candidate
        step *= 0.5
    return v + step * direction


def _solve(f, y, n_classes, config, v0):
    """Dispatch the Newton solve in the representation given by rows f."""
    y1h = _one_hot(y, n_classes)
    if config.mode == "softmax":
        return _newton_softmax(f, y1h, config.lam, config.tol, config.max_iter, v0)
    # one-vs-all: K independent binary problems; per-class tolerance is
    # tol/sqrt(K) so the concatenated gradient meets the requested tol.
    per_tol = config.tol / np.sqrt(n_classes)
    v = np.empty_like(v0)
    iters, gnorms, ok = 0, [], True
    for k in range(n_classes):
        vk, it_k, gn_k, ok_k = _newton_binary(
            f, y1h[:, k], config.lam, per_tol, config.max_iter, v0[:, k]
        )
        v[:, k] = vk
        iters = max(iters, it_k)
        gnorms.append(gn_k)
        ok = ok and ok_k
    return v, iters, float(np.sqrt(np.sum(np.square(gnorms)))), ok


# ---------------------------------------------------------------------------
# Gram-space (span-of-the-data) machinery, shared with the risk engine
# ---------------------------------------------------------------------------


def _gram_basis(gram: np.ndarray):
    """Eigendecompose a PSD Gram matrix into reduced-space features.

    Returns ``(f, u, inv_sqrt_s)`` where ``f = u * sqrt(s)`` reproduces
    the Gram matrix (``f f^T = gram``) and ``inv_sqrt_s`` is zero on the
    (numerically) null eigenvalues: those coordinates carry no data and
    stay at zero under the penalty.
    """
    s, u = np.linalg.eigh(gram)
    s = np.clip(s, 0.0, None)
    floor = s.max() * _EIG_FLOOR if s.size and s.max() > 0 else np.inf
    keep = s > floor
    sqrt_s = np.where(keep, np.sqrt(np.where(keep, s, 1.0)), 0.0)
    inv_sqrt_s = np.where(keep, 1.0 / np.where(keep, sqrt_s, 1.0), 0.0)
    return u * sqrt_s, u, inv_sqrt_s


def _project_logits(z0: np.ndarray, u: np.ndarray, inv_sqrt_s: np.ndarray) -> np.ndarray:
    """Map warm-start logits ``z0 = X w0`` to reduced coordinates."""
    return inv_sqrt_s[:, None] * (u.T @ z0)


def _reduced_to_dual(v: np.ndarray, u: np.ndarray, inv_sqrt_s: np.ndarray) -> np.ndarray:
    """Reduced coordinates -> dual coefficients a with w = X^T a."""
    return u @ (inv_sqrt_s[:, None] * v)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def fit(x, y, n_classes: int, config: SolverConfig) -> RegressionWeights:
    """Fit W minimizing J(W) on the labelled rows ``x`` with labels ``y``.

    Classes absent from ``y`` still receive a trained column.  A fit that
    exhausts ``max_iter`` is returned with ``converged=False`` rather than
    raising.  ``config.warm_start`` (if set) seeds the solve; the optimum
    is unique either way.
    """
    if sp.issparse(x):
        x = x.toarray()
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("x must be a 2-D array of labelled feature rows")
    y = np.asarray(y, dtype=np.int64)
    m, d = x.shape
    if m == 0:
        raise ValueError("cannot fit on an empty label set")
    if y.shape != (m,):
        raise ValueError("one label per row required")
    if n_classes < 1:
        raise ValueError("n_classes must be positive")
    if y.min() < 0 or y.max() >= n_classes:
        raise ValueError("label out of range")
    warm = config.warm_start
    if warm is not None:  # RegressionWeights or a plain (d, K) array
        warm = np.asarray(getattr(warm, "weights", warm), dtype=np.float64)
        if warm.shape != (d, n_classes):
            raise ValueError("warm start shape mismatch")

    if m < d:
        gram = x @ x.T
        f, u, inv_sqrt_s = _gram_basis(gram)
        if warm is None:
            v0 = np.zeros((m, n_classes))
        else:
            v0 = _project_logits(x @ warm, u, inv_sqrt_s)
        v, n_iter, grad_norm, converged = _solve(f, y, n_classes, config, v0)
        w = x.T @ _reduced_to_dual(v, u, inv_sqrt_s)
    else:
        v0 = np.zeros((d, n_classes)) if warm is None else warm.copy()
        w, n_iter, grad_norm, converged = _solve(x, y, n_classes, config, v0)

    return RegressionWeights(
        weights=w,
        mode=config.mode,
        lam=config.lam,
        n_iter=n_iter,
        grad_norm=grad_norm,
        converged=converged,
    )


def predict_proba(weights: RegressionWeights, x) -> np.ndarray:
    """Per-row class distributions under the fitted model."""
    if sp.issparse(x):
        x = x.toarray()
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != weights.weights.shape[0]:
        raise ValueError(
            f"feature dimension mismatch: rows have {x.shape[-1]} columns, "
            f"weights expect {weights.weights.shape[0]}"
        )
    return _proba_from_logits(x @ weights.weights, weights.mode)


def log_evidence(weights: RegressionWeights, x, y) -> float:
    """``sum_i log p(y_i | x_i, W)`` — the point-estimate evidence.

    An empty labelled set gives 0 (the log of an empty product).
    """
    y = np.asarray(y, dtype=np.int64)
    if y.size == 0:
        return 0.0
    if sp.issparse(x):
        x = x.toarray()
    x = np.asarray(x, dtype=np.float64)
    logp = _log_proba_from_logits(x @ weights.weights, weights.mode)
    return float(logp[np.arange(len(y)), y].sum())

"""Desk-scale reproductions of the two query-selection experiments.

Experiment 1 starts from a small random labelled set (0.5% of the
nodes for the citation graphs), holds out 20% of the remaining nodes
as a non-queryable test set, and tracks test accuracy as the strategy
spends its query budget.  Experiment 2 starts from a single random
label and is scored either transductively (accuracy over the current
unlabelled set) or inductively (selection and fitting happen on the
induced subgraph of non-held-out nodes; scoring propagates features on
the full graph and evaluates the held-out nodes with the learned
weights).

Artifacts are deterministic functions of (config, seed): the run JSON
contains no wall-clock values, so identical runs are byte-identical.
Step timings are reported separately in the curve CSV.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .data import Graph, load_dataset, resolve_dataset_path
from .labelprop import ModelPosterior, combined_select
from .logistic import LabelState, SolverConfig, fit, predict_proba
from .preemptive import (
    binary_risk_bound,
    commit_label,
    make_preemptive_context,
    multiclass_risk_bound,
    select_query_preemptive,
)
from .propagation import normalize_adjacency, propagate_features, row_normalize
from .risk import _draw_eval_subset, expected_risk, select_query

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "RunArtifact",
    "run_experiment1",
    "run_experiment2",
    "bootstrap_ci",
]

STRATEGIES = ("random", "geem", "pregeem", "combined", "lp-only")
PROFILES = {
    "smoke": {"trials": 5, "pool_size": 100, "eval_subset_size": 200},
    "full": {"trials": 20, "pool_size": None, "eval_subset_size": 500},
}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = "cora"
    experiment: int = 1
    setting: str = "transductive"
    strategy: str = "geem"
    trials: int = 20
    budget: int = 30
    initial_labels: float | int | None = None
    test_fraction: float = 0.2
    holdout_fraction: float = 0.0
    seed: int = 0
    lam: float = 1.0
    mode: str = "softmax"
    tol: float = 1e-6
    max_iter: int = 100
    hops: int = 2
    row_normalize: bool = True
    pool_size: int | None = None
    eval_subset_size: int | None = 500
    eps: float = 1e-6
    bounds: bool = False

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if self.experiment not in (1, 2):
            raise ConfigError("experiment must be 1 or 2")
        if self.setting not in ("transductive", "inductive"):
            raise ConfigError(f"unknown setting {self.setting!r}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.budget < 0:
            raise ConfigError("budget must be non-negative")
        if isinstance(self.initial_labels, float) and not 0.0 < self.initial_labels < 1.0:
            raise ConfigError("initial label fraction must lie in (0, 1)")
        if isinstance(self.initial_labels, int) and self.initial_labels < 1:
            raise ConfigError("initial label count must be at least 1")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("test fraction must lie in (0, 1)")
        if not 0.0 <= self.holdout_fraction < 1.0:
            raise ConfigError("holdout fraction must lie in [0, 1)")
        if self.bounds and self.mode != "one-vs-all-normalized":
            raise ConfigError("bound diagnostics require one-vs-all-normalized mode")
        try:
            self.solver_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a mapping")
        raw = dict(raw)
        profile = raw.pop("profile", None)
        if profile is not None:
            if profile not in PROFILES:
                raise ConfigError(f"unknown profile {profile!r}")
            for key, value in PROFILES[profile].items():
                raw.setdefault(key, value)
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def solver_config(self) -> SolverConfig:
        return SolverConfig(lam=self.lam, mode=self.mode, tol=self.tol, max_iter=self.max_iter)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class RunArtifact:
    """Results of one experiment: curves, aggregates, queries, timings.

    ``step_seconds`` is wall-clock and therefore excluded from
    ``to_json`` — the JSON artifact is byte-identical across reruns of
    the same (config, seed); timings surface in the curve CSV.
    """

    config: dict
    curves: tuple  # (trials, budget + 1) accuracies
    mean_curve: tuple
    ci_low: tuple
    ci_high: tuple
    queries: tuple  # (trials, budget) selected nodes
    step_seconds: tuple  # (trials, budget + 1) wall seconds
    bound_rows: tuple = ()

    @classmethod
    def from_trials(cls, config: ExperimentConfig, curves, queries, seconds, bound_rows=()):
        curve_arr = np.asarray(curves, dtype=np.float64)
        mean_curve = curve_arr.mean(axis=0)
        ci_low, ci_high = [], []
        for step in range(curve_arr.shape[1]):
            if curve_arr.shape[0] >= 2:
                low, high = bootstrap_ci(curve_arr[:, step], seed=config.seed)
            else:
                low = high = float(mean_curve[step])
            ci_low.append(low)
            ci_high.append(high)
        return cls(
            config=config.to_dict(),
            curves=tuple(tuple(float(a) for a in row) for row in curves),
            mean_curve=tuple(float(a) for a in mean_curve),
            ci_low=tuple(ci_low),
            ci_high=tuple(ci_high),
            queries=tuple(tuple(int(q) for q in row) for row in queries),
            step_seconds=tuple(tuple(float(s) for s in row) for row in seconds),
            bound_rows=tuple(bound_rows),
        )

    def to_json(self) -> str:
        payload = {
            "config": self.config,
            "curves": [list(row) for row in self.curves],
            "mean_curve": list(self.mean_curve),
            "ci_low": list(self.ci_low),
            "ci_high": list(self.ci_high),
            "queries": [list(row) for row in self.queries],
            "bounds": [dict(row) for row in self.bound_rows],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def write(self, outdir) -> None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "run.json").write_text(self.to_json())
        mean_seconds = np.asarray(self.step_seconds).mean(axis=0)
        lines = ["step,mean_acc,ci_low,ci_high,mean_step_seconds"]
        for step, acc in enumerate(self.mean_curve):
            lines.append(
                f"{step},{acc!r},{self.ci_low[step]!r},{self.ci_high[step]!r},"
                f"{float(mean_seconds[step])!r}"
            )
        (outdir / "curve.csv").write_text("\n".join(lines) + "\n")
        if self.config.get("bounds"):
            header = "trial,step,query,eta,bound,realized,vacuous_nodes"
            rows = [header]
            for row in self.bound_rows:
                rows.append(
                    f"{row['trial']},{row['step']},{row['query']},{row['eta']!r},"
                    f"{row['bound']!r},{row['realized']!r},{row['vacuous_nodes']}"
                )
            (outdir / "bounds.csv").write_text("\n".join(rows) + "\n")


def bootstrap_ci(values, resamples: int = 10000, levels=(0.05, 0.95), seed: int = 0):
    """Percentile bootstrap interval for the mean of ``values``."""
    values = np.asarray(values, dtype=np.float64)
    if len(values) < 2:
        raise ValueError("bootstrap needs at least two values")
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, len(values), size=(resamples, len(values)))
    means = values[draws].mean(axis=1)
    low, high = np.quantile(means, levels)
    return float(low), float(high)


# ---------------------------------------------------------------------------
# experiment drivers
# ---------------------------------------------------------------------------


def _load(config: ExperimentConfig):
    path = resolve_dataset_path(config.dataset)
    return load_dataset(path)


def _featurize(graph: Graph, features, config: ExperimentConfig) -> np.ndarray:
    s = normalize_adjacency(graph)
    if config.row_normalize:
        features = row_normalize(features)
    return propagate_features(s, features, config.hops)


def _accuracy(weights, x_rows, y_true) -> float:
    if len(y_true) == 0:
        return float("nan")
    predicted = np.argmax(predict_proba(weights, x_rows), axis=1)
    return float(np.mean(predicted == np.asarray(y_true)))


def _initial_count(config: ExperimentConfig, n_nodes: int) -> int:
    if config.initial_labels is None:
        spec = 0.005 if config.experiment == 1 else 1
    else:
        spec = config.initial_labels
    if isinstance(spec, float):
        return max(1, int(round(spec * n_nodes)))
    return int(spec)


def _sample_pool(rng, available: np.ndarray, pool_size) -> np.ndarray:
    if pool_size is not None and len(available) > pool_size:
        return np.sort(rng.choice(available, size=pool_size, replace=False))
    return available


def _bound_diagnostics(ctx, state, q_next, x_tilde, graph_truth, config, solver, rng):
    """Bound vs realized risk shift for the preemptively chosen query."""
    augmented = ctx.augmented(state)
    eval_idx = _draw_eval_subset(augmented.unlabelled, config.eval_subset_size, rng)
    bound_fn = binary_risk_bound if state.n_classes == 2 else multiclass_risk_bound
    report = bound_fn(q_next, ctx, state, x_tilde, solver, eval_idx)
    risk_predicted = expected_risk(q_next, augmented, x_tilde, solver, eval_idx)
    truth_state = state.add(ctx.pending, int(graph_truth[ctx.pending]))
    risk_true = expected_risk(q_next, truth_state, x_tilde, solver, eval_idx)
    return report.with_realized(abs(risk_predicted - risk_true))


def _run_trial(graph, x_tilde, config, rng, *, initial, excluded, accuracy_fn, query_check=None):
    """One active-learning trial: returns (accuracies, queries, seconds, bound rows)."""
    truth = graph.labels
    solver = config.solver_config()
    state = LabelState(
        n_nodes=graph.n_nodes, n_classes=graph.n_classes, excluded=frozenset(excluded)
    )
    for node in initial:
        state = state.add(int(node), int(truth[node]))

    accuracies, queries, seconds, bound_rows = [], [], [], []
    start = time.perf_counter()
    weights = fit(x_tilde[state.labelled_array], state.label_array, state.n_classes, solver)
    accuracies.append(accuracy_fn(weights, state))
    seconds.append(time.perf_counter() - start)

    if config.budget == 0:
        return accuracies, queries, seconds, bound_rows
    if config.budget > len(state.unlabelled):
        raise ConfigError("budget exceeds the number of queryable nodes")

    def choose(current_state, pool):
        if config.strategy == "random":
            return int(rng.choice(pool))
        if config.strategy in ("geem", "pregeem"):
            best, _ = select_query(
                current_state, x_tilde, solver, pool, config.eval_subset_size, rng=rng
            )
            return best
        posterior = (
            ModelPosterior(lam_lg=0.0, lam_lp=1.0, log_evidence_lg=0.0, log_evidence_lp=0.0)
            if config.strategy == "lp-only"
            else None
        )
        best, _ = combined_select(
            current_state,
            x_tilde,
            graph,
            solver,
            config.eps,
            pool,
            config.eval_subset_size,
            rng=rng,
            posterior=posterior,
        )
        return best

    query = choose(state, _sample_pool(rng, state.unlabelled, config.pool_size))
    for step in range(1, config.budget + 1):
        step_start = time.perf_counter()
        queries.append(query)
        if query_check is not None:
            query_check(query)

        next_query = None
        ctx = None
        if config.strategy == "pregeem" and step < config.budget:
            ctx = make_preemptive_context(state, x_tilde, solver, query)
            remaining = state.unlabelled[state.unlabelled != query]
            pool = _sample_pool(rng, remaining, config.pool_size)
            next_query, _ = select_query_preemptive(
                ctx, state, x_tilde, solver, pool, config.eval_subset_size, rng=rng
            )
            if config.bounds:
                report = _bound_diagnostics(
                    ctx, state, next_query, x_tilde, truth, config, solver, rng
                )
                bound_rows.append(
                    {"trial": -1, "step": step, "query": next_query, **report.to_dict()}
                )

        # The oracle answers from ground truth.
        if ctx is not None:
            state = commit_label(state, ctx, int(truth[query]))
        else:
            state = state.add(query, int(truth[query]))
        weights = fit(x_tilde[state.labelled_array], state.label_array, state.n_classes, solver)
        accuracies.append(accuracy_fn(weights, state))

        if step < config.budget:
            if next_query is None:
                query = choose(state, _sample_pool(rng, state.unlabelled, config.pool_size))
            else:
                query = next_query
        seconds.append(time.perf_counter() - step_start)
    return accuracies, queries, seconds, bound_rows


def run_experiment1(config: ExperimentConfig) -> RunArtifact:
    """Random initial labels, fixed held-out test set, accuracy per query."""
    graph, features = _load(config)
    x_tilde = _featurize(graph, features, config)
    children = np.random.SeedSequence(config.seed).spawn(config.trials)
    all_curves, all_queries, all_seconds, all_bounds = [], [], [], []
    for trial, child in enumerate(children):
        rng = np.random.default_rng(child)
        n = graph.n_nodes
        initial = rng.choice(n, size=min(n, _initial_count(config, n)), replace=False)
        remaining = np.setdiff1d(np.arange(n), initial)
        test_size = int(round(config.test_fraction * len(remaining)))
        test_idx = np.sort(rng.choice(remaining, size=test_size, replace=False))
        test_set = frozenset(int(i) for i in test_idx)

        def accuracy_fn(weights, state, test_idx=test_idx):
            return _accuracy(weights, x_tilde[test_idx], graph.labels[test_idx])

        def query_check(q, test_set=test_set):
            if q in test_set:
                raise AssertionError("test node was queried")

        curve, queries, seconds, bounds = _run_trial(
            graph,
            x_tilde,
            config,
            rng,
            initial=initial,
            excluded=test_set,
            accuracy_fn=accuracy_fn,
            query_check=query_check,
        )
        all_curves.append(curve)
        all_queries.append(queries)
        all_seconds.append(seconds)
        all_bounds.extend({**row, "trial": trial} for row in bounds)
    return RunArtifact.from_trials(config, all_curves, all_queries, all_seconds, all_bounds)


def run_experiment2(config: ExperimentConfig, setting: str | None = None) -> RunArtifact:
    """Single initial label; transductive or inductive scoring."""
    if setting is None:
        setting = config.setting
    if setting not in ("transductive", "inductive"):
        raise ConfigError(f"unknown setting {setting!r}")
    config = replace(config, experiment=2, setting=setting)
    graph, features = _load(config)

    if setting == "inductive" and config.holdout_fraction > 0.0:
        return _experiment2_inductive(config, graph, features)

    x_tilde = _featurize(graph, features, config)
    children = np.random.SeedSequence(config.seed).spawn(config.trials)
    all_curves, all_queries, all_seconds, all_bounds = [], [], [], []
    for trial, child in enumerate(children):
        rng = np.random.default_rng(child)
        initial = rng.choice(graph.n_nodes, size=_initial_count(config, graph.n_nodes), replace=False)

        def accuracy_fn(weights, state):
            idx = state.unlabelled
            return _accuracy(weights, x_tilde[idx], graph.labels[idx])

        curve, queries, seconds, bounds = _run_trial(
            graph, x_tilde, config, rng, initial=initial, excluded=(), accuracy_fn=accuracy_fn
        )
        all_curves.append(curve)
        all_queries.append(queries)
        all_seconds.append(seconds)
        all_bounds.extend({**row, "trial": trial} for row in bounds)
    return RunArtifact.from_trials(config, all_curves, all_queries, all_seconds, all_bounds)


def _experiment2_inductive(config: ExperimentConfig, graph: Graph, features) -> RunArtifact:
    """Fit and select on the induced working subgraph; score held-out nodes.

    The full-graph propagation happens only at evaluation time: the
    learned weights are applied to features propagated over the whole
    graph, and accuracy is measured on the held-out nodes.
    """
    x_full = _featurize(graph, features, config)
    children = np.random.SeedSequence(config.seed).spawn(config.trials)
    all_curves, all_queries, all_seconds, all_bounds = [], [], [], []
    for trial, child in enumerate(children):
        rng = np.random.default_rng(child)
        n = graph.n_nodes
        held_size = int(round(config.holdout_fraction * n))
        held = np.sort(rng.choice(n, size=held_size, replace=False))
        kept = np.setdiff1d(np.arange(n), held)
        if len(kept) == 0:
            raise ConfigError("holdout fraction leaves an empty working graph")
        sub = Graph(
            adjacency=graph.adjacency[kept][:, kept].tocsr(),
            n_classes=graph.n_classes,
            labels=graph.labels[kept],
            name=f"{graph.name}-working",
        )
        x_work = _featurize(sub, features[kept], config)
        held_set = frozenset(int(i) for i in held)
        initial = rng.choice(sub.n_nodes, size=_initial_count(config, sub.n_nodes), replace=False)

        def accuracy_fn(weights, state):
            return _accuracy(weights, x_full[held], graph.labels[held])

        def query_check(q, kept=kept, held_set=held_set):
            if int(kept[q]) in held_set:
                raise AssertionError("held-out node reached the working graph")

        curve, queries, seconds, bounds = _run_trial(
            sub, x_work, config, rng, initial=initial, excluded=(), accuracy_fn=accuracy_fn,
            query_check=query_check,
        )
        all_curves.append(curve)
        all_queries.append([int(kept[q]) for q in queries])
        all_seconds.append(seconds)
        all_bounds.extend({**row, "trial": trial} for row in bounds)
    return RunArtifact.from_trials(config, all_curves, all_queries, all_seconds, all_bounds)

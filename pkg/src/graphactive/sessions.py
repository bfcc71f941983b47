"""Live labelling sessions: the preemptive timeline behind the wire API.

A session walks one oracle through a query budget.  With the
``pregeem`` strategy the next query is computed *while* the oracle is
labelling the current one, by standing in the predicted label; the
other strategies compute after each submission.  Either way the oracle
idle time for a step is ``max(0, compute_finish - label_submit)``.

Design notes:

* The engine never reads ground-truth labels.  Truth lives in the
  service layer, which injects an ``accuracy_fn``; selection sees only
  the graph structure, the propagated features and the labels the
  oracle has submitted.
* ``phase`` is one of ``idle`` / ``awaiting_label`` / ``computing_next``
  / ``next_ready``.  The preemptive overlap shows as ``computing_next``
  or ``next_ready`` with a query still outstanding.
* Every mutation bumps ``revision`` and appends to an append-only JSONL
  event log, so a crashed session can be reconstructed by replay.
* The selection RNG for the t-th issued query is
  ``default_rng([seed, t])``, which makes the query sequence a pure
  function of (dataset, config, submitted labels) — see
  ``replay_queries``.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .data import Graph
from .labelprop import ModelPosterior, combined_select
from .logistic import LabelState, SolverConfig, fit, predict_proba
from .preemptive import (
    PreemptiveContext,
    binary_risk_bound,
    make_preemptive_context,
    multiclass_risk_bound,
    select_query_preemptive,
)
from .propagation import normalize_adjacency, propagate_features, row_normalize
from .risk import _draw_eval_subset, expected_risk, select_query

__all__ = [
    "SessionConfig",
    "SessionError",
    "Session",
    "SessionRegistry",
    "replay_queries",
]

STRATEGIES = ("random", "geem", "pregeem", "combined", "lp-only")


class SessionError(ValueError):
    """Illegal request against the current session state."""


@dataclass(frozen=True)
class SessionConfig:
    strategy: str = "pregeem"
    seed: int = 0
    budget: int = 10
    initial_labels: object = 2  # count, or explicit [(node, label), ...]
    eval_subset_size: int | None = 200
    pool_size: int | None = 100
    lam: float = 1.0
    mode: str = "softmax"
    tol: float = 1e-6
    max_iter: int = 100
    hops: int = 2
    row_normalize: bool = True
    eps: float = 1e-6
    bounds: bool = False

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise SessionError(f"unknown strategy {self.strategy!r}")
        if self.budget < 1:
            raise SessionError("budget must be at least 1")
        if self.bounds and self.mode != "one-vs-all-normalized":
            raise SessionError("bound diagnostics require one-vs-all-normalized mode")
        if self.bounds and self.strategy != "pregeem":
            raise SessionError("bound diagnostics require the pregeem strategy")
        try:
            self.solver_config()
        except ValueError as exc:
            raise SessionError(str(exc)) from None

    @classmethod
    def from_dict(cls, raw: dict) -> "SessionConfig":
        raw = dict(raw or {})
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise SessionError(f"unknown config keys: {sorted(unknown)}")
        if isinstance(raw.get("initial_labels"), list):
            raw["initial_labels"] = tuple((int(n), int(c)) for n, c in raw["initial_labels"])
        try:
            return cls(**raw)
        except TypeError as exc:
            raise SessionError(str(exc)) from None

    def solver_config(self) -> SolverConfig:
        return SolverConfig(lam=self.lam, mode=self.mode, tol=self.tol, max_iter=self.max_iter)


class EventLog:
    """Append-only JSONL event log; in memory, mirrored to disk if given a path."""

    def __init__(self, path: Path | None = None):
        self.path = Path(path) if path is not None else None
        self.events: list[dict] = []

    def append(self, event: str, revision: int, **payload) -> dict:
        record = {
            "event": event,
            "revision": revision,
            "ts": time.time(),
            "mono": time.perf_counter(),
            **payload,
        }
        self.events.append(record)
        if self.path is not None:
            with self.path.open("a") as handle:
                handle.write(json.dumps(record, sort_keys=True) + "\n")
        return record


class Session:
    """One oracle's labelling session over a fixed dataset."""

    def __init__(
        self,
        session_id: str,
        graph: Graph,
        features,
        config: SessionConfig,
        *,
        initial_labels,
        accuracy_fn=None,
        log_path: Path | None = None,
    ):
        self.id = session_id
        self.graph = graph
        self.config = config
        self.solver = config.solver_config()
        self.accuracy_fn = accuracy_fn
        self.lock = threading.RLock()
        self.log = EventLog(log_path)
        self.revision = 0
        self.destroyed = False
        self._generation = 0

        feats = row_normalize(features) if config.row_normalize else features
        self.x_tilde = propagate_features(normalize_adjacency(graph), feats, config.hops)

        if len(initial_labels) == 0:
            raise SessionError("initial label set is empty: the model is undefined")
        state = LabelState(n_nodes=graph.n_nodes, n_classes=graph.n_classes)
        for node, label in initial_labels:
            state = state.add(int(node), int(label))
        self.state = state
        self.weights = self._fit()
        self.accuracy = [self._score()]

        self.outstanding: int | None = None
        self.outstanding_context: dict | None = None
        self.next_result: dict | None = None
        self.computing = False
        self.steps: list[dict] = []
        self._last_submit_mono: float | None = None

        self._bump("create", dataset=graph.name, config=self._config_dict())
        created = time.perf_counter()
        first = self._compute_selection(step_index=0, base_state=self.state, ctx=None)
        self._issue(first, created_mono=created)
        self._maybe_start_preemptive()

    # -- helpers ----------------------------------------------------------

    def _config_dict(self) -> dict:
        raw = {f.name: getattr(self.config, f.name) for f in fields(self.config)}
        if not isinstance(raw["initial_labels"], int):
            raw["initial_labels"] = [[int(n), int(c)] for n, c in raw["initial_labels"]]
        return raw

    def _bump(self, event: str, **payload) -> None:
        self.revision += 1
        self.log.append(event, self.revision, **payload)

    def _fit(self):
        return fit(
            self.x_tilde[self.state.labelled_array],
            self.state.label_array,
            self.state.n_classes,
            self.solver,
        )

    def _score(self):
        if self.accuracy_fn is None:
            return None
        return float(self.accuracy_fn(self.weights, self.state, self.x_tilde))

    def _pool(self, rng, state: LabelState, exclude: int | None = None) -> np.ndarray:
        available = state.unlabelled
        if exclude is not None:
            available = available[available != exclude]
        size = self.config.pool_size
        if size is not None and len(available) > size:
            return np.sort(rng.choice(available, size=size, replace=False))
        return available

    def _compute_selection(self, step_index: int, base_state: LabelState, ctx):
        """Select the query issued as step ``step_index`` (0-based)."""
        rng = np.random.default_rng([self.config.seed, step_index])
        cfg = self.config
        started = time.perf_counter()
        bound_payload = None
        if ctx is not None:
            pool = self._pool(rng, base_state, exclude=ctx.pending)
            query, _ = select_query_preemptive(
                ctx, base_state, self.x_tilde, self.solver, pool, cfg.eval_subset_size, rng=rng
            )
            if cfg.bounds:
                bound_payload = self._bound_for(int(query), ctx, base_state, rng)
        elif cfg.strategy == "random":
            query = int(rng.choice(self._pool(rng, base_state)))
        elif cfg.strategy in ("geem", "pregeem"):
            query, _ = select_query(
                base_state, self.x_tilde, self.solver, self._pool(rng, base_state),
                cfg.eval_subset_size, rng=rng,
            )
        else:
            posterior = (
                ModelPosterior(lam_lg=0.0, lam_lp=1.0, log_evidence_lg=0.0, log_evidence_lp=0.0)
                if cfg.strategy == "lp-only"
                else None
            )
            query, _ = combined_select(
                base_state, self.x_tilde, self.graph, self.solver, cfg.eps,
                self._pool(rng, base_state), cfg.eval_subset_size, rng=rng, posterior=posterior,
            )
        now = time.perf_counter()
        return {
            "query": int(query),
            "nu": now - started,
            "finished_mono": now,
            "bound": bound_payload,
            "ctx": ctx,
        }

    def _bound_for(self, query: int, ctx: PreemptiveContext, base_state: LabelState, rng):
        """Bound ingredients captured during the preemptive computation.

        The realized risk shift needs the true label, so it is finished
        at issue time (see ``_finish_bound``).
        """
        augmented = ctx.augmented(base_state)
        eval_idx = _draw_eval_subset(augmented.unlabelled, self.config.eval_subset_size, rng)
        bound_fn = binary_risk_bound if self.state.n_classes == 2 else multiclass_risk_bound
        report = bound_fn(query, ctx, base_state, self.x_tilde, self.solver, eval_idx)
        risk_predicted = expected_risk(query, augmented, self.x_tilde, self.solver, eval_idx)
        return {
            "report": report,
            "eval_idx": eval_idx,
            "base_state": base_state,
            "pending": int(ctx.pending),
            "risk_predicted": float(risk_predicted),
        }

    def _finish_bound(self, payload: dict, next_query: int) -> dict:
        """Realized |risk(true) − risk(predicted)| over the same eval subset."""
        submitted = dict(zip(self.state.indices, self.state.labels))
        true_label = submitted[payload["pending"]]
        truth_state = payload["base_state"].add(payload["pending"], int(true_label))
        risk_true = expected_risk(
            next_query, truth_state, self.x_tilde, self.solver, payload["eval_idx"]
        )
        realized = abs(payload["risk_predicted"] - risk_true)
        return payload["report"].with_realized(realized).to_dict()

    def _context_card(self, query: int) -> dict:
        """Decision context for the oracle: the model's view of the query node."""
        row = np.asarray(self.x_tilde[query])
        order = np.argsort(-np.abs(row))
        top = [[int(j), float(row[j])] for j in order[:10] if row[j] != 0.0]
        probs = predict_proba(self.weights, row[None, :])[0]
        labelled = dict(zip(self.state.indices, self.state.labels))
        neighbor_nodes = self.graph.neighbors(query)
        histogram: dict[int, int] = {}
        for node in neighbor_nodes:
            label = labelled.get(int(node))
            if label is not None:
                histogram[label] = histogram.get(label, 0) + 1
        return {
            "node": int(query),
            "features": top,
            "degree": int(len(neighbor_nodes)),
            "neighbor_labels": {str(k): v for k, v in sorted(histogram.items())},
            "probabilities": [float(p) for p in probs],
            "predicted": int(np.argmax(probs)),
        }

    # -- phase machine ----------------------------------------------------

    @property
    def labels_used(self) -> int:
        return sum(1 for rec in self.steps if rec["submitted"] is not None)

    @property
    def done(self) -> bool:
        return self.labels_used >= self.config.budget

    @property
    def phase(self) -> str:
        if self.computing:
            return "computing_next"
        if self.next_result is not None:
            return "next_ready"
        if self.outstanding is not None:
            return "awaiting_label"
        return "idle"

    def _issue(self, result: dict, created_mono: float | None = None) -> dict:
        """Make the computed query the outstanding one; record oracle idle time.

        Idle is max(0, compute_finish − label_submit): exactly zero when
        the preemptive computation beat the oracle.
        """
        now = time.perf_counter()
        reference = created_mono if created_mono is not None else self._last_submit_mono
        idle = max(0.0, result["finished_mono"] - reference)
        query = result["query"]
        ctx: PreemptiveContext | None = result["ctx"]
        if result.get("bound") is not None:
            # the previous step's pending label is committed by now
            self.steps[-1]["bound"] = self._finish_bound(result["bound"], query)
        context = self._context_card(query)
        self.outstanding = query
        self.outstanding_context = context
        record = {
            "step": len(self.steps) + 1,
            "query": query,
            "predicted": None if ctx is None else int(ctx.predicted),
            "submitted": None,
            "nu": result["nu"],
            "delta": None,
            "idle": idle,
            "accuracy": None,
            "bound": None,
            "issued_mono": now,
        }
        self.steps.append(record)
        self._bump("query-issued", step=record["step"], query=query, idle=idle, nu=result["nu"])
        return context

    def _maybe_start_preemptive(self) -> None:
        """During AwaitingLabel, start computing the next query from the prediction."""
        if self.config.strategy != "pregeem" or self.outstanding is None:
            return
        if self.labels_used + 1 >= self.config.budget:
            return  # the outstanding query is the last one
        ctx = make_preemptive_context(self.state, self.x_tilde, self.solver, self.outstanding)
        self.steps[-1]["predicted"] = int(ctx.predicted)
        self._start_compute(step_index=len(self.steps), base_state=self.state, ctx=ctx)

    def _start_compute(self, step_index: int, base_state: LabelState, ctx) -> None:
        self.computing = True
        self._generation += 1
        generation = self._generation
        self._bump("compute-started", step=step_index + 1, preemptive=ctx is not None)

        def work():
            try:
                result = self._compute_selection(step_index, base_state, ctx)
            except Exception as exc:  # surface failures through the log
                result = {"error": repr(exc)}
            with self.lock:
                if self.destroyed or generation != self._generation:
                    return
                self.computing = False
                if "error" in result:
                    self._bump("compute-failed", error=result["error"])
                    return
                self._bump("compute-finished", query=result["query"], nu=result["nu"])
                if self.outstanding is None:
                    self._issue(result)
                    self._maybe_start_preemptive()
                else:
                    self.next_result = result

        thread = threading.Thread(target=work, name=f"session-{self.id}-compute", daemon=True)
        thread.start()

    def submit_label(self, node: int, label: int) -> dict:
        with self.lock:
            self._check_alive()
            if self.outstanding is None:
                if self.done:
                    raise SessionError("budget exhausted: no outstanding query")
                raise SessionError("no outstanding query to label")
            if int(node) != self.outstanding:
                raise SessionError(
                    f"node {node} is not the outstanding query {self.outstanding}"
                )
            if not 0 <= int(label) < self.state.n_classes:
                raise SessionError(f"class {label} out of range")

            now = time.perf_counter()
            record = self.steps[-1]
            record["submitted"] = int(label)
            record["delta"] = now - record["issued_mono"]
            self._last_submit_mono = now
            self.state = self.state.add(int(node), int(label))
            self.weights = self._fit()
            self.accuracy.append(self._score())
            record["accuracy"] = self.accuracy[-1]
            self.outstanding = None
            self.outstanding_context = None
            self._bump(
                "label-submitted",
                step=record["step"],
                node=int(node),
                label=int(label),
                predicted=record["predicted"],
            )

            if self.done:
                self.next_result = None
                self._generation += 1  # orphan any stray compute
                self.computing = False
                return {
                    "status": "next",
                    "done": True,
                    "query": None,
                    "context": None,
                    "revision": self.revision,
                }
            if self.next_result is not None:
                result, self.next_result = self.next_result, None
                context = self._issue(result)
                self._maybe_start_preemptive()
                return {
                    "status": "next",
                    "done": False,
                    "query": result["query"],
                    "context": context,
                    "revision": self.revision,
                }
            if not self.computing:
                self._start_compute(
                    step_index=len(self.steps), base_state=self.state, ctx=None
                )
            return {"status": "pending", "done": False, "revision": self.revision}

    def get_state(self) -> dict:
        with self.lock:
            self._check_alive()
            return {
                "id": self.id,
                "revision": self.revision,
                "phase": self.phase,
                "dataset": self.graph.name,
                "strategy": self.config.strategy,
                "budget": self.config.budget,
                "classes": self.state.n_classes,
                "labels_used": self.labels_used,
                "done": self.done,
                "query": self.outstanding,
                "context": self.outstanding_context,
                "accuracy": self.accuracy[-1],
                "history": [
                    {
                        "step": rec["step"],
                        "query": rec["query"],
                        "predicted": rec["predicted"],
                        "submitted": rec["submitted"],
                    }
                    for rec in self.steps
                ],
            }

    def get_metrics(self) -> dict:
        with self.lock:
            self._check_alive()
            steps = [
                {
                    "step": rec["step"],
                    "query": rec["query"],
                    "predicted": rec["predicted"],
                    "submitted": rec["submitted"],
                    "nu": rec["nu"],
                    "delta": rec["delta"],
                    "idle": rec["idle"],
                    "accuracy": rec["accuracy"],
                    "bound": rec["bound"],
                }
                for rec in self.steps
            ]
            deltas = [s["delta"] for s in steps if s["delta"] is not None]
            return {
                "id": self.id,
                "revision": self.revision,
                "accuracy_curve": list(self.accuracy),
                "steps": steps,
                "totals": {
                    "mean_nu": float(np.mean([s["nu"] for s in steps])) if steps else 0.0,
                    "mean_delta": float(np.mean(deltas)) if deltas else 0.0,
                    "total_idle": float(sum(s["idle"] for s in steps)),
                },
            }

    def destroy(self) -> None:
        with self.lock:
            self.destroyed = True
            self._generation += 1
            self.computing = False
            self.next_result = None
            self.revision += 1
            self.log.append("destroy", self.revision)

    def _check_alive(self) -> None:
        if self.destroyed:
            raise KeyError(f"session {self.id} is destroyed")


class SessionRegistry:
    """Sessions by id, plus the dataset catalogue the service exposes."""

    def __init__(self, log_dir: Path | None = None):
        self.datasets: dict[str, dict] = {}
        self.sessions: dict[str, Session] = {}
        self.log_dir = Path(log_dir) if log_dir is not None else None
        self.lock = threading.Lock()

    def register_dataset(self, name: str, graph: Graph, features, truth=None) -> None:
        """Register a dataset.  ``truth=None`` withholds ground truth:
        accuracy is then unavailable and initial labels must be explicit."""
        self.datasets[name] = {"graph": graph, "features": features, "truth": truth}

    def dataset_descriptors(self) -> list[dict]:
        out = []
        for name, entry in sorted(self.datasets.items()):
            graph = entry["graph"]
            out.append(
                {
                    "name": name,
                    "nodes": graph.n_nodes,
                    "edges": graph.n_edges,
                    "classes": graph.n_classes,
                    "features": int(entry["features"].shape[1]),
                    "has_truth": entry["truth"] is not None,
                }
            )
        return out

    def create_session(self, dataset: str, config: SessionConfig) -> Session:
        if dataset not in self.datasets:
            raise KeyError(f"unknown dataset {dataset!r}")
        entry = self.datasets[dataset]
        truth = entry["truth"]
        initial = config.initial_labels
        if isinstance(initial, int):
            if truth is None:
                raise SessionError(
                    "ground truth is withheld: initial_labels must be explicit pairs"
                )
            rng = np.random.default_rng([config.seed])
            nodes = rng.choice(entry["graph"].n_nodes, size=initial, replace=False)
            initial = [(int(n), int(truth[n])) for n in nodes]

        accuracy_fn = None
        if truth is not None:
            truth_arr = np.asarray(truth)

            def accuracy_fn(weights, state, x_tilde, truth_arr=truth_arr):
                idx = state.unlabelled
                predicted = np.argmax(predict_proba(weights, x_tilde[idx]), axis=1)
                return float(np.mean(predicted == truth_arr[idx]))

        session_id = uuid.uuid4().hex[:12]
        log_path = None
        if self.log_dir is not None:
            self.log_dir.mkdir(parents=True, exist_ok=True)
            log_path = self.log_dir / f"{session_id}.jsonl"
        session = Session(
            session_id,
            entry["graph"],
            entry["features"],
            config,
            initial_labels=initial,
            accuracy_fn=accuracy_fn,
            log_path=log_path,
        )
        with self.lock:
            self.sessions[session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self.lock:
            if session_id not in self.sessions:
                raise KeyError(f"unknown session {session_id!r}")
            return self.sessions[session_id]

    def destroy(self, session_id: str) -> None:
        with self.lock:
            if session_id not in self.sessions:
                raise KeyError(f"unknown session {session_id!r}")
            session = self.sessions.pop(session_id)
        session.destroy()


def replay_queries(graph: Graph, features, config: SessionConfig, submissions) -> list[int]:
    """Recompute a session's query sequence from its submitted labels.

    ``submissions`` is the in-order list of (node, label) pairs after
    the initial labels (which must be explicit in ``config``).  A live
    session with the same dataset, config and submissions produces
    exactly this query sequence — the replay-equivalence property.
    """
    initial = config.initial_labels
    if isinstance(initial, int):
        raise SessionError("replay requires explicit initial labels")
    solver = config.solver_config()
    feats = row_normalize(features) if config.row_normalize else features
    x_tilde = propagate_features(normalize_adjacency(graph), feats, config.hops)
    state = LabelState(n_nodes=graph.n_nodes, n_classes=graph.n_classes)
    for node, label in initial:
        state = state.add(int(node), int(label))

    def pool_for(rng, current: LabelState, exclude=None):
        available = current.unlabelled
        if exclude is not None:
            available = available[available != exclude]
        size = config.pool_size
        if size is not None and len(available) > size:
            return np.sort(rng.choice(available, size=size, replace=False))
        return available

    queries: list[int] = []
    prev: tuple | None = None  # pregeem: submission whose label is not yet committed
    for index, (node, label) in enumerate(submissions):
        rng = np.random.default_rng([config.seed, index])
        if config.strategy == "pregeem" and prev is not None:
            # Next query was computed before prev's label arrived.
            ctx = make_preemptive_context(state, x_tilde, solver, int(prev[0]))
            query, _ = select_query_preemptive(
                ctx, state, x_tilde, solver, pool_for(rng, state, exclude=int(prev[0])),
                config.eval_subset_size, rng=rng,
            )
            state = state.add(int(prev[0]), int(prev[1]))
        elif config.strategy == "random":
            query = int(rng.choice(pool_for(rng, state)))
        elif config.strategy in ("geem", "pregeem"):
            query, _ = select_query(
                state, x_tilde, solver, pool_for(rng, state), config.eval_subset_size, rng=rng
            )
        else:
            posterior = (
                ModelPosterior(lam_lg=0.0, lam_lp=1.0, log_evidence_lg=0.0, log_evidence_lp=0.0)
                if config.strategy == "lp-only"
                else None
            )
            query, _ = combined_select(
                state, x_tilde, graph, solver, config.eps, pool_for(rng, state),
                config.eval_subset_size, rng=rng, posterior=posterior,
            )
        queries.append(int(query))
        if int(node) != int(query):
            raise SessionError(f"replay mismatch at step {index + 1}: {node} != {query}")
        if config.strategy == "pregeem":
            prev = (int(node), int(label))
        else:
            state = state.add(int(node), int(label))
    return queries

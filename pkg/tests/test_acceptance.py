"""Acceptance gate: the binding product criteria, one verdict line each.

Every test here drives the public surface the way a user would (bench
runs, the session engine, the bound reports) and appends exactly one
[PASS]/[FAIL] line to the terminal summary.  Two execution profiles:

* smoke (default): 5 trials, candidate pool 100, evaluation subset 200.
  Minutes-scale.  Accuracy windows widen to match the smaller sample:
  the b=30 window doubles and separation thresholds halve, mirroring
  the widened smoke window the b=30 target itself carries.
* full (GRAPHACTIVE_FULL_ACCEPTANCE=1): 20 trials, full candidate pool,
  evaluation subset 500 -- the pinned windows.  Hours-scale.

The benchmark calibration (ridge weight 0.001 on row-normalized
features) is shared by both profiles; see the bench module for why the
propagated row scale demands a small ridge.
"""

import os
import time
from functools import lru_cache
from pathlib import Path

import numpy as np

from graphactive import (
    ExperimentConfig,
    LabelState,
    Session,
    SessionConfig,
    SolverConfig,
    binary_risk_bound,
    expected_risk,
    load_dataset,
    make_preemptive_context,
    multiclass_risk_bound,
    run_experiment1,
    run_experiment2,
)
from graphactive.bench import PROFILES

from conftest import ACCEPTANCE_VERDICTS, random_state, wait_until
from oracles import oracle_expected_risk

DATA = Path(__file__).resolve().parent.parent / "data"
FULL = os.environ.get("GRAPHACTIVE_FULL_ACCEPTANCE", "") not in ("", "0")
PROFILE = "full" if FULL else "smoke"

# Shared benchmark calibration (see module docstring).
CALIBRATION = dict(lam=0.001, row_normalize=True, seed=0)

# Pinned targets and, for the smoke profile, their widened counterparts.
if FULL:
    TOL = dict(
        cora_b30=3.0,
        cora_b10=3.5,
        citeseer_b10=3.5,
        cora_gap=8.0,
        citeseer_gap=6.0,
        pregeem=2.5,
        inductive=5.0,
    )
else:
    TOL = dict(
        cora_b30=6.0,
        cora_b10=None,  # asserted under the full profile only
        citeseer_b10=7.0,
        cora_gap=4.0,
        citeseer_gap=3.0,
        pregeem=5.0,
        inductive=10.0,
    )


def verdict(name: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name} [{PROFILE}]: {detail}"
    ACCEPTANCE_VERDICTS.append(line)
    print(line)
    assert ok, line


@lru_cache(maxsize=None)
def exp1_curve(dataset: str, strategy: str) -> tuple:
    profile = PROFILES[PROFILE]
    config = ExperimentConfig(
        dataset=str(DATA / f"{dataset}.json"),
        experiment=1,
        strategy=strategy,
        budget=30,
        trials=profile["trials"],
        pool_size=profile["pool_size"],
        eval_subset_size=profile["eval_subset_size"],
        **CALIBRATION,
    )
    return tuple(100.0 * v for v in run_experiment1(config).mean_curve)


@lru_cache(maxsize=None)
def exp2_curve(setting: str, strategy: str) -> tuple:
    profile = PROFILES[PROFILE]
    config = ExperimentConfig(
        dataset=str(DATA / "cora.json"),
        experiment=2,
        setting=setting,
        strategy=strategy,
        budget=30,
        trials=profile["trials"],
        pool_size=profile["pool_size"],
        eval_subset_size=profile["eval_subset_size"],
        holdout_fraction=0.2 if setting == "inductive" else 0.0,
        **CALIBRATION,
    )
    return tuple(100.0 * v for v in run_experiment2(config).mean_curve)


class TestBenchmarkAccuracy:
    def test_cora_curve(self):
        """Expected-error minimization reaches the published operating
        points on Cora (budget-30 window always; budget-10 under the
        full profile)."""
        curve = exp1_curve("cora", "geem")
        b10, b30 = curve[10], curve[30]
        ok = abs(b30 - 77.2) <= TOL["cora_b30"]
        detail = f"geem b30={b30:.1f} (want 77.2±{TOL['cora_b30']:.1f}), b10={b10:.1f}"
        if TOL["cora_b10"] is not None:
            ok = ok and abs(b10 - 69.8) <= TOL["cora_b10"]
            detail += f" (want 69.8±{TOL['cora_b10']:.1f})"
        verdict("exp1-cora", ok, detail)

    def test_cora_beats_random(self):
        geem = exp1_curve("cora", "geem")[30]
        rand = exp1_curve("cora", "random")[30]
        gap = geem - rand
        verdict(
            "exp1-cora-vs-random",
            gap >= TOL["cora_gap"],
            f"geem b30={geem:.1f} vs random b30={rand:.1f}, "
            f"gap={gap:.1f} (want >={TOL['cora_gap']:.1f})",
        )

    def test_citeseer_curve_and_gap(self):
        geem = exp1_curve("citeseer", "geem")[10]
        rand = exp1_curve("citeseer", "random")[10]
        gap = geem - rand
        ok = abs(geem - 65.8) <= TOL["citeseer_b10"] and gap >= TOL["citeseer_gap"]
        verdict(
            "exp1-citeseer",
            ok,
            f"geem b10={geem:.1f} (want 65.8±{TOL['citeseer_b10']:.1f}), "
            f"random b10={rand:.1f}, gap={gap:.1f} (want >={TOL['citeseer_gap']:.1f})",
        )

    def test_pregeem_matches_geem(self):
        """Selecting against the predicted stand-in label costs almost
        nothing in final accuracy on either dataset."""
        diffs = {
            name: abs(exp1_curve(name, "pregeem")[30] - exp1_curve(name, "geem")[30])
            for name in ("cora", "citeseer")
        }
        ok = all(d <= TOL["pregeem"] for d in diffs.values())
        verdict(
            "pregeem-geem-parity",
            ok,
            f"|pregeem-geem| b30: cora={diffs['cora']:.1f}, "
            f"citeseer={diffs['citeseer']:.1f} (want <={TOL['pregeem']:.1f})",
        )

    def test_combined_model_averaging(self):
        """Model-averaged selection beats random labelling at both
        checkpoints, and scoring on held-out nodes lands near the
        transductive curve."""
        combined = exp2_curve("transductive", "combined")
        rand = exp2_curve("transductive", "random")
        inductive = exp2_curve("inductive", "combined")
        holdout_diff = abs(inductive[30] - combined[30])
        ok = (
            combined[10] > rand[10]
            and combined[30] > rand[30]
            and holdout_diff <= TOL["inductive"]
        )
        verdict(
            "exp2-combined",
            ok,
            f"combined b10/b30={combined[10]:.1f}/{combined[30]:.1f} vs "
            f"random {rand[10]:.1f}/{rand[30]:.1f}; "
            f"|inductive-transductive| b30={holdout_diff:.1f} "
            f"(want <={TOL['inductive']:.1f})",
        )


def _stability_instance(rng, k, scale):
    """A labelled state, a pending node with its stand-in label, a
    candidate, and an evaluation subset, sized per the bound-validity
    sweep (n <= 10, d <= 4, ridge in {0.5, 1, 2})."""
    n = int(rng.integers(k + 4, 11))
    d = int(rng.integers(1, 5))
    lam = float(rng.choice([0.5, 1.0, 2.0]))
    x = scale * rng.normal(size=(n, d))
    config = SolverConfig(lam=lam, mode="one-vs-all-normalized")
    n_lab = int(rng.integers(k, k + 2))
    if n - n_lab < 3:
        return None
    perm = rng.permutation(n)
    state = LabelState(
        n_nodes=n,
        n_classes=k,
        indices=tuple(int(v) for v in perm[:n_lab]),
        labels=tuple(
            int(v)
            for v in np.concatenate([np.arange(k), rng.integers(0, k, n_lab - k)])
        ),
    )
    pending, q = int(perm[n_lab]), int(perm[n_lab + 1])
    ctx = make_preemptive_context(state, x, config, pending)
    return state, ctx, q, perm[n_lab + 1 :], x, config


class TestTheory:
    def test_stability_bound_validity(self):
        """On random binary and 3-class instances, the realized risk
        shift from a wrong stand-in label never exceeds the stability
        bound wherever the bound is non-vacuous."""
        rng = np.random.default_rng(2026)
        started = time.perf_counter()
        violations = []
        counts = {}
        for k in (2, 3):
            checked = non_vacuous = 0
            while checked < 110 or non_vacuous < 40:
                inst = _stability_instance(rng, k, scale=float(rng.choice([0.2, 0.5, 1.0])))
                if inst is None:
                    continue
                state, ctx, q, eval_subset, x, config = inst
                bound_fn = binary_risk_bound if k == 2 else multiclass_risk_bound
                report = bound_fn(q, ctx, state, x, config, eval_subset)
                checked += 1
                if report.vacuous_nodes:
                    continue
                non_vacuous += 1
                true_label = int(rng.integers(0, k))
                r_hat = expected_risk(
                    q, state.add(ctx.pending, ctx.predicted), x, config, eval_subset
                )
                r_true = expected_risk(
                    q, state.add(ctx.pending, true_label), x, config, eval_subset
                )
                realized = abs(r_hat - r_true)
                if realized > report.bound + 1e-9:
                    violations.append((k, checked, realized, report.bound))
            counts[k] = (checked, non_vacuous)
        elapsed = time.perf_counter() - started
        ok = not violations and elapsed < 300 and all(c[0] >= 100 for c in counts.values())
        verdict(
            "stability-bound-validity",
            ok,
            f"binary {counts[2][1]}/{counts[2][0]} non-vacuous, "
            f"3-class {counts[3][1]}/{counts[3][0]} non-vacuous, "
            f"{len(violations)} violations, {elapsed:.0f}s (want <300s)",
        )

    def test_risk_matches_brute_force(self):
        """The production risk path agrees with a cold brute-force
        evaluation of the definition on every small instance."""
        rng = np.random.default_rng(77)
        started = time.perf_counter()
        worst = 0.0
        evaluated = 0
        for k in (2, 3):
            for n in range(k + 2, 9):
                for rep in range(4):
                    d = int(rng.integers(1, 5))
                    lam = float(rng.choice([0.5, 1.0, 2.0]))
                    mode = ("softmax", "one-vs-all-normalized")[rep % 2]
                    x = rng.normal(size=(n, d))
                    n_lab = k + (1 if n - k >= 4 and rng.integers(2) else 0)
                    state = random_state(rng, n, k, n_lab)
                    config = SolverConfig(lam=lam, mode=mode)
                    eval_subset = state.unlabelled
                    for q in eval_subset:
                        got = expected_risk(int(q), state, x, config, eval_subset)
                        want = oracle_expected_risk(
                            int(q), state.indices, state.labels, x, k, lam, mode, eval_subset
                        )
                        worst = max(worst, abs(got - want))
                        evaluated += 1
        elapsed = time.perf_counter() - started
        ok = worst <= 1e-9 and elapsed < 60
        verdict(
            "risk-oracle-equivalence",
            ok,
            f"{evaluated} candidate risks, worst |diff|={worst:.2e} "
            f"(want <=1e-09), {elapsed:.0f}s (want <60s)",
        )


class TestPipeline:
    def test_preemptive_overlap(self):
        """With a scripted oracle three times slower than the selector,
        every query after the first is already waiting when the label
        arrives: zero oracle idle time, shown by the event stream."""
        graph, features = load_dataset(DATA / "cora.json")
        initial = tuple((int(i), int(graph.labels[i])) for i in (0, 1, 2))
        config = SessionConfig(
            strategy="pregeem",
            seed=5,
            budget=4,
            initial_labels=initial,
            pool_size=40,
            eval_subset_size=200,
            lam=0.001,
        )
        session = Session("acceptance-overlap", graph, features, config, initial_labels=initial)
        try:
            for _ in range(config.budget):
                wait_until(lambda: session.outstanding is not None)
                node = session.outstanding
                time.sleep(3.0 * session.steps[-1]["nu"])  # scripted oracle delay
                session.submit_label(node, int(graph.labels[node]))
            wait_until(lambda: session.phase == "idle")

            idles = [step["idle"] for step in session.steps]
            events = session.log.events
            finished = {e["query"]: e["mono"] for e in events if e["event"] == "compute-finished"}
            submitted = {e["step"]: e["mono"] for e in events if e["event"] == "label-submitted"}
            issued = {e["step"]: e["query"] for e in events if e["event"] == "query-issued"}
            overlapped = all(
                finished[issued[step]] <= submitted[step - 1]
                for step in range(2, len(session.steps) + 1)
            )
            ok = all(idle == 0.0 for idle in idles[1:]) and overlapped
            verdict(
                "preemptive-overlap",
                ok,
                f"idle after first step: {[f'{v:.3f}' for v in idles[1:]]} "
                f"(want all 0.000), compute finished before each label: {overlapped}",
            )
        finally:
            session.destroy()

    def test_determinism(self, tmp_path):
        """The same configuration and seed reproduce byte-identical run
        artifacts."""
        config = ExperimentConfig(
            dataset=str(DATA / "cora.json"),
            experiment=1,
            strategy="geem",
            trials=2,
            budget=3,
            pool_size=50,
            eval_subset_size=100,
            **CALIBRATION,
        )
        first, second = run_experiment1(config), run_experiment1(config)
        for artifact, name in ((first, "a"), (second, "b")):
            artifact.write(tmp_path / name)
        bytes_a = (tmp_path / "a" / "run.json").read_bytes()
        bytes_b = (tmp_path / "b" / "run.json").read_bytes()
        ok = first.to_json() == second.to_json() and bytes_a == bytes_b
        verdict(
            "determinism",
            ok,
            f"two identical runs, run.json {len(bytes_a)} bytes, "
            f"byte-identical: {bytes_a == bytes_b}",
        )

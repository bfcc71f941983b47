"""
Driving the labelling service over HTTP
=======================================

The session engine is exposed as a small HTTP API so a labelling
front-end (or a script standing in for the oracle) can create a
session, receive queries with context, and submit labels.  This script
exercises the whole loop in-process via Starlette's test client -- the
same wire format a real deployment serves with
``uvicorn --factory graphactive.service:create_app``.

Requires the ``test`` extra (httpx) for the in-process client.
"""

import json
import time
from pathlib import Path

from fastapi.testclient import TestClient

from graphactive import load_dataset
from graphactive.service import create_app, default_registry

DATA = Path(__file__).resolve().parent.parent

# The default registry scans data directories for dataset containers.
client = TestClient(create_app(default_registry(data_dirs=(DATA / "data",))))

# The scripted oracle reads the true labels straight from the container;
# the wire API itself never reveals them.
truth, _ = load_dataset(DATA / "data" / "cora.json")

print("datasets on offer:")
for row in client.get("/datasets").json()["datasets"]:
    print(f"  {row['name']}: {row['nodes']} nodes, {row['classes']} classes")

# -- create a session ---------------------------------------------------------
# Five initial labels are bootstrapped from the held truth; the engine
# immediately returns the first query with its context card.
created = client.post(
    "/sessions",
    json={
        "dataset": "cora",
        "strategy": "pregeem",
        "seed": 42,
        "config": {
            "budget": 3,
            "initial_labels": 5,
            "pool_size": 60,
            "eval_subset_size": 200,
            "lam": 0.001,
        },
    },
).json()
session_id = created["id"]
print(f"\nsession {session_id[:8]}… created, phase={created['phase']}")

# -- label until the budget is spent ------------------------------------------
while True:
    snapshot = client.get(f"/sessions/{session_id}").json()
    if snapshot["query"] is None:
        if snapshot["phase"] == "idle":  # budget exhausted
            break
        time.sleep(0.05)  # the next query is still computing
        continue
    context = snapshot["context"]
    top = ", ".join(f"{i}:{v:.2f}" for i, v in context["features"][:3])
    print(
        f"\nquery node {snapshot['query']} "
        f"(degree {context['degree']}, top features {top})"
    )
    print(f"  model belief: {[f'{p:.2f}' for p in context['probabilities']]}")
    # The oracle answers truthfully.
    answer = int(truth.labels[snapshot["query"]])
    result = client.post(
        f"/sessions/{session_id}/label",
        json={"node": snapshot["query"], "class": answer},
    ).json()
    print(f"  submitted class {answer} -> status {result['status']}")

# -- wrap up -------------------------------------------------------------------
metrics = client.get(f"/sessions/{session_id}/metrics").json()
curve = [None if a is None else round(100 * a, 1) for a in metrics["accuracy_curve"]]
print(f"\naccuracy curve (%): {curve}")
print(f"totals: {json.dumps(metrics['totals'], indent=2)}")
client.delete(f"/sessions/{session_id}")

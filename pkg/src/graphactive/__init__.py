"""Active learning on attributed graphs by expected-error minimization.

The pipeline: propagate node features over the normalized adjacency
(an SGC transform), fit L2-regularized logistic regression on the
labelled nodes, and pick the next query by minimizing the expected
misclassification risk over the unlabelled set — optionally before the
oracle has even answered the current query, by standing in the
predicted label (preemptive selection, with logistic-stability bounds
on the induced risk error).  A Gaussian-random-field label-propagation
model joins in through evidence-weighted model averaging.
"""

from .bench import (
    ConfigError,
    ExperimentConfig,
    RunArtifact,
    bootstrap_ci,
    run_experiment1,
    run_experiment2,
)
from .data import (
    DatasetError,
    Graph,
    largest_connected_component,
    load_dataset,
    resolve_dataset_path,
    save_dataset,
)
from .labelprop import (
    ModelPosterior,
    PropagationModel,
    combined_select,
    evidence_weights,
    harmonic_predict,
    lp_evidence,
    lp_expected_risk,
    model_posterior,
)
from .logistic import (
    LabelState,
    RegressionWeights,
    SolverConfig,
    fit,
    log_evidence,
    predict_proba,
)
from .preemptive import (
    BoundReport,
    PreemptiveContext,
    binary_risk_bound,
    commit_label,
    logistic_stability_eta,
    make_preemptive_context,
    multiclass_risk_bound,
    predicted_label,
    select_query_preemptive,
)
from .propagation import normalize_adjacency, propagate_features, row_normalize
from .risk import RiskReport, expected_risk, select_query
from .sessions import Session, SessionConfig, SessionError, SessionRegistry, replay_queries

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "ConfigError",
    "DatasetError",
    "ExperimentConfig",
    "Graph",
    "LabelState",
    "ModelPosterior",
    "PreemptiveContext",
    "PropagationModel",
    "RegressionWeights",
    "RiskReport",
    "RunArtifact",
    "Session",
    "SessionConfig",
    "SessionError",
    "SessionRegistry",
    "SolverConfig",
    "binary_risk_bound",
    "bootstrap_ci",
    "combined_select",
    "commit_label",
    "evidence_weights",
    "expected_risk",
    "fit",
    "harmonic_predict",
    "largest_connected_component",
    "load_dataset",
    "log_evidence",
    "logistic_stability_eta",
    "lp_evidence",
    "lp_expected_risk",
    "make_preemptive_context",
    "model_posterior",
    "multiclass_risk_bound",
    "normalize_adjacency",
    "predict_proba",
    "predicted_label",
    "propagate_features",
    "replay_queries",
    "resolve_dataset_path",
    "row_normalize",
    "run_experiment1",
    "run_experiment2",
    "save_dataset",
    "select_query",
    "select_query_preemptive",
    "__version__",
]

/** Wire types for the session service. Field names mirror the JSON exactly. */

export type Phase = "computing_next" | "next_ready" | "awaiting_label" | "idle";

/** Decision context for one query node. */
export interface QueryContext {
  node: number;
  /** Top nonzero features by magnitude, as [feature index, value]; at most 10. */
  features: [number, number][];
  degree: number;
  /** Neighbour label histogram: class id (as string) -> count. */
  neighbor_labels: Record<string, number>;
  /** Model class distribution for the node; sums to ~1. */
  probabilities: number[];
  predicted: number;
}

export interface HistoryRow {
  step: number;
  query: number;
  predicted: number | null;
  submitted: number | null;
}

export interface Snapshot {
  id: string;
  revision: number;
  phase: Phase;
  dataset: string;
  strategy: string;
  budget: number;
  classes: number;
  labels_used: number;
  done: boolean;
  query: number | null;
  context: QueryContext | null;
  accuracy: number | null;
  history: HistoryRow[];
}

export interface CreateSessionRequest {
  dataset: string;
  strategy?: string;
  seed?: number;
  config?: Record<string, unknown>;
}

export interface CreateSessionResponse {
  id: string;
  query: number | null;
  context: QueryContext | null;
  revision: number;
  phase: Phase;
  budget: number;
  classes: number;
  dataset: string;
}

export interface LabelResponse {
  status: "next" | "pending";
  done: boolean;
  query?: number | null;
  context?: QueryContext | null;
  revision: number;
}

export interface BoundDiagnostics {
  eta: number;
  bound: number;
  per_node: number[];
  vacuous_nodes: number;
  realized: number | null;
}

export interface StepMetrics {
  step: number;
  query: number;
  predicted: number | null;
  submitted: number | null;
  /** Compute seconds for this query's selection. */
  nu: number;
  /** Oracle labelling seconds (null while outstanding). */
  delta: number | null;
  /** Seconds the oracle waited for this query; 0 when precomputed. */
  idle: number;
  accuracy: number | null;
  bound: BoundDiagnostics | null;
}

export interface Metrics {
  id: string;
  revision: number;
  accuracy_curve: (number | null)[];
  steps: StepMetrics[];
  totals: {
    mean_nu: number;
    mean_delta: number;
    total_idle: number;
  };
}

export interface DatasetDescriptor {
  name: string;
  nodes: number;
  edges: number;
  classes: number;
  features: number;
  has_truth: boolean;
}

/** Pure DOM builders: snapshot + metrics in, elements out.
 *
 * No view keeps state of record; everything renders from the latest
 * service responses, so a page reload reconstructs the exact view.
 */

import type { Metrics, QueryContext, Snapshot, StepMetrics } from "./types.js";

/** Pixels per second in the pipeline bars. */
const PX_PER_SECOND = 120;

export interface ViewState {
  /** A mutation request is on the wire: buttons freeze, spinner shows. */
  inFlight: boolean;
  /** A service rejection to surface inline, without losing the card. */
  error: string | null;
}

export interface Handlers {
  onLabel: (klass: number) => void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

const SVG_NS = "http://www.w3.org/2000/svg";

function formatSeconds(value: number): string {
  return `${value.toFixed(value < 0.1 ? 3 : 2)}s`;
}

// -- QueryCard ---------------------------------------------------------------

/** The oracle's decision context for the outstanding query. */
export function renderQueryCard(
  context: QueryContext,
  classes: number,
  revision: number,
  state: ViewState,
  handlers: Handlers,
): HTMLElement {
  const card = el("section", {
    class: "query-card",
    "data-node": String(context.node),
    "data-revision": String(revision),
  });
  card.append(el("h2", {}, [`node ${context.node}`]));

  const chips: HTMLElement[] = [
    el("span", { class: "degree" }, [`degree ${context.degree}`]),
  ];
  for (const [klass, count] of Object.entries(context.neighbor_labels)) {
    chips.push(
      el("span", { class: "chip", "data-class": klass }, [
        `class ${klass} × ${count}`,
      ]),
    );
  }
  card.append(el("div", { class: "badges" }, chips));

  const features = context.features.slice(0, 10).map(([index, value]) =>
    el("li", {}, [
      el("span", { class: "feature-name" }, [`f${index}`]),
      el("span", { class: "feature-value" }, [value.toFixed(4)]),
    ]),
  );
  card.append(el("ul", { class: "features" }, features));

  const rows = context.probabilities.map((p, klass) =>
    el(
      "div",
      {
        class: klass === context.predicted ? "prob-row predicted" : "prob-row",
        "data-class": String(klass),
      },
      [
        el("span", { class: "prob-label" }, [`class ${klass}`]),
        el("div", { class: "prob-track" }, [
          el("div", {
            class: "prob-bar",
            style: `width: ${(100 * p).toFixed(1)}%`,
          }),
        ]),
        el("span", { class: "prob-value" }, [p.toFixed(2)]),
      ],
    ),
  );
  card.append(el("div", { class: "probabilities" }, rows));

  const buttons = el("div", { class: "label-buttons" });
  for (let klass = 0; klass < classes; klass += 1) {
    const button = el("button", { class: "label-button", "data-class": String(klass) }, [
      String(klass),
    ]);
    button.disabled = state.inFlight;
    button.addEventListener("click", () => handlers.onLabel(klass));
    buttons.append(button);
  }
  card.append(buttons);

  if (state.inFlight) {
    card.append(el("div", { class: "spinner" }, ["submitting…"]));
  }
  return card;
}

/** Placeholder card while the service is still computing the query. */
export function renderComputingCard(): HTMLElement {
  return el("section", { class: "query-card pending" }, [
    el("div", { class: "spinner" }, ["computing next query…"]),
  ]);
}

// -- PipelineView --------------------------------------------------------------

function bar(kind: string, seconds: number, attrs: Record<string, string> = {}): HTMLElement {
  return el("div", {
    class: `bar ${kind}`,
    style: `width: ${Math.max(2, Math.round(seconds * PX_PER_SECOND))}px`,
    "data-seconds": String(seconds),
    title: `${kind.split(" ")[0]} ${formatSeconds(seconds)}`,
    ...attrs,
  });
}

/** Per-step Δ and ν bars.  The compute bar for step t+1 sits in step t's
 * lane: while the oracle labels query t, the engine computes query t+1. */
export function renderPipelineView(steps: StepMetrics[], phase: string): HTMLElement {
  const section = el("section", { class: "pipeline" }, [
    el("h3", {}, [
      "pipeline ",
      el("span", { class: "phase-badge", "data-phase": phase }, [
        phase.replace("_", " "),
      ]),
    ]),
  ]);
  const rows = el("ol", { class: "pipeline-rows" });
  steps.forEach((step, position) => {
    const row = el("li", { class: "pipeline-row", "data-step": String(step.step) });
    row.append(el("span", { class: "step-label" }, [String(step.step)]));
    const lane = el("div", { class: "lane" });
    if (position === 0) {
      // The first compute is unavoidable serial time.
      lane.append(bar("nu serial", step.nu, { "data-step": String(step.step) }));
    }
    lane.append(
      step.delta === null
        ? el("div", { class: "bar delta outstanding", "data-step": String(step.step) }, [
            "labelling…",
          ])
        : bar("delta", step.delta, { "data-step": String(step.step) }),
    );
    const next = steps[position + 1];
    if (next !== undefined) {
      lane.append(bar("nu overlap", next.nu, { "data-for-step": String(next.step) }));
    }
    row.append(lane);
    rows.append(row);
  });
  section.append(rows);
  return section;
}

// -- accuracy sparkline ----------------------------------------------------------

/** Accuracy per label count; null entries (truth withheld) leave gaps.
 * The raw curve rides on data-values, exactly as served. */
export function renderSparkline(
  curve: (number | null)[],
  width = 160,
  height = 40,
): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("class", "sparkline");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("data-values", curve.map((v) => (v === null ? "" : String(v))).join(","));
  const span = Math.max(1, curve.length - 1);
  const points = curve
    .map((value, index) => ({ value, index }))
    .filter((p): p is { value: number; index: number } => p.value !== null)
    .map((p) => {
      const x = (p.index / span) * width;
      const y = height - p.value * height;
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    });
  const line = document.createElementNS(SVG_NS, "polyline");
  line.setAttribute("class", "spark-line");
  line.setAttribute("points", points.join(" "));
  svg.append(line);
  if (points.length > 0) {
    const [lastX, lastY] = points[points.length - 1].split(",");
    const dot = document.createElementNS(SVG_NS, "circle");
    dot.setAttribute("class", "spark-dot");
    dot.setAttribute("cx", lastX);
    dot.setAttribute("cy", lastY);
    dot.setAttribute("r", "2");
    svg.append(dot);
  }
  return svg;
}

// -- history + terminal summary ---------------------------------------------------

export function renderHistory(snapshot: Snapshot): HTMLElement {
  const body = el("tbody");
  for (const row of snapshot.history) {
    body.append(
      el("tr", { "data-step": String(row.step) }, [
        el("td", {}, [String(row.step)]),
        el("td", {}, [String(row.query)]),
        el("td", {}, [row.predicted === null ? "—" : String(row.predicted)]),
        el("td", {}, [row.submitted === null ? "—" : String(row.submitted)]),
      ]),
    );
  }
  return el("table", { class: "history" }, [
    el("thead", {}, [
      el("tr", {}, [
        el("th", {}, ["step"]),
        el("th", {}, ["node"]),
        el("th", {}, ["guess"]),
        el("th", {}, ["label"]),
      ]),
    ]),
    body,
  ]);
}

export function renderTerminalSummary(snapshot: Snapshot, metrics: Metrics): HTMLElement {
  const section = el("section", { class: "terminal-summary" }, [
    el("h2", {}, ["session complete"]),
    el("p", { class: "summary-line" }, [
      `budget exhausted: ${snapshot.labels_used}/${snapshot.budget} labels submitted`,
    ]),
  ]);
  if (snapshot.accuracy !== null) {
    section.append(
      el("p", { class: "final-accuracy" }, [
        `final accuracy ${(100 * snapshot.accuracy).toFixed(1)}%`,
      ]),
    );
  }
  section.append(renderSparkline(metrics.accuracy_curve));
  section.append(
    el("dl", { class: "totals" }, [
      el("dt", {}, ["mean compute ν"]),
      el("dd", {}, [formatSeconds(metrics.totals.mean_nu)]),
      el("dt", {}, ["mean labelling Δ"]),
      el("dd", {}, [formatSeconds(metrics.totals.mean_delta)]),
      el("dt", {}, ["oracle idle"]),
      el("dd", {}, [formatSeconds(metrics.totals.total_idle)]),
    ]),
  );
  return section;
}

// -- the whole session view -----------------------------------------------------

/** Compose the full console from the latest snapshot and metrics. */
export function renderSession(
  root: HTMLElement,
  snapshot: Snapshot,
  metrics: Metrics,
  state: ViewState,
  handlers: Handlers,
): void {
  const header = el("header", { class: "session-header" }, [
    el("span", { class: "dataset" }, [snapshot.dataset]),
    el("span", { class: "strategy" }, [snapshot.strategy]),
    el("span", { class: "progress" }, [
      `${snapshot.labels_used}/${snapshot.budget} labels`,
    ]),
    el("span", { class: "phase-badge", "data-phase": snapshot.phase }, [
      snapshot.phase.replace("_", " "),
    ]),
  ]);

  const parts: HTMLElement[] = [header];
  if (state.error !== null) {
    parts.push(el("div", { class: "error-banner", role: "alert" }, [state.error]));
  }

  if (snapshot.done) {
    parts.push(renderTerminalSummary(snapshot, metrics));
  } else if (snapshot.query !== null && snapshot.context !== null) {
    parts.push(
      renderQueryCard(snapshot.context, snapshot.classes, snapshot.revision, state, handlers),
    );
  } else {
    parts.push(renderComputingCard());
  }

  parts.push(renderPipelineView(metrics.steps, snapshot.phase));

  const accuracy = el("section", { class: "accuracy" }, [
    el("h3", {}, ["accuracy"]),
    renderSparkline(metrics.accuracy_curve),
  ]);
  parts.push(accuracy);
  parts.push(renderHistory(snapshot));

  root.replaceChildren(el("div", { class: "session" }, parts));
}

/** Session controller: the single place that talks to the service.
 *
 * All state of record lives server-side; the controller holds only the
 * latest snapshot/metrics pair plus transient request state.  At most
 * one mutation request is ever in flight, and a submit interrupted by a
 * network failure is never blindly repeated: the controller refetches
 * the snapshot and checks (by revision and history) whether the label
 * already landed before re-posting.
 */

import { ApiClient, ServiceError } from "./api.js";
import { renderSession } from "./views.js";
import type { CreateSessionRequest, Metrics, Snapshot } from "./types.js";

/** Advisory poll interval from the wire contract. */
export const POLL_INTERVAL_MS = 500;

export interface ControllerOptions {
  pollIntervalMs?: number;
  /** Retries per request on network failure (not on service rejections). */
  maxRetries?: number;
  /** First backoff delay; doubles per retry. */
  backoffBaseMs?: number;
  /** Injectable clock for tests. */
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export class SessionController {
  snapshot: Snapshot;
  metrics: Metrics;
  inFlight = false;
  error: string | null = null;

  private readonly pollIntervalMs: number;
  private readonly maxRetries: number;
  private readonly backoffBaseMs: number;
  private readonly sleep: (ms: number) => Promise<void>;
  private busy: Promise<void> = Promise.resolve();

  private constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
    snapshot: Snapshot,
    metrics: Metrics,
    options: ControllerOptions,
  ) {
    this.snapshot = snapshot;
    this.metrics = metrics;
    this.pollIntervalMs = options.pollIntervalMs ?? POLL_INTERVAL_MS;
    this.maxRetries = options.maxRetries ?? 5;
    this.backoffBaseMs = options.backoffBaseMs ?? 250;
    this.sleep = options.sleep ?? defaultSleep;
  }

  /** Create a fresh session and render it. */
  static async create(
    api: ApiClient,
    root: HTMLElement,
    request: CreateSessionRequest,
    options: ControllerOptions = {},
  ): Promise<SessionController> {
    const created = await api.createSession(request);
    return SessionController.resume(api, root, created.id, options);
  }

  /** Reconstruct the view for an existing session (e.g. page reload). */
  static async resume(
    api: ApiClient,
    root: HTMLElement,
    id: string,
    options: ControllerOptions = {},
  ): Promise<SessionController> {
    const snapshot = await api.getSession(id);
    const metrics = await api.getMetrics(id);
    const controller = new SessionController(api, root, snapshot, metrics, options);
    controller.render();
    if (snapshot.query === null && !snapshot.done) {
      // Reloaded mid-computation: fall into the ordinary poll loop.
      controller.track(
        controller
          .pollUntilNext()
          .then(() => controller.refresh())
          .then(() => controller.render()),
      );
    }
    return controller;
  }

  /** Resolves when every action started so far has settled. */
  settled(): Promise<void> {
    return this.busy;
  }

  render(): void {
    renderSession(
      this.root,
      this.snapshot,
      this.metrics,
      { inFlight: this.inFlight, error: this.error },
      { onLabel: (klass) => this.submitAndAdvance(klass) },
    );
  }

  /** Submit a label for the outstanding query, then advance the card. */
  submitAndAdvance(klass: number): Promise<void> {
    if (this.inFlight || this.snapshot.query === null) {
      return this.busy; // one in-flight mutation, ever
    }
    const node = this.snapshot.query;
    const action = this.run(node, klass);
    this.track(action);
    return action;
  }

  private track(action: Promise<void>): void {
    this.busy = this.busy.then(() => action.catch(() => undefined));
  }

  private async run(node: number, klass: number): Promise<void> {
    this.inFlight = true;
    this.error = null;
    this.render();
    try {
      const submitted = await this.submitOnce(node, klass);
      if (submitted === "pending") {
        await this.pollUntilNext();
      }
      await this.refresh();
    } catch (err) {
      if (err instanceof ServiceError) {
        // The service made a decision: surface it, keep the card.
        this.error = err.message;
      } else {
        this.error = "network unreachable; please retry";
      }
    } finally {
      this.inFlight = false;
      this.render();
    }
  }

  /** POST the label, retrying network failures with backoff -- but never
   * re-posting a submission the service already recorded. */
  private async submitOnce(node: number, klass: number): Promise<"next" | "pending"> {
    const revisionBefore = this.snapshot.revision;
    let attempt = 0;
    for (;;) {
      try {
        const response = await this.api.submitLabel(this.snapshot.id, node, klass);
        return response.status;
      } catch (err) {
        if (err instanceof ServiceError) throw err; // a decision, not an outage
        attempt += 1;
        if (attempt > this.maxRetries) throw err;
        await this.sleep(this.backoffBaseMs * 2 ** (attempt - 1));
        const landed = await this.checkAlreadySubmitted(node, revisionBefore);
        if (landed !== null) return landed;
      }
    }
  }

  /** After a lost response: did the submission reach the service?  Only a
   * snapshot whose revision moved past the pre-submit revision AND whose
   * history records a label for the node counts. */
  private async checkAlreadySubmitted(
    node: number,
    revisionBefore: number,
  ): Promise<"next" | "pending" | null> {
    let snapshot: Snapshot;
    try {
      snapshot = await this.api.getSession(this.snapshot.id);
    } catch {
      return null; // still unreachable; the retry loop continues
    }
    this.snapshot = snapshot;
    const recorded = snapshot.history.some(
      (row) => row.query === node && row.submitted !== null,
    );
    if (snapshot.revision > revisionBefore && recorded) {
      return snapshot.query !== null || snapshot.done ? "next" : "pending";
    }
    return null;
  }

  /** Poll at the advisory interval until the next query is issued (or the
   * budget is spent), retrying transient failures with backoff. */
  private async pollUntilNext(): Promise<void> {
    let failures = 0;
    for (;;) {
      await this.sleep(this.pollIntervalMs);
      try {
        const snapshot = await this.api.getSession(this.snapshot.id);
        failures = 0;
        this.snapshot = snapshot;
        if (snapshot.query !== null || snapshot.done) return;
      } catch (err) {
        if (err instanceof ServiceError) throw err;
        failures += 1;
        if (failures > this.maxRetries) throw err;
        await this.sleep(this.backoffBaseMs * 2 ** (failures - 1));
      }
    }
  }

  /** Pull the freshest snapshot + metrics pair. */
  private async refresh(): Promise<void> {
    this.snapshot = await this.api.getSession(this.snapshot.id);
    this.metrics = await this.api.getMetrics(this.snapshot.id);
  }
}

/** Thin typed client over the session-service wire API. */

import type {
  CreateSessionRequest,
  CreateSessionResponse,
  DatasetDescriptor,
  LabelResponse,
  Metrics,
  Snapshot,
} from "./types.js";

/** Injectable fetch, so tests can stand in a mocked service. */
export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** The service answered with a non-2xx status and a decision we must surface. */
export class ServiceError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ServiceError";
  }
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    // Network failures reject here and stay distinguishable from
    // ServiceError: the caller cannot know whether the request landed.
    const response = await this.fetchImpl(this.base + path, init);
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      const detail =
        typeof (body as { detail?: unknown }).detail === "string"
          ? (body as { detail: string }).detail
          : `request failed with status ${response.status}`;
      throw new ServiceError(response.status, detail);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  listDatasets(): Promise<{ datasets: DatasetDescriptor[] }> {
    return this.request("/datasets");
  }

  createSession(request: CreateSessionRequest): Promise<CreateSessionResponse> {
    return this.post("/sessions", request);
  }

  getSession(id: string): Promise<Snapshot> {
    return this.request(`/sessions/${id}`);
  }

  submitLabel(id: string, node: number, klass: number): Promise<LabelResponse> {
    return this.post(`/sessions/${id}/label`, { node, class: klass });
  }

  getMetrics(id: string): Promise<Metrics> {
    return this.request(`/sessions/${id}/metrics`);
  }

  deleteSession(id: string): Promise<{ deleted: string }> {
    return this.request(`/sessions/${id}`, { method: "DELETE" });
  }
}

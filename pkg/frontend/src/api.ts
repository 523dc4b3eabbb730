// Typed client for the trial service's /v1 API. The console performs no
// statistics of its own: every number it shows comes from these payloads.

export interface IntervalProb {
  dose: number;
  under: number;
  target: number;
  over: number;
}

export interface Recommendation {
  dose_index: number;
  dose: number;
  rationale: string;
  mtd_quantile: number;
  interval_probs: IntervalProb[];
}

export interface Band {
  dose: number;
  lower: number;
  median: number;
  upper: number;
}

export interface Assessment {
  recommendation: Recommendation;
  bands: Band[];
  acceptance_rate: number;
  seed: number;
}

export interface CohortRow {
  dose_index: number;
  dose: number;
  n_patients: number;
  dlt_count: number;
  ndltae_count: number;
  posted_at: string;
  recommendation: Recommendation;
}

export interface TrialSummary {
  id: string;
  created_at: string;
  status: "enrolling" | "complete";
  n_cohorts: number;
  recommended_dose_index: number;
  recommended_dose: number;
}

export interface TrialDetail {
  id: string;
  created_at: string;
  status: "enrolling" | "complete";
  seed: number;
  config: Record<string, unknown>;
  initial_recommendation: Recommendation;
  cohorts: CohortRow[];
  current: Assessment;
  declared_mtd_index?: number;
  declared_mtd_dose?: number;
}

export interface WhatIfResponse {
  trial_id: string;
  hypothetical: boolean;
  assessment: Assessment;
}

export interface CohortPayload {
  dose_index: number;
  n_patients: number;
  dlt_count: number;
  ndltae_count: number;
  override_dose?: boolean;
}

interface ErrorBody {
  code: string;
  message: string;
  field_errors: string[];
}

/** A non-2xx response, carrying the service's structured error body. */
export class ApiFailure extends Error {
  status: number;
  code: string;
  fieldErrors: string[];

  constructor(status: number, body: ErrorBody) {
    super(body.message);
    this.status = status;
    this.code = body.code;
    this.fieldErrors = body.field_errors ?? [];
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private base: string;
  private token: string;
  private fetchFn: FetchLike;

  constructor(base = "", token = "", fetchFn?: FetchLike) {
    this.base = base.replace(/\/$/, "");
    this.token = token;
    // bind so a bare window.fetch keeps its receiver
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  setToken(token: string): void {
    this.token = token;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const response = await this.fetchFn(this.base + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let parsed: ErrorBody;
      try {
        parsed = await response.json();
      } catch {
        parsed = { code: "http_error", message: `HTTP ${response.status}`, field_errors: [] };
      }
      throw new ApiFailure(response.status, parsed);
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string; version: string }> {
    return this.request("GET", "/v1/healthz");
  }

  listTrials(): Promise<{ trials: TrialSummary[] }> {
    return this.request("GET", "/v1/trials");
  }

  createTrial(req: { seed?: number; idempotency_key?: string; config?: unknown }): Promise<TrialDetail> {
    return this.request("POST", "/v1/trials", req);
  }

  getTrial(id: string): Promise<TrialDetail> {
    return this.request("GET", `/v1/trials/${id}`);
  }

  postCohort(id: string, cohort: CohortPayload): Promise<TrialDetail> {
    return this.request("POST", `/v1/trials/${id}/cohorts`, cohort);
  }

  /** Hypothetical projection; the service never records it. */
  whatIf(id: string, cohort: CohortPayload): Promise<WhatIfResponse> {
    return this.request("POST", `/v1/trials/${id}/whatif`, cohort);
  }
}

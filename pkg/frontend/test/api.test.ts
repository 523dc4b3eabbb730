import { describe, expect, it } from "vitest";

import { ApiClient, ApiFailure } from "../src/api.js";

interface Seen {
  url: string;
  init?: RequestInit;
}

function fakeFetch(status: number, body: unknown) {
  const seen: Seen[] = [];
  const fetchFn = async (url: string, init?: RequestInit) => {
    seen.push({ url, init });
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { seen, fetchFn };
}

describe("ApiClient", () => {
  it("sends a bearer token once configured", async () => {
    const { seen, fetchFn } = fakeFetch(200, { trials: [] });
    const client = new ApiClient("", "hunter2", fetchFn);
    await client.listTrials();
    const headers = seen[0].init?.headers as Record<string, string>;
    expect(headers["Authorization"]).toBe("Bearer hunter2");
    expect(seen[0].url).toBe("/v1/trials");
  });

  it("omits the header without a token", async () => {
    const { seen, fetchFn } = fakeFetch(200, { trials: [] });
    await new ApiClient("", "", fetchFn).listTrials();
    const headers = seen[0].init?.headers as Record<string, string>;
    expect(headers["Authorization"]).toBeUndefined();
  });

  it("raises ApiFailure carrying the service's structured error", async () => {
    const { fetchFn } = fakeFetch(422, {
      code: "validation_error",
      message: "invalid cohort",
      field_errors: ["'dlt_count' must lie in [0, n_patients=3]"],
    });
    const client = new ApiClient("", "", fetchFn);
    const err = await client
      .postCohort("t00", { dose_index: 0, n_patients: 3, dlt_count: 4, ndltae_count: 0 })
      .then(
        () => null,
        (e: unknown) => e,
      );
    expect(err).toBeInstanceOf(ApiFailure);
    const failure = err as ApiFailure;
    expect(failure.status).toBe(422);
    expect(failure.code).toBe("validation_error");
    expect(failure.message).toBe("invalid cohort");
    expect(failure.fieldErrors).toEqual(["'dlt_count' must lie in [0, n_patients=3]"]);
  });

  it("survives an error body that is not JSON", async () => {
    const fetchFn = async () => new Response("gateway timeout", { status: 504 });
    const err = await new ApiClient("", "", fetchFn).health().then(
      () => null,
      (e: unknown) => e,
    );
    expect(err).toBeInstanceOf(ApiFailure);
    expect((err as ApiFailure).code).toBe("http_error");
  });

  it("routes what-if strictly to /whatif, never the cohort endpoint", async () => {
    const { seen, fetchFn } = fakeFetch(200, {
      trial_id: "t00",
      hypothetical: true,
      assessment: {},
    });
    const client = new ApiClient("", "", fetchFn);
    await client.whatIf("t00", { dose_index: 1, n_patients: 3, dlt_count: 2, ndltae_count: 0 });
    expect(seen.length).toBe(1);
    expect(seen[0].url).toBe("/v1/trials/t00/whatif");
    expect(seen[0].url).not.toContain("/cohorts");
    expect(seen[0].init?.method).toBe("POST");
  });

  it("strips a trailing slash from the base url", async () => {
    const { seen, fetchFn } = fakeFetch(200, { status: "ok", version: "0" });
    await new ApiClient("http://localhost:8000/", "", fetchFn).health();
    expect(seen[0].url).toBe("http://localhost:8000/v1/healthz");
  });
});

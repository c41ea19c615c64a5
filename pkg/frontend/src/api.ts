// Thin typed client over the service's REST endpoints. Errors arrive as
// application/problem+json bodies; ApiError carries their stable code
// plus any template-validation findings.

import type {
  DisputeDoc,
  DisputeRef,
  Finding,
  HealthDoc,
  RunDoc,
  RunRequest,
  TemplatePayload,
} from "./types.js";

let apiBase = "";

/** Point the client at another origin (tests and the e2e driver). */
export function setApiBase(url: string): void {
  apiBase = url.replace(/\/$/, "");
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    readonly detail: string,
    readonly findings: Finding[] = [],
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

async function request<T>(method: string, path: string, body?: unknown): Promise<T> {
  const res = await fetch(apiBase + path, {
    method,
    headers: body === undefined ? undefined : { "content-type": "application/json" },
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  if (res.ok) return (await res.json()) as T;
  let problem: Record<string, unknown> = {};
  try {
    problem = await res.json();
  } catch {
    // non-JSON error body; fall through to the generic message
  }
  throw new ApiError(
    res.status,
    String(problem.code ?? "http_error"),
    String(problem.detail ?? `${res.status} ${res.statusText}`),
    (problem.findings as Finding[] | undefined) ?? [],
  );
}

export const fetchHealth = (): Promise<HealthDoc> => request("GET", "/api/health");

export const listDisputes = (): Promise<{ disputes: DisputeRef[] }> =>
  request("GET", "/api/disputes");

export const createDispute = (
  payload: TemplatePayload,
): Promise<{ dispute_id: string; dataset: string; version: number }> =>
  request("POST", "/api/disputes", payload);

export const getDispute = (disputeId: string): Promise<DisputeDoc> =>
  request("GET", `/api/disputes/${encodeURIComponent(disputeId)}`);

export const addVersion = (
  disputeId: string,
  payload: TemplatePayload,
): Promise<{ dispute_id: string; dataset: string; version: number }> =>
  request("POST", `/api/disputes/${encodeURIComponent(disputeId)}/versions`, payload);

export const startRun = (req: RunRequest): Promise<{ run_id: string; status: string }> =>
  request("POST", "/api/runs", req);

export const getRun = (runId: string, diffAgainst?: string): Promise<RunDoc> => {
  const query = diffAgainst ? `?diff_against=${encodeURIComponent(diffAgainst)}` : "";
  return request("GET", `/api/runs/${encodeURIComponent(runId)}${query}`);
};

// HTTP client for the review service. All reads and the one mutation the
// UI is allowed: posting verdicts. No scoring happens client-side.

import type { CandidatePage, CandidateView, Stats } from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

export interface ListParams {
  status?: string;
  minTotal?: number;
  surveyId?: string;
  page?: number;
  pageSize?: number;
}

export interface ReviewApi {
  listCandidates(params?: ListParams): Promise<CandidatePage>;
  getCandidate(id: string): Promise<CandidateView>;
  postVerdict(id: string, verdict: boolean, note?: string): Promise<CandidateView>;
  getStats(surveyId?: string): Promise<Stats>;
  imageUrl(id: string, slot: string): string;
}

async function parseOrThrow<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = await response.json();
      detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return response.json() as Promise<T>;
}

export class HttpReviewApi implements ReviewApi {
  constructor(private base: string = "") {}

  private url(path: string, query?: Record<string, string | number | undefined>): string {
    const params = new URLSearchParams();
    for (const [key, value] of Object.entries(query ?? {})) {
      if (value !== undefined) params.set(key, String(value));
    }
    const suffix = params.size > 0 ? `?${params.toString()}` : "";
    return `${this.base}${path}${suffix}`;
  }

  listCandidates(params: ListParams = {}): Promise<CandidatePage> {
    return fetch(this.url("/api/candidates", {
      status: params.status,
      min_total: params.minTotal,
      survey_id: params.surveyId,
      page: params.page,
      page_size: params.pageSize,
    })).then((r) => parseOrThrow<CandidatePage>(r));
  }

  getCandidate(id: string): Promise<CandidateView> {
    return fetch(this.url(`/api/candidates/${id}`)).then((r) => parseOrThrow<CandidateView>(r));
  }

  postVerdict(id: string, verdict: boolean, note?: string): Promise<CandidateView> {
    return fetch(this.url(`/api/candidates/${id}/verdict`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ verdict, note: note ?? null }),
    }).then((r) => parseOrThrow<CandidateView>(r));
  }

  getStats(surveyId?: string): Promise<Stats> {
    return fetch(this.url("/api/stats", { survey_id: surveyId }))
      .then((r) => parseOrThrow<Stats>(r));
  }

  imageUrl(id: string, slot: string): string {
    return `${this.base}/api/candidates/${id}/image/${slot}`;
  }
}

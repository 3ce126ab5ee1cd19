// Shared test doubles: candidate builders and an in-memory API that
// mirrors the review service's verdict semantics (including 409s).

import { ApiError, type ListParams, type ReviewApi } from "../src/api.js";
import type { CandidatePage, CandidateView, Stats, Status } from "../src/types.js";

export function makeCandidate(
  index: number,
  overrides: Partial<CandidateView> = {},
): CandidateView {
  const total = overrides.counts?.total ?? 21;
  return {
    id: `cand-${String(index).padStart(3, "0")}`,
    survey_id: "asu",
    point: { lat: 33.41 + index * 1e-4, lon: -111.9328 },
    status: "candidate",
    counts: { short_wall: total, railing: 0, stairs: 0, total },
    probability: Math.min(1, total / 40),
    positive: total > 20,
    verdict_note: null,
    sat: { available: true, quadrant_probs: [0.2, 0.4, 0.1, 0.3] },
    street: [0, 1, 2, 3].map((slot) => ({
      slot: `street${slot}`,
      available: true,
      image_size: [640, 640] as [number, number],
      detections: [],
    })),
    ...overrides,
  };
}

/** The published survey outcome: 46 positives awaiting verdicts. */
export function asuFixture(): CandidateView[] {
  return Array.from({ length: 46 }, (_, i) => makeCandidate(i));
}

export class FakeApi implements ReviewApi {
  records = new Map<string, CandidateView>();
  offline = false;
  inFlight = 0;
  maxInFlight = 0;
  verdictLog: { id: string; verdict: boolean }[] = [];

  constructor(candidates: CandidateView[] = []) {
    for (const candidate of candidates) {
      this.records.set(candidate.id, structuredClone(candidate));
    }
  }

  private networkCheck(): void {
    if (this.offline) throw new TypeError("fetch failed");
  }

  async listCandidates(params: ListParams = {}): Promise<CandidatePage> {
    this.networkCheck();
    const all = [...this.records.values()].sort((a, b) => a.id.localeCompare(b.id));
    const filtered = all.filter((c) => {
      if (params.status !== undefined && c.status !== params.status) return false;
      if (params.minTotal !== undefined && c.counts.total < params.minTotal) return false;
      return true;
    });
    const page = params.page ?? 1;
    const pageSize = params.pageSize ?? 50;
    const items = filtered.slice((page - 1) * pageSize, page * pageSize);
    return {
      items: structuredClone(items),
      page,
      page_size: pageSize,
      total: filtered.length,
    };
  }

  async getCandidate(id: string): Promise<CandidateView> {
    this.networkCheck();
    const record = this.records.get(id);
    if (record === undefined) throw new ApiError(404, "unknown candidate");
    return structuredClone(record);
  }

  async postVerdict(id: string, verdict: boolean): Promise<CandidateView> {
    this.networkCheck();
    this.inFlight += 1;
    this.maxInFlight = Math.max(this.maxInFlight, this.inFlight);
    try {
      await Promise.resolve(); // let overlapping calls overlap
      const record = this.records.get(id);
      if (record === undefined) throw new ApiError(404, "unknown candidate");
      if (record.status !== "candidate") {
        throw new ApiError(409, `already ${record.status}`);
      }
      record.status = (verdict ? "verified_true" : "verified_false") as Status;
      this.verdictLog.push({ id, verdict });
      return structuredClone(record);
    } finally {
      this.inFlight -= 1;
    }
  }

  async getStats(): Promise<Stats> {
    this.networkCheck();
    const all = [...this.records.values()];
    const nTrue = all.filter((c) => c.status === "verified_true").length;
    const nFalse = all.filter((c) => c.status === "verified_false").length;
    return {
      n_coordinates: all.length,
      n_positive: all.filter((c) => c.positive).length,
      n_verified_true: nTrue,
      n_verified_false: nFalse,
      precision: nTrue + nFalse === 0 ? null : nTrue / (nTrue + nFalse),
    };
  }

  imageUrl(id: string, slot: string): string {
    return `/api/candidates/${id}/image/${slot}`;
  }

  statusOf(id: string): Status {
    return this.records.get(id)!.status;
  }
}

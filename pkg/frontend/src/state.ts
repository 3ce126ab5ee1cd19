// Review session state: the candidate set, the current filter and
// selection, and the optimistic verdict queue.
//
// Verdicts apply to the local copy immediately (triage speed is the whole
// point), then flush to the server strictly in order, one in flight at a
// time. Any conflict or failure response reconciles the local copy from
// the server, so after the queue drains the UI state always equals the
// server state.

import { ApiError, type ReviewApi } from "./api.js";
import type { CandidateView, Stats, Status } from "./types.js";

export interface Filter {
  status?: Status;
  minTotal?: number;
}

interface PendingVerdict {
  id: string;
  verdict: boolean;
}

export type SessionEvent =
  | { kind: "loaded"; count: number }
  | { kind: "updated"; id: string }
  | { kind: "selected"; id: string | null }
  | { kind: "stats"; stats: Stats }
  | { kind: "queue"; pending: number; retrying: boolean }
  | { kind: "error"; message: string };

export class ReviewSession {
  private candidates = new Map<string, CandidateView>();
  private order: string[] = [];
  private pending: PendingVerdict[] = [];
  private flushPromise: Promise<void> | null = null;
  private retrying = false;
  private listeners: ((event: SessionEvent) => void)[] = [];

  selectedId: string | null = null;
  filter: Filter = {};
  stats: Stats | null = null;
  lastError: string | null = null;

  constructor(private api: ReviewApi, private surveyId?: string) {}

  subscribe(listener: (event: SessionEvent) => void): void {
    this.listeners.push(listener);
  }

  private emit(event: SessionEvent): void {
    for (const listener of this.listeners) listener(event);
  }

  async load(): Promise<void> {
    try {
      const all: CandidateView[] = [];
      let page = 1;
      for (;;) {
        const batch = await this.api.listCandidates({
          surveyId: this.surveyId, page, pageSize: 200,
        });
        all.push(...batch.items);
        if (all.length >= batch.total || batch.items.length === 0) break;
        page += 1;
      }
      this.candidates = new Map(all.map((c) => [c.id, c]));
      this.order = all.map((c) => c.id);
      this.lastError = null;
      this.emit({ kind: "loaded", count: all.length });
      await this.refreshStats();
    } catch (error) {
      this.lastError = error instanceof Error ? error.message : String(error);
      this.emit({ kind: "error", message: this.lastError });
      throw error;
    }
  }

  all(): CandidateView[] {
    return this.order
      .map((id) => this.candidates.get(id))
      .filter((c): c is CandidateView => c !== undefined);
  }

  /** Candidates passing the active filter, in load order. */
  visible(): CandidateView[] {
    return this.all().filter((c) => this.matchesFilter(c));
  }

  private matchesFilter(candidate: CandidateView): boolean {
    if (this.filter.status !== undefined && candidate.status !== this.filter.status) {
      return false;
    }
    if (this.filter.minTotal !== undefined && candidate.counts.total < this.filter.minTotal) {
      return false;
    }
    return true;
  }

  setFilter(filter: Filter): void {
    this.filter = filter;
    if (this.selectedId !== null) {
      const selected = this.candidates.get(this.selectedId);
      if (selected === undefined || !this.matchesFilter(selected)) {
        this.select(null);
      }
    }
    this.emit({ kind: "loaded", count: this.visible().length });
  }

  get(id: string): CandidateView | undefined {
    return this.candidates.get(id);
  }

  select(id: string | null): void {
    if (id !== null && !this.candidates.has(id)) return;
    this.selectedId = id;
    this.emit({ kind: "selected", id });
  }

  selected(): CandidateView | null {
    return this.selectedId === null ? null : this.candidates.get(this.selectedId) ?? null;
  }

  /** Move the selection within the visible list; wraps around. */
  selectStep(step: 1 | -1): void {
    const visible = this.visible();
    if (visible.length === 0) return;
    const index = visible.findIndex((c) => c.id === this.selectedId);
    const next = index === -1
      ? (step === 1 ? 0 : visible.length - 1)
      : (index + step + visible.length) % visible.length;
    this.select(visible[next]!.id);
  }

  pendingCount(): number {
    return this.pending.length;
  }

  isRetrying(): boolean {
    return this.retrying;
  }

  /**
   * Optimistically mark the candidate and queue the server write. Only
   * records still in candidate status accept a verdict.
   */
  submitVerdict(id: string, verdict: boolean): boolean {
    const candidate = this.candidates.get(id);
    if (candidate === undefined || candidate.status !== "candidate") return false;
    this.applyLocal({
      ...candidate,
      status: verdict ? "verified_true" : "verified_false",
    });
    this.pending.push({ id, verdict });
    this.emit({ kind: "queue", pending: this.pending.length, retrying: this.retrying });
    void this.flush();
    return true;
  }

  private applyLocal(candidate: CandidateView): void {
    this.candidates.set(candidate.id, candidate);
    this.emit({ kind: "updated", id: candidate.id });
  }

  /**
   * Drain the queue in order, one request in flight at a time. Joining an
   * in-progress drain returns its promise, so awaiting flush() always
   * means "the queue is empty or stalled on a network failure".
   */
  flush(): Promise<void> {
    if (this.flushPromise === null) {
      this.flushPromise = this.drain().finally(() => {
        this.flushPromise = null;
      });
    }
    return this.flushPromise;
  }

  private async drain(): Promise<void> {
    while (this.pending.length > 0) {
      const next = this.pending[0]!;
      try {
        const updated = await this.api.postVerdict(next.id, next.verdict);
        this.applyLocal(updated);
      } catch (error) {
        if (error instanceof ApiError) {
          // Conflict or rejection: the server owns the truth. Reconcile
          // and drop the verdict.
          await this.reconcile(next.id);
        } else {
          // Network failure: keep the verdict queued for a later retry.
          this.retrying = true;
          this.emit({ kind: "queue", pending: this.pending.length, retrying: true });
          return;
        }
      }
      this.pending.shift();
      this.retrying = false;
      this.emit({ kind: "queue", pending: this.pending.length, retrying: false });
    }
    await this.refreshStats();
  }

  /** Retry a queue stalled by a network failure. */
  async retry(): Promise<void> {
    if (this.pending.length === 0) return;
    await this.flush();
  }

  private async reconcile(id: string): Promise<void> {
    try {
      const fresh = await this.api.getCandidate(id);
      this.applyLocal(fresh);
    } catch {
      // Candidate vanished server-side; drop it locally too.
      this.candidates.delete(id);
      this.order = this.order.filter((existing) => existing !== id);
      if (this.selectedId === id) this.select(null);
    }
  }

  async refreshStats(): Promise<void> {
    try {
      this.stats = await this.api.getStats(this.surveyId);
      this.emit({ kind: "stats", stats: this.stats });
    } catch (error) {
      this.lastError = error instanceof Error ? error.message : String(error);
      this.emit({ kind: "error", message: this.lastError });
    }
  }
}

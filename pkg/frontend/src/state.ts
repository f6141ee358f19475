/** Designer view state: sliders, debounced decode requests, stale-response
 * sequencing, per-dimension traversal cache.
 *
 * The UI never computes chemistry; every molecule and computed-property
 * value shown comes from a service response stored here. The state is
 * reconstructible from (session seed, slider values). */
import type { DecodeResponse } from "./types.js";

export const SLIDER_RANGE: [number, number] = [-5, 5];
export const DEBOUNCE_MS = 150;

export type Scheduler = (fn: () => void, ms: number) => unknown;
export type Canceler = (handle: unknown) => void;

export interface StateSnapshot {
  sessionId: string | null;
  sliders: Record<number, number>;
  smiles: string | null;
  predicted: Record<string, number>;
  computed: Record<string, number>;
  stale: boolean;
}

export class DesignerState {
  sessionId: string | null = null;
  sessionSeed: number | null = null;
  sliders = new Map<number, number>();
  lastResponse: DecodeResponse | null = null;
  traversalCache = new Map<number, DecodeResponse[]>();
  stale = false;

  private timer: unknown = null;
  private nextSeq = 0;
  private appliedSeq = -1;
  private inFlight = false;
  private queued = false;

  constructor(
    private targetedDims: number[],
    private sendDecode: (overrides: { dim: number; value: number }[]) => Promise<DecodeResponse>,
    private onChange: (snapshot: StateSnapshot) => void = () => {},
    private schedule: Scheduler = (fn, ms) => setTimeout(fn, ms),
    private cancel: Canceler = (h) => clearTimeout(h as number),
  ) {
    for (const dim of targetedDims) {
      this.sliders.set(dim, 0);
    }
  }

  attachSession(sessionId: string, seed: number): void {
    this.sessionId = sessionId;
    this.sessionSeed = seed;
    this.traversalCache.clear();
  }

  overrides(): { dim: number; value: number }[] {
    return this.targetedDims.map((dim) => ({ dim, value: this.sliders.get(dim) ?? 0 }));
  }

  /** Clamp to the slider range, then debounce one decode request. */
  onSliderChange(dim: number, value: number): void {
    if (!this.sliders.has(dim)) {
      throw new Error(`dimension ${dim} is not targeted`);
    }
    const clamped = Math.min(SLIDER_RANGE[1], Math.max(SLIDER_RANGE[0], value));
    this.sliders.set(dim, clamped);
    if (this.timer !== null) {
      this.cancel(this.timer);
    }
    this.timer = this.schedule(() => {
      this.timer = null;
      void this.flush();
    }, DEBOUNCE_MS);
  }

  /** Issue the decode now (debounce elapsed); keeps at most one in flight. */
  async flush(): Promise<void> {
    if (this.inFlight) {
      this.queued = true;
      return;
    }
    this.inFlight = true;
    const seq = this.nextSeq++;
    try {
      const response = await this.sendDecode(this.overrides());
      this.applyResponse(seq, response);
      this.stale = false;
    } catch {
      this.stale = true; // keep showing the previous molecule, flag it stale
      this.emit();
    } finally {
      this.inFlight = false;
      if (this.queued) {
        this.queued = false;
        void this.flush();
      }
    }
  }

  /** Apply a response unless a newer one has already been applied. */
  applyResponse(seq: number, response: DecodeResponse): boolean {
    if (seq <= this.appliedSeq) {
      return false;
    }
    this.appliedSeq = seq;
    this.lastResponse = response;
    this.emit();
    return true;
  }

  get requestsInFlight(): number {
    return this.inFlight ? 1 : 0;
  }

  cacheTraversal(dim: number, points: DecodeResponse[]): void {
    this.traversalCache.set(dim, points);
  }

  snapshot(): StateSnapshot {
    return {
      sessionId: this.sessionId,
      sliders: Object.fromEntries(this.sliders),
      smiles: this.lastResponse?.smiles ?? null,
      predicted: this.lastResponse?.predicted_properties ?? {},
      computed: this.lastResponse?.computed_properties ?? {},
      stale: this.stale,
    };
  }

  private emit(): void {
    this.onChange(this.snapshot());
  }
}

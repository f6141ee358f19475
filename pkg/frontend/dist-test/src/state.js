export const SLIDER_RANGE = [-5, 5];
export const DEBOUNCE_MS = 150;
export class DesignerState {
    constructor(targetedDims, sendDecode, onChange = () => { }, schedule = (fn, ms) => setTimeout(fn, ms), cancel = (h) => clearTimeout(h)) {
        this.targetedDims = targetedDims;
        this.sendDecode = sendDecode;
        this.onChange = onChange;
        this.schedule = schedule;
        this.cancel = cancel;
        this.sessionId = null;
        this.sessionSeed = null;
        this.sliders = new Map();
        this.lastResponse = null;
        this.traversalCache = new Map();
        this.stale = false;
        this.timer = null;
        this.nextSeq = 0;
        this.appliedSeq = -1;
        this.inFlight = false;
        this.queued = false;
        for (const dim of targetedDims) {
            this.sliders.set(dim, 0);
        }
    }
    attachSession(sessionId, seed) {
        this.sessionId = sessionId;
        this.sessionSeed = seed;
        this.traversalCache.clear();
    }
    overrides() {
        return this.targetedDims.map((dim) => ({ dim, value: this.sliders.get(dim) ?? 0 }));
    }
    /** Clamp to the slider range, then debounce one decode request. */
    onSliderChange(dim, value) {
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
    async flush() {
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
        }
        catch {
            this.stale = true; // keep showing the previous molecule, flag it stale
            this.emit();
        }
        finally {
            this.inFlight = false;
            if (this.queued) {
                this.queued = false;
                void this.flush();
            }
        }
    }
    /** Apply a response unless a newer one has already been applied. */
    applyResponse(seq, response) {
        if (seq <= this.appliedSeq) {
            return false;
        }
        this.appliedSeq = seq;
        this.lastResponse = response;
        this.emit();
        return true;
    }
    get requestsInFlight() {
        return this.inFlight ? 1 : 0;
    }
    cacheTraversal(dim, points) {
        this.traversalCache.set(dim, points);
    }
    snapshot() {
        return {
            sessionId: this.sessionId,
            sliders: Object.fromEntries(this.sliders),
            smiles: this.lastResponse?.smiles ?? null,
            predicted: this.lastResponse?.predicted_properties ?? {},
            computed: this.lastResponse?.computed_properties ?? {},
            stale: this.stale,
        };
    }
    emit() {
        this.onChange(this.snapshot());
    }
}

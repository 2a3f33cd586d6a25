/** Viewer state and the request loop that keeps it honest.
 *
 * The store is the only component that talks to the segmentation endpoint.
 * It owns four invariants:
 *
 *   - seed markers live at exact voxel positions, never canvas pixels;
 *   - the contour overlay always comes from the latest *completed* job;
 *   - at most one segmentation request is in flight, and edits made while
 *     it runs coalesce into a single follow-up carrying the newest seeds;
 *   - the seed list reported to the side panel equals the seed set of the
 *     last request actually sent, not whatever is queued.
 *
 * Slice scrubbing and window changes never touch the segmentation
 * endpoint; they only change which slice image the view fetches.
 */

import {
  ContourSlice,
  RequestFailed,
  SegmentApi,
  SegmentRequest,
  SegmentStats,
  Triple,
} from "./api.js";

/** A seed in fractional voxel coordinates. */
export interface Seed {
  x: number;
  y: number;
  z: number;
}

export interface SentSeeds {
  primary: Seed;
  extras: Seed[];
}

export interface ViewerSnapshot {
  sessionId: string | null;
  dims: Triple;
  spacingMm: Triple;
  intensityRange: [number, number];
  slice: number;
  windowLo: number;
  windowHi: number;
  primary: Seed | null;
  extras: Seed[];
  sentSeeds: SentSeeds | null;
  contours: ContourSlice[];
  stats: SegmentStats | null;
  busy: boolean;
  lastError: string | null;
}

export type Listener = (snap: ViewerSnapshot) => void;

const copySeed = (s: Seed): Seed => ({ x: s.x, y: s.y, z: s.z });

export class ViewerStore {
  private sessionId: string | null = null;
  private dims: Triple = [0, 0, 0];
  private spacingMm: Triple = [1, 1, 1];
  private intensityRange: [number, number] = [0, 0];
  private slice = 0;
  private windowLo = 0;
  private windowHi = 0;
  private primary: Seed | null = null;
  private extras: Seed[] = [];
  private sentSeeds: SentSeeds | null = null;
  private contours: ContourSlice[] = [];
  private stats: SegmentStats | null = null;
  private busy = false;
  private lastError: string | null = null;

  private dirty = false;
  private inFlight = false;
  private listeners = new Set<Listener>();

  constructor(
    private readonly api: SegmentApi,
    private readonly params?: Record<string, number>,
  ) {}

  subscribe(fn: Listener): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }

  snapshot(): ViewerSnapshot {
    return {
      sessionId: this.sessionId,
      dims: [...this.dims],
      spacingMm: [...this.spacingMm],
      intensityRange: [...this.intensityRange],
      slice: this.slice,
      windowLo: this.windowLo,
      windowHi: this.windowHi,
      primary: this.primary ? copySeed(this.primary) : null,
      extras: this.extras.map(copySeed),
      sentSeeds: this.sentSeeds
        ? {
            primary: copySeed(this.sentSeeds.primary),
            extras: this.sentSeeds.extras.map(copySeed),
          }
        : null,
      contours: this.contours,
      stats: this.stats,
      busy: this.busy,
      lastError: this.lastError,
    };
  }

  /** Contour polylines of the latest completed job on one axial slice. */
  contoursFor(slice: number): number[][][] {
    for (const rec of this.contours) {
      if (rec.slice === slice) return rec.polylines;
    }
    return [];
  }

  async open(path: string, reference?: string): Promise<void> {
    const meta = await this.api.openSession(path, reference);
    this.sessionId = meta.session_id;
    this.dims = meta.dims;
    this.spacingMm = meta.spacing_mm;
    this.intensityRange = meta.intensity_range;
    this.slice = Math.floor(meta.dims[2] / 2);
    [this.windowLo, this.windowHi] = meta.intensity_range;
    this.primary = null;
    this.extras = [];
    this.sentSeeds = null;
    this.contours = [];
    this.stats = null;
    this.lastError = null;
    this.emit();
  }

  /** Scrub to another axial slice; fetches a new image, never re-segments. */
  setSlice(z: number): void {
    const zmax = Math.max(this.dims[2] - 1, 0);
    this.slice = Math.min(Math.max(Math.round(z), 0), zmax);
    this.emit();
  }

  /** Adjust the display window; never re-segments. */
  setWindow(lo: number, hi: number): void {
    this.windowLo = lo;
    this.windowHi = hi;
    this.emit();
  }

  /** Place (or move) the primary seed on the current slice. A second
   * primary click replaces the first. */
  placePrimary(x: number, y: number): void {
    if (!this.sessionId) return;
    this.primary = { x, y, z: this.slice };
    this.scheduleRun();
  }

  /** Add a border seed on the current slice, or remove one when the click
   * lands on an existing marker (within ``tol`` voxels in-plane). Either
   * way the segmentation re-runs with the updated seed set. */
  clickExtra(x: number, y: number, tol = 0.75): void {
    if (!this.sessionId || !this.primary) return;
    const hit = this.hitExtra(x, y, tol);
    if (hit >= 0) {
      this.extras.splice(hit, 1);
    } else {
      this.extras.push({ x, y, z: this.slice });
    }
    this.scheduleRun();
  }

  /** Index of the extra marker on the current slice within ``tol`` voxels
   * of (x, y), or -1. */
  hitExtra(x: number, y: number, tol = 0.75): number {
    for (let i = 0; i < this.extras.length; i++) {
      const s = this.extras[i];
      if (Math.abs(s.z - this.slice) > 0.5) continue;
      if (Math.hypot(s.x - x, s.y - y) <= tol) return i;
    }
    return -1;
  }

  /** Exports are only allowed when idle and a result exists. */
  canExport(): boolean {
    return !this.busy && this.stats !== null && this.sessionId !== null;
  }

  async exportResult(kind: "mask" | "mesh" | "csv"): Promise<ArrayBuffer> {
    if (!this.canExport() || !this.sessionId) {
      throw new Error("no completed result to export");
    }
    return await this.api.exportBytes(this.sessionId, kind);
  }

  /** Resolves once no request is in flight and no edit is queued. */
  async idle(): Promise<void> {
    while (this.inFlight || this.dirty) {
      await new Promise((r) => setTimeout(r, 5));
    }
  }

  private scheduleRun(): void {
    this.dirty = true;
    this.emit();
    if (!this.inFlight) void this.pump();
  }

  // Drains edits one request at a time. Edits arriving mid-flight set
  // `dirty` again, so the loop sends exactly one follow-up with the
  // newest seed set no matter how many clicks landed in between.
  private async pump(): Promise<void> {
    if (!this.sessionId || !this.primary) {
      this.dirty = false;
      return;
    }
    this.inFlight = true;
    this.busy = true;
    this.emit();
    while (this.dirty) {
      this.dirty = false;
      const sent: SentSeeds = {
        primary: copySeed(this.primary),
        extras: this.extras.map(copySeed),
      };
      const req: SegmentRequest = {
        seed: [sent.primary.x, sent.primary.y, sent.primary.z],
        extra_seeds: sent.extras.map((s): Triple => [s.x, s.y, s.z]),
        voxel_coords: true,
      };
      if (this.params) req.params = this.params;
      this.sentSeeds = sent;
      this.emit();
      try {
        const res = await this.api.segment(this.sessionId, req);
        this.contours = res.contours;
        this.stats = res.stats;
        this.lastError = null;
      } catch (err) {
        if (err instanceof RequestFailed && err.status === 409) {
          // Another request superseded this one; keep the previous overlay.
        } else {
          this.lastError = err instanceof Error ? err.message : String(err);
        }
      }
      this.emit();
    }
    this.inFlight = false;
    this.busy = false;
    this.emit();
  }

  private emit(): void {
    const snap = this.snapshot();
    for (const fn of this.listeners) fn(snap);
  }
}

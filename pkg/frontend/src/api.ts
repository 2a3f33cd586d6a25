/** Typed client for the segmentation HTTP API.
 *
 * All payload shapes mirror the server exactly; seed coordinates are sent
 * in voxel units with ``voxel_coords: true`` so the viewer never has to
 * convert to millimetres itself.
 */

export type Triple = [number, number, number];

export interface SessionMeta {
  session_id: string;
  dims: Triple;
  spacing_mm: Triple;
  intensity_range: [number, number];
}

/** One axial slice worth of contour loops, in voxel (x, y) coordinates.
 * Each polyline is closed: the first point is repeated at the end. */
export interface ContourSlice {
  slice: number;
  polylines: number[][][];
}

export interface SegmentStats {
  voxel_count: number;
  volume_cm3: number;
  mean_gray: number;
  threshold: number;
  boundary_radius_mm: { min: number; max: number };
  cut_cost: number;
  node_count: number;
  arc_count: number;
  pinned_rays: Record<string, number>;
  timings_s: Record<string, number>;
  dsc?: number;
}

export interface SegmentRequest {
  seed: Triple;
  extra_seeds: Triple[];
  voxel_coords: boolean;
  params?: Record<string, number>;
}

export interface SegmentResponse {
  contours: ContourSlice[];
  stats: SegmentStats;
}

export type ExportKind = "mask" | "mesh" | "csv";

/** Error raised for any non-2xx response; ``kind`` is the machine-readable
 * error tag from the server's ``{"error": {...}}`` envelope. */
export class RequestFailed extends Error {
  constructor(
    readonly status: number,
    readonly kind: string,
    message: string,
  ) {
    super(message);
    this.name = "RequestFailed";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** What the viewer store needs from the transport; `ApiClient` is the real
 * implementation, tests substitute fakes. */
export interface SegmentApi {
  openSession(path: string, reference?: string): Promise<SessionMeta>;
  segment(sessionId: string, req: SegmentRequest): Promise<SegmentResponse>;
  exportBytes(sessionId: string, kind: ExportKind): Promise<ArrayBuffer>;
}

async function raiseFor(res: Response): Promise<never> {
  let kind = "internal";
  let message = `HTTP ${res.status}`;
  try {
    const body = (await res.json()) as { error?: { kind?: string; message?: string } };
    if (body.error) {
      kind = body.error.kind ?? kind;
      message = body.error.message ?? message;
    }
  } catch {
    // non-JSON body: keep the generic message
  }
  throw new RequestFailed(res.status, kind, message);
}

export class ApiClient implements SegmentApi {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string,
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  /** Open a server-side session on a volume path visible to the server. */
  async openSession(path: string, reference?: string): Promise<SessionMeta> {
    const body: Record<string, string> = { path };
    if (reference !== undefined) body.reference = reference;
    const res = await this.fetchFn(`${this.baseUrl}/session`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) await raiseFor(res);
    return (await res.json()) as SessionMeta;
  }

  /** URL of the windowed axial slice PNG; handed straight to an <img>. */
  sliceUrl(sessionId: string, z: number, lo: number, hi: number): string {
    return `${this.baseUrl}/session/${sessionId}/slice/${z}?lo=${lo}&hi=${hi}`;
  }

  async fetchSlice(sessionId: string, z: number, lo: number, hi: number): Promise<Blob> {
    const res = await this.fetchFn(this.sliceUrl(sessionId, z, lo, hi));
    if (!res.ok) await raiseFor(res);
    return await res.blob();
  }

  async segment(sessionId: string, req: SegmentRequest): Promise<SegmentResponse> {
    const res = await this.fetchFn(`${this.baseUrl}/session/${sessionId}/segment`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
    if (!res.ok) await raiseFor(res);
    return (await res.json()) as SegmentResponse;
  }

  exportUrl(sessionId: string, kind: ExportKind): string {
    return `${this.baseUrl}/session/${sessionId}/export/${kind}`;
  }

  async exportBytes(sessionId: string, kind: ExportKind): Promise<ArrayBuffer> {
    const res = await this.fetchFn(this.exportUrl(sessionId, kind));
    if (!res.ok) await raiseFor(res);
    return await res.arrayBuffer();
  }
}

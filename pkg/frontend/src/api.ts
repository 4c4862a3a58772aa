/** Typed client for the session HTTP API. */

export interface SequenceInfo {
  frame_count: number;
  fps: number;
  point_counts: number[];
}

export interface PaletteEntry {
  label: number;
  name: string;
  color: [number, number, number];
}

export interface LabelReport {
  label: number;
  icp_rmse: number | null;
  iterations: number;
  converged: boolean;
  transferred: number;
  lost: number;
  failed: boolean;
  reason: string | null;
}

export interface StepReport {
  frame_from: number;
  frame_to: number;
  labels: LabelReport[];
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

async function checkJson<T>(res: Response): Promise<T> {
  if (!res.ok) {
    let detail = res.statusText;
    try {
      detail = (await res.json()).detail ?? detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(res.status, detail);
  }
  return res.json() as Promise<T>;
}

export class SessionApi {
  constructor(
    readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = fetch.bind(globalThis),
  ) {}

  sequence(): Promise<SequenceInfo> {
    return this.fetchFn(`${this.baseUrl}/api/sequence`).then((r) => checkJson<SequenceInfo>(r));
  }

  async frame(i: number): Promise<ArrayBuffer> {
    const res = await this.fetchFn(`${this.baseUrl}/api/frame/${i}`);
    if (!res.ok) throw new ApiError(res.status, `frame ${i} fetch failed`);
    return res.arrayBuffer();
  }

  async mask(i: number): Promise<ArrayBuffer> {
    const res = await this.fetchFn(`${this.baseUrl}/api/mask/${i}`);
    if (!res.ok) throw new ApiError(res.status, `mask ${i} fetch failed`);
    return res.arrayBuffer();
  }

  brush(
    frame: number,
    center: [number, number, number],
    radius: number,
    label: number,
  ): Promise<{ changed: number }> {
    return this.fetchFn(`${this.baseUrl}/api/brush`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ frame, center, radius, label }),
    }).then((r) => checkJson<{ changed: number }>(r));
  }

  undo(): Promise<{ frame: number }> {
    return this.fetchFn(`${this.baseUrl}/api/undo`, { method: "POST" }).then((r) =>
      checkJson<{ frame: number }>(r),
    );
  }

  propagate(from: number, to: number, mode?: string): Promise<StepReport[]> {
    return this.fetchFn(`${this.baseUrl}/api/propagate`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ from, to, mode: mode ?? null }),
    }).then((r) => checkJson<StepReport[]>(r));
  }

  palette(): Promise<PaletteEntry[]> {
    return this.fetchFn(`${this.baseUrl}/api/palette`).then((r) => checkJson<PaletteEntry[]>(r));
  }
}

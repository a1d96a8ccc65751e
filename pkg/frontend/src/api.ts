// Typed client for the mining service. Every number the UI displays comes
// back from one of these endpoints; nothing is recomputed in the browser,
// so the views cannot drift from what the service decided.

export interface SensorInfo {
  id: string;
  attribute: string;
  lat: number;
  lon: number;
}

export interface CapMember {
  id: string;
  attribute: string;
  sign: "+" | "-" | null;
}

export interface Cap {
  members: CapMember[];
  support: number;
  timestamps: number[];
}

export interface MineResult {
  caps: Cap[];
  dataset_hash: string;
  params: Record<string, unknown>;
  stats: Record<string, number>;
}

export interface GridSummary {
  start: number;
  step: number;
  count: number;
}

export interface CommitSummary {
  name: string;
  content_hash: string;
  sensor_count: number;
  attribute_count: number;
  timestamp_count: number;
  grid: GridSummary;
}

export interface DatasetEntry {
  name: string;
  content_hash: string;
  sensor_count: number;
  created_at: number;
}

export interface SeriesSlice {
  id: string;
  attribute: string;
  timestamps: number[];
  values: (number | null)[];
}

export interface MineResponse {
  result: MineResult;
  resultKey: string;
  cacheHit: boolean;
}

export interface PartnerRef {
  id: string;
  attribute: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly body: Record<string, unknown>,
  ) {
    super(message);
  }
}

async function parse(response: Response): Promise<any> {
  const text = await response.text();
  let body: any = {};
  try {
    body = text ? JSON.parse(text) : {};
  } catch {
    body = { message: text };
  }
  if (!response.ok) {
    const code = String(body.error ?? response.status);
    const message = String(body.message ?? text ?? response.statusText);
    throw new ApiError(response.status, code, message, body);
  }
  return body;
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  private url(path: string): string {
    return this.base + path;
  }

  async datasets(): Promise<DatasetEntry[]> {
    return parse(await fetch(this.url("/datasets")));
  }

  async openUploadSession(name: string, expected: Record<string, number>): Promise<void> {
    await parse(
      await fetch(this.url(`/datasets/${name}/upload-session`), {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ expected }),
      }),
    );
  }

  async putChunk(name: string, kind: string, seq: number, body: string): Promise<void> {
    await parse(
      await fetch(this.url(`/datasets/${name}/upload-session/chunks/${kind}/${seq}`), {
        method: "POST",
        headers: { "content-type": "application/octet-stream" },
        body,
      }),
    );
  }

  async commitUpload(name: string): Promise<CommitSummary> {
    return parse(
      await fetch(this.url(`/datasets/${name}/upload-session/commit`), { method: "POST" }),
    );
  }

  /** Run a mining request; the cache flag and result key ride on headers. */
  async mine(name: string, params: Record<string, unknown>): Promise<MineResponse> {
    const response = await fetch(this.url(`/datasets/${name}/mine`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ params }),
    });
    const result = await parse(response);
    return {
      result,
      resultKey: response.headers.get("x-result-key") ?? "",
      cacheHit: response.headers.get("x-cache") === "hit",
    };
  }

  async sensors(name: string): Promise<SensorInfo[]> {
    return parse(await fetch(this.url(`/datasets/${name}/sensors`)));
  }

  async series(
    name: string,
    id: string,
    attribute: string,
    window?: { from: number; to: number },
  ): Promise<SeriesSlice> {
    let path = `/datasets/${name}/sensors/${id}/${attribute}/series`;
    if (window) {
      path += `?from=${window.from}&to=${window.to}`;
    }
    return parse(await fetch(this.url(path)));
  }

  async correlated(
    name: string,
    id: string,
    attribute: string,
    resultKey: string,
  ): Promise<PartnerRef[]> {
    const query = encodeURIComponent(resultKey);
    return parse(
      await fetch(this.url(`/datasets/${name}/sensors/${id}/${attribute}/correlated?result=${query}`)),
    );
  }
}

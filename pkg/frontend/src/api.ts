/**
 * Typed client for the vegmap HTTP API. Every method maps to exactly one
 * endpoint; nothing is cached or recomputed here.
 */
import type { Interval } from "./ranges.js";

export interface ClassEntry {
  name: string;
  color: number[];
}

export interface ProjectInfo {
  format_version: number;
  classes: ClassEntry[];
  images: string[];
}

export interface ImageMeta {
  id: string;
  width: number;
  height: number;
}

export interface SpectrumResponse {
  bins: number[];
  pixel_count: number;
  derived: Interval[] | null;
}

export interface JobRecord {
  id: string;
  kind: string;
  parameters: Record<string, unknown>;
  status: "queued" | "running" | "done" | "failed";
  result: Record<string, unknown> | null;
  diagnostics: string | null;
  created: number;
  started: number | null;
  finished: number | null;
}

export interface ManifestInfo {
  id: string;
  tiles: number;
}

export interface SelectRequest {
  image_id: string;
  class: string;
  size: number;
  sth: number;
  shifts?: number;
  hue_ranges?: string;
  sat_min?: number;
}

export interface TrainRequest {
  features_id: string;
  learner: string;
  hyperparameters?: Record<string, unknown>;
  seed?: number;
}

export interface CvRequest {
  features_id: string;
  learners: string[];
  folds?: number;
  seed?: number;
  dataset_name?: string;
}

export interface PredictRequest {
  model_id: string;
  image_id: string;
  size: number;
}

export interface TileKey {
  image_id: string;
  x: number;
  y: number;
  size: number;
}

export interface NeighborRow extends TileKey {
  distance: number;
}

export interface MapCellJson {
  class_index: number;
  probs: number[];
}

export interface PredictionMapJson {
  image_id: string;
  size: number;
  rows: number;
  cols: number;
  class_list: string[];
  cells: MapCellJson[];
}

export interface ConfusionJson {
  classes: string[];
  counts: number[][];
  percent: number[][];
}

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly detail: string | null;

  constructor(status: number, code: string, message: string, detail: string | null = null) {
    super(message);
    this.status = status;
    this.code = code;
    this.detail = detail;
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    // bind so the default fetch keeps its expected receiver in browsers
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    if (!resp.ok) {
      let code = "http_error";
      let message = `${resp.status} on ${path}`;
      let detail: string | null = null;
      try {
        const body = await resp.json();
        code = body.code ?? code;
        message = body.message ?? message;
        detail = body.detail ?? null;
      } catch {
        // non-JSON error body; keep the defaults
      }
      throw new ApiError(resp.status, code, message, detail);
    }
    return resp;
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    return (await this.request(path, init)).json() as Promise<T>;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.json<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  getProject(): Promise<ProjectInfo> {
    return this.json("/api/project");
  }

  addClass(name: string): Promise<ProjectInfo> {
    return this.post("/api/classes", { name });
  }

  listImages(): Promise<ImageMeta[]> {
    return this.json("/api/images");
  }

  async uploadImage(bytes: Uint8Array, contentType = "image/png"): Promise<ImageMeta> {
    return this.json("/api/images", {
      method: "POST",
      headers: { "content-type": contentType },
      body: bytes as BodyInit,
    });
  }

  imageUrl(imageId: string, maxdim?: number): string {
    const suffix = maxdim ? `?maxdim=${maxdim}` : "";
    return `${this.baseUrl}/api/images/${imageId}/full.png${suffix}`;
  }

  async fetchImagePng(imageId: string, maxdim?: number): Promise<Uint8Array> {
    const resp = await this.request(`/api/images/${imageId}/full.png${maxdim ? `?maxdim=${maxdim}` : ""}`);
    return new Uint8Array(await resp.arrayBuffer());
  }

  /** Stored mask bytes, or null when the class has no mask yet. */
  async getMaskPng(imageId: string, className: string): Promise<Uint8Array | null> {
    try {
      const resp = await this.request(`/api/images/${imageId}/masks/${className}`);
      return new Uint8Array(await resp.arrayBuffer());
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) return null;
      throw err;
    }
  }

  async putMaskPng(imageId: string, className: string, bytes: Uint8Array): Promise<void> {
    await this.request(`/api/images/${imageId}/masks/${className}`, {
      method: "PUT",
      headers: { "content-type": "image/png" },
      body: bytes as BodyInit,
    });
  }

  getSpectrum(
    imageId: string,
    className: string,
    opts: { satmin?: number; mass?: number } = {},
  ): Promise<SpectrumResponse> {
    const params = new URLSearchParams({ class: className });
    if (opts.satmin !== undefined) params.set("satmin", String(opts.satmin));
    if (opts.mass !== undefined) params.set("mass", String(opts.mass));
    return this.json(`/api/images/${imageId}/spectrum?${params}`);
  }

  async getHueRanges(className: string): Promise<Interval[] | null> {
    try {
      const body = await this.json<{ intervals: Interval[] }>(`/api/classes/${className}/hue-ranges`);
      return body.intervals;
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) return null;
      throw err;
    }
  }

  async putHueRanges(className: string, intervals: Interval[]): Promise<void> {
    await this.request(`/api/classes/${className}/hue-ranges`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ intervals }),
    });
  }

  async postSelect(body: SelectRequest): Promise<string> {
    return (await this.post<{ job_id: string }>("/api/select", body)).job_id;
  }

  async postEmbed(manifestId: string): Promise<string> {
    return (await this.post<{ job_id: string }>("/api/embed", { manifest_id: manifestId })).job_id;
  }

  async postTrain(body: TrainRequest): Promise<string> {
    return (await this.post<{ job_id: string }>("/api/train", body)).job_id;
  }

  async postCv(body: CvRequest): Promise<string> {
    return (await this.post<{ job_id: string }>("/api/cv", body)).job_id;
  }

  async postPredict(body: PredictRequest): Promise<string> {
    return (await this.post<{ job_id: string }>("/api/predict", body)).job_id;
  }

  getJob(jobId: string): Promise<JobRecord> {
    return this.json(`/api/jobs/${jobId}`);
  }

  async getManifestText(manifestId: string): Promise<string> {
    return (await this.request(`/api/manifests/${manifestId}`)).text();
  }

  async postManifest(jsonl: string): Promise<ManifestInfo> {
    return this.json("/api/manifests", {
      method: "POST",
      headers: { "content-type": "application/jsonl" },
      body: jsonl,
    });
  }

  async getFeaturesText(featuresId: string): Promise<string> {
    return (await this.request(`/api/features/${featuresId}`)).text();
  }

  async getReportText(reportId: string): Promise<string> {
    return (await this.request(`/api/reports/${reportId}`)).text();
  }

  getConfusion(reportId: string): Promise<ConfusionJson> {
    return this.json(`/api/reports/${reportId}`);
  }

  async postNeighbors(featuresId: string, seeds: TileKey[], k: number): Promise<NeighborRow[]> {
    const body = await this.post<{ rows: NeighborRow[] }>("/api/neighbors", {
      features_id: featuresId,
      seeds,
      k,
    });
    return body.rows;
  }

  getMap(mapId: string): Promise<PredictionMapJson> {
    return this.json(`/api/maps/${mapId}`);
  }

  overlayUrl(mapId: string, classes: string[], alpha: number): string {
    return `${this.baseUrl}/api/maps/${mapId}/overlay.png?classes=${classes.join(",")}&alpha=${alpha}`;
  }
}

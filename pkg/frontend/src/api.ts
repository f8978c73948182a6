// Typed client for the review service. Every number the UI shows comes
// from these responses; nothing is recomputed client-side.

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export type ProjectState =
  | "draft"
  | "refs_chosen"
  | "scored"
  | "approved"
  | "redacted";

export type Decision = "pending" | "match" | "non_match" | "protected" | "deferred";

export interface ProjectCounts {
  scenes: number;
  detections: number;
  tracklets: number;
  orphans: number;
  segments: number;
  clusters: number;
}

export interface ProjectSnapshot {
  project_id: string;
  state: ProjectState;
  task: { mode: string; identity_refs: string[]; threshold: number };
  counts: ProjectCounts;
  has_audio: boolean;
  fps: number;
  total_frames: number;
}

export interface TrackletSummary {
  track_id: string;
  scene_id: number;
  start_frame: number;
  end_frame: number;
  observations: number;
  detections: number;
  embeddings: number;
  score: number | null;
  decision: Decision;
  is_reference: boolean;
}

export interface DecisionCounts {
  match: number;
  non_match: number;
  protected: number;
  deferred: number;
}

export interface DecisionSummary {
  state: ProjectState;
  threshold: number;
  mode: string;
  reference: string[];
  picked_clusters: number[];
  counts: DecisionCounts;
  precision: number | null;
  recall: number | null;
  silence_seconds: number;
  silence_intervals: number;
}

export interface ClusterCard {
  cluster: number;
  total_seconds: number;
  segments: number;
  picked: boolean;
  representatives: { sid: string; start: number; end: number }[];
}

export interface ClusterBoardData {
  clusters: ClusterCard[];
  picked: number[];
  silence_seconds: number;
}

export interface ApprovalResult {
  state: ProjectState;
  plan_hash: string;
  video_ops: number;
  audio_intervals: number;
  seconds_silenced: number;
  matched_tracks: string[];
}

export interface ExecutionReport {
  frames_touched: number;
  pixels_masked: number;
  ops_applied: number;
  ops_skipped: number;
  samples_zeroed: number;
  seconds_silenced: number;
  already_executed?: boolean;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    readonly detail: string,
  ) {
    super(`${code}: ${detail}`);
    this.name = "ApiError";
  }
}

export class ReviewApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      let code = "error";
      let detail = response.statusText;
      try {
        const payload = (await response.json()) as { error?: string; detail?: string };
        code = payload.error ?? code;
        detail = payload.detail ?? detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, code, detail);
    }
    return (await response.json()) as T;
  }

  getProject(id: string): Promise<ProjectSnapshot> {
    return this.request("GET", `/projects/${id}`);
  }

  runTracking(
    id: string,
    config: { iou_min?: number; max_gap?: number; min_track_len?: number } = {},
  ): Promise<{ state: ProjectState; tracklets: number; orphans: number }> {
    return this.request("POST", `/projects/${id}/track`, config);
  }

  async listTracklets(id: string, scene?: number): Promise<TrackletSummary[]> {
    const query = scene === undefined ? "" : `?scene=${scene}`;
    const body = await this.request<{ tracklets: TrackletSummary[] }>(
      "GET",
      `/projects/${id}/tracklets${query}`,
    );
    return body.tracklets;
  }

  getSummary(id: string): Promise<DecisionSummary> {
    return this.request("GET", `/projects/${id}/summary`);
  }

  setReference(id: string, trackIds: string[]): Promise<DecisionSummary> {
    return this.request("POST", `/projects/${id}/reference`, { track_ids: trackIds });
  }

  setThreshold(id: string, value: number): Promise<DecisionSummary> {
    return this.request("POST", `/projects/${id}/threshold`, { value });
  }

  getClusters(id: string): Promise<ClusterBoardData> {
    return this.request("GET", `/projects/${id}/clusters`);
  }

  pickClusters(id: string, clusterIds: number[], pad?: number): Promise<DecisionSummary> {
    const body: { cluster_ids: number[]; pad?: number } = { cluster_ids: clusterIds };
    if (pad !== undefined) body.pad = pad;
    return this.request("POST", `/projects/${id}/clusters/pick`, body);
  }

  approve(
    id: string,
    options: { confirm?: boolean; style?: string; temporal_pad?: number } = {},
  ): Promise<ApprovalResult> {
    return this.request("POST", `/projects/${id}/approve`, options);
  }

  execute(id: string): Promise<ExecutionReport> {
    return this.request("POST", `/projects/${id}/execute`);
  }

  getReport(id: string): Promise<ExecutionReport> {
    return this.request("GET", `/projects/${id}/report`);
  }

  // Media URLs: always the service endpoints, never file paths. After
  // redaction the service itself serves only the redacted store.
  thumbUrl(id: string, frame: number, track?: string): string {
    const query = track === undefined ? "" : `?track=${encodeURIComponent(track)}`;
    return `${this.baseUrl}/projects/${id}/frames/${frame}/thumb${query}`;
  }

  snippetUrl(id: string, sid: string): string {
    return `${this.baseUrl}/projects/${id}/segments/${sid}/audio`;
  }

  exportUrl(id: string, format: "via" | "eaf"): string {
    return `${this.baseUrl}/projects/${id}/export/${format}`;
  }
}

// Client-side mirror of one review project. Never authoritative: every
// field is copied from an API response, and any view can be rebuilt
// from GET endpoints alone.

import type {
  ClusterBoardData,
  DecisionSummary,
  ProjectSnapshot,
  ReviewApi,
  TrackletSummary,
} from "./api.js";

export type Listener = () => void;

export class ProjectView {
  snapshot: ProjectSnapshot | null = null;
  tracklets: TrackletSummary[] = [];
  summary: DecisionSummary | null = null;
  clusters: ClusterBoardData | null = null;

  private listeners: Listener[] = [];

  constructor(
    readonly api: ReviewApi,
    readonly projectId: string,
  ) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  get state(): string {
    return this.snapshot?.state ?? "draft";
  }

  get readOnly(): boolean {
    return this.state === "approved" || this.state === "redacted";
  }

  async refresh(): Promise<void> {
    this.snapshot = await this.api.getProject(this.projectId);
    this.summary = await this.api.getSummary(this.projectId);
    this.tracklets = await this.api.listTracklets(this.projectId);
    this.clusters = await this.api.getClusters(this.projectId);
    this.emit();
  }

  async refreshTracklets(): Promise<void> {
    this.tracklets = await this.api.listTracklets(this.projectId);
    this.emit();
  }

  // Mutation responses carry the new summary; adopt it instead of
  // refetching (the response is already authoritative).
  applySummary(summary: DecisionSummary): void {
    this.summary = summary;
    if (this.snapshot) this.snapshot.state = summary.state;
    this.emit();
  }

  markState(state: ProjectSnapshot["state"]): void {
    if (this.snapshot) this.snapshot.state = state;
    this.emit();
  }
}

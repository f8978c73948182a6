// Filmstrip list of tracklets in the API's suggested order; clicking a
// strip marks or unmarks it as a reference track and posts the full
// marked set.

import { ApiError } from "./api.js";
import type { TrackletSummary } from "./api.js";
import type { ProjectView } from "./view.js";

const FILMSTRIP_THUMBS = 5;

export function filmstripFrames(track: TrackletSummary): number[] {
  const span = track.end_frame - track.start_frame;
  const count = Math.min(FILMSTRIP_THUMBS, span);
  const frames: number[] = [];
  for (let i = 0; i < count; i++) {
    // evenly spaced, first and last observation included
    const offset = count === 1 ? 0 : Math.round((i * (span - 1)) / (count - 1));
    frames.push(track.start_frame + offset);
  }
  return frames;
}

export class TrackPicker {
  readonly element: HTMLElement;
  private marked = new Set<string>();

  constructor(private readonly view: ProjectView) {
    this.element = document.createElement("section");
    this.element.className = "track-picker";
    this.element.setAttribute("aria-label", "reference track picker");
    view.subscribe(() => this.render());
    this.render();
  }

  private async toggle(trackId: string): Promise<void> {
    const next = new Set(this.marked);
    if (next.has(trackId)) next.delete(trackId);
    else next.add(trackId);
    try {
      const summary = await this.view.api.setReference(
        this.view.projectId,
        [...next].sort(),
      );
      this.marked = next;
      this.view.applySummary(summary);
      await this.view.refreshTracklets();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.renderBanner(err.detail);
        return;
      }
      throw err;
    }
  }

  private renderBanner(detail: string): void {
    let banner = this.element.querySelector(".banner");
    if (!banner) {
      banner = document.createElement("p");
      banner.className = "banner";
      banner.setAttribute("role", "status");
      this.element.prepend(banner);
    }
    banner.textContent = detail;
  }

  private render(): void {
    this.element.textContent = "";
    if (this.view.readOnly) {
      this.renderBanner("Plan approved: reference picks are read-only.");
    }
    if (this.view.tracklets.length === 0) {
      const hint = document.createElement("p");
      hint.className = "onboarding-hint";
      hint.textContent =
        "No tracklets yet. Run tracking to link the detections, then pick " +
        "one strip per person to anonymise.";
      this.element.append(hint);
      return;
    }
    const list = document.createElement("ul");
    // suggested order from the API is preserved verbatim
    for (const track of this.view.tracklets) {
      if (track.is_reference) this.marked.add(track.track_id);
      else this.marked.delete(track.track_id);
      const item = document.createElement("li");
      const button = document.createElement("button");
      button.type = "button";
      button.className = "track-toggle";
      button.dataset.trackId = track.track_id;
      button.disabled = this.view.readOnly;
      button.setAttribute("aria-pressed", String(track.is_reference));
      const caption = document.createElement("span");
      caption.className = "track-caption";
      caption.textContent = `${track.track_id} (${track.decision})`;
      button.append(caption);
      for (const frame of filmstripFrames(track)) {
        const img = document.createElement("img");
        img.className = "filmstrip-thumb";
        img.alt = `${track.track_id} frame ${frame}`;
        img.src = this.view.api.thumbUrl(this.view.projectId, frame, track.track_id);
        button.append(img);
      }
      button.addEventListener("click", () => void this.toggle(track.track_id));
      item.append(button);
      list.append(item);
    }
    this.element.append(list);
  }
}

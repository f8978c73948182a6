// Speaker-cluster audition board: one card per diarisation cluster with
// its total speech time and playable snippets, multi-select picking for
// over-segmented speakers.

import type { ProjectView } from "./view.js";

export class ClusterBoard {
  readonly element: HTMLElement;
  private readonly silenceLine: HTMLElement;

  constructor(private readonly view: ProjectView) {
    this.element = document.createElement("section");
    this.element.className = "cluster-board";
    this.element.setAttribute("aria-label", "speaker clusters");
    this.silenceLine = document.createElement("p");
    this.silenceLine.className = "silence-summary";
    view.subscribe(() => this.render());
    this.render();
  }

  private async toggle(clusterId: number): Promise<void> {
    const picked = new Set(this.view.clusters?.picked ?? []);
    if (picked.has(clusterId)) picked.delete(clusterId);
    else picked.add(clusterId);
    const summary = await this.view.api.pickClusters(
      this.view.projectId,
      [...picked].sort((a, b) => a - b),
    );
    this.view.applySummary(summary);
    const clusters = await this.view.api.getClusters(this.view.projectId);
    this.view.clusters = clusters;
    this.render();
  }

  private render(): void {
    this.element.textContent = "";
    const board = this.view.clusters;
    if (!board || board.clusters.length === 0) {
      const hint = document.createElement("p");
      hint.className = "onboarding-hint";
      hint.textContent = "No diarisation loaded; nothing to silence.";
      this.element.append(hint);
      return;
    }
    // silence summary is the API's union seconds, never summed here
    this.silenceLine.textContent = `silence: ${board.silence_seconds}s`;
    this.element.append(this.silenceLine);

    for (const card of board.clusters) {
      const article = document.createElement("article");
      article.className = "cluster-card";
      article.dataset.cluster = String(card.cluster);

      const heading = document.createElement("h3");
      heading.textContent = `cluster ${card.cluster}`;
      const totals = document.createElement("p");
      totals.className = "cluster-totals";
      totals.textContent = `${card.total_seconds}s over ${card.segments} segment(s)`;

      const pick = document.createElement("button");
      pick.type = "button";
      pick.className = "cluster-pick";
      pick.disabled = this.view.readOnly;
      pick.setAttribute("aria-pressed", String(card.picked));
      pick.textContent = card.picked ? "picked" : "pick";
      pick.addEventListener("click", () => void this.toggle(card.cluster));

      article.append(heading, totals, pick);
      for (const rep of card.representatives) {
        const audio = document.createElement("audio");
        audio.controls = true;
        audio.preload = "none";
        audio.dataset.sid = rep.sid;
        audio.src = this.view.api.snippetUrl(this.view.projectId, rep.sid);
        // a snippet the service cannot serve marks the card unavailable
        audio.addEventListener("error", () => {
          article.classList.add("unavailable");
        });
        article.append(audio);
      }
      this.element.append(article);
    }
  }
}

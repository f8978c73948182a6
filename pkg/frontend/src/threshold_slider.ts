// Threshold slider with live readout. Posts are debounced at 150 ms so
// dragging stays smooth against synchronous server-side rescoring; the
// readout renders only values returned by the API.

import type { DecisionCounts } from "./api.js";
import type { ProjectView } from "./view.js";

export const DEBOUNCE_MS = 150;

export class ThresholdSlider {
  readonly element: HTMLElement;
  readonly input: HTMLInputElement;
  private readonly readout: HTMLElement;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private previousCounts: DecisionCounts | null = null;

  constructor(private readonly view: ProjectView) {
    this.element = document.createElement("section");
    this.element.className = "threshold-slider";
    this.element.setAttribute("aria-label", "similarity threshold");

    const label = document.createElement("label");
    label.textContent = "similarity threshold";
    this.input = document.createElement("input");
    this.input.type = "range";
    this.input.min = "-1";
    this.input.max = "1";
    this.input.step = "0.01";
    label.append(this.input);

    this.readout = document.createElement("dl");
    this.readout.className = "decision-readout";
    this.element.append(label, this.readout);

    this.input.addEventListener("input", () => this.schedule());
    view.subscribe(() => this.render());
    this.render();
  }

  private schedule(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    const value = Number(this.input.value);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.post(value);
    }, DEBOUNCE_MS);
  }

  private async post(value: number): Promise<void> {
    // Deltas compare consecutive scoring passes; the draft zeros are not a
    // baseline worth reporting against.
    const prior = this.view.summary;
    this.previousCounts = prior && prior.state !== "draft" ? prior.counts : null;
    const summary = await this.view.api.setThreshold(this.view.projectId, value);
    this.view.applySummary(summary);
    await this.view.refreshTracklets();
  }

  private row(term: string, value: string, cls: string): void {
    const dt = document.createElement("dt");
    dt.textContent = term;
    const dd = document.createElement("dd");
    dd.className = cls;
    dd.textContent = value;
    this.readout.append(dt, dd);
  }

  private render(): void {
    const summary = this.view.summary;
    this.input.disabled = this.view.readOnly;
    this.readout.textContent = "";
    if (!summary) return;
    this.input.value = String(summary.threshold);

    const deltas = this.previousCounts;
    for (const key of ["match", "non_match", "protected", "deferred"] as const) {
      const count = summary.counts[key];
      let text = String(count);
      if (deltas && deltas[key] !== count) {
        const diff = count - deltas[key];
        text += ` (${diff > 0 ? "+" : ""}${diff})`;
      }
      this.row(key, text, `count-${key}`);
    }
    // PR readout only when the project has labels to judge against
    if (summary.precision !== null && summary.recall !== null) {
      this.row("precision", String(summary.precision), "precision");
      this.row("recall", String(summary.recall), "recall");
    }
  }
}

// Approve-and-execute panel: plan summary, typed confirmation, the
// zero-match blocking warning, and the final report screen with
// previews of redacted frames.

import { ApiError } from "./api.js";
import type { ApprovalResult, ExecutionReport } from "./api.js";
import type { ProjectView } from "./view.js";

const PREVIEW_FRAMES = 4;

export class ApprovalFlow {
  readonly element: HTMLElement;
  private approval: ApprovalResult | null = null;
  private report: ExecutionReport | null = null;
  private pendingWarning: string | null = null;

  constructor(private readonly view: ProjectView) {
    this.element = document.createElement("section");
    this.element.className = "approval-flow";
    this.element.setAttribute("aria-label", "approval and execution");
    view.subscribe(() => this.render());
    this.render();
  }

  private async approve(confirm: boolean): Promise<void> {
    try {
      this.approval = await this.view.api.approve(this.view.projectId, {
        confirm,
      });
      this.pendingWarning = null;
      this.view.markState(this.approval.state);
    } catch (err) {
      if (err instanceof ApiError && err.code === "needs_confirm") {
        this.pendingWarning = err.detail;
        this.render();
        return;
      }
      throw err;
    }
  }

  private async execute(): Promise<void> {
    this.report = await this.view.api.execute(this.view.projectId);
    this.view.markState("redacted");
  }

  private renderSummaryLines(target: HTMLElement): void {
    const summary = this.view.summary;
    if (!summary) return;
    const lines = document.createElement("dl");
    lines.className = "plan-summary";
    const rows: [string, string][] = [
      ["tracks to mask", String(summary.counts.match)],
      ["seconds to silence", String(summary.silence_seconds)],
      ["silence intervals", String(summary.silence_intervals)],
    ];
    for (const [term, value] of rows) {
      const dt = document.createElement("dt");
      dt.textContent = term;
      const dd = document.createElement("dd");
      dd.textContent = value;
      lines.append(dt, dd);
    }
    target.append(lines);
  }

  private renderApprovalForm(): void {
    this.renderSummaryLines(this.element);

    if (this.pendingWarning) {
      const warning = document.createElement("div");
      warning.className = "zero-match-warning";
      warning.setAttribute("role", "alertdialog");
      const text = document.createElement("p");
      text.textContent = this.pendingWarning;
      const confirmButton = document.createElement("button");
      confirmButton.type = "button";
      confirmButton.className = "confirm-zero-match";
      confirmButton.textContent = "Redact anyway";
      confirmButton.addEventListener("click", () => void this.approve(true));
      warning.append(text, confirmButton);
      this.element.append(warning);
      return;
    }

    const form = document.createElement("form");
    form.className = "approve-form";
    const label = document.createElement("label");
    label.textContent = `Type the project id (${this.view.projectId}) to approve:`;
    const input = document.createElement("input");
    input.type = "text";
    input.className = "typed-confirmation";
    label.append(input);
    const submit = document.createElement("button");
    submit.type = "submit";
    submit.className = "approve-button";
    submit.textContent = "Approve plan";
    submit.disabled = true;
    input.addEventListener("input", () => {
      submit.disabled = input.value !== this.view.projectId;
    });
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      if (input.value === this.view.projectId) void this.approve(false);
    });
    form.append(label, submit);
    this.element.append(form);
  }

  private renderApproved(): void {
    const approval = this.approval;
    const panel = document.createElement("div");
    panel.className = "approved-panel";
    const heading = document.createElement("h3");
    heading.textContent = "Plan approved";
    panel.append(heading);
    if (approval) {
      const lines = document.createElement("dl");
      const rows: [string, string][] = [
        ["plan hash", approval.plan_hash],
        ["video ops", String(approval.video_ops)],
        ["audio intervals", String(approval.audio_intervals)],
        ["matched tracks", approval.matched_tracks.join(", ") || "none"],
      ];
      for (const [term, value] of rows) {
        const dt = document.createElement("dt");
        dt.textContent = term;
        const dd = document.createElement("dd");
        dd.className = term.replace(/ /g, "-");
        dd.textContent = value;
        lines.append(dt, dd);
      }
      panel.append(lines);
    }
    const run = document.createElement("button");
    run.type = "button";
    run.className = "execute-button";
    run.textContent = "Execute redaction";
    run.addEventListener("click", () => void this.execute());
    panel.append(run);
    this.element.append(panel);
  }

  private renderReport(): void {
    const report = this.report;
    const screen = document.createElement("div");
    screen.className = "report-screen";
    const heading = document.createElement("h3");
    heading.textContent = "Redaction complete";
    screen.append(heading);
    if (report) {
      const lines = document.createElement("dl");
      const rows: [string, string][] = [
        ["frames touched", String(report.frames_touched)],
        ["pixels masked", String(report.pixels_masked)],
        ["ops applied", String(report.ops_applied)],
        ["samples zeroed", String(report.samples_zeroed)],
        ["seconds silenced", String(report.seconds_silenced)],
      ];
      for (const [term, value] of rows) {
        const dt = document.createElement("dt");
        dt.textContent = term;
        const dd = document.createElement("dd");
        dd.className = term.replace(/ /g, "-");
        dd.textContent = value;
        lines.append(dt, dd);
      }
      screen.append(lines);
    }
    // redacted-only previews: same thumb endpoint, which now serves the
    // redacted store; the original media is never requested again
    const strip = document.createElement("div");
    strip.className = "redacted-previews";
    const total = this.view.snapshot?.total_frames ?? 0;
    const count = Math.min(PREVIEW_FRAMES, total);
    for (let i = 0; i < count; i++) {
      const frame = count === 1 ? 0 : Math.round((i * (total - 1)) / (count - 1));
      const img = document.createElement("img");
      img.className = "redacted-thumb";
      img.alt = `redacted frame ${frame}`;
      img.src = this.view.api.thumbUrl(this.view.projectId, frame);
      strip.append(img);
    }
    screen.append(strip);
    this.element.append(screen);
  }

  private render(): void {
    this.element.textContent = "";
    const state = this.view.state;
    if (state === "redacted") {
      this.renderReport();
    } else if (state === "approved") {
      this.renderApproved();
    } else {
      this.renderApprovalForm();
    }
  }
}

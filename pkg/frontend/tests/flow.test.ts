// Full operator flow against the scripted backend: pick reference,
// slide threshold, pick clusters, approve, execute. Every displayed
// number must equal the backend's value, and once the project is
// redacted no original-media URL may be requested.

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { createApp } from "../src/app.js";
import type { App } from "../src/app.js";
import { MockBackend } from "./mock_backend.js";

const BASE = "http://svc";

function text(root: HTMLElement, selector: string): string {
  return root.querySelector(selector)?.textContent ?? "";
}

async function settle(): Promise<void> {
  await vi.advanceTimersByTimeAsync(200);
}

describe("operator flow", () => {
  let backend: MockBackend;
  let root: HTMLElement;
  let app: App;

  beforeEach(async () => {
    vi.useFakeTimers();
    backend = new MockBackend();
    root = document.createElement("div");
    document.body.append(root);
    app = await createApp(root, BASE, backend.projectId, backend.fetch);
  });

  afterEach(() => {
    vi.useRealTimers();
    root.remove();
  });

  it("walks pick -> slide -> clusters -> approve -> execute", async () => {
    // 1. pick the reference track
    const refButton = [...root.querySelectorAll<HTMLButtonElement>(".track-toggle")]
      .find((b) => b.dataset.trackId === "t-0-0")!;
    refButton.click();
    await settle();
    expect(backend.summary.reference).toEqual(["t-0-0"]);
    expect(text(root, ".count-match")).toBe(String(backend.summary.counts.match));

    // 2. slide the threshold; readout mirrors the API exactly
    app.slider.input.value = "0.8";
    app.slider.input.dispatchEvent(new Event("input"));
    await settle();
    expect(backend.summary.threshold).toBe(0.8);
    expect(text(root, ".count-match")).toContain(
      String(backend.summary.counts.match),
    );
    app.slider.input.value = "0.25";
    app.slider.input.dispatchEvent(new Event("input"));
    await settle();
    expect(text(root, ".count-match")).toContain(
      String(backend.summary.counts.match),
    );
    expect(text(root, ".precision")).toBe(String(backend.summary.precision));
    expect(text(root, ".recall")).toBe(String(backend.summary.recall));

    // 3. pick cluster 0; silence seconds come from the API union
    root
      .querySelector<HTMLElement>('.cluster-card[data-cluster="0"]')!
      .querySelector("button")!
      .click();
    await settle();
    expect(text(root, ".silence-summary")).toBe(
      `silence: ${backend.clusters.silence_seconds}s`,
    );
    expect(text(root, ".plan-summary")).toContain(
      String(backend.summary.silence_seconds),
    );

    // 4. approve with typed confirmation
    const typed = root.querySelector<HTMLInputElement>(".typed-confirmation")!;
    const approveButton = root.querySelector<HTMLButtonElement>(".approve-button")!;
    expect(approveButton.disabled).toBe(true);
    typed.value = backend.projectId;
    typed.dispatchEvent(new Event("input"));
    expect(approveButton.disabled).toBe(false);
    approveButton.form!.dispatchEvent(new Event("submit"));
    await settle();
    expect(backend.state).toBe("approved");
    expect(text(root, ".plan-hash")).toBe(backend.approval.plan_hash);
    expect(text(root, ".video-ops")).toBe(String(backend.approval.video_ops));
    expect(text(root, ".matched-tracks")).toBe(
      backend.approval.matched_tracks.join(", "),
    );

    // picker and slider are now read-only
    expect(
      [...root.querySelectorAll<HTMLButtonElement>(".track-toggle")].every(
        (b) => b.disabled,
      ),
    ).toBe(true);
    expect(app.slider.input.disabled).toBe(true);

    // 5. execute and check the report screen against the API totals
    const markIndex = backend.requests.length;
    root.querySelector<HTMLButtonElement>(".execute-button")!.click();
    await settle();
    expect(backend.state).toBe("redacted");
    expect(text(root, ".frames-touched")).toBe(
      String(backend.report.frames_touched),
    );
    expect(text(root, ".pixels-masked")).toBe(String(backend.report.pixels_masked));
    expect(text(root, ".ops-applied")).toBe(String(backend.report.ops_applied));
    expect(text(root, ".samples-zeroed")).toBe(
      String(backend.report.samples_zeroed),
    );
    expect(text(root, ".seconds-silenced")).toBe(
      String(backend.report.seconds_silenced),
    );

    // after the redacted transition: previews exist, and neither the
    // fetch log nor any media src references the original frame store
    const previews = [...root.querySelectorAll<HTMLImageElement>(".redacted-thumb")];
    expect(previews.length).toBeGreaterThan(0);
    for (const img of previews) {
      expect(img.src).toContain("/projects/p1/frames/");
    }
    const afterTransition = backend.requestsAfter(markIndex);
    expect(afterTransition.length).toBeGreaterThan(0);
    for (const request of afterTransition) {
      expect(request.url).not.toContain(backend.originalFramesPath);
      expect(request.url).toContain("/projects/p1/");
    }
    const mediaSrcs = [
      ...root.querySelectorAll<HTMLImageElement>("img"),
      ...root.querySelectorAll<HTMLAudioElement>("audio"),
    ].map((el) => el.src);
    for (const src of mediaSrcs) {
      expect(src).not.toContain(backend.originalFramesPath);
      expect(src).toContain(`${BASE}/projects/p1/`);
    }
  });

  it("blocks a zero-match approval behind an explicit confirm", async () => {
    backend.zeroMatchMode = true;
    [...root.querySelectorAll<HTMLButtonElement>(".track-toggle")]
      .find((b) => b.dataset.trackId === "t-0-0")!
      .click();
    await settle();
    expect(backend.summary.counts.match).toBe(0);

    const typed = root.querySelector<HTMLInputElement>(".typed-confirmation")!;
    typed.value = backend.projectId;
    typed.dispatchEvent(new Event("input"));
    root
      .querySelector<HTMLButtonElement>(".approve-button")!
      .form!.dispatchEvent(new Event("submit"));
    await settle();

    // blocked: the warning is rendered, the project is not approved
    expect(backend.state).toBe("scored");
    const warning = root.querySelector(".zero-match-warning")!;
    expect(warning.textContent).toContain("zero tracks");

    warning.querySelector<HTMLButtonElement>(".confirm-zero-match")!.click();
    await settle();
    expect(backend.state).toBe("approved");
  });

  it("reconstructs a scored project from GET endpoints alone", async () => {
    // score server-side, then mount a brand-new app: the readout must
    // show the same numbers without any mutation requests
    await backend.fetch(`${BASE}/projects/p1/reference`, {
      method: "POST",
      body: JSON.stringify({ track_ids: ["t-0-0"] }),
    });
    backend.requests = [];
    const fresh = document.createElement("div");
    document.body.append(fresh);
    await createApp(fresh, BASE, backend.projectId, backend.fetch);
    expect(backend.requests.every((r) => r.method === "GET")).toBe(true);
    expect(text(fresh, ".count-match")).toBe(String(backend.summary.counts.match));
    fresh.remove();
  });
});

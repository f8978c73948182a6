import { describe, expect, it } from "vitest";

import { ReviewApi } from "../src/api.js";
import { ClusterBoard } from "../src/cluster_board.js";
import { ProjectView } from "../src/view.js";
import { MockBackend } from "./mock_backend.js";

const BASE = "http://svc";

async function mountedBoard(backend = new MockBackend()) {
  const api = new ReviewApi(BASE, backend.fetch);
  const view = new ProjectView(api, backend.projectId);
  const board = new ClusterBoard(view);
  await view.refresh();
  return { backend, view, board };
}

function cards(board: ClusterBoard): HTMLElement[] {
  return [...board.element.querySelectorAll<HTMLElement>(".cluster-card")];
}

describe("ClusterBoard", () => {
  it("renders one card per cluster with the API's totals", async () => {
    const { board, backend } = await mountedBoard();
    const rendered = cards(board);
    expect(rendered).toHaveLength(backend.clusters.clusters.length);
    for (const [i, card] of rendered.entries()) {
      const want = backend.clusters.clusters[i]!;
      expect(card.dataset.cluster).toBe(String(want.cluster));
      expect(card.querySelector(".cluster-totals")?.textContent).toBe(
        `${want.total_seconds}s over ${want.segments} segment(s)`,
      );
    }
  });

  it("streams snippets from the segment audio endpoint", async () => {
    const { board } = await mountedBoard();
    const audios = [...board.element.querySelectorAll("audio")];
    expect(audios.map((a) => a.dataset.sid)).toEqual(["s0", "s3", "s1", "s2"]);
    expect(audios[0]?.src).toContain("/projects/p1/segments/s0/audio");
  });

  it("picking posts the multi-select and shows the union seconds", async () => {
    const { board, backend, view } = await mountedBoard();
    cards(board)[0]!.querySelector("button")!.click();
    await new Promise((r) => setTimeout(r, 0));

    const post = backend.requests.find((r) => r.url.endsWith("/clusters/pick"));
    expect(post?.body).toEqual({ cluster_ids: [0] });
    expect(view.summary?.silence_seconds).toBe(2.7);
    expect(
      board.element.querySelector(".silence-summary")?.textContent,
    ).toBe("silence: 2.7s");
    expect(
      cards(board)[0]!.querySelector("button")?.getAttribute("aria-pressed"),
    ).toBe("true");
  });

  it("supports multi-select for over-segmented speakers", async () => {
    const { board, backend } = await mountedBoard();
    cards(board)[0]!.querySelector("button")!.click();
    await new Promise((r) => setTimeout(r, 0));
    cards(board)[2]!.querySelector("button")!.click();
    await new Promise((r) => setTimeout(r, 0));
    const posts = backend.requests.filter((r) => r.url.endsWith("/clusters/pick"));
    expect(posts.at(-1)?.body).toEqual({ cluster_ids: [0, 2] });
  });

  it("marks a card unavailable when its snippet cannot load", async () => {
    const { board } = await mountedBoard();
    const first = cards(board)[0]!;
    first.querySelector("audio")!.dispatchEvent(new Event("error"));
    expect(first.classList.contains("unavailable")).toBe(true);
  });

  it("hints when there is no diarisation", async () => {
    const backend = new MockBackend();
    backend.clusters = { clusters: [], picked: [], silence_seconds: 0 };
    const { board } = await mountedBoard(backend);
    expect(board.element.querySelector(".onboarding-hint")?.textContent).toContain(
      "No diarisation",
    );
  });
});

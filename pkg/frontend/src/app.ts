// Composition root: mount the four operator panels against one project.

import { ReviewApi } from "./api.js";
import type { FetchLike } from "./api.js";
import { ApprovalFlow } from "./approval_flow.js";
import { ClusterBoard } from "./cluster_board.js";
import { ThresholdSlider } from "./threshold_slider.js";
import { TrackPicker } from "./track_picker.js";
import { ProjectView } from "./view.js";

export interface App {
  view: ProjectView;
  picker: TrackPicker;
  slider: ThresholdSlider;
  board: ClusterBoard;
  approval: ApprovalFlow;
}

export async function createApp(
  root: HTMLElement,
  baseUrl: string,
  projectId: string,
  fetchImpl: FetchLike = (url, init) => fetch(url, init),
): Promise<App> {
  const api = new ReviewApi(baseUrl, fetchImpl);
  const view = new ProjectView(api, projectId);
  const picker = new TrackPicker(view);
  const slider = new ThresholdSlider(view);
  const board = new ClusterBoard(view);
  const approval = new ApprovalFlow(view);
  root.append(picker.element, slider.element, board.element, approval.element);
  await view.refresh();
  return { view, picker, slider, board, approval };
}

"""Frame-to-frame face tracking within a scene.

Detections of consecutive frames are linked by solving a minimum-cost
bipartite assignment over negated IoU scores. Pairs below ``iou_min`` are
infeasible and can never be matched. A track that misses a detection
coasts with its box frozen in place for up to ``max_gap`` frames before
closing; coasted frames stay in the tracklet flagged ``interpolated`` so
redaction covers short detector dropouts.

Tracks with fewer than ``min_track_len`` real detections are discarded,
but their detections are returned as orphans: no detection is ever
silently dropped, because every face seen by the detector must remain a
candidate for redaction.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .assignment import INFEASIBLE, CostMatrix, hungarian_assign
from .model import BBox, Detection, FrameRef, Observation, Scene, Tracklet


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes; 0 when disjoint, 1 when equal."""
    ix = max(a.x, b.x)
    iy = max(a.y, b.y)
    iw = min(a.x2, b.x2) - ix
    ih = min(a.y2, b.y2) - iy
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def link_cost_matrix(prev_boxes: Sequence[BBox], next_boxes: Sequence[BBox],
                     iou_min: float) -> CostMatrix:
    """Negated-IoU costs between two frames' boxes; sub-threshold pairs infeasible."""
    costs = np.full((len(prev_boxes), len(next_boxes)), INFEASIBLE, dtype=float)
    for i, a in enumerate(prev_boxes):
        for j, b in enumerate(next_boxes):
            s = iou(a, b)
            if s >= iou_min:
                costs[i, j] = -s
    return CostMatrix(costs)


@dataclass(frozen=True)
class TrackerConfig:
    iou_min: float = 0.3
    max_gap: int = 10
    min_track_len: int = 5

    def __post_init__(self):
        if not (0.0 < self.iou_min <= 1.0):
            raise ValueError(f"iou_min must be in (0,1], got {self.iou_min}")
        if self.max_gap < 0:
            raise ValueError(f"max_gap must be >= 0, got {self.max_gap}")
        if self.min_track_len < 1:
            raise ValueError(f"min_track_len must be >= 1, got {self.min_track_len}")


@dataclass(frozen=True)
class TrackingResult:
    """Kept tracklets plus the detections of discarded short tracks."""

    tracklets: tuple[Tracklet, ...]
    orphans: tuple[Detection, ...]

    def real_detection_count(self) -> int:
        kept = sum(len(t.detection_ids()) for t in self.tracklets)
        return kept + len(self.orphans)


class _ActiveTrack:
    """Mutable builder for one track while its scene is being scanned."""

    __slots__ = ("serial", "observations", "detections", "box", "misses")

    def __init__(self, serial: int, det: Detection):
        self.serial = serial
        self.observations: list[Observation] = [
            Observation(frame=det.frame, bbox=det.bbox, detection_id=det.id)
        ]
        self.detections: list[Detection] = [det]
        self.box = det.bbox
        self.misses = 0

    def extend(self, det: Detection) -> None:
        self.observations.append(
            Observation(frame=det.frame, bbox=det.bbox, detection_id=det.id)
        )
        self.detections.append(det)
        self.box = det.bbox
        self.misses = 0

    def coast(self, scene_id: int, frame_index: int) -> None:
        self.observations.append(
            Observation(
                frame=FrameRef(scene_id=scene_id, frame_index=frame_index),
                bbox=self.box,
                interpolated=True,
            )
        )


def link_tracklets(detections: Iterable[Detection], scene: Scene,
                   config: TrackerConfig = TrackerConfig()) -> TrackingResult:
    """Link one scene's detections into tracklets; see the module docstring.

    Detection order within a frame is preserved from the input, which makes
    the assignment tie-break (and therefore the whole result) deterministic.
    """
    by_frame: dict[int, list[Detection]] = {}
    for det in detections:
        f = det.frame.frame_index
        if not scene.contains(f):
            raise ValueError(
                f"detection {det.id} at frame {f} lies outside scene "
                f"{scene.scene_id} [{scene.start_frame}, {scene.end_frame})"
            )
        by_frame.setdefault(f, []).append(det)

    active: list[_ActiveTrack] = []
    closed: list[_ActiveTrack] = []
    serial = 0

    for frame_index in range(scene.start_frame, scene.end_frame):
        dets = by_frame.get(frame_index, [])
        matched_tracks: set[int] = set()
        matched_dets: set[int] = set()

        if active and dets:
            costs = link_cost_matrix([t.box for t in active],
                                     [d.bbox for d in dets], config.iou_min)
            result = hungarian_assign(costs)
            for row, col in result.pairs:
                active[row].extend(dets[col])
                matched_tracks.add(row)
                matched_dets.add(col)

        survivors: list[_ActiveTrack] = []
        for idx, track in enumerate(active):
            if idx in matched_tracks:
                survivors.append(track)
                continue
            track.misses += 1
            if track.misses > config.max_gap:
                closed.append(track)
            else:
                track.coast(scene.scene_id, frame_index)
                survivors.append(track)
        active = survivors

        for col, det in enumerate(dets):
            if col not in matched_dets:
                active.append(_ActiveTrack(serial, det))
                serial += 1
    closed.extend(active)

    closed.sort(key=lambda t: t.serial)
    tracklets: list[Tracklet] = []
    orphans: list[Detection] = []
    for track in closed:
        if len(track.detections) >= config.min_track_len:
            tracklets.append(
                Tracklet(
                    track_id=f"t-{scene.scene_id}-{track.serial}",
                    scene_id=scene.scene_id,
                    observations=tuple(track.observations),
                )
            )
        else:
            orphans.extend(track.detections)
    return TrackingResult(tracklets=tuple(tracklets), orphans=tuple(orphans))


def track_recording(detections: Iterable[Detection], scenes: Sequence[Scene],
                    config: TrackerConfig = TrackerConfig()) -> TrackingResult:
    """Track every scene independently and concatenate the results.

    Detections are routed to scenes by frame index; a detection outside all
    scenes is an error (the scene list must partition the recording).
    """
    ordered = sorted(scenes, key=lambda s: s.start_frame)
    starts = [s.start_frame for s in ordered]
    per_scene: dict[int, list[Detection]] = {s.scene_id: [] for s in ordered}
    for det in detections:
        f = det.frame.frame_index
        pos = bisect.bisect_right(starts, f) - 1
        if pos < 0 or not ordered[pos].contains(f):
            raise ValueError(f"detection {det.id} at frame {f} is outside every scene")
        scene = ordered[pos]
        if det.frame.scene_id != scene.scene_id:
            det = Detection(
                id=det.id,
                frame=FrameRef(scene_id=scene.scene_id, frame_index=f),
                bbox=det.bbox,
                confidence=det.confidence,
            )
        per_scene[scene.scene_id].append(det)

    tracklets: list[Tracklet] = []
    orphans: list[Detection] = []
    for scene in ordered:
        result = link_tracklets(per_scene[scene.scene_id], scene, config)
        tracklets.extend(result.tracklets)
        orphans.extend(result.orphans)
    return TrackingResult(tracklets=tuple(tracklets), orphans=tuple(orphans))

"""Scene segmentation: shot boundaries -> scenes, plus a hard-cut fallback.

Shot boundaries normally come from an upstream detector's sidecar. When
none is available, :func:`detect_hard_cuts` provides a deterministic
histogram-difference fallback for hard cuts only; gradual transitions
(dissolves, fades) are a documented limitation and need a real boundary
sidecar.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from avanon.ingest.frames import FrameStore
from avanon.model import Scene

HIST_BINS = 64
DEFAULT_CUT_THRESHOLD = 0.5


@dataclass(frozen=True)
class CutScore:
    """Dissimilarity between frames ``frame_index - 1`` and ``frame_index``."""

    frame_index: int
    score: float

    def __post_init__(self):
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"cut score must be in [0,1], got {self.score}")


def scenes_from_boundaries(boundaries: Sequence[int], total_frames: int) -> list[Scene]:
    """Split [0, total_frames) at each boundary; result is a partition."""
    if total_frames <= 0:
        raise ValueError(f"total_frames must be positive, got {total_frames}")
    prev = 0
    for b in boundaries:
        if not (prev < b < total_frames):
            raise ValueError(
                f"boundary {b} invalid: must be strictly increasing within "
                f"(0, {total_frames})")
        prev = b

    edges = [0, *boundaries, total_frames]
    return [
        Scene(scene_id=k, start_frame=start, end_frame=end)
        for k, (start, end) in enumerate(zip(edges, edges[1:]))
    ]


def _channel_histograms(frame: np.ndarray) -> np.ndarray:
    # 256 intensity levels folded into 64 bins per channel
    binned = frame >> 2
    return np.stack([
        np.bincount(binned[:, :, c].ravel(), minlength=HIST_BINS)
        for c in range(frame.shape[2])
    ])


def frame_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Normalized per-channel 64-bin histogram L1 distance, in [0, 1].

    The maximum L1 mass movement per channel is twice the pixel count, so
    dividing by 2 * pixels * channels maps identical frames to 0 and e.g.
    all-black vs all-white to 1.
    """
    if a.shape != b.shape:
        raise ValueError(f"frame shapes differ: {a.shape} vs {b.shape}")
    ha = _channel_histograms(a)
    hb = _channel_histograms(b)
    pixels = a.shape[0] * a.shape[1]
    channels = a.shape[2]
    l1 = np.abs(ha.astype(np.int64) - hb.astype(np.int64)).sum()
    return float(l1) / (2.0 * pixels * channels)


def hard_cut_scores(store: FrameStore) -> list[CutScore]:
    """Score every consecutive frame pair; independent per pair, order kept."""
    total = store.manifest.total_frames
    if total < 2:
        raise ValueError("hard-cut detection needs at least 2 frames")
    scores: list[CutScore] = []
    prev = store.read_frame(0)
    for t in range(1, total):
        cur = store.read_frame(t)
        scores.append(CutScore(frame_index=t, score=frame_distance(prev, cur)))
        prev = cur
    return scores


def detect_hard_cuts(store: FrameStore,
                     threshold: float = DEFAULT_CUT_THRESHOLD) -> list[int]:
    """Boundary at t iff distance(frame t-1, frame t) strictly exceeds threshold."""
    return [cs.frame_index for cs in hard_cut_scores(store) if cs.score > threshold]

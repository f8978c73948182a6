"""Compile and execute irreversible redaction of frames and audio.

The plan is the auditable contract between review and execution: a flat
list of per-frame masking operations plus audio silence intervals, with
provenance describing the decisions it was compiled from. Execution never
re-derives decisions; it applies exactly what the operator approved.

Masking styles:

* ``blackout``: every pixel in the (clamped) region set to (0,0,0).
* ``blur``: mosaic pixelation. The region is tiled with square cells of
  side c = max(8, ceil(max(w,h)/10)) and each cell replaced by its mean
  color. Coarse cells bound the information left in the region, unlike a
  Gaussian blur which is partially invertible.

Audio silencing zeroes every sample whose center time i/rate falls inside
a half-open interval [start, end). Both operations are idempotent and
leave everything outside the requested regions bit-identical.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .ingest.audio import AudioBuffer
from .ingest.frames import FrameStore
from .model import BBox, Scene, Tracklet, ZERO_LENGTH_TOL

STYLES = ("blur", "blackout")


@dataclass(frozen=True)
class MarginConfig:
    """Box expansion fractions to cover hair and chin around a face box."""

    top: float = 0.5
    sides: float = 0.2
    bottom: float = 0.1

    def __post_init__(self):
        for name in ("top", "sides", "bottom"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0):
                raise ValueError(f"margin {name} must be >= 0, got {v!r}")

    def to_dict(self) -> dict:
        return {"top": self.top, "sides": self.sides, "bottom": self.bottom}

    @classmethod
    def from_dict(cls, raw: dict) -> "MarginConfig":
        return cls(top=float(raw.get("top", 0.5)), sides=float(raw.get("sides", 0.2)),
                   bottom=float(raw.get("bottom", 0.1)))


def expand_box(b: BBox, m: MarginConfig) -> BBox:
    """Grow a face box by the margin fractions; clamping happens at raster time."""
    return BBox(
        x=b.x - m.sides * b.w,
        y=b.y - m.top * b.h,
        w=b.w * (1.0 + 2.0 * m.sides),
        h=b.h * (1.0 + m.top + m.bottom),
    )


@dataclass(frozen=True)
class VideoOp:
    frame_index: int
    bbox: BBox
    style: str

    def __post_init__(self):
        if self.frame_index < 0:
            raise ValueError(f"frame_index must be >= 0, got {self.frame_index}")
        if self.style not in STYLES:
            raise ValueError(f"style must be one of {STYLES}, got {self.style!r}")

    def to_dict(self) -> dict:
        return {"frame": self.frame_index, "bbox": self.bbox.to_list(),
                "style": self.style}

    @classmethod
    def from_dict(cls, raw: dict) -> "VideoOp":
        return cls(frame_index=int(raw["frame"]), bbox=BBox.from_list(raw["bbox"]),
                   style=str(raw["style"]))


@dataclass(frozen=True)
class RedactionPlan:
    """The frozen decision set: what to mask where, and why."""

    video_ops: tuple[VideoOp, ...]
    audio_ops: tuple[tuple[float, float], ...]
    provenance: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.video_ops, tuple):
            object.__setattr__(self, "video_ops", tuple(self.video_ops))
        aud = tuple((float(s), float(e)) for s, e in self.audio_ops)
        object.__setattr__(self, "audio_ops", aud)
        prev_end = None
        for start, end in aud:
            if start < 0 or end <= start:
                raise ValueError(f"audio interval ({start}, {end}) is malformed")
            if prev_end is not None and start < prev_end:
                raise ValueError("audio intervals must be disjoint and sorted")
            prev_end = end

    def to_dict(self) -> dict:
        return {
            "video": [op.to_dict() for op in self.video_ops],
            "audio": [{"start": s, "end": e} for s, e in self.audio_ops],
            "provenance": dict(self.provenance),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "RedactionPlan":
        return cls(
            video_ops=tuple(VideoOp.from_dict(op) for op in raw.get("video", ())),
            audio_ops=tuple((float(a["start"]), float(a["end"]))
                            for a in raw.get("audio", ())),
            provenance=raw.get("provenance", {}),
        )

    def canonical_bytes(self) -> bytes:
        """Stable serialization: key-sorted, no whitespace; replayable byte-for-byte."""
        return json.dumps(self.to_dict(), sort_keys=True,
                          separators=(",", ":")).encode("utf-8")

    def content_hash(self) -> str:
        return hashlib.sha256(self.canonical_bytes()).hexdigest()


@dataclass(frozen=True)
class RedactionReport:
    frames_touched: int = 0
    pixels_masked: int = 0
    ops_applied: int = 0
    ops_skipped: int = 0
    samples_zeroed: int = 0
    seconds_silenced: float = 0.0

    def to_dict(self) -> dict:
        return {
            "frames_touched": self.frames_touched,
            "pixels_masked": self.pixels_masked,
            "ops_applied": self.ops_applied,
            "ops_skipped": self.ops_skipped,
            "samples_zeroed": self.samples_zeroed,
            "seconds_silenced": self.seconds_silenced,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "RedactionReport":
        return cls(
            frames_touched=int(raw.get("frames_touched", 0)),
            pixels_masked=int(raw.get("pixels_masked", 0)),
            ops_applied=int(raw.get("ops_applied", 0)),
            ops_skipped=int(raw.get("ops_skipped", 0)),
            samples_zeroed=int(raw.get("samples_zeroed", 0)),
            seconds_silenced=float(raw.get("seconds_silenced", 0.0)),
        )


def compile_plan(matched: Sequence[Tracklet], margins: MarginConfig, style: str,
                 silence: Sequence[tuple[float, float]],
                 temporal_pad_frames: int = 0,
                 scenes: Optional[Sequence[Scene]] = None,
                 total_frames: Optional[int] = None,
                 provenance: Optional[Mapping] = None) -> RedactionPlan:
    """Turn matched tracklets and the silence set into an executable plan.

    Every tracklet observation (real or coasted) yields one masking op
    with the margin-expanded box. The track's span is additionally padded
    by ``temporal_pad_frames`` on both ends, reusing the nearest real
    observation's box; padding never crosses the track's scene boundary.
    """
    if style not in STYLES:
        raise ValueError(f"style must be one of {STYLES}, got {style!r}")
    if temporal_pad_frames < 0:
        raise ValueError(f"temporal_pad_frames must be >= 0, got {temporal_pad_frames}")
    scene_by_id = {s.scene_id: s for s in scenes} if scenes else {}

    ops: list[VideoOp] = []
    for track in matched:
        lo_bound, hi_bound = 0, total_frames
        scene = scene_by_id.get(track.scene_id)
        if scene is not None:
            lo_bound = scene.start_frame
            hi_bound = scene.end_frame if hi_bound is None else min(hi_bound,
                                                                    scene.end_frame)
        real = [o for o in track.observations if o.detection_id is not None]
        if not real:
            raise ValueError(f"tracklet {track.track_id} has no real observations")

        first_frame = track.observations[0].frame.frame_index
        last_frame = track.observations[-1].frame.frame_index
        if first_frame < lo_bound or (hi_bound is not None and last_frame >= hi_bound):
            raise ValueError(
                f"tracklet {track.track_id} spans frames [{first_frame}, {last_frame}], "
                f"outside the valid range [{lo_bound}, {hi_bound})")

        lead_box = expand_box(real[0].bbox, margins)
        tail_box = expand_box(real[-1].bbox, margins)
        for k in range(1, temporal_pad_frames + 1):
            f = first_frame - k
            if f < lo_bound:
                break
            ops.append(VideoOp(frame_index=f, bbox=lead_box, style=style))
        for obs in track.observations:
            ops.append(VideoOp(frame_index=obs.frame.frame_index,
                               bbox=expand_box(obs.bbox, margins), style=style))
        for k in range(1, temporal_pad_frames + 1):
            f = last_frame + k
            if hi_bound is not None and f >= hi_bound:
                break
            ops.append(VideoOp(frame_index=f, bbox=tail_box, style=style))

    ops.sort(key=lambda op: op.frame_index)  # stable: preserves per-track order
    return RedactionPlan(video_ops=tuple(ops),
                         audio_ops=tuple(silence),
                         provenance=dict(provenance or {}))


def clamp_region(b: BBox, width: int, height: int
                 ) -> Optional[tuple[int, int, int, int]]:
    """Integer pixel region (x0, y0, x1, y1) covering the box, or None if outside.

    Partially covered border pixels are included: redaction rounds outward.
    """
    x0 = max(0, int(math.floor(b.x)))
    y0 = max(0, int(math.floor(b.y)))
    x1 = min(width, int(math.ceil(b.x2)))
    y1 = min(height, int(math.ceil(b.y2)))
    if x0 >= x1 or y0 >= y1:
        return None
    return x0, y0, x1, y1


def mosaic_cell_side(w: int, h: int) -> int:
    return max(8, math.ceil(max(w, h) / 10))


def mask_region(raster: np.ndarray, region: tuple[int, int, int, int],
                style: str) -> None:
    """Apply one masking op to a raster in place."""
    x0, y0, x1, y1 = region
    if style == "blackout":
        raster[y0:y1, x0:x1, :] = 0
        return
    c = mosaic_cell_side(x1 - x0, y1 - y0)
    for cy in range(y0, y1, c):
        for cx in range(x0, x1, c):
            cell = raster[cy:min(cy + c, y1), cx:min(cx + c, x1), :]
            mean = np.rint(cell.reshape(-1, 3).mean(axis=0)).astype(np.uint8)
            cell[:, :, :] = mean


def apply_video(plan: RedactionPlan, store_in: FrameStore,
                store_out: FrameStore) -> RedactionReport:
    """Execute the plan's video ops; untouched frames copy over bit-identically."""
    width = store_in.manifest.width
    height = store_in.manifest.height
    total = store_in.manifest.total_frames

    by_frame: dict[int, list[VideoOp]] = {}
    for op in plan.video_ops:
        if op.frame_index >= total:
            raise ValueError(
                f"plan references frame {op.frame_index}, recording has {total}")
        by_frame.setdefault(op.frame_index, []).append(op)

    frames_touched = 0
    pixels_masked = 0
    ops_applied = 0
    ops_skipped = 0
    for frame_index in range(total):
        raster = store_in.read_frame(frame_index)
        ops = by_frame.get(frame_index)
        if ops:
            raster = raster.copy()
            mask = np.zeros((height, width), dtype=bool)
            applied = 0
            for op in ops:
                region = clamp_region(op.bbox, width, height)
                if region is None:
                    ops_skipped += 1
                    continue
                mask_region(raster, region, op.style)
                x0, y0, x1, y1 = region
                mask[y0:y1, x0:x1] = True
                applied += 1
            if applied:
                frames_touched += 1
                ops_applied += applied
                pixels_masked += int(mask.sum())
        store_out.write_frame(frame_index, raster)
    return RedactionReport(frames_touched=frames_touched, pixels_masked=pixels_masked,
                           ops_applied=ops_applied, ops_skipped=ops_skipped)


def apply_audio(plan: RedactionPlan, audio: AudioBuffer
                ) -> tuple[AudioBuffer, RedactionReport]:
    """Zero every sample whose center time lies in a silence interval.

    Sample i sits at time i/rate; membership is half-open [start, end).
    The 1e-9 guard keeps decimal sidecar times from shifting a boundary by
    one sample.
    """
    samples = np.array(audio.samples)  # writable copy
    rate = audio.sample_rate
    n = len(samples)
    zeroed = 0
    for start, end in plan.audio_ops:
        i0 = max(0, int(math.ceil(start * rate - 1e-9)))
        i1 = min(n, int(math.ceil(end * rate - 1e-9)))
        if i1 > i0:
            zeroed += int(np.count_nonzero(samples[i0:i1] != 0))
            samples[i0:i1] = 0
    seconds = sum(e - s for s, e in plan.audio_ops)
    report = RedactionReport(samples_zeroed=zeroed, seconds_silenced=seconds)
    return AudioBuffer(samples=samples, sample_rate=rate), report


def merge_reports(video: RedactionReport, audio: RedactionReport) -> RedactionReport:
    return RedactionReport(
        frames_touched=video.frames_touched,
        pixels_masked=video.pixels_masked,
        ops_applied=video.ops_applied,
        ops_skipped=video.ops_skipped,
        samples_zeroed=audio.samples_zeroed,
        seconds_silenced=audio.seconds_silenced,
    )

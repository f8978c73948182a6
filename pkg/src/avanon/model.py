"""Core domain types shared by every stage of the anonymisation pipeline.

All types here are immutable values: safe to share between concurrent
workers and to compare structurally. Geometry is real-valued, origin at
the top-left corner with y growing downward; boxes may extend outside the
frame (e.g. after margin expansion) and are only clamped to pixel bounds
at raster time.

Timestamps are always derived from ``frame_index`` and the recording fps,
never stored redundantly.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

#: Segments no longer than this are treated as zero-length and dropped.
ZERO_LENGTH_TOL = 1e-9

FACE_EMBEDDING_DIM = 512


class ManifestError(ValueError):
    """A recording manifest failed validation; carries every violation."""

    def __init__(self, violations: Sequence[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box: top-left corner plus positive extent, in pixels."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"bbox {name} must be a finite number, got {v!r}")
            # stored as float so serialized plans are byte-stable under replay
            object.__setattr__(self, name, float(v))
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"bbox must have positive extent, got w={self.w}, h={self.h}")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    def to_list(self) -> list[float]:
        return [self.x, self.y, self.w, self.h]

    @classmethod
    def from_list(cls, raw: Sequence[float]) -> "BBox":
        if len(raw) != 4:
            raise ValueError(f"bbox needs exactly 4 numbers, got {len(raw)}")
        return cls(float(raw[0]), float(raw[1]), float(raw[2]), float(raw[3]))


@dataclass(frozen=True)
class FrameRef:
    """A frame position: global 0-based index plus the scene that owns it."""

    scene_id: int
    frame_index: int

    def __post_init__(self):
        if self.frame_index < 0:
            raise ValueError(f"frame_index must be >= 0, got {self.frame_index}")

    def timestamp(self, fps: float) -> float:
        """Seconds from recording start; derived, never stored."""
        if fps <= 0:
            raise ValueError(f"fps must be positive, got {fps}")
        return self.frame_index / fps

    def to_dict(self) -> dict:
        return {"scene": self.scene_id, "frame": self.frame_index}

    @classmethod
    def from_dict(cls, raw: dict) -> "FrameRef":
        return cls(scene_id=int(raw["scene"]), frame_index=int(raw["frame"]))


@dataclass(frozen=True)
class Detection:
    """A single face detection on one frame."""

    id: str
    frame: FrameRef
    bbox: BBox
    confidence: float

    def __post_init__(self):
        if not self.id:
            raise ValueError("detection id must be non-empty")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence must be in [0,1], got {self.confidence}")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "frame": self.frame.frame_index,
            "scene": self.frame.scene_id,
            "bbox": self.bbox.to_list(),
            "conf": self.confidence,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "Detection":
        return cls(
            id=str(raw["id"]),
            frame=FrameRef(scene_id=int(raw.get("scene", 0)), frame_index=int(raw["frame"])),
            bbox=BBox.from_list(raw["bbox"]),
            confidence=float(raw["conf"]),
        )


@dataclass(frozen=True)
class Scene:
    """Contiguous half-open frame interval [start_frame, end_frame)."""

    scene_id: int
    start_frame: int
    end_frame: int

    def __post_init__(self):
        if self.start_frame < 0:
            raise ValueError(f"scene start must be >= 0, got {self.start_frame}")
        if self.start_frame >= self.end_frame:
            raise ValueError(
                f"scene must be non-empty, got [{self.start_frame}, {self.end_frame})"
            )

    def __len__(self) -> int:
        return self.end_frame - self.start_frame

    def contains(self, frame_index: int) -> bool:
        return self.start_frame <= frame_index < self.end_frame

    def to_dict(self) -> dict:
        return {"scene_id": self.scene_id, "start": self.start_frame, "end": self.end_frame}

    @classmethod
    def from_dict(cls, raw: dict) -> "Scene":
        return cls(int(raw["scene_id"]), int(raw["start"]), int(raw["end"]))


def validate_scene_partition(scenes: Sequence[Scene], total_frames: int) -> None:
    """Check that scenes exactly partition [0, total_frames); raise otherwise."""
    if total_frames <= 0:
        raise ValueError(f"total_frames must be positive, got {total_frames}")
    if not scenes:
        raise ValueError("scene list is empty")
    ordered = sorted(scenes, key=lambda s: s.start_frame)
    if ordered[0].start_frame != 0:
        raise ValueError(f"first scene starts at {ordered[0].start_frame}, expected 0")
    for prev, cur in zip(ordered, ordered[1:]):
        if prev.end_frame != cur.start_frame:
            raise ValueError(
                f"scenes {prev.scene_id} and {cur.scene_id} do not abut: "
                f"{prev.end_frame} != {cur.start_frame}"
            )
    if ordered[-1].end_frame != total_frames:
        raise ValueError(
            f"last scene ends at {ordered[-1].end_frame}, expected {total_frames}"
        )


@dataclass(frozen=True)
class Embedding:
    """Fixed-dimension identity descriptor.

    ``kind`` is either ``"face"`` (512 components) or ``"voice"`` (d-vector,
    dimension declared by the sidecar that produced it). Vectors are stored
    as-is; unit normalisation is performed by the verification stage.
    """

    vec: tuple[float, ...]
    kind: str = "face"

    def __post_init__(self):
        if self.kind not in ("face", "voice"):
            raise ValueError(f"embedding kind must be 'face' or 'voice', got {self.kind!r}")
        if not isinstance(self.vec, tuple):
            object.__setattr__(self, "vec", tuple(float(v) for v in self.vec))
        if len(self.vec) == 0:
            raise ValueError("embedding vector must be non-empty")
        if self.kind == "face" and len(self.vec) != FACE_EMBEDDING_DIM:
            raise ValueError(
                f"face embeddings have {FACE_EMBEDDING_DIM} components, got {len(self.vec)}"
            )
        for v in self.vec:
            if not math.isfinite(v):
                raise ValueError("embedding contains a non-finite component")

    @property
    def dim(self) -> int:
        return len(self.vec)

    def norm(self) -> float:
        return math.sqrt(math.fsum(v * v for v in self.vec))

    def is_unit(self, tol: float = 1e-6) -> bool:
        return abs(self.norm() - 1.0) <= tol

    def to_dict(self) -> dict:
        return {"vec": list(self.vec), "kind": self.kind}

    @classmethod
    def from_dict(cls, raw: dict) -> "Embedding":
        return cls(vec=tuple(float(v) for v in raw["vec"]), kind=raw.get("kind", "face"))


@dataclass(frozen=True)
class Observation:
    """One tracklet entry: a box at a frame, backed by a detection or coasted.

    Coasted observations (``detection_id is None``) carry the last real box
    forward through short detector dropouts and are flagged ``interpolated``.
    """

    frame: FrameRef
    bbox: BBox
    detection_id: Optional[str] = None
    interpolated: bool = False

    def to_dict(self) -> dict:
        d: dict = {"frame": self.frame.frame_index, "bbox": self.bbox.to_list(),
                   "det": self.detection_id}
        if self.interpolated:
            d["interpolated"] = True
        return d

    @classmethod
    def from_dict(cls, raw: dict, scene_id: int) -> "Observation":
        return cls(
            frame=FrameRef(scene_id=scene_id, frame_index=int(raw["frame"])),
            bbox=BBox.from_list(raw["bbox"]),
            detection_id=raw.get("det"),
            interpolated=bool(raw.get("interpolated", False)),
        )


@dataclass(frozen=True)
class Tracklet:
    """A single-scene face track assembled by frame-to-frame linking."""

    track_id: str
    scene_id: int
    observations: tuple[Observation, ...]
    embedding_ids: tuple[str, ...] = ()

    def __post_init__(self):
        if not isinstance(self.observations, tuple):
            object.__setattr__(self, "observations", tuple(self.observations))
        if not isinstance(self.embedding_ids, tuple):
            object.__setattr__(self, "embedding_ids", tuple(self.embedding_ids))
        if not self.observations:
            raise ValueError(f"tracklet {self.track_id} has no observations")
        prev = -1
        for obs in self.observations:
            if obs.frame.scene_id != self.scene_id:
                raise ValueError(
                    f"tracklet {self.track_id} mixes scenes "
                    f"{self.scene_id} and {obs.frame.scene_id}"
                )
            if obs.frame.frame_index <= prev:
                raise ValueError(
                    f"tracklet {self.track_id} observations not strictly increasing "
                    f"at frame {obs.frame.frame_index}"
                )
            prev = obs.frame.frame_index

    @property
    def start_frame(self) -> int:
        return self.observations[0].frame.frame_index

    @property
    def end_frame(self) -> int:
        """Exclusive bound of the observed frame span."""
        return self.observations[-1].frame.frame_index + 1

    def detection_ids(self) -> list[str]:
        """Ids of the real (non-coasted) detections in this tracklet."""
        return [o.detection_id for o in self.observations if o.detection_id is not None]

    def to_dict(self) -> dict:
        return {
            "track_id": self.track_id,
            "scene_id": self.scene_id,
            "obs": [o.to_dict() for o in self.observations],
            "embedding_ids": list(self.embedding_ids),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "Tracklet":
        scene_id = int(raw["scene_id"])
        return cls(
            track_id=str(raw["track_id"]),
            scene_id=scene_id,
            observations=tuple(Observation.from_dict(o, scene_id) for o in raw["obs"]),
            embedding_ids=tuple(raw.get("embedding_ids", ())),
        )


@dataclass(frozen=True)
class SpeakerSegment:
    """Diarised speech interval in seconds, labelled with a cluster id."""

    start: float
    end: float
    cluster_id: int
    dvec: Optional[Embedding] = None

    def __post_init__(self):
        if self.start < 0:
            raise ValueError(f"segment start must be >= 0, got {self.start}")
        if self.end < self.start - ZERO_LENGTH_TOL:
            raise ValueError(f"segment end {self.end} precedes start {self.start}")
        if self.dvec is not None and self.dvec.kind != "voice":
            raise ValueError("segment d-vector must have kind 'voice'")

    @property
    def duration(self) -> float:
        return max(0.0, self.end - self.start)

    def to_dict(self) -> dict:
        d: dict = {"start": self.start, "end": self.end, "cluster": self.cluster_id}
        if self.dvec is not None:
            d["dvec"] = list(self.dvec.vec)
        return d

    @classmethod
    def from_dict(cls, raw: dict) -> "SpeakerSegment":
        dvec = raw.get("dvec")
        return cls(
            start=float(raw["start"]),
            end=float(raw["end"]),
            cluster_id=int(raw["cluster"]),
            dvec=Embedding(tuple(float(v) for v in dvec), kind="voice") if dvec else None,
        )


VALID_TASK_MODES = ("targets", "all_except")


@dataclass(frozen=True)
class AnonymisationTask:
    """What the operator asked for: who to redact and how to decide matches.

    ``targets`` redacts the listed identities; ``all_except`` redacts every
    identity that does not verify against the listed (protected) references,
    e.g. anonymise all students but keep the teacher.
    """

    mode: str = "targets"
    identity_refs: tuple[str, ...] = ()
    audio_cluster_ids: tuple[int, ...] = ()
    threshold: float = 0.5

    def __post_init__(self):
        if self.mode not in VALID_TASK_MODES:
            raise ValueError(f"mode must be one of {VALID_TASK_MODES}, got {self.mode!r}")
        if not isinstance(self.identity_refs, tuple):
            object.__setattr__(self, "identity_refs", tuple(self.identity_refs))
        if not isinstance(self.audio_cluster_ids, tuple):
            object.__setattr__(self, "audio_cluster_ids", tuple(self.audio_cluster_ids))
        if not (-1.0 <= self.threshold <= 1.0):
            raise ValueError(f"threshold must be in [-1,1], got {self.threshold}")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "identity_refs": list(self.identity_refs),
            "audio_cluster_ids": list(self.audio_cluster_ids),
            "threshold": self.threshold,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "AnonymisationTask":
        return cls(
            mode=raw.get("mode", "targets"),
            identity_refs=tuple(raw.get("identity_refs", ())),
            audio_cluster_ids=tuple(int(c) for c in raw.get("audio_cluster_ids", ())),
            threshold=float(raw.get("threshold", 0.5)),
        )


@dataclass(frozen=True)
class AudioMeta:
    path: str
    sample_rate: int

    def to_dict(self) -> dict:
        return {"path": self.path, "sample_rate": self.sample_rate}


@dataclass(frozen=True)
class RecordingManifest:
    """Validated recording metadata; every downstream stage may rely on it."""

    fps: float
    width: int
    height: int
    total_frames: int
    audio: Optional[AudioMeta] = None

    @property
    def duration_seconds(self) -> float:
        return self.total_frames / self.fps

    def to_dict(self) -> dict:
        d: dict = {
            "fps": self.fps,
            "width": self.width,
            "height": self.height,
            "total_frames": self.total_frames,
        }
        if self.audio is not None:
            d["audio"] = self.audio.to_dict()
        return d


def validate_recording_manifest(raw: dict, frames_dir: Optional[str] = None,
                                frame_pattern: str = "frame_%06d.png") -> RecordingManifest:
    """Validate manifest data, optionally checking the frame files on disk.

    Collects every violation before failing so the operator sees the full
    list at once. Raises :class:`ManifestError`; returns the validated
    manifest otherwise.
    """
    violations: list[str] = []

    def _num(key, kind=float):
        v = raw.get(key)
        if v is None:
            violations.append(f"{key} is missing")
            return None
        try:
            return kind(v)
        except (TypeError, ValueError):
            violations.append(f"{key} is not a number: {v!r}")
            return None

    fps = _num("fps")
    width = _num("width", int)
    height = _num("height", int)
    total_frames = _num("total_frames", int)
    if fps is not None and not (fps > 0 and math.isfinite(fps)):
        violations.append("fps must be positive")
    if width is not None and width <= 0:
        violations.append("width must be positive")
    if height is not None and height <= 0:
        violations.append("height must be positive")
    if total_frames is not None and total_frames <= 0:
        violations.append("total_frames must be positive")

    audio = None
    raw_audio = raw.get("audio")
    if raw_audio is not None:
        path = raw_audio.get("path")
        rate = raw_audio.get("sample_rate")
        if not path:
            violations.append("audio.path is missing")
        if not isinstance(rate, int) or rate <= 0:
            violations.append("audio.sample_rate must be a positive integer")
        else:
            audio = AudioMeta(path=str(path), sample_rate=rate)

    if frames_dir is not None and total_frames is not None and total_frames > 0:
        missing = [
            i for i in range(total_frames)
            if not os.path.exists(os.path.join(frames_dir, frame_pattern % i))
        ]
        if missing:
            head = ", ".join(str(i) for i in missing[:5])
            more = f" (+{len(missing) - 5} more)" if len(missing) > 5 else ""
            violations.append(f"missing frame files at indices {head}{more}")

    if violations:
        raise ManifestError(violations)
    return RecordingManifest(fps=fps, width=width, height=height,
                             total_frames=total_frames, audio=audio)


def canonicalize_segments(segments: Iterable[SpeakerSegment]) -> list[SpeakerSegment]:
    """Normalise diarised segments: sort, drop zero-length, merge same-cluster.

    Overlapping or touching segments of the same cluster are merged into one;
    segments of distinct clusters are never merged (labels would be lost).
    A segment whose end precedes its start by more than the tolerance is
    rejected as malformed. The operation is idempotent.
    """
    kept: list[SpeakerSegment] = []
    for seg in segments:
        if seg.end < seg.start - ZERO_LENGTH_TOL:
            raise ValueError(f"malformed segment: end {seg.end} < start {seg.start}")
        if seg.end - seg.start <= ZERO_LENGTH_TOL:
            continue
        kept.append(seg)

    by_cluster: dict[int, list[SpeakerSegment]] = {}
    for seg in kept:
        by_cluster.setdefault(seg.cluster_id, []).append(seg)

    merged: list[SpeakerSegment] = []
    for cluster_id, segs in by_cluster.items():
        segs.sort(key=lambda s: (s.start, s.end))
        cur = segs[0]
        for nxt in segs[1:]:
            if nxt.start <= cur.end + ZERO_LENGTH_TOL:
                # keep the earliest available d-vector for the merged interval
                dvec = cur.dvec if cur.dvec is not None else nxt.dvec
                cur = replace(cur, end=max(cur.end, nxt.end), dvec=dvec)
            else:
                merged.append(cur)
                cur = nxt
        merged.append(cur)

    merged.sort(key=lambda s: (s.start, s.end, s.cluster_id))
    return merged

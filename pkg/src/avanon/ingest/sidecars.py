"""Loaders for the line-delimited sidecar files produced upstream.

Detectors, embedding extractors and diarisation models run outside this
package; their outputs arrive as one-JSON-object-per-line sidecars. Every
loader validates records against the core-type invariants and rejects a
bad record by naming its line; nothing is silently skipped (the one
documented exception: embeddings whose id matches no loaded detection are
kept with a warning, since detection filtering may legitimately run first).
"""

from __future__ import annotations

import json
import logging
from bisect import bisect_right
from typing import Optional, Sequence

from avanon.model import (
    BBox,
    Detection,
    Embedding,
    FrameRef,
    Scene,
    SpeakerSegment,
    canonicalize_segments,
)

log = logging.getLogger(__name__)


class SidecarError(ValueError):
    """A sidecar record violated its contract; names the file and line."""

    def __init__(self, path: str, line: Optional[int], message: str):
        loc = f"{path}:{line}" if line is not None else path
        super().__init__(f"{loc}: {message}")
        self.path = path
        self.line = line


def _iter_records(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise SidecarError(path, lineno, f"malformed record: {exc}") from exc


def _scene_for(frame_index: int, scenes: Sequence[Scene], starts: list[int]) -> int:
    pos = bisect_right(starts, frame_index) - 1
    if pos < 0 or not scenes[pos].contains(frame_index):
        raise ValueError(f"frame {frame_index} belongs to no scene")
    return scenes[pos].scene_id


def load_detections(path: str, total_frames: Optional[int] = None,
                    scenes: Optional[Sequence[Scene]] = None) -> list[Detection]:
    """Load per-frame face detections from a detections.jsonl sidecar.

    When ``scenes`` is given each detection's frame is resolved to its
    owning scene; otherwise all detections are placed in scene 0.
    """
    if scenes is not None:
        scenes = sorted(scenes, key=lambda s: s.start_frame)
        starts = [s.start_frame for s in scenes]
        if total_frames is None:
            total_frames = scenes[-1].end_frame

    detections: list[Detection] = []
    seen_ids: set[str] = set()
    for lineno, rec in _iter_records(path):
        try:
            frame_index = int(rec["frame"])
            det_id = str(rec["id"])
            raw_bbox = rec["bbox"]
            conf = float(rec["conf"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SidecarError(path, lineno, f"bad detection record: {exc}") from exc

        if det_id in seen_ids:
            raise SidecarError(path, lineno, f"duplicate detection id {det_id!r}")
        seen_ids.add(det_id)
        if frame_index < 0:
            raise SidecarError(path, lineno, f"negative frame index {frame_index}")
        if total_frames is not None and frame_index >= total_frames:
            raise SidecarError(
                path, lineno,
                f"frame index {frame_index} out of range (total {total_frames})")

        try:
            bbox = BBox.from_list(raw_bbox)
        except ValueError as exc:
            raise SidecarError(path, lineno, str(exc)) from exc

        scene_id = _scene_for(frame_index, scenes, starts) if scenes is not None else 0
        try:
            detections.append(Detection(
                id=det_id,
                frame=FrameRef(scene_id=scene_id, frame_index=frame_index),
                bbox=bbox,
                confidence=conf,
            ))
        except ValueError as exc:
            raise SidecarError(path, lineno, str(exc)) from exc
    return detections


def load_embeddings(path: str, expected_dim: int = 512,
                    known_ids: Optional[set[str]] = None) -> dict[str, Embedding]:
    """Load face embeddings keyed by detection id.

    Vectors are kept raw; unit normalisation is the verification stage's
    job. Ids that reference no known detection are kept with a warning.
    """
    embeddings: dict[str, Embedding] = {}
    for lineno, rec in _iter_records(path):
        try:
            det_id = str(rec["id"])
            vec = rec["vec"]
        except (KeyError, TypeError) as exc:
            raise SidecarError(path, lineno, f"bad embedding record: {exc}") from exc

        if det_id in embeddings:
            raise SidecarError(path, lineno, f"duplicate embedding id {det_id!r}")
        if len(vec) != expected_dim:
            raise SidecarError(
                path, lineno,
                f"embedding dim mismatch: got {len(vec)}, expected {expected_dim}")
        try:
            emb = Embedding(tuple(float(v) for v in vec), kind="face")
        except ValueError as exc:
            raise SidecarError(path, lineno, f"non-finite embedding: {exc}") from exc

        if known_ids is not None and det_id not in known_ids:
            log.warning("%s:%d: embedding id %r matches no loaded detection (kept)",
                        path, lineno, det_id)
        embeddings[det_id] = emb
    return embeddings


def load_diarization(path: str) -> list[SpeakerSegment]:
    """Load diarised speaker segments; output is canonicalized.

    Optional per-segment d-vectors must share one dimension across the file
    (the dimension itself is taken from the data, not fixed).
    """
    segments: list[SpeakerSegment] = []
    dvec_dim: Optional[int] = None
    for lineno, rec in _iter_records(path):
        try:
            start = float(rec["start"])
            end = float(rec["end"])
            cluster = int(rec["cluster"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SidecarError(path, lineno, f"bad diarization record: {exc}") from exc

        if start < 0:
            raise SidecarError(path, lineno, f"negative segment start {start}")
        if end <= start:
            raise SidecarError(path, lineno, f"segment end {end} <= start {start}")

        dvec = None
        raw_dvec = rec.get("dvec")
        if raw_dvec is not None:
            if dvec_dim is None:
                dvec_dim = len(raw_dvec)
            elif len(raw_dvec) != dvec_dim:
                raise SidecarError(
                    path, lineno,
                    f"d-vector dim mismatch: got {len(raw_dvec)}, expected {dvec_dim}")
            try:
                dvec = Embedding(tuple(float(v) for v in raw_dvec), kind="voice")
            except ValueError as exc:
                raise SidecarError(path, lineno, f"bad d-vector: {exc}") from exc

        segments.append(SpeakerSegment(start=start, end=end, cluster_id=cluster, dvec=dvec))
    return canonicalize_segments(segments)


def load_shot_boundaries(path: str, total_frames: int) -> list[int]:
    """Load shot boundary frame indices; strictly increasing, in (0, total)."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SidecarError(path, None, f"malformed boundary file: {exc}") from exc
    if not isinstance(raw, list):
        raise SidecarError(path, None, "boundary file must be a JSON array")

    boundaries: list[int] = []
    prev = 0
    for pos, value in enumerate(raw):
        if not isinstance(value, int) or isinstance(value, bool):
            raise SidecarError(path, None, f"boundary #{pos} is not an integer: {value!r}")
        if value <= prev:
            raise SidecarError(
                path, None,
                f"boundary #{pos} ({value}) is not strictly increasing after {prev}")
        if value >= total_frames:
            raise SidecarError(
                path, None,
                f"boundary #{pos} ({value}) out of range (total {total_frames})")
        boundaries.append(value)
        prev = value
    return boundaries

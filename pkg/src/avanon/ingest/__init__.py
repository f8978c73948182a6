"""Readers and writers for sidecar files and media (frames, PCM audio)."""

from avanon.ingest.audio import AudioBuffer, read_audio, write_audio
from avanon.ingest.frames import FrameStore
from avanon.ingest.sidecars import (
    SidecarError,
    load_detections,
    load_diarization,
    load_embeddings,
    load_shot_boundaries,
)

__all__ = [
    "AudioBuffer",
    "FrameStore",
    "SidecarError",
    "load_detections",
    "load_diarization",
    "load_embeddings",
    "load_shot_boundaries",
    "read_audio",
    "write_audio",
]

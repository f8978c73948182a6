"""Anonymisation pipeline for classroom audio-visual recordings.

Links face detections into tracklets, verifies them against an
operator-chosen identity, selects the matching speaker's diarised
segments, and irreversibly redacts the matched faces and speech under
human review.
"""

from avanon.model import (
    AnonymisationTask,
    BBox,
    Detection,
    Embedding,
    FrameRef,
    RecordingManifest,
    Scene,
    SpeakerSegment,
    Tracklet,
)

__version__ = "0.1.0"

__all__ = [
    "AnonymisationTask",
    "BBox",
    "Detection",
    "Embedding",
    "FrameRef",
    "RecordingManifest",
    "Scene",
    "SpeakerSegment",
    "Tracklet",
    "__version__",
]

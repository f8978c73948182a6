"""Frame store: individually lossless-compressed frame images plus manifest.

Frames live as ``frame_%06d.png`` files so redaction stays bit-auditable
per frame; a container video would recompress redacted regions. Reads are
safe concurrently, as are writes to distinct indices.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from PIL import Image

from avanon.model import RecordingManifest, validate_recording_manifest

MANIFEST_NAME = "manifest.json"
DEFAULT_PATTERN = "frame_%06d.png"


@dataclass(frozen=True)
class FrameStore:
    root: str
    manifest: RecordingManifest
    pattern: str = DEFAULT_PATTERN

    @classmethod
    def open(cls, root: str) -> "FrameStore":
        """Open an existing store by reading its manifest.json."""
        with open(os.path.join(root, MANIFEST_NAME), "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        manifest = validate_recording_manifest(raw)
        return cls(root=root, manifest=manifest)

    @classmethod
    def create(cls, root: str, manifest: RecordingManifest) -> "FrameStore":
        """Create a store directory and write its manifest."""
        os.makedirs(root, exist_ok=True)
        with open(os.path.join(root, MANIFEST_NAME), "w", encoding="utf-8") as fh:
            json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return cls(root=root, manifest=manifest)

    def frame_path(self, frame_index: int) -> str:
        return os.path.join(self.root, self.pattern % frame_index)

    def _check_index(self, frame_index: int) -> None:
        if not (0 <= frame_index < self.manifest.total_frames):
            raise IndexError(
                f"frame index {frame_index} out of range "
                f"[0, {self.manifest.total_frames})")

    def read_frame(self, frame_index: int) -> np.ndarray:
        """Read one frame as an RGB8 array of shape (height, width, 3)."""
        self._check_index(frame_index)
        path = self.frame_path(frame_index)
        if not os.path.exists(path):
            raise FileNotFoundError(f"missing frame file for index {frame_index}: {path}")
        with Image.open(path) as img:
            raster = np.asarray(img.convert("RGB"), dtype=np.uint8)
        expected = (self.manifest.height, self.manifest.width, 3)
        if raster.shape != expected:
            raise ValueError(
                f"frame {frame_index} has shape {raster.shape}, "
                f"manifest declares {expected}")
        return raster

    def write_frame(self, frame_index: int, raster: np.ndarray) -> None:
        """Write one RGB8 frame losslessly (PNG)."""
        self._check_index(frame_index)
        raster = np.asarray(raster)
        expected = (self.manifest.height, self.manifest.width, 3)
        if raster.shape != expected or raster.dtype != np.uint8:
            raise ValueError(
                f"raster must be uint8 with shape {expected}, "
                f"got {raster.dtype} {raster.shape}")
        Image.fromarray(raster, mode="RGB").save(self.frame_path(frame_index))

    def indices(self) -> Iterator[int]:
        return iter(range(self.manifest.total_frames))

    def validate_files(self) -> None:
        """Re-check that every declared frame file exists."""
        validate_recording_manifest(self.manifest.to_dict(), frames_dir=self.root,
                                    frame_pattern=self.pattern)

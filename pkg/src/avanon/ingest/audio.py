"""Mono 16-bit PCM audio read/write (RIFF/WAVE container).

Multi-channel or non-16-bit input is rejected: the preprocessing step that
produces the frame store is also responsible for downmixing. Round-trips
are bit-identical on the samples; the header is canonicalized on write.
"""

from __future__ import annotations

import io
import math
import wave
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AudioBuffer:
    """Immutable mono PCM buffer: int16 samples at a fixed rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.int16)
        if arr.ndim != 1:
            raise ValueError(f"samples must be 1-D (mono), got shape {arr.shape}")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_seconds(self) -> float:
        return len(self.samples) / self.sample_rate

    def clip(self, start: float, end: float) -> "AudioBuffer":
        """Extract [start, end) seconds, clamped to the buffer bounds.

        Sample i sits at time i/rate; the 1e-6 guard absorbs decimal-float
        artifacts in sidecar times (e.g. 0.29 * 16000 = 4639.9999...).
        """
        if end < start:
            raise ValueError(f"clip end {end} precedes start {start}")
        i0 = max(0, int(math.floor(start * self.sample_rate + 1e-6)))
        i1 = min(len(self.samples), int(math.floor(end * self.sample_rate + 1e-6)))
        return AudioBuffer(self.samples[i0:max(i0, i1)], self.sample_rate)


def read_audio(path: str) -> AudioBuffer:
    """Read a RIFF/WAVE file; must be mono, 16-bit PCM."""
    with wave.open(path, "rb") as wav:
        if wav.getnchannels() != 1:
            raise ValueError(
                f"{path}: mono required, got {wav.getnchannels()} channels "
                "(downmix upstream)")
        if wav.getsampwidth() != 2:
            raise ValueError(
                f"{path}: 16-bit PCM required, got {wav.getsampwidth() * 8}-bit")
        rate = wav.getframerate()
        frames = wav.readframes(wav.getnframes())
    samples = np.frombuffer(frames, dtype="<i2")
    return AudioBuffer(samples=samples, sample_rate=rate)


def write_audio(buffer: AudioBuffer, path: str) -> None:
    """Write a canonical mono 16-bit PCM WAVE file."""
    with wave.open(path, "wb") as wav:
        _write_into(buffer, wav)


def to_wav_bytes(buffer: AudioBuffer) -> bytes:
    """Serialize the buffer to in-memory WAVE bytes (for streaming)."""
    bio = io.BytesIO()
    with wave.open(bio, "wb") as wav:
        _write_into(buffer, wav)
    return bio.getvalue()


def _write_into(buffer: AudioBuffer, wav: wave.Wave_write) -> None:
    wav.setnchannels(1)
    wav.setsampwidth(2)
    wav.setframerate(buffer.sample_rate)
    wav.writeframes(buffer.samples.astype("<i2").tobytes())

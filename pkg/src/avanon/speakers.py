"""Speaker anonymisation: choose which diarised intervals to silence.

Diarisation arrives as labelled segments from an external model. The
operator either picks whole clusters after auditioning them, or, for long
recordings where clustering over-segments, retrieves likely segments by
example d-vectors. An optional prior boosts segments during which the
target's face is visible. A deterministic single-linkage fallback supplies
cluster labels when the diarisation sidecar carries d-vectors but no
usable labels.

The final product is a silence set: disjoint, sorted time intervals,
padded and clamped, that the redaction engine zeroes out.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .model import SpeakerSegment, ZERO_LENGTH_TOL, Embedding
from .verification import normalize


@dataclass(frozen=True)
class ClusterSummary:
    """Audition card for one diarisation cluster."""

    cluster_id: int
    total_speech_seconds: float
    segment_count: int
    representatives: tuple[SpeakerSegment, ...]

    def to_dict(self) -> dict:
        return {
            "cluster": self.cluster_id,
            "total_seconds": self.total_speech_seconds,
            "segments": self.segment_count,
            "representatives": [
                {"start": s.start, "end": s.end} for s in self.representatives
            ],
        }


@dataclass(frozen=True)
class RetrievalQuery:
    """Operator-picked exemplar d-vectors for segment retrieval."""

    exemplars: tuple[Embedding, ...]
    top_k: int = 10

    def __post_init__(self):
        if not isinstance(self.exemplars, tuple):
            object.__setattr__(self, "exemplars", tuple(self.exemplars))
        if not self.exemplars:
            raise ValueError("retrieval query needs at least one exemplar")
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")
        for e in self.exemplars:
            if not e.is_unit():
                raise ValueError("exemplars must be unit-norm; normalize them first")

    @classmethod
    def from_vectors(cls, vectors: Iterable[Sequence[float]], top_k: int = 10
                     ) -> "RetrievalQuery":
        exemplars = tuple(
            normalize(Embedding(tuple(float(x) for x in v), kind="voice"))
            for v in vectors
        )
        return cls(exemplars=exemplars, top_k=top_k)


def summarize_clusters(segments: Sequence[SpeakerSegment]) -> list[ClusterSummary]:
    """One summary per cluster, longest total speech first.

    Representatives are the up-to-5 longest segments of the cluster, for
    the operator to audition.
    """
    by_cluster: dict[int, list[SpeakerSegment]] = {}
    for seg in segments:
        by_cluster.setdefault(seg.cluster_id, []).append(seg)

    summaries = []
    for cluster_id, segs in by_cluster.items():
        longest = sorted(segs, key=lambda s: (-s.duration, s.start))[:5]
        summaries.append(
            ClusterSummary(
                cluster_id=cluster_id,
                total_speech_seconds=sum(s.duration for s in segs),
                segment_count=len(segs),
                representatives=tuple(longest),
            )
        )
    summaries.sort(key=lambda c: (-c.total_speech_seconds, c.cluster_id))
    return summaries


def retrieve_segments(query: RetrievalQuery, segments: Sequence[SpeakerSegment]
                      ) -> list[tuple[SpeakerSegment, float]]:
    """Rank segments by their best cosine against any exemplar, descending.

    Only segments carrying a d-vector participate; if none does, retrieval
    is impossible and the cluster-picking workflow must be used instead.
    """
    candidates = [s for s in segments if s.dvec is not None]
    if not candidates:
        raise ValueError(
            "no segment carries a d-vector; retrieval is unavailable, "
            "pick clusters directly instead"
        )
    ex = np.asarray([e.vec for e in query.exemplars], dtype=float)
    scored = []
    for seg in candidates:
        v = np.asarray(normalize(seg.dvec).vec, dtype=float)
        score = float(np.clip(ex @ v, -1.0, 1.0).max())
        scored.append((seg, score))
    scored.sort(key=lambda p: (-p[1], p[0].start, p[0].end, p[0].cluster_id))
    return scored[: query.top_k]


def visibility_timeline(tracklets, fps: float, duration_seconds: float) -> list[bool]:
    """Per-second flags: is a matched face visible during second [s, s+1)?"""
    if fps <= 0:
        raise ValueError(f"fps must be positive, got {fps}")
    n = max(0, int(np.ceil(duration_seconds)))
    visible = [False] * n
    for track in tracklets:
        for obs in track.observations:
            s = int(obs.frame.frame_index / fps)
            if 0 <= s < n:
                visible[s] = True
    return visible


def face_presence_prior(ranked: Sequence[tuple[SpeakerSegment, float]],
                        timeline: Sequence[bool], boost: float
                        ) -> list[tuple[SpeakerSegment, float]]:
    """Boost segments whose speech mostly coincides with a visible face.

    A segment earns the additive boost when the matched face is visible
    for more than half of the segment's duration; the list is then
    re-sorted by score (stable, so a zero boost changes nothing).
    """
    out = []
    for seg, score in ranked:
        if _visible_fraction(seg, timeline) > 0.5:
            score = score + boost
        out.append((seg, score))
    out.sort(key=lambda p: -p[1])
    return out


def _visible_fraction(seg: SpeakerSegment, timeline: Sequence[bool]) -> float:
    if seg.duration <= 0:
        return 0.0
    covered = 0.0
    first = max(0, int(seg.start))
    last = min(len(timeline), int(np.ceil(seg.end)))
    for s in range(first, last):
        if timeline[s]:
            covered += min(seg.end, s + 1) - max(seg.start, s)
    return covered / seg.duration


def cluster_fallback(segments: Sequence[SpeakerSegment],
                     similarity_threshold: float) -> list[int]:
    """Label segments by single-linkage clustering of d-vector cosines.

    Merging while the best inter-cluster similarity stays >= threshold is
    exactly the connected components of the pairwise graph at that
    threshold, so union-find over pairs in segment order gives the same
    partition deterministically. Labels are 0-based in order of each
    cluster's first segment.
    """
    vecs = []
    for i, seg in enumerate(segments):
        if seg.dvec is None:
            raise ValueError(f"segment {i} has no d-vector; clustering needs all of them")
        vecs.append(normalize(seg.dvec).vec)
    n = len(vecs)
    if n == 0:
        return []
    arr = np.asarray(vecs, dtype=float)
    sims = np.clip(arr @ arr.T, -1.0, 1.0)

    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        for j in range(i + 1, n):
            if sims[i, j] >= similarity_threshold:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    labels: dict[int, int] = {}
    out = []
    for i in range(n):
        root = find(i)
        if root not in labels:
            labels[root] = len(labels)
        out.append(labels[root])
    return out


def assign_clusters(segments: Sequence[SpeakerSegment],
                    labels: Sequence[int]) -> list[SpeakerSegment]:
    if len(segments) != len(labels):
        raise ValueError("one label per segment required")
    return [replace(seg, cluster_id=int(l)) for seg, l in zip(segments, labels)]


def segments_for_clusters(segments: Iterable[SpeakerSegment],
                          cluster_ids: Iterable[int]) -> list[SpeakerSegment]:
    chosen = set(cluster_ids)
    return [s for s in segments if s.cluster_id in chosen]


def build_silence_set(selected: Iterable[SpeakerSegment], pad: float = 0.15,
                      duration: Optional[float] = None) -> list[tuple[float, float]]:
    """Union of the selected segments, padded and clamped.

    Every selected segment is widened by ``pad`` seconds on both sides,
    clamped to [0, duration], and overlapping or touching intervals are
    merged. The result is disjoint, sorted, and covers every selection.
    """
    if pad < 0:
        raise ValueError(f"pad must be >= 0, got {pad}")
    if duration is not None and duration < 0:
        raise ValueError(f"duration must be >= 0, got {duration}")

    widened = []
    for seg in selected:
        start = max(0.0, seg.start - pad)
        end = seg.end + pad
        if duration is not None:
            start = min(start, duration)
            end = min(end, duration)
        if end - start > 0:
            widened.append((start, end))
    widened.sort()

    merged: list[tuple[float, float]] = []
    for start, end in widened:
        if merged and start <= merged[-1][1] + ZERO_LENGTH_TOL:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged

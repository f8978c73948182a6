"""Identity verification: score tracklets against operator-chosen references.

The operator picks one or more reference tracklets for the identity in
question. Every candidate tracklet is then scored by cosine similarity
between its face embeddings and the reference embeddings, reduced to a
single value per track (default: the minimum over all pairs, the strictest
reading). Thresholding the score yields the match decision, with an
inverted "all except" mode that redacts everything NOT verified as the
protected identity.

Tracks that carry no embeddings at all cannot be scored; they are
deferred (score ``None``) and classified as matches in both modes, so an
un-scoreable face is always redacted rather than leaked.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .model import AnonymisationTask, Embedding, Tracklet

AGGREGATORS = ("min", "mean", "max")
DECISIONS = ("pending", "match", "non_match", "protected")


def normalize(e: Embedding) -> Embedding:
    """Scale an embedding to unit Euclidean norm, preserving direction."""
    arr = np.asarray(e.vec, dtype=float)
    n = float(np.linalg.norm(arr))
    if n == 0.0:
        raise ValueError("cannot normalize a zero embedding vector")
    return Embedding(vec=tuple((arr / n).tolist()), kind=e.kind)


def cosine(a: Embedding, b: Embedding) -> float:
    """Cosine similarity of two unit-norm embeddings, clamped to [-1, 1]."""
    s = float(np.dot(np.asarray(a.vec), np.asarray(b.vec)))
    return max(-1.0, min(1.0, s))


@dataclass(frozen=True)
class ReferenceSet:
    """The operator-picked identity exemplar: tracks and their embeddings."""

    track_ids: tuple[str, ...]
    embeddings: tuple[Embedding, ...]

    def __post_init__(self):
        if not isinstance(self.track_ids, tuple):
            object.__setattr__(self, "track_ids", tuple(self.track_ids))
        if not isinstance(self.embeddings, tuple):
            object.__setattr__(self, "embeddings", tuple(self.embeddings))
        if not self.embeddings:
            raise ValueError("reference set must contain at least one embedding")
        for e in self.embeddings:
            if not e.is_unit():
                raise ValueError("reference embeddings must be unit-norm")


@dataclass(frozen=True)
class TrackScore:
    """Similarity of one tracklet to the reference, plus the decision.

    ``score is None`` means the track had no embeddings to score; such
    tracks are flagged to the operator and fail closed (always redacted).
    """

    track_id: str
    score: Optional[float]
    aggregator: str = "min"
    decision: str = "pending"

    def __post_init__(self):
        if self.aggregator not in AGGREGATORS:
            raise ValueError(f"aggregator must be one of {AGGREGATORS}")
        if self.decision not in DECISIONS:
            raise ValueError(f"decision must be one of {DECISIONS}")
        if self.score is not None and not (-1.0 <= self.score <= 1.0):
            raise ValueError(f"score must be in [-1,1], got {self.score}")

    def to_dict(self) -> dict:
        return {
            "track_id": self.track_id,
            "score": self.score,
            "aggregator": self.aggregator,
            "decision": self.decision,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "TrackScore":
        return cls(
            track_id=str(raw["track_id"]),
            score=None if raw.get("score") is None else float(raw["score"]),
            aggregator=raw.get("aggregator", "min"),
            decision=raw.get("decision", "pending"),
        )


def build_reference(track_ids: Sequence[str], tracklets: Sequence[Tracklet],
                    embeddings: Mapping[str, Embedding]) -> ReferenceSet:
    """Collect and normalize the embeddings carried by the reference tracks."""
    by_id = {t.track_id: t for t in tracklets}
    vecs: list[Embedding] = []
    for track_id in track_ids:
        track = by_id.get(track_id)
        if track is None:
            raise KeyError(f"unknown reference track {track_id!r}")
        for det_id in track.detection_ids():
            e = embeddings.get(det_id)
            if e is not None:
                vecs.append(normalize(e))
    if not vecs:
        raise ValueError(
            f"reference tracks {list(track_ids)} carry no embeddings; "
            "pick a track whose detections have embedding records"
        )
    return ReferenceSet(track_ids=tuple(track_ids), embeddings=tuple(vecs))


def track_similarity(ref: ReferenceSet, candidate: Sequence[Embedding],
                     aggregator: str = "min", sample_stride: int = 5,
                     track_id: str = "") -> TrackScore:
    """Aggregate pairwise cosine between sampled ref and candidate embeddings.

    Both sides are subsampled by ``sample_stride`` (every stride-th
    embedding, always keeping the first) to bound the pairwise computation
    on long tracks. An empty candidate yields a deferred score.
    """
    if aggregator not in AGGREGATORS:
        raise ValueError(f"aggregator must be one of {AGGREGATORS}")
    if sample_stride < 1:
        raise ValueError(f"sample_stride must be >= 1, got {sample_stride}")
    if not candidate:
        return TrackScore(track_id=track_id, score=None, aggregator=aggregator)

    refs = ref.embeddings[::sample_stride]
    cands = [normalize(e) for e in candidate[::sample_stride]]
    r = np.asarray([e.vec for e in refs], dtype=float)
    c = np.asarray([e.vec for e in cands], dtype=float)
    pairs = np.clip(r @ c.T, -1.0, 1.0)
    if aggregator == "min":
        score = float(pairs.min())
    elif aggregator == "max":
        score = float(pairs.max())
    else:
        score = float(pairs.mean())
    return TrackScore(track_id=track_id, score=max(-1.0, min(1.0, score)),
                      aggregator=aggregator)


def score_tracks(ref: ReferenceSet, tracklets: Sequence[Tracklet],
                 embeddings: Mapping[str, Embedding], aggregator: str = "min",
                 sample_stride: int = 5) -> list[TrackScore]:
    """Score every tracklet against the reference set."""
    scores = []
    for track in tracklets:
        cand = [embeddings[d] for d in track.detection_ids() if d in embeddings]
        scores.append(
            track_similarity(ref, cand, aggregator=aggregator,
                             sample_stride=sample_stride, track_id=track.track_id)
        )
    return scores


def select_reference_candidates(tracklets: Sequence[Tracklet]) -> list[str]:
    """Rank tracklets as reference suggestions: longest first, earliest on ties.

    A longer track captures more pose/lighting variation, which the
    verification step needs; the operator still makes the final pick.
    """
    ranked = sorted(
        tracklets,
        key=lambda t: (-len(t.observations), t.start_frame, t.track_id),
    )
    return [t.track_id for t in ranked]


def classify_tracks(scores: Iterable[TrackScore],
                    task: AnonymisationTask) -> list[TrackScore]:
    """Apply the threshold and task mode to raw scores.

    targets:    match (redact) iff score >= threshold.
    all_except: score >= threshold verifies the protected identity; every
                other track matches, i.e. gets redacted.
    Deferred tracks (no embeddings) match in both modes: fail closed.
    """
    out = []
    for s in scores:
        if s.score is None:
            decision = "match"
        elif task.mode == "targets":
            decision = "match" if s.score >= task.threshold else "non_match"
        else:
            decision = "protected" if s.score >= task.threshold else "match"
        out.append(replace(s, decision=decision))
    return out


def annotate_embedding_ids(tracklets: Sequence[Tracklet],
                           embeddings: Mapping[str, Embedding]) -> list[Tracklet]:
    """Fill each tracklet's embedding_ids with its detections that carry one."""
    return [
        replace(t, embedding_ids=tuple(d for d in t.detection_ids() if d in embeddings))
        for t in tracklets
    ]

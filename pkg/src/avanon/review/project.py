"""Persisted review session: state machine, decision log, and artifacts.

A project is a plain directory, portable and auditable:

* ``project.json``: immutable creation record (input paths, initial task)
* ``log.jsonl``: append-only decision log; one timestamped event per line
* ``state.json``: current snapshot (state, task, settings) for fast loads
* ``tracks.json`` / ``orphans.json`` / ``scores.json``: cached computation
* ``plan.json``: frozen at approval, canonical bytes, hash logged
* ``report.json`` + ``out/frames/``: written by execution

The decision log fully determines the plan: every value the plan depends
on (tracker config, reference ids, aggregator, threshold, cluster picks,
margins, style, padding) is recorded in its event, so replaying the log on
a fresh project rebuilds ``plan.json`` byte-identically. Timestamps are
confined to the log; the plan itself contains no wall-clock data.

State machine: draft -> refs_chosen -> scored -> approved -> redacted.
Edits re-enter the chain from the left (re-tracking resets to draft);
approved and redacted projects reject every mutation except execute.
"""

from __future__ import annotations

import json
import math
import os
import shutil
import threading
import time
from dataclasses import dataclass, replace
from io import BytesIO
from typing import Optional, Sequence

import numpy as np
from PIL import Image

from ..exporters import ExportBundle, export_eaf, export_via
from ..ingest.audio import AudioBuffer, read_audio, to_wav_bytes, write_audio
from ..ingest.frames import FrameStore
from ..ingest.sidecars import (
    load_detections,
    load_diarization,
    load_embeddings,
    load_shot_boundaries,
)
from ..metrics import LabeledScore, precision_recall_at
from ..model import (
    AnonymisationTask,
    AudioMeta,
    Detection,
    RecordingManifest,
    Scene,
    SpeakerSegment,
    Tracklet,
)
from ..redaction import (
    MarginConfig,
    RedactionPlan,
    RedactionReport,
    apply_audio,
    apply_video,
    clamp_region,
    compile_plan,
    merge_reports,
)
from ..scenes import scenes_from_boundaries
from ..speakers import build_silence_set, segments_for_clusters, summarize_clusters
from ..tracking import TrackerConfig, track_recording
from ..verification import (
    TrackScore,
    build_reference,
    classify_tracks,
    score_tracks,
    select_reference_candidates,
)

STATES = ("draft", "refs_chosen", "scored", "approved", "redacted")


class ReviewError(Exception):
    """Base for operator-facing failures; carries an HTTP-ready code."""

    status = 400
    code = "bad_request"

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class UnknownResource(ReviewError):
    status = 404
    code = "not_found"


class Conflict(ReviewError):
    status = 409
    code = "conflict"


class NeedsConfirm(Conflict):
    code = "needs_confirm"


class InvalidInput(ReviewError):
    status = 422
    code = "invalid"


@dataclass(frozen=True)
class ProjectInputs:
    """Paths to the recording and its sidecars; all loaded at creation."""

    frames_dir: str
    detections: str
    embeddings: str
    diarization: Optional[str] = None
    shots: Optional[str] = None
    labels: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "frames_dir": self.frames_dir,
            "detections": self.detections,
            "embeddings": self.embeddings,
            "diarization": self.diarization,
            "shots": self.shots,
            "labels": self.labels,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ProjectInputs":
        return cls(
            frames_dir=raw["frames_dir"],
            detections=raw["detections"],
            embeddings=raw["embeddings"],
            diarization=raw.get("diarization"),
            shots=raw.get("shots"),
            labels=raw.get("labels"),
        )


def _write_json(path: str, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _read_json(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


class ReviewProject:
    """One recording under review; all mutations go through this class."""

    def __init__(self, project_id: str, project_dir: str, inputs: ProjectInputs,
                 task: AnonymisationTask):
        self.project_id = project_id
        self.project_dir = project_dir
        self.inputs = inputs
        self.task = task
        self.state = "draft"
        self.aggregator = "min"
        self.sample_stride = 5
        self.silence_pad = 0.15
        self.style = "blur"
        self.margins = MarginConfig()
        self.temporal_pad = 0
        self.tracker_config: Optional[TrackerConfig] = None
        self.tracklets: list[Tracklet] = []
        self.orphans: list[Detection] = []
        self.scores: list[TrackScore] = []
        self._lock = threading.Lock()
        self._load_inputs()

    # ---------- creation and loading ----------

    @classmethod
    def create(cls, project_dir: str, inputs: ProjectInputs,
               task: Optional[AnonymisationTask] = None,
               project_id: Optional[str] = None) -> "ReviewProject":
        meta_path = os.path.join(project_dir, "project.json")
        if os.path.exists(meta_path):
            raise Conflict(f"a project already exists at {project_dir}")
        project_id = project_id or os.path.basename(os.path.normpath(project_dir))
        project = cls(project_id, project_dir, inputs, task or AnonymisationTask())
        os.makedirs(project_dir, exist_ok=True)
        _write_json(meta_path, {
            "project_id": project_id,
            "inputs": inputs.to_dict(),
            "task": project.task.to_dict(),
        })
        project._append_log("create", inputs=inputs.to_dict(),
                            task=project.task.to_dict())
        project._save_state()
        return project

    @classmethod
    def load(cls, project_dir: str) -> "ReviewProject":
        meta_path = os.path.join(project_dir, "project.json")
        if not os.path.exists(meta_path):
            raise UnknownResource(f"no project at {project_dir}")
        meta = _read_json(meta_path)
        project = cls(meta["project_id"], project_dir,
                      ProjectInputs.from_dict(meta["inputs"]),
                      AnonymisationTask.from_dict(meta["task"]))
        project._restore_state()
        return project

    def _load_inputs(self) -> None:
        """Load and validate every referenced file; any error aborts creation."""
        self.store = FrameStore.open(self.inputs.frames_dir)
        self.store.validate_files()
        self.manifest: RecordingManifest = self.store.manifest

        if self.inputs.shots:
            boundaries = load_shot_boundaries(self.inputs.shots,
                                              self.manifest.total_frames)
        else:
            boundaries = []
        self.scenes: list[Scene] = scenes_from_boundaries(
            boundaries, self.manifest.total_frames)

        self.detections = load_detections(self.inputs.detections,
                                          total_frames=self.manifest.total_frames,
                                          scenes=self.scenes)
        self.embeddings = load_embeddings(
            self.inputs.embeddings,
            known_ids={d.id for d in self.detections})

        self.segments: list[SpeakerSegment] = []
        if self.inputs.diarization:
            self.segments = load_diarization(self.inputs.diarization)

        self.audio: Optional[AudioBuffer] = None
        if self.manifest.audio is not None:
            path = self.manifest.audio.path
            if not os.path.isabs(path):
                path = os.path.join(self.inputs.frames_dir, path)
            self.audio = read_audio(path)

        self.labels: dict[str, bool] = {}
        if self.inputs.labels:
            raw = _read_json(self.inputs.labels)
            for track_id, label in raw.items():
                if label not in ("positive", "negative"):
                    raise InvalidInput(
                        f"label for {track_id} must be positive/negative, got {label!r}")
                self.labels[track_id] = label == "positive"

    # ---------- persistence ----------

    def _path(self, name: str) -> str:
        return os.path.join(self.project_dir, name)

    def _append_log(self, event: str, **payload) -> None:
        record = {"ts": time.time(), "event": event}
        record.update(payload)
        with open(self._path("log.jsonl"), "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    def _save_state(self) -> None:
        _write_json(self._path("state.json"), {
            "state": self.state,
            "task": self.task.to_dict(),
            "aggregator": self.aggregator,
            "sample_stride": self.sample_stride,
            "silence_pad": self.silence_pad,
            "style": self.style,
            "margins": self.margins.to_dict(),
            "temporal_pad": self.temporal_pad,
            "tracker": None if self.tracker_config is None else {
                "iou_min": self.tracker_config.iou_min,
                "max_gap": self.tracker_config.max_gap,
                "min_track_len": self.tracker_config.min_track_len,
            },
        })

    def _restore_state(self) -> None:
        snap = _read_json(self._path("state.json"))
        self.state = snap["state"]
        self.task = AnonymisationTask.from_dict(snap["task"])
        self.aggregator = snap.get("aggregator", "min")
        self.sample_stride = int(snap.get("sample_stride", 5))
        self.silence_pad = float(snap.get("silence_pad", 0.15))
        self.style = snap.get("style", "blur")
        self.margins = MarginConfig.from_dict(snap.get("margins", {}))
        self.temporal_pad = int(snap.get("temporal_pad", 0))
        tracker = snap.get("tracker")
        if tracker:
            self.tracker_config = TrackerConfig(**tracker)
        tracks_path = self._path("tracks.json")
        if os.path.exists(tracks_path):
            raw = _read_json(tracks_path)
            self.tracklets = [Tracklet.from_dict(t) for t in raw["tracklets"]]
            self.orphans = [Detection.from_dict(d) for d in raw["orphans"]]
        scores_path = self._path("scores.json")
        if os.path.exists(scores_path):
            self.scores = [TrackScore.from_dict(s) for s in _read_json(scores_path)]

    # ---------- guards ----------

    def _ensure_mutable(self) -> None:
        if self.state in ("approved", "redacted"):
            raise Conflict(
                f"project is {self.state}; decisions are frozen "
                "(create a new project to change them)")

    def _require_tracks(self) -> None:
        if not self.tracklets and not self.orphans:
            raise Conflict("run tracking first")

    # ---------- mutations ----------

    def run_tracking(self, config: Optional[TrackerConfig] = None) -> dict:
        """(Re)link detections into tracklets; resets downstream decisions."""
        with self._lock:
            self._ensure_mutable()
            config = config or TrackerConfig()
            result = track_recording(self.detections, self.scenes, config)
            self.tracker_config = config
            self.tracklets = list(result.tracklets)
            self.orphans = list(result.orphans)
            self.scores = []
            self.task = replace(self.task, identity_refs=())
            self.state = "draft"
            _write_json(self._path("tracks.json"), {
                "tracklets": [t.to_dict() for t in self.tracklets],
                "orphans": [d.to_dict() for d in self.orphans],
            })
            scores_path = self._path("scores.json")
            if os.path.exists(scores_path):
                os.remove(scores_path)
            self._append_log("track", config={
                "iou_min": config.iou_min,
                "max_gap": config.max_gap,
                "min_track_len": config.min_track_len,
            })
            self._save_state()
            return {"state": self.state, "tracklets": len(self.tracklets),
                    "orphans": len(self.orphans)}

    def set_reference(self, track_ids: Sequence[str],
                      aggregator: Optional[str] = None,
                      sample_stride: Optional[int] = None) -> dict:
        with self._lock:
            self._ensure_mutable()
            self._require_tracks()
            if not track_ids:
                raise InvalidInput("reference needs at least one track id")
            known = {t.track_id for t in self.tracklets}
            unknown = [t for t in track_ids if t not in known]
            if unknown:
                raise UnknownResource(f"unknown track ids: {unknown}")
            if aggregator is not None:
                self.aggregator = aggregator
            if sample_stride is not None:
                self.sample_stride = int(sample_stride)
            self.task = replace(self.task, identity_refs=tuple(track_ids))
            self.state = "refs_chosen"
            self._rescore()
            self._append_log("reference", track_ids=list(track_ids),
                             aggregator=self.aggregator,
                             sample_stride=self.sample_stride)
            self._save_state()
            return self.decision_summary()

    def set_threshold(self, value: float) -> dict:
        with self._lock:
            self._ensure_mutable()
            if not isinstance(value, (int, float)) or math.isnan(value):
                raise InvalidInput("threshold must be a number")
            if not (-1.0 <= value <= 1.0):
                raise InvalidInput(f"threshold must be in [-1,1], got {value}")
            self.task = replace(self.task, threshold=float(value))
            if self.task.identity_refs:
                self._rescore()
            self._append_log("threshold", value=float(value))
            self._save_state()
            return self.decision_summary()

    def pick_clusters(self, cluster_ids: Sequence[int],
                      pad: Optional[float] = None) -> dict:
        with self._lock:
            self._ensure_mutable()
            if not self.segments:
                raise InvalidInput("project has no diarisation; nothing to pick")
            known = {s.cluster_id for s in self.segments}
            unknown = [c for c in cluster_ids if c not in known]
            if unknown:
                raise UnknownResource(f"unknown cluster ids: {unknown}")
            if pad is not None:
                if pad < 0:
                    raise InvalidInput(f"pad must be >= 0, got {pad}")
                self.silence_pad = float(pad)
            self.task = replace(self.task,
                                audio_cluster_ids=tuple(int(c) for c in cluster_ids))
            if self.state in ("draft", "refs_chosen"):
                # a cluster pick is a redactable decision even with no video refs
                self.state = "scored"
            self._append_log("clusters", cluster_ids=[int(c) for c in cluster_ids],
                             pad=self.silence_pad)
            self._save_state()
            return self.decision_summary()

    def _rescore(self) -> None:
        try:
            ref = build_reference(self.task.identity_refs, self.tracklets,
                                  self.embeddings)
        except ValueError as exc:
            raise InvalidInput(str(exc)) from exc
        raw = score_tracks(ref, self.tracklets, self.embeddings,
                           aggregator=self.aggregator,
                           sample_stride=self.sample_stride)
        self.scores = classify_tracks(raw, self.task)
        _write_json(self._path("scores.json"), [s.to_dict() for s in self.scores])
        self.state = "scored"

    def approve(self, confirm: bool = False, style: Optional[str] = None,
                margins: Optional[MarginConfig] = None,
                temporal_pad: Optional[int] = None) -> dict:
        with self._lock:
            if self.state in ("approved", "redacted"):
                raise Conflict(f"plan is already {self.state}")
            if self.state != "scored":
                raise Conflict("approve requires a scored project "
                               "(pick a reference or clusters first)")
            if style is not None:
                self.style = style
            if margins is not None:
                self.margins = margins
            if temporal_pad is not None:
                self.temporal_pad = int(temporal_pad)

            matched = [s for s in self.scores if s.decision == "match"]
            silence = self.silence_set()
            if not matched and not silence:
                raise InvalidInput("nothing to redact: no matched tracks and "
                                   "no picked clusters")
            if (self.task.mode == "targets" and self.task.identity_refs
                    and not matched and not confirm):
                raise NeedsConfirm(
                    "threshold matches zero tracks; pass confirm=true to "
                    "approve an audio-only plan")

            by_id = {t.track_id: t for t in self.tracklets}
            matched_tracks = [by_id[s.track_id] for s in matched]
            plan = compile_plan(
                matched_tracks, self.margins, self.style, silence,
                temporal_pad_frames=self.temporal_pad, scenes=self.scenes,
                total_frames=self.manifest.total_frames,
                provenance={
                    "task": self.task.to_dict(),
                    "matched_tracks": [t.track_id for t in matched_tracks],
                    "aggregator": self.aggregator,
                    "sample_stride": self.sample_stride,
                    "silence_pad": self.silence_pad,
                    "style": self.style,
                    "margins": self.margins.to_dict(),
                    "temporal_pad_frames": self.temporal_pad,
                })
            blob = plan.canonical_bytes()
            with open(self._path("plan.json"), "wb") as fh:
                fh.write(blob)
            self.state = "approved"
            self._append_log("approve", confirm=bool(confirm), style=self.style,
                             margins=self.margins.to_dict(),
                             temporal_pad=self.temporal_pad,
                             plan_hash=plan.content_hash())
            self._save_state()
            return {
                "state": self.state,
                "plan_hash": plan.content_hash(),
                "video_ops": len(plan.video_ops),
                "audio_intervals": len(plan.audio_ops),
                "seconds_silenced": sum(e - s for s, e in plan.audio_ops),
                "matched_tracks": [t.track_id for t in matched_tracks],
            }

    def execute(self) -> dict:
        with self._lock:
            if self.state == "redacted":
                report = _read_json(self._path("report.json"))
                report["already_executed"] = True
                return report
            if self.state != "approved":
                raise Conflict("execute requires an approved plan")
            plan = self.plan()
            out_frames = os.path.join(self.project_dir, "out", "frames")
            out_audio_name = "audio.wav"
            audio_meta = None
            if self.audio is not None:
                audio_meta = AudioMeta(path=out_audio_name,
                                       sample_rate=self.audio.sample_rate)
            out_manifest = RecordingManifest(
                fps=self.manifest.fps, width=self.manifest.width,
                height=self.manifest.height,
                total_frames=self.manifest.total_frames, audio=audio_meta)
            out_store = FrameStore.create(out_frames, out_manifest)
            video_report = apply_video(plan, self.store, out_store)
            audio_report = RedactionReport()
            if self.audio is not None:
                redacted, audio_report = apply_audio(plan, self.audio)
                write_audio(redacted, os.path.join(out_frames, out_audio_name))
            report = merge_reports(video_report, audio_report)
            payload = report.to_dict()
            payload["out_frames"] = out_frames
            _write_json(self._path("report.json"), payload)
            self.state = "redacted"
            self._append_log("execute", report=report.to_dict())
            self._save_state()
            result = dict(payload)
            result["already_executed"] = False
            return result

    # ---------- read-only views ----------

    def plan(self) -> RedactionPlan:
        path = self._path("plan.json")
        if not os.path.exists(path):
            raise UnknownResource("no plan has been approved yet")
        return RedactionPlan.from_dict(_read_json(path))

    def plan_bytes(self) -> bytes:
        path = self._path("plan.json")
        if not os.path.exists(path):
            raise UnknownResource("no plan has been approved yet")
        with open(path, "rb") as fh:
            return fh.read()

    def report(self) -> dict:
        path = self._path("report.json")
        if not os.path.exists(path):
            raise UnknownResource("no redaction has been executed yet")
        return _read_json(path)

    def decision_summary(self) -> dict:
        counts = {"match": 0, "non_match": 0, "protected": 0, "deferred": 0}
        items = []
        for s in self.scores:
            if s.score is None:
                counts["deferred"] += 1
            else:
                counts[s.decision] = counts.get(s.decision, 0) + 1
            if s.track_id in self.labels and s.score is not None:
                items.append(LabeledScore(s.track_id, s.score,
                                          self.labels[s.track_id]))
        precision = recall = None
        if any(i.label for i in items):
            precision, recall = precision_recall_at(items, self.task.threshold)
        silence = self.silence_set()
        return {
            "state": self.state,
            "threshold": self.task.threshold,
            "mode": self.task.mode,
            "reference": list(self.task.identity_refs),
            "picked_clusters": list(self.task.audio_cluster_ids),
            "counts": counts,
            "precision": precision,
            "recall": recall,
            "silence_seconds": sum(e - s for s, e in silence),
            "silence_intervals": len(silence),
        }

    def media_duration(self) -> float:
        if self.audio is not None:
            return self.audio.duration_seconds
        return self.manifest.duration_seconds

    def silence_set(self) -> list[tuple[float, float]]:
        if not self.task.audio_cluster_ids:
            return []
        selected = segments_for_clusters(self.segments, self.task.audio_cluster_ids)
        return build_silence_set(selected, pad=self.silence_pad,
                                 duration=self.media_duration())

    def tracklet_summaries(self, scene: Optional[int] = None) -> list[dict]:
        self._require_tracks()
        tracks = self.tracklets
        if scene is not None:
            tracks = [t for t in tracks if t.scene_id == scene]
        order = select_reference_candidates(tracks)
        by_id = {t.track_id: t for t in tracks}
        score_by_id = {s.track_id: s for s in self.scores}
        out = []
        for track_id in order:
            t = by_id[track_id]
            s = score_by_id.get(track_id)
            out.append({
                "track_id": t.track_id,
                "scene_id": t.scene_id,
                "start_frame": t.start_frame,
                "end_frame": t.end_frame,
                "observations": len(t.observations),
                "detections": len(t.detection_ids()),
                "embeddings": sum(1 for d in t.detection_ids()
                                  if d in self.embeddings),
                "score": None if s is None else s.score,
                "decision": "pending" if s is None else s.decision,
                "is_reference": t.track_id in self.task.identity_refs,
            })
        return out

    def cluster_summaries(self) -> dict:
        summaries = summarize_clusters(self.segments)
        sid_by_key = {(seg.start, seg.end, seg.cluster_id): f"s{i}"
                      for i, seg in enumerate(self.segments)}
        picked = set(self.task.audio_cluster_ids)
        clusters = []
        for summary in summaries:
            clusters.append({
                "cluster": summary.cluster_id,
                "total_seconds": summary.total_speech_seconds,
                "segments": summary.segment_count,
                "picked": summary.cluster_id in picked,
                "representatives": [
                    {"sid": sid_by_key[(s.start, s.end, s.cluster_id)],
                     "start": s.start, "end": s.end}
                    for s in summary.representatives
                ],
            })
        silence = self.silence_set()
        return {
            "clusters": clusters,
            "picked": sorted(picked),
            "silence_seconds": sum(e - s for s, e in silence),
        }

    def segment_by_sid(self, sid: str) -> SpeakerSegment:
        if not sid.startswith("s"):
            raise UnknownResource(f"unknown segment {sid!r}")
        try:
            index = int(sid[1:])
        except ValueError:
            raise UnknownResource(f"unknown segment {sid!r}") from None
        if not (0 <= index < len(self.segments)):
            raise UnknownResource(f"unknown segment {sid!r}")
        return self.segments[index]

    def snippet_wav(self, sid: str) -> bytes:
        """The segment's audio, bounds exactly, from the allowed source."""
        segment = self.segment_by_sid(sid)
        audio = self._audio_source()
        if audio is None:
            raise UnknownResource("recording has no audio")
        clip = audio.clip(segment.start, segment.end)
        if len(clip) == 0:
            raise UnknownResource(f"segment {sid} lies outside the audio")
        return to_wav_bytes(clip)

    def thumb_png(self, frame_index: int, track_id: Optional[str] = None,
                  max_side: int = 320) -> bytes:
        """Server-rendered thumbnail; original frames only until redaction."""
        store = self._frame_source()
        if not (0 <= frame_index < self.manifest.total_frames):
            raise UnknownResource(f"frame {frame_index} out of range")
        raster = store.read_frame(frame_index)
        if track_id is not None:
            track = next((t for t in self.tracklets if t.track_id == track_id), None)
            if track is None:
                raise UnknownResource(f"unknown track {track_id!r}")
            obs = next((o for o in track.observations
                        if o.frame.frame_index == frame_index), None)
            if obs is None:
                raise UnknownResource(
                    f"track {track_id} has no observation at frame {frame_index}")
            region = clamp_region(obs.bbox, self.manifest.width,
                                  self.manifest.height)
            if region is None:
                raise UnknownResource("observation lies outside the frame")
            x0, y0, x1, y1 = region
            raster = raster[y0:y1, x0:x1]
        img = Image.fromarray(np.ascontiguousarray(raster), mode="RGB")
        img.thumbnail((max_side, max_side))
        buf = BytesIO()
        img.save(buf, format="PNG")
        return buf.getvalue()

    def _frame_source(self) -> FrameStore:
        """After redaction, only the redacted store may serve pixels."""
        if self.state == "redacted":
            return FrameStore.open(os.path.join(self.project_dir, "out", "frames"))
        return self.store

    def _audio_source(self) -> Optional[AudioBuffer]:
        if self.state == "redacted":
            path = os.path.join(self.project_dir, "out", "frames", "audio.wav")
            return read_audio(path) if os.path.exists(path) else None
        return self.audio

    def export_bundle(self) -> ExportBundle:
        return ExportBundle(
            manifest=self.manifest,
            tracklets=tuple(self.tracklets),
            scores={s.track_id: s for s in self.scores},
            segments=tuple(self.segments),
            silence=tuple(self.silence_set()),
            frame_pattern=self.store.pattern,
        )

    def export(self, fmt: str) -> tuple[str, str]:
        """Returns (document text, media type) for 'via' or 'eaf'."""
        bundle = self.export_bundle()
        if fmt == "via":
            return export_via(bundle), "application/json"
        if fmt == "eaf":
            return export_eaf(bundle, self.media_duration()), "application/xml"
        raise UnknownResource(f"unknown export format {fmt!r}")

    def snapshot(self) -> dict:
        return {
            "project_id": self.project_id,
            "state": self.state,
            "task": self.task.to_dict(),
            "counts": {
                "scenes": len(self.scenes),
                "detections": len(self.detections),
                "tracklets": len(self.tracklets),
                "orphans": len(self.orphans),
                "segments": len(self.segments),
                "clusters": len({s.cluster_id for s in self.segments}),
            },
            "has_audio": self.audio is not None,
            "fps": self.manifest.fps,
            "total_frames": self.manifest.total_frames,
        }


def replay_plan_bytes(project_dir: str, scratch_dir: str) -> bytes:
    """Rebuild the plan from the decision log alone, on a fresh project.

    Only logged mutation events are applied; timestamps and the execute
    event are ignored. The result must equal the approved plan.json bytes.
    """
    meta = _read_json(os.path.join(project_dir, "project.json"))
    events = []
    with open(os.path.join(project_dir, "log.jsonl"), "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(json.loads(line))

    fresh = ReviewProject.create(
        scratch_dir, ProjectInputs.from_dict(meta["inputs"]),
        AnonymisationTask.from_dict(meta["task"]),
        project_id=meta["project_id"] + "-replay")
    for event in events:
        kind = event["event"]
        if kind == "track":
            fresh.run_tracking(TrackerConfig(**event["config"]))
        elif kind == "reference":
            fresh.set_reference(event["track_ids"],
                                aggregator=event.get("aggregator"),
                                sample_stride=event.get("sample_stride"))
        elif kind == "threshold":
            fresh.set_threshold(event["value"])
        elif kind == "clusters":
            fresh.pick_clusters(event["cluster_ids"], pad=event.get("pad"))
        elif kind == "approve":
            fresh.approve(confirm=True, style=event.get("style"),
                          margins=MarginConfig.from_dict(event.get("margins", {})),
                          temporal_pad=event.get("temporal_pad"))
    return fresh.plan_bytes()


def sweep_expired(projects_root: str, max_age_seconds: float,
                  now: Optional[float] = None) -> list[str]:
    """Delete project directories idle longer than the retention window.

    Idle time is measured from the decision log's mtime (every state
    change appends to it), so an actively reviewed project survives.
    Directories without a project.json are left alone.
    """
    if max_age_seconds < 0:
        raise ValueError(f"max_age_seconds must be >= 0, got {max_age_seconds}")
    if now is None:
        now = time.time()
    removed = []
    if not os.path.isdir(projects_root):
        return removed
    for name in sorted(os.listdir(projects_root)):
        project_dir = os.path.join(projects_root, name)
        if not os.path.isfile(os.path.join(project_dir, "project.json")):
            continue
        log_path = os.path.join(project_dir, "log.jsonl")
        stamp_path = log_path if os.path.exists(log_path) else os.path.join(
            project_dir, "project.json")
        if now - os.path.getmtime(stamp_path) > max_age_seconds:
            shutil.rmtree(project_dir)
            removed.append(name)
    return removed

"""Command-line pipeline: segment, track, identify, speakers, plan, redact.

Each subcommand reads and writes the sidecar formats, so the full flow is
scriptable end to end:

    avanon segment --frames rec/ --out scenes.json
    avanon track --detections det.jsonl --scenes scenes.json --out tracks.json
    avanon identify --tracks tracks.json --embeddings emb.jsonl \
        --ref t-0-0 --out scores.json
    avanon speakers silence-set --diarization dia.jsonl --clusters 1 \
        --out silence.json
    avanon plan --tracks tracks.json --scores scores.json --scenes scenes.json \
        --silence silence.json --force --out plan.json
    avanon redact --plan plan.json --frames-in rec/ --frames-out out/ \
        --audio-in rec/audio.wav --audio-out out/audio.wav

The interactive review flow (reference picking, threshold tuning, cluster
audition, approval) lives behind `avanon serve`.
"""

from __future__ import annotations

import json
import os
from typing import Optional

import click

from .exporters import floor_ms  # noqa: F401  (re-exported for scripts)
from .ingest.audio import read_audio, write_audio
from .ingest.frames import FrameStore
from .ingest.sidecars import (
    load_detections,
    load_diarization,
    load_embeddings,
    load_shot_boundaries,
)
from .metrics import LabeledScore, auc, polyline_svg, pr_curve, roc_curve
from .model import Scene, Tracklet, validate_scene_partition
from .redaction import (
    MarginConfig,
    RedactionPlan,
    apply_audio,
    apply_video,
    compile_plan,
    merge_reports,
)
from .scenes import detect_hard_cuts, scenes_from_boundaries
from .speakers import (
    RetrievalQuery,
    assign_clusters,
    build_silence_set,
    cluster_fallback,
    retrieve_segments,
    segments_for_clusters,
    summarize_clusters,
)
from .tracking import TrackerConfig, track_recording
from .verification import build_reference, classify_tracks, score_tracks
from .model import AnonymisationTask


def _write_json(path: str, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _read_json(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _load_scenes(path: str) -> list[Scene]:
    scenes = [Scene.from_dict(raw) for raw in _read_json(path)]
    validate_scene_partition(scenes, scenes[-1].end_frame if scenes else 0)
    return scenes


@click.group()
def main():
    """Anonymisation pipeline for classroom audio-visual recordings."""


@main.command()
@click.option("--frames", "frames_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--shots", "shots_path", type=click.Path(exists=True, dir_okay=False),
              help="Precomputed shot boundary sidecar.")
@click.option("--detect", is_flag=True,
              help="Detect hard cuts from frame histograms instead.")
@click.option("--cut-threshold", default=0.5, show_default=True,
              help="Histogram distance above which a hard cut is declared.")
@click.option("--out", "out_path", default="scenes.json", show_default=True)
def segment(frames_dir: str, shots_path: Optional[str], detect: bool,
            cut_threshold: float, out_path: str):
    """Turn shot boundaries (sidecar or detected) into a scene partition."""
    if shots_path and detect:
        raise click.UsageError("--shots and --detect are mutually exclusive")
    store = FrameStore.open(frames_dir)
    if shots_path:
        boundaries = load_shot_boundaries(shots_path, store.manifest.total_frames)
    elif detect:
        boundaries = detect_hard_cuts(store, threshold=cut_threshold)
    else:
        boundaries = []
    scenes = scenes_from_boundaries(boundaries, store.manifest.total_frames)
    _write_json(out_path, [s.to_dict() for s in scenes])
    click.echo(f"wrote {len(scenes)} scene(s) to {out_path}")


@main.command()
@click.option("--detections", "det_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--scenes", "scenes_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--iou-min", default=0.3, show_default=True)
@click.option("--max-gap", default=10, show_default=True)
@click.option("--min-len", default=5, show_default=True)
@click.option("--out", "out_path", default="tracks.json", show_default=True)
@click.option("--orphans-out", "orphans_path", default=None,
              help="Defaults to orphans.json next to --out.")
def track(det_path: str, scenes_path: str, iou_min: float, max_gap: int,
          min_len: int, out_path: str, orphans_path: Optional[str]):
    """Link detections into tracklets scene by scene."""
    scenes = _load_scenes(scenes_path)
    total = scenes[-1].end_frame
    detections = load_detections(det_path, total_frames=total, scenes=scenes)
    config = TrackerConfig(iou_min=iou_min, max_gap=max_gap, min_track_len=min_len)
    result = track_recording(detections, scenes, config)
    _write_json(out_path, [t.to_dict() for t in result.tracklets])
    if orphans_path is None:
        orphans_path = os.path.join(os.path.dirname(out_path) or ".", "orphans.json")
    _write_json(orphans_path, [d.to_dict() for d in result.orphans])
    click.echo(f"{len(result.tracklets)} tracklet(s), {len(result.orphans)} "
               f"orphan(s); wrote {out_path} and {orphans_path}")


@main.command()
@click.option("--tracks", "tracks_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--embeddings", "emb_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--ref", "ref_ids", required=True,
              help="Comma-separated reference track ids.")
@click.option("--mode", type=click.Choice(["targets", "all-except"]),
              default="targets", show_default=True)
@click.option("--threshold", default=0.5, show_default=True)
@click.option("--agg", "aggregator", type=click.Choice(["min", "mean", "max"]),
              default="min", show_default=True)
@click.option("--stride", default=5, show_default=True)
@click.option("--out", "out_path", default="scores.json", show_default=True)
def identify(tracks_path: str, emb_path: str, ref_ids: str, mode: str,
             threshold: float, aggregator: str, stride: int, out_path: str):
    """Score every tracklet against the reference and decide matches."""
    tracklets = [Tracklet.from_dict(raw) for raw in _read_json(tracks_path)]
    embeddings = load_embeddings(emb_path)
    refs = [r.strip() for r in ref_ids.split(",") if r.strip()]
    task = AnonymisationTask(mode=mode.replace("-", "_"),
                             identity_refs=tuple(refs), threshold=threshold)
    reference = build_reference(refs, tracklets, embeddings)
    raw_scores = score_tracks(reference, tracklets, embeddings,
                              aggregator=aggregator, sample_stride=stride)
    decided = classify_tracks(raw_scores, task)
    _write_json(out_path, [s.to_dict() for s in decided])
    matches = sum(1 for s in decided if s.decision == "match")
    click.echo(f"{matches}/{len(decided)} track(s) matched; wrote {out_path}")


@main.group()
def speakers():
    """Diarisation post-processing: summarize, retrieve, cluster, silence-set."""


@speakers.command()
@click.option("--diarization", "dia_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", default="clusters.json", show_default=True)
def summarize(dia_path: str, out_path: str):
    """Per-cluster speech totals and representative segments."""
    segments = load_diarization(dia_path)
    summaries = summarize_clusters(segments)
    _write_json(out_path, [s.to_dict() for s in summaries])
    click.echo(f"{len(summaries)} cluster(s); wrote {out_path}")


@speakers.command()
@click.option("--diarization", "dia_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--exemplars", "exemplars_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON array of d-vectors picked by the operator.")
@click.option("--top-k", default=10, show_default=True)
@click.option("--out", "out_path", default="ranked.json", show_default=True)
def retrieve(dia_path: str, exemplars_path: str, top_k: int, out_path: str):
    """Rank segments by best cosine against the exemplar d-vectors."""
    segments = load_diarization(dia_path)
    query = RetrievalQuery.from_vectors(_read_json(exemplars_path), top_k=top_k)
    ranked = retrieve_segments(query, segments)
    _write_json(out_path, [
        {"start": seg.start, "end": seg.end, "cluster": seg.cluster_id,
         "score": score}
        for seg, score in ranked
    ])
    click.echo(f"ranked {len(ranked)} segment(s); wrote {out_path}")


@speakers.command()
@click.option("--diarization", "dia_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--similarity-threshold", default=0.5, show_default=True)
@click.option("--out", "out_path", default="clustered.jsonl", show_default=True)
def cluster(dia_path: str, similarity_threshold: float, out_path: str):
    """Relabel segments by single-linkage d-vector clustering (fallback)."""
    segments = load_diarization(dia_path)
    labels = cluster_fallback(segments, similarity_threshold)
    relabeled = assign_clusters(segments, labels)
    with open(out_path, "w", encoding="utf-8") as fh:
        for seg in relabeled:
            fh.write(json.dumps(seg.to_dict(), sort_keys=True) + "\n")
    click.echo(f"{len(set(labels))} cluster(s) over {len(labels)} segment(s); "
               f"wrote {out_path}")


@speakers.command("silence-set")
@click.option("--diarization", "dia_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--clusters", "cluster_ids", required=True,
              help="Comma-separated cluster ids to silence.")
@click.option("--pad", default=0.15, show_default=True)
@click.option("--duration", default=None, type=float,
              help="Clamp intervals to this many seconds.")
@click.option("--out", "out_path", default="silence.json", show_default=True)
def silence_set(dia_path: str, cluster_ids: str, pad: float,
                duration: Optional[float], out_path: str):
    """Union the picked clusters' segments into silence intervals."""
    segments = load_diarization(dia_path)
    chosen = [int(c) for c in cluster_ids.split(",") if c.strip()]
    selected = segments_for_clusters(segments, chosen)
    intervals = build_silence_set(selected, pad=pad, duration=duration)
    _write_json(out_path, [{"start": s, "end": e} for s, e in intervals])
    total = sum(e - s for s, e in intervals)
    click.echo(f"{len(intervals)} interval(s), {total:.2f}s; wrote {out_path}")


@main.command()
@click.option("--tracks", "tracks_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--scores", "scores_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--scenes", "scenes_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--silence", "silence_path",
              type=click.Path(exists=True, dir_okay=False))
@click.option("--style", type=click.Choice(["blur", "blackout"]), default="blur",
              show_default=True)
@click.option("--margin-top", default=0.5, show_default=True)
@click.option("--margin-sides", default=0.2, show_default=True)
@click.option("--margin-bottom", default=0.1, show_default=True)
@click.option("--temporal-pad", default=0, show_default=True)
@click.option("--force", is_flag=True,
              help="Compile without a reviewed approval (scripted runs).")
@click.option("--out", "out_path", default="plan.json", show_default=True)
def plan(tracks_path: str, scores_path: str, scenes_path: str,
         silence_path: Optional[str], style: str, margin_top: float,
         margin_sides: float, margin_bottom: float, temporal_pad: int,
         force: bool, out_path: str):
    """Compile matched tracks and silence intervals into an executable plan."""
    if not force:
        raise click.UsageError(
            "plan compilation outside the review service requires --force "
            "(the service records operator approval; the CLI cannot)")
    tracklets = [Tracklet.from_dict(raw) for raw in _read_json(tracks_path)]
    scenes = _load_scenes(scenes_path)
    decisions = {raw["track_id"]: raw["decision"] for raw in _read_json(scores_path)}
    unknown = set(decisions) - {t.track_id for t in tracklets}
    if unknown:
        raise click.ClickException(f"scores reference unknown tracks: {sorted(unknown)}")
    matched = [t for t in tracklets if decisions.get(t.track_id) == "match"]
    silence = []
    if silence_path:
        silence = [(float(r["start"]), float(r["end"]))
                   for r in _read_json(silence_path)]
    margins = MarginConfig(top=margin_top, sides=margin_sides, bottom=margin_bottom)
    compiled = compile_plan(
        matched, margins, style, silence, temporal_pad_frames=temporal_pad,
        scenes=scenes, total_frames=scenes[-1].end_frame,
        provenance={
            "source": "cli",
            "matched_tracks": [t.track_id for t in matched],
            "style": style,
            "margins": margins.to_dict(),
            "temporal_pad_frames": temporal_pad,
        })
    with open(out_path, "wb") as fh:
        fh.write(compiled.canonical_bytes())
    click.echo(f"{len(compiled.video_ops)} video op(s), "
               f"{len(compiled.audio_ops)} audio interval(s); wrote {out_path}")


@main.command()
@click.option("--plan", "plan_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--frames-in", "frames_in", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--frames-out", "frames_out", required=True, type=click.Path())
@click.option("--audio-in", "audio_in", type=click.Path(exists=True, dir_okay=False))
@click.option("--audio-out", "audio_out", type=click.Path())
@click.option("--report", "report_path", type=click.Path())
def redact(plan_path: str, frames_in: str, frames_out: str,
           audio_in: Optional[str], audio_out: Optional[str],
           report_path: Optional[str]):
    """Execute a compiled plan: mask frames, silence audio."""
    if (audio_in is None) != (audio_out is None):
        raise click.UsageError("--audio-in and --audio-out go together")
    compiled = RedactionPlan.from_dict(_read_json(plan_path))
    store_in = FrameStore.open(frames_in)
    store_out = FrameStore.create(frames_out, store_in.manifest)
    video_report = apply_video(compiled, store_in, store_out)
    if audio_in:
        buffer = read_audio(audio_in)
        redacted, audio_report = apply_audio(compiled, buffer)
        write_audio(redacted, audio_out)
        report = merge_reports(video_report, audio_report)
    else:
        report = video_report
    if report_path:
        _write_json(report_path, report.to_dict())
    click.echo(
        f"masked {report.pixels_masked} pixel(s) on {report.frames_touched} "
        f"frame(s); zeroed {report.samples_zeroed} sample(s)")


@main.command("eval")
@click.option("--scores", "scores_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help='JSON array of {"id","score","label"} records.')
@click.option("--out", "out_path", default="metrics.json", show_default=True)
@click.option("--pr-svg", "pr_svg", type=click.Path())
@click.option("--roc-svg", "roc_svg", type=click.Path())
def evaluate(scores_path: str, out_path: str, pr_svg: Optional[str],
             roc_svg: Optional[str]):
    """Precision-recall and ROC curves plus AUC over labelled scores."""
    items = [LabeledScore.from_dict(raw) for raw in _read_json(scores_path)]
    pr = pr_curve(items)
    roc = roc_curve(items)
    area = auc(roc)
    _write_json(out_path, {
        "auc": area,
        "pr": [[t, p, r] for t, p, r in pr],
        "roc": [[None if t == float("inf") else t, fpr, tpr]
                for t, fpr, tpr in roc.points],
    })
    if pr_svg:
        with open(pr_svg, "w", encoding="utf-8") as fh:
            fh.write(polyline_svg([(r, p) for _, p, r in pr],
                                  "Precision vs recall", "recall", "precision"))
    if roc_svg:
        with open(roc_svg, "w", encoding="utf-8") as fh:
            fh.write(polyline_svg([(fpr, tpr) for _, fpr, tpr in roc.points],
                                  f"ROC (AUC {area:.3f})", "false positive rate",
                                  "true positive rate"))
    click.echo(f"AUC {area:.4f}; wrote {out_path}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True,
              help="Loopback by default: recordings are sensitive data.")
@click.option("--port", default=8008, show_default=True)
@click.option("--projects-root", default="review-projects", show_default=True)
def serve(host: str, port: int, projects_root: str):
    """Run the local review service."""
    import uvicorn

    from .review.service import create_app

    uvicorn.run(create_app(projects_root), host=host, port=port, log_level="info")


@main.command()
@click.option("--projects-root", default="review-projects", show_default=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--max-age-hours", default=24.0, show_default=True,
              help="Delete projects idle longer than this.")
def sweep(projects_root: str, max_age_hours: float):
    """Remove review projects past the retention window."""
    from .review.project import sweep_expired

    removed = sweep_expired(projects_root, max_age_hours * 3600.0)
    for project_id in removed:
        click.echo(f"removed {project_id}")
    click.echo(f"{len(removed)} project(s) removed")


if __name__ == "__main__":
    main()

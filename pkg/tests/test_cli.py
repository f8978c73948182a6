from __future__ import annotations

import json
import os
import wave

import numpy as np
import pytest
from click.testing import CliRunner

from avanon.cli import main
from synth import build_recording


@pytest.fixture(scope="module")
def rec(tmp_path_factory):
    rng = np.random.default_rng(11)
    return build_recording(tmp_path_factory.mktemp("cli-rec"), rng,
                           n_frames=40, audio_seconds=6.0, shot_frame=20)


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def arts(rec, runner, tmp_path_factory):
    """Artifacts from one happy-path run of the scripted pipeline."""
    work = str(tmp_path_factory.mktemp("cli-work"))
    paths = {
        "scenes": os.path.join(work, "scenes.json"),
        "tracks": os.path.join(work, "tracks.json"),
        "orphans": os.path.join(work, "orphans.json"),
        "scores": os.path.join(work, "scores.json"),
        "silence": os.path.join(work, "silence.json"),
        "plan": os.path.join(work, "plan.json"),
        "frames_out": os.path.join(work, "out-frames"),
        "audio_out": os.path.join(work, "audio.wav"),
        "report": os.path.join(work, "report.json"),
        "work": work,
    }
    steps = [
        ["segment", "--frames", rec["frames_dir"], "--shots", rec["shots"],
         "--out", paths["scenes"]],
        ["track", "--detections", rec["detections"], "--scenes", paths["scenes"],
         "--out", paths["tracks"]],
        ["identify", "--tracks", paths["tracks"], "--embeddings",
         rec["embeddings"], "--ref", "t-0-0", "--threshold", "0.25",
         "--out", paths["scores"]],
        ["speakers", "silence-set", "--diarization", rec["diarization"],
         "--clusters", "0", "--out", paths["silence"]],
        ["plan", "--tracks", paths["tracks"], "--scores", paths["scores"],
         "--scenes", paths["scenes"], "--silence", paths["silence"],
         "--force", "--out", paths["plan"]],
        ["redact", "--plan", paths["plan"], "--frames-in", rec["frames_dir"],
         "--frames-out", paths["frames_out"],
         "--audio-in", os.path.join(rec["frames_dir"], "audio.wav"),
         "--audio-out", paths["audio_out"], "--report", paths["report"]],
    ]
    outputs = {}
    for step in steps:
        result = runner.invoke(main, step, catch_exceptions=False)
        assert result.exit_code == 0, f"{step[0]}: {result.output}"
        outputs[" ".join(step[:2]).strip()] = result.output
    paths["echo"] = outputs
    return paths


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


class TestSegment:
    def test_scene_partition_written(self, arts):
        scenes = read_json(arts["scenes"])
        assert scenes == [
            {"scene_id": 0, "start": 0, "end": 20},
            {"scene_id": 1, "start": 20, "end": 40},
        ]
        assert "wrote 2 scene(s)" in arts["echo"]["segment --frames"]

    def test_shots_and_detect_are_exclusive(self, rec, runner, tmp_path):
        result = runner.invoke(main, [
            "segment", "--frames", rec["frames_dir"], "--shots", rec["shots"],
            "--detect", "--out", str(tmp_path / "s.json")])
        assert result.exit_code == 2
        assert "mutually exclusive" in result.output

    def test_detect_with_high_threshold_yields_one_scene(self, rec, runner,
                                                         tmp_path):
        out = str(tmp_path / "s.json")
        result = runner.invoke(main, [
            "segment", "--frames", rec["frames_dir"], "--detect",
            "--cut-threshold", "1.5", "--out", out])
        assert result.exit_code == 0
        assert read_json(out) == [{"scene_id": 0, "start": 0, "end": 40}]


class TestTrack:
    def test_tracklets_and_orphans_written(self, arts):
        tracks = read_json(arts["tracks"])
        assert [t["track_id"] for t in tracks] == [
            "t-0-0", "t-0-1", "t-1-0", "t-1-1"]
        assert all(len(t["obs"]) == 20 for t in tracks)
        assert read_json(arts["orphans"]) == []
        assert "4 tracklet(s), 0 orphan(s)" in arts["echo"]["track --detections"]

    def test_orphans_default_path_next_to_out(self, arts):
        # no --orphans-out was given, so it landed next to tracks.json
        assert os.path.exists(os.path.join(arts["work"], "orphans.json"))


class TestIdentify:
    def test_decisions_written(self, arts):
        scores = read_json(arts["scores"])
        by_id = {s["track_id"]: s for s in scores}
        assert by_id["t-0-0"]["decision"] == "match"
        assert by_id["t-1-0"]["decision"] == "match"
        assert by_id["t-0-1"]["decision"] == "non_match"
        assert by_id["t-1-1"]["decision"] == "non_match"
        assert "2/4 track(s) matched" in arts["echo"]["identify --tracks"]

    def test_all_except_mode_inverts_targets(self, arts, rec, runner, tmp_path):
        out = str(tmp_path / "scores.json")
        result = runner.invoke(main, [
            "identify", "--tracks", arts["tracks"], "--embeddings",
            rec["embeddings"], "--ref", "t-0-0", "--mode", "all-except",
            "--threshold", "0.25", "--out", out])
        assert result.exit_code == 0
        by_id = {s["track_id"]: s["decision"] for s in read_json(out)}
        assert by_id["t-0-0"] == "protected"
        assert by_id["t-1-0"] == "protected"
        assert by_id["t-0-1"] == "match"
        assert by_id["t-1-1"] == "match"


class TestSpeakers:
    def test_summarize(self, rec, runner, tmp_path):
        out = str(tmp_path / "clusters.json")
        result = runner.invoke(main, [
            "speakers", "summarize", "--diarization", rec["diarization"],
            "--out", out])
        assert result.exit_code == 0
        summaries = read_json(out)
        assert [s["cluster"] for s in summaries] == [0, 1, 2]
        assert all(s["segments"] == 1 for s in summaries)
        assert summaries[0]["total_seconds"] == pytest.approx(1.2)
        assert summaries[0]["representatives"] == [{"start": 0.0, "end": 1.2}]

    def test_retrieve_ranks_own_cluster_first(self, rec, runner, tmp_path):
        with open(rec["diarization"], "r", encoding="utf-8") as fh:
            first = json.loads(fh.readline())
        exemplars = str(tmp_path / "exemplars.json")
        with open(exemplars, "w", encoding="utf-8") as fh:
            json.dump([first["dvec"]], fh)
        out = str(tmp_path / "ranked.json")
        result = runner.invoke(main, [
            "speakers", "retrieve", "--diarization", rec["diarization"],
            "--exemplars", exemplars, "--top-k", "2", "--out", out])
        assert result.exit_code == 0
        ranked = read_json(out)
        assert len(ranked) == 2
        assert ranked[0]["cluster"] == 0
        assert ranked[0]["score"] == pytest.approx(1.0)
        assert ranked[0]["score"] >= ranked[1]["score"]

    def test_cluster_fallback_relabels(self, rec, runner, tmp_path):
        out = str(tmp_path / "clustered.jsonl")
        result = runner.invoke(main, [
            "speakers", "cluster", "--diarization", rec["diarization"],
            "--similarity-threshold", "0.5", "--out", out])
        assert result.exit_code == 0
        assert "3 cluster(s) over 3 segment(s)" in result.output
        with open(out, "r", encoding="utf-8") as fh:
            lines = [json.loads(line) for line in fh]
        assert len(lines) == 3
        assert sorted({line["cluster"] for line in lines}) == [0, 1, 2]

    def test_silence_set(self, arts):
        intervals = read_json(arts["silence"])
        assert intervals == [{"start": 0.0, "end": pytest.approx(1.35)}]
        assert "1 interval(s), 1.35s" in arts["echo"]["speakers silence-set"]


class TestPlan:
    def test_requires_force(self, arts, runner, tmp_path):
        result = runner.invoke(main, [
            "plan", "--tracks", arts["tracks"], "--scores", arts["scores"],
            "--scenes", arts["scenes"], "--out", str(tmp_path / "plan.json")])
        assert result.exit_code == 2
        assert "--force" in result.output

    def test_plan_compiles_matched_tracks(self, arts):
        plan = read_json(arts["plan"])
        assert len(plan["video"]) == 40  # both matched tracks, every frame
        assert len(plan["audio"]) == 1
        assert plan["provenance"]["matched_tracks"] == ["t-0-0", "t-1-0"]
        assert plan["provenance"]["source"] == "cli"
        with open(arts["plan"], "rb") as fh:
            blob = fh.read()
        # canonical encoding: sorted keys, no whitespace
        assert blob == json.dumps(plan, sort_keys=True,
                                  separators=(",", ":")).encode()
        assert "40 video op(s), 1 audio interval(s)" in arts["echo"]["plan --tracks"]

    def test_rejects_scores_for_unknown_tracks(self, arts, runner, tmp_path):
        bad = str(tmp_path / "bad-scores.json")
        scores = read_json(arts["scores"])
        scores.append(dict(scores[0], track_id="t-9-9"))
        with open(bad, "w", encoding="utf-8") as fh:
            json.dump(scores, fh)
        result = runner.invoke(main, [
            "plan", "--tracks", arts["tracks"], "--scores", bad,
            "--scenes", arts["scenes"], "--force",
            "--out", str(tmp_path / "plan.json")])
        assert result.exit_code == 1
        assert "unknown tracks" in result.output
        assert "t-9-9" in result.output


class TestRedact:
    def test_audio_flags_go_together(self, arts, rec, runner, tmp_path):
        result = runner.invoke(main, [
            "redact", "--plan", arts["plan"], "--frames-in", rec["frames_dir"],
            "--frames-out", str(tmp_path / "out"),
            "--audio-in", os.path.join(rec["frames_dir"], "audio.wav")])
        assert result.exit_code == 2
        assert "go together" in result.output

    def test_outputs_written(self, arts, rec):
        report = read_json(arts["report"])
        assert report["frames_touched"] == 40
        assert report["ops_applied"] == 40
        assert report["pixels_masked"] > 0
        assert report["samples_zeroed"] > 0
        assert report["seconds_silenced"] == pytest.approx(1.35)
        assert "masked" in arts["echo"]["redact --plan"]

        listing = sorted(os.listdir(arts["frames_out"]))
        assert len([f for f in listing if f.endswith(".png")]) == 40
        with wave.open(arts["audio_out"]) as wf:
            data = np.frombuffer(wf.readframes(wf.getnframes()), dtype=np.int16)
        assert np.abs(data[: int(1.35 * 8000) - 1]).max() == 0
        assert np.abs(data[int(1.4 * 8000):]).max() > 0


class TestEval:
    def test_metrics_and_svgs(self, runner, tmp_path):
        scores = str(tmp_path / "scores.json")
        with open(scores, "w", encoding="utf-8") as fh:
            json.dump([
                {"id": "a", "score": 0.9, "label": "positive"},
                {"id": "b", "score": 0.8, "label": "positive"},
                {"id": "c", "score": 0.2, "label": "negative"},
                {"id": "d", "score": 0.1, "label": "negative"},
            ], fh)
        out = str(tmp_path / "metrics.json")
        pr_svg = str(tmp_path / "pr.svg")
        roc_svg = str(tmp_path / "roc.svg")
        result = runner.invoke(main, [
            "eval", "--scores", scores, "--out", out,
            "--pr-svg", pr_svg, "--roc-svg", roc_svg])
        assert result.exit_code == 0
        assert "AUC 1.0000" in result.output
        metrics = read_json(out)
        assert metrics["auc"] == 1.0
        assert metrics["roc"][0] == [None, 0.0, 0.0]  # inf threshold anchor
        assert all(len(point) == 3 for point in metrics["pr"])
        for svg in (pr_svg, roc_svg):
            with open(svg, "r", encoding="utf-8") as fh:
                body = fh.read()
            assert body.startswith("<svg") and "polyline" in body

    def test_rejects_bad_label(self, runner, tmp_path):
        scores = str(tmp_path / "scores.json")
        with open(scores, "w", encoding="utf-8") as fh:
            json.dump([{"id": "a", "score": 0.9, "label": "yes"}], fh)
        result = runner.invoke(main, ["eval", "--scores", scores,
                                      "--out", str(tmp_path / "m.json")])
        assert result.exit_code != 0


class TestServe:
    def test_options_documented(self, runner):
        result = runner.invoke(main, ["serve", "--help"])
        assert result.exit_code == 0
        for option in ("--host", "--port", "--projects-root"):
            assert option in result.output

    def test_group_lists_all_commands(self, runner):
        result = runner.invoke(main, ["--help"])
        for command in ("segment", "track", "identify", "speakers", "plan",
                        "redact", "eval", "serve", "sweep"):
            assert command in result.output

    def test_sweep_removes_expired_projects(self, runner, tmp_path):
        root = tmp_path / "projects"
        stale_dir = root / "stale"
        stale_dir.mkdir(parents=True)
        (stale_dir / "project.json").write_text("{}")
        old = os.path.getmtime(stale_dir / "project.json") - 90000
        os.utime(stale_dir / "project.json", (old, old))
        result = runner.invoke(main, ["sweep", "--projects-root", str(root)])
        assert result.exit_code == 0
        assert "removed stale" in result.output
        assert "1 project(s) removed" in result.output
        assert not stale_dir.exists()

from __future__ import annotations

import json
import xml.etree.ElementTree as ET

import pytest

from avanon.exporters import (
    ExportBundle,
    export_eaf,
    export_via,
    floor_ms,
    parse_eaf,
    parse_via,
    validate_eaf,
    validate_via,
)
from avanon.model import BBox, FrameRef, Observation, RecordingManifest, SpeakerSegment, Tracklet
from avanon.verification import TrackScore


def manifest(frames=100):
    return RecordingManifest(fps=25.0, width=320, height=240, total_frames=frames)


def track_of(frames, track_id="t-0-0", box=BBox(10.0, 20.0, 30.0, 40.0)):
    obs = tuple(Observation(frame=FrameRef(0, f), bbox=box, detection_id=f"d{f}")
                for f in frames)
    return Tracklet(track_id=track_id, scene_id=0, observations=obs)


def seg(start, end, cluster):
    return SpeakerSegment(start=start, end=end, cluster_id=cluster)


class TestFloorMs:
    def test_examples(self):
        assert floor_ms(1.2345) == 1234
        assert floor_ms(0.0) == 0
        assert floor_ms(2.0) == 2000

    def test_decimal_times_do_not_drift_down(self):
        # 0.06 * 1000 is 59.99999... in floats; the guard keeps it at 60
        assert floor_ms(0.06) == 60
        assert floor_ms(1.001) == 1001


class TestExportBundle:
    def test_dangling_score_rejected(self):
        with pytest.raises(ValueError, match="unknown tracks"):
            ExportBundle(manifest=manifest(), tracklets=(),
                         scores={"t-9-9": TrackScore("t-9-9", 0.5)})


class TestVia:
    def _bundle(self):
        track = track_of([0, 1])
        return ExportBundle(
            manifest=manifest(),
            tracklets=(track,),
            scores={"t-0-0": TrackScore("t-0-0", 0.875, decision="match")})

    def test_one_region_per_observation(self):
        text = export_via(self._bundle())
        project = json.loads(text)
        entries = project["_via_img_metadata"]
        assert len(entries) == 2
        assert sum(len(e["regions"]) for e in entries.values()) == 2
        assert project["_via_data_format_version"] == "2.0.10"
        assert set(project["_via_image_id_list"]) == set(entries)

    def test_image_keys_and_filenames(self):
        project = json.loads(export_via(self._bundle()))
        key = project["_via_image_id_list"][0]
        assert key == "frame_000000.png-1"
        assert project["_via_img_metadata"][key]["filename"] == "frame_000000.png"

    def test_region_attributes(self):
        project = json.loads(export_via(self._bundle()))
        region = next(iter(project["_via_img_metadata"].values()))["regions"][0]
        assert region["shape_attributes"]["name"] == "rect"
        assert region["region_attributes"] == {
            "track_id": "t-0-0", "decision": "match", "score": repr(0.875)}

    def test_deferred_score_serialized_empty(self):
        track = track_of([4])
        bundle = ExportBundle(manifest=manifest(), tracklets=(track,),
                              scores={"t-0-0": TrackScore("t-0-0", None)})
        project = json.loads(export_via(bundle))
        region = next(iter(project["_via_img_metadata"].values()))["regions"][0]
        assert region["region_attributes"]["score"] == ""

    def test_unscored_track_pending(self):
        bundle = ExportBundle(manifest=manifest(), tracklets=(track_of([4]),))
        project = json.loads(export_via(bundle))
        region = next(iter(project["_via_img_metadata"].values()))["regions"][0]
        assert region["region_attributes"]["decision"] == "pending"

    def test_shared_frame_collects_both_tracks(self):
        t1 = track_of([7], track_id="t-0-0")
        t2 = track_of([7], track_id="t-0-1", box=BBox(60.0, 60.0, 20.0, 20.0))
        project = json.loads(export_via(
            ExportBundle(manifest=manifest(), tracklets=(t1, t2))))
        assert len(project["_via_img_metadata"]) == 1
        regions = project["_via_img_metadata"]["frame_000007.png-1"]["regions"]
        assert [r["region_attributes"]["track_id"] for r in regions] == [
            "t-0-0", "t-0-1"]

    def test_parse_round_trip(self):
        bundle = self._bundle()
        parsed = parse_via(export_via(bundle))
        assert set(parsed) == {"frame_000000.png", "frame_000001.png"}
        region = parsed["frame_000000.png"][0]
        assert (region["x"], region["y"], region["w"], region["h"]) == \
            (10.0, 20.0, 30.0, 40.0)
        assert region["attributes"]["track_id"] == "t-0-0"

    def test_validator_accepts_own_output(self):
        assert validate_via(export_via(self._bundle())) == []

    def test_validator_rejects_tampering(self):
        project = json.loads(export_via(self._bundle()))
        del project["_via_image_id_list"]
        assert any("missing top-level key" in p
                   for p in validate_via(json.dumps(project)))

        project = json.loads(export_via(self._bundle()))
        project["_via_image_id_list"].append("ghost.png-1")
        assert any("does not match" in p for p in validate_via(json.dumps(project)))

        project = json.loads(export_via(self._bundle()))
        entry = next(iter(project["_via_img_metadata"].values()))
        entry["regions"][0]["shape_attributes"]["name"] = "circle"
        assert any("not a rect" in p for p in validate_via(json.dumps(project)))

    def test_validator_rejects_garbage(self):
        assert validate_via("{oops")[0].startswith("not valid JSON")


class TestEaf:
    def _bundle(self):
        segments = (seg(0.0, 1.2345, 0), seg(2.0, 3.0, 0), seg(4.5, 5.0, 1))
        return ExportBundle(manifest=manifest(), segments=segments,
                            silence=((0.5, 1.5),))

    def test_tier_layout(self):
        text = export_eaf(self._bundle(), duration_seconds=10.0)
        parsed = parse_eaf(text)
        assert list(parsed) == ["SPK0", "SPK1", "ANONYMISE"]
        assert parsed["SPK0"] == [(0, 1234, "speech"), (2000, 3000, "speech")]
        assert parsed["SPK1"] == [(4500, 5000, "speech")]
        assert parsed["ANONYMISE"] == [(500, 1500, "silence")]

    def test_every_annotation_owns_two_slots(self):
        text = export_eaf(self._bundle(), duration_seconds=10.0)
        root = ET.fromstring(text)
        slots = root.find("TIME_ORDER").findall("TIME_SLOT")
        annotations = root.findall(".//ALIGNABLE_ANNOTATION")
        assert len(annotations) == 4
        assert len(slots) == 8
        refs = [a.get(k) for a in annotations
                for k in ("TIME_SLOT_REF1", "TIME_SLOT_REF2")]
        assert len(set(refs)) == 8  # no slot sharing

    def test_header_and_framing(self):
        text = export_eaf(self._bundle(), duration_seconds=10.0)
        assert text.startswith('<?xml version="1.0" encoding="UTF-8"?>\n')
        assert text.endswith("\n")
        root = ET.fromstring(text)
        assert root.get("DATE") == "1970-01-01T00:00:00+00:00"
        header = root.find("HEADER")
        assert header.get("TIME_UNITS") == "milliseconds"
        prop = header.find("PROPERTY")
        assert prop.get("NAME") == "timeRounding" and prop.text == "floor"
        lt = root.find("LINGUISTIC_TYPE")
        assert lt.get("LINGUISTIC_TYPE_ID") == "default-lt"

    def test_deterministic(self):
        a = export_eaf(self._bundle(), duration_seconds=10.0)
        b = export_eaf(self._bundle(), duration_seconds=10.0)
        assert a == b

    def test_beyond_duration_rejected(self):
        with pytest.raises(ValueError, match="exceeds media duration"):
            export_eaf(self._bundle(), duration_seconds=4.0)
        bundle = ExportBundle(manifest=manifest(), silence=((0.0, 99.0),))
        with pytest.raises(ValueError, match="silence interval"):
            export_eaf(bundle, duration_seconds=10.0)

    def test_empty_bundle_still_valid(self):
        text = export_eaf(ExportBundle(manifest=manifest()), duration_seconds=5.0)
        assert validate_eaf(text) == []
        assert parse_eaf(text) == {"ANONYMISE": []}

    def test_validator_accepts_own_output(self):
        assert validate_eaf(export_eaf(self._bundle(), 10.0)) == []

    def test_validator_rejects_tampering(self):
        text = export_eaf(self._bundle(), 10.0)
        assert any("not well-formed" in p for p in validate_eaf(text[:-40]))

        dup = text.replace('ANNOTATION_ID="a2"', 'ANNOTATION_ID="a1"')
        assert any("duplicate annotation id" in p for p in validate_eaf(dup))

        bad_units = text.replace('TIME_UNITS="milliseconds"', 'TIME_UNITS="seconds"')
        assert any("milliseconds" in p for p in validate_eaf(bad_units))

        bad_slot = text.replace('TIME_VALUE="500"', 'TIME_VALUE="oops"')
        assert any("non-integer" in p for p in validate_eaf(bad_slot))

        bad_ref = text.replace('LINGUISTIC_TYPE_REF="default-lt"',
                               'LINGUISTIC_TYPE_REF="nope"', 1)
        assert any("undeclared linguistic type" in p for p in validate_eaf(bad_ref))

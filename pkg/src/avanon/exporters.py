"""Exports for external annotation tools.

Two one-way exports support the manual inspection step: an image-annotation
project with one rectangle per tracklet observation (attributes carry the
track id, decision, and score), and a time-aligned tier document for audio
work with one tier per speaker cluster plus an ANONYMISE tier holding the
silence set.

Times in the tier document are integer milliseconds, floored (with a tiny
guard against decimal-float artifacts). Flooring both ends keeps durations
stable, which matters more for display than half-millisecond accuracy; the
document header records this convention.
"""

from __future__ import annotations

import json
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .model import RecordingManifest, SpeakerSegment, Tracklet
from .verification import TrackScore

VIA_FORMAT_VERSION = "2.0.10"
MS_GUARD = 1e-6


def floor_ms(seconds: float) -> int:
    """Seconds to integer milliseconds, floored; 1.2345 s -> 1234 ms."""
    return int(math.floor(seconds * 1000.0 + MS_GUARD))


@dataclass(frozen=True)
class ExportBundle:
    """Everything the exporters need, cross-checked for dangling ids."""

    manifest: RecordingManifest
    tracklets: tuple[Tracklet, ...] = ()
    scores: Mapping[str, TrackScore] = field(default_factory=dict)
    segments: tuple[SpeakerSegment, ...] = ()
    silence: tuple[tuple[float, float], ...] = ()
    frame_pattern: str = "frame_%06d.png"

    def __post_init__(self):
        if not isinstance(self.tracklets, tuple):
            object.__setattr__(self, "tracklets", tuple(self.tracklets))
        if not isinstance(self.segments, tuple):
            object.__setattr__(self, "segments", tuple(self.segments))
        sil = tuple((float(s), float(e)) for s, e in self.silence)
        object.__setattr__(self, "silence", sil)
        known = {t.track_id for t in self.tracklets}
        dangling = set(self.scores) - known
        if dangling:
            raise ValueError(f"scores reference unknown tracks: {sorted(dangling)}")


def export_via(bundle: ExportBundle) -> str:
    """Image-annotation project text: one rect region per observation."""
    images: dict[str, dict] = {}
    order: list[tuple[int, str]] = []
    for track in bundle.tracklets:
        score = bundle.scores.get(track.track_id)
        attrs = {
            "track_id": track.track_id,
            "decision": score.decision if score else "pending",
            "score": "" if score is None or score.score is None else repr(score.score),
        }
        for obs in track.observations:
            filename = bundle.frame_pattern % obs.frame.frame_index
            key = f"{filename}-1"
            if key not in images:
                images[key] = {"filename": filename, "size": -1,
                               "regions": [], "file_attributes": {}}
                order.append((obs.frame.frame_index, key))
            images[key]["regions"].append({
                "shape_attributes": {
                    "name": "rect",
                    "x": obs.bbox.x,
                    "y": obs.bbox.y,
                    "width": obs.bbox.w,
                    "height": obs.bbox.h,
                },
                "region_attributes": dict(attrs),
            })
    order.sort()
    project = {
        "_via_settings": {
            "ui": {"image_grid": {}, "image": {"region_label": "track_id"}},
            "core": {"buffer_size": 18, "filepath": {}, "default_filepath": ""},
            "project": {"name": "anonymisation-review"},
        },
        "_via_img_metadata": {key: images[key] for _, key in order},
        "_via_attributes": {
            "region": {
                "track_id": {"type": "text", "default_value": ""},
                "decision": {"type": "text", "default_value": ""},
                "score": {"type": "text", "default_value": ""},
            },
            "file": {},
        },
        "_via_data_format_version": VIA_FORMAT_VERSION,
        "_via_image_id_list": [key for _, key in order],
    }
    return json.dumps(project, indent=1, sort_keys=False)


def parse_via(text: str) -> dict[str, list[dict]]:
    """Recover regions from an exported project: filename -> region dicts.

    Each region dict has x, y, w, h floats plus the attribute mapping.
    """
    project = json.loads(text)
    out: dict[str, list[dict]] = {}
    for entry in project["_via_img_metadata"].values():
        regions = []
        for region in entry["regions"]:
            shape = region["shape_attributes"]
            if shape.get("name") != "rect":
                raise ValueError(f"unsupported region shape {shape.get('name')!r}")
            regions.append({
                "x": float(shape["x"]),
                "y": float(shape["y"]),
                "w": float(shape["width"]),
                "h": float(shape["height"]),
                "attributes": dict(region.get("region_attributes", {})),
            })
        out[entry["filename"]] = regions
    return out


def validate_via(text: str) -> list[str]:
    """Structural checks on a project file; returns the list of problems."""
    problems = []
    try:
        project = json.loads(text)
    except json.JSONDecodeError as exc:
        return [f"not valid JSON: {exc}"]
    for key in ("_via_settings", "_via_img_metadata", "_via_attributes",
                "_via_data_format_version", "_via_image_id_list"):
        if key not in project:
            problems.append(f"missing top-level key {key}")
    if problems:
        return problems
    metadata = project["_via_img_metadata"]
    id_list = project["_via_image_id_list"]
    if sorted(metadata) != sorted(id_list):
        problems.append("_via_image_id_list does not match metadata keys")
    if len(set(id_list)) != len(id_list):
        problems.append("duplicate image ids")
    for key, entry in metadata.items():
        for required in ("filename", "size", "regions", "file_attributes"):
            if required not in entry:
                problems.append(f"image {key} missing field {required}")
                continue
        for i, region in enumerate(entry.get("regions", ())):
            shape = region.get("shape_attributes", {})
            if shape.get("name") != "rect":
                problems.append(f"image {key} region {i} is not a rect")
            for coord in ("x", "y", "width", "height"):
                if not isinstance(shape.get(coord), (int, float)):
                    problems.append(f"image {key} region {i} missing {coord}")
            if "track_id" not in region.get("region_attributes", {}):
                problems.append(f"image {key} region {i} missing track_id attribute")
    return problems


def export_eaf(bundle: ExportBundle, duration_seconds: float) -> str:
    """Time-aligned tier document: one tier per cluster plus ANONYMISE.

    Every annotation gets its own pair of time slots (no slot sharing);
    values are "speech" on cluster tiers and "silence" on the ANONYMISE
    tier. Times are floored to integer milliseconds.
    """
    for seg in bundle.segments:
        if seg.end > duration_seconds + MS_GUARD:
            raise ValueError(
                f"segment ending at {seg.end}s exceeds media duration "
                f"{duration_seconds}s")
    for start, end in bundle.silence:
        if end > duration_seconds + MS_GUARD:
            raise ValueError(
                f"silence interval ending at {end}s exceeds media duration "
                f"{duration_seconds}s")

    root = ET.Element("ANNOTATION_DOCUMENT", {
        "AUTHOR": "",
        "DATE": "1970-01-01T00:00:00+00:00",
        "FORMAT": "3.0",
        "VERSION": "3.0",
    })
    root.append(ET.Comment(
        " annotation times are floored to integer milliseconds "))
    header = ET.SubElement(root, "HEADER", {"MEDIA_FILE": "",
                                            "TIME_UNITS": "milliseconds"})
    ET.SubElement(header, "PROPERTY", {"NAME": "timeRounding"}).text = "floor"
    time_order = ET.SubElement(root, "TIME_ORDER")

    slot_serial = 0
    ann_serial = 0

    def add_slot(ms: int) -> str:
        nonlocal slot_serial
        slot_serial += 1
        slot_id = f"ts{slot_serial}"
        ET.SubElement(time_order, "TIME_SLOT",
                      {"TIME_SLOT_ID": slot_id, "TIME_VALUE": str(ms)})
        return slot_id

    tiers: list[tuple[str, list[tuple[float, float, str]]]] = []
    clusters = sorted({seg.cluster_id for seg in bundle.segments})
    for cluster_id in clusters:
        rows = [(s.start, s.end, "speech")
                for s in bundle.segments if s.cluster_id == cluster_id]
        tiers.append((f"SPK{cluster_id}", rows))
    tiers.append(("ANONYMISE", [(s, e, "silence") for s, e in bundle.silence]))

    tier_elements = []
    for tier_id, rows in tiers:
        tier = ET.Element("TIER", {"LINGUISTIC_TYPE_REF": "default-lt",
                                   "TIER_ID": tier_id})
        for start, end, value in rows:
            ann_serial += 1
            ts1 = add_slot(floor_ms(start))
            ts2 = add_slot(floor_ms(end))
            annotation = ET.SubElement(tier, "ANNOTATION")
            alignable = ET.SubElement(annotation, "ALIGNABLE_ANNOTATION", {
                "ANNOTATION_ID": f"a{ann_serial}",
                "TIME_SLOT_REF1": ts1,
                "TIME_SLOT_REF2": ts2,
            })
            ET.SubElement(alignable, "ANNOTATION_VALUE").text = value
        tier_elements.append(tier)
    for tier in tier_elements:
        root.append(tier)
    ET.SubElement(root, "LINGUISTIC_TYPE", {
        "GRAPHIC_REFERENCES": "false",
        "LINGUISTIC_TYPE_ID": "default-lt",
        "TIME_ALIGNABLE": "true",
    })

    ET.indent(root)
    return ('<?xml version="1.0" encoding="UTF-8"?>\n'
            + ET.tostring(root, encoding="unicode") + "\n")


def parse_eaf(text: str) -> dict[str, list[tuple[int, int, str]]]:
    """Recover tiers: tier_id -> [(start_ms, end_ms, value)] in tier order."""
    root = ET.fromstring(text)
    slots: dict[str, int] = {}
    time_order = root.find("TIME_ORDER")
    if time_order is None:
        raise ValueError("document has no TIME_ORDER element")
    for slot in time_order.findall("TIME_SLOT"):
        slots[slot.get("TIME_SLOT_ID")] = int(slot.get("TIME_VALUE"))
    out: dict[str, list[tuple[int, int, str]]] = {}
    for tier in root.findall("TIER"):
        rows = []
        for annotation in tier.findall("ANNOTATION"):
            alignable = annotation.find("ALIGNABLE_ANNOTATION")
            start = slots[alignable.get("TIME_SLOT_REF1")]
            end = slots[alignable.get("TIME_SLOT_REF2")]
            value_el = alignable.find("ANNOTATION_VALUE")
            rows.append((start, end, value_el.text or ""))
        out[tier.get("TIER_ID")] = rows
    return out


def validate_eaf(text: str) -> list[str]:
    """Structural checks on a tier document; returns the list of problems."""
    problems = []
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        return [f"not well-formed markup: {exc}"]
    if root.tag != "ANNOTATION_DOCUMENT":
        problems.append(f"unexpected root element {root.tag}")
    header = root.find("HEADER")
    if header is None:
        problems.append("missing HEADER")
    elif header.get("TIME_UNITS") != "milliseconds":
        problems.append("HEADER must declare TIME_UNITS=milliseconds")
    time_order = root.find("TIME_ORDER")
    slots: dict[str, int] = {}
    if time_order is None:
        problems.append("missing TIME_ORDER")
    else:
        for slot in time_order.findall("TIME_SLOT"):
            slot_id = slot.get("TIME_SLOT_ID")
            if slot_id in slots:
                problems.append(f"duplicate time slot id {slot_id}")
            try:
                value = int(slot.get("TIME_VALUE", ""))
            except ValueError:
                problems.append(f"time slot {slot_id} has a non-integer value")
                continue
            if value < 0:
                problems.append(f"time slot {slot_id} is negative")
            slots[slot_id] = value
    linguistic_types = {lt.get("LINGUISTIC_TYPE_ID")
                        for lt in root.findall("LINGUISTIC_TYPE")}
    seen_annotations: set[str] = set()
    seen_tiers: set[str] = set()
    for tier in root.findall("TIER"):
        tier_id = tier.get("TIER_ID")
        if tier_id in seen_tiers:
            problems.append(f"duplicate tier id {tier_id}")
        seen_tiers.add(tier_id)
        if tier.get("LINGUISTIC_TYPE_REF") not in linguistic_types:
            problems.append(f"tier {tier_id} references an undeclared linguistic type")
        for annotation in tier.findall("ANNOTATION"):
            alignable = annotation.find("ALIGNABLE_ANNOTATION")
            if alignable is None:
                problems.append(f"tier {tier_id} has a non-alignable annotation")
                continue
            ann_id = alignable.get("ANNOTATION_ID")
            if ann_id in seen_annotations:
                problems.append(f"duplicate annotation id {ann_id}")
            seen_annotations.add(ann_id)
            ref1 = alignable.get("TIME_SLOT_REF1")
            ref2 = alignable.get("TIME_SLOT_REF2")
            if ref1 not in slots or ref2 not in slots:
                problems.append(f"annotation {ann_id} has unresolved time refs")
            elif slots[ref1] > slots[ref2]:
                problems.append(f"annotation {ann_id} ends before it starts")
    return problems

"""Parser for VGG Image Annotator (VIA) 2.x project exports.

Supports both the flat export (a map of "filename+size" entries) and the
full project save (same map under "_via_img_metadata"). Only polygon
regions are understood; other shapes are reported as warnings and skipped.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .detectors import CLASS_NAMES, Detection, DetectionSet
from .errors import RegionError, UnmappableLabelError, ViaParseError

logger = logging.getLogger(__name__)

# Annotator vocabulary -> closed class set. Canonical names map to themselves
# so already-normalized files round-trip.
LABEL_MAP = {
    "wall": "short_wall",
    "short_wall": "short_wall",
    "rail": "railing",
    "railing": "railing",
    "stairs": "stairs",
}


@dataclass(frozen=True)
class Region:
    """One polygon region: paired pixel coordinate lists plus a class label."""

    xs: tuple[float, ...]
    ys: tuple[float, ...]
    class_label: str


@dataclass(frozen=True)
class AnnotatedImage:
    filename: str
    regions: tuple[Region, ...] = ()


def map_label(raw: str) -> str | None:
    """Normalize an annotator label to the closed class set, or None."""
    return LABEL_MAP.get(raw.strip().lower())


def parse_via(project_text: str, warnings: list[str] | None = None) -> list[AnnotatedImage]:
    """Parse a VIA project export into annotated images.

    Non-polygon regions are skipped with a warning appended to `warnings`
    (or logged if no list is supplied). Malformed polygons raise
    RegionError naming the offending image; labels outside the closed set
    are preserved verbatim for to_detection_set to reject later.
    """
    try:
        document = json.loads(project_text)
    except json.JSONDecodeError as exc:
        raise ViaParseError(f"invalid JSON at byte {exc.pos}: {exc.msg}", offset=exc.pos) from exc
    if not isinstance(document, dict):
        raise ViaParseError("VIA export must be a JSON object")

    image_map = document.get("_via_img_metadata", document)
    if not isinstance(image_map, dict):
        raise ViaParseError("_via_img_metadata must be a JSON object")

    sink = warnings if warnings is not None else None
    images = []
    for key, entry in image_map.items():
        if key.startswith("_via"):
            continue  # project-level bookkeeping keys in full saves
        if not isinstance(entry, dict):
            raise ViaParseError(f"image entry {key!r} is not an object")
        filename = entry.get("filename") or key
        regions = []
        for idx, region in enumerate(entry.get("regions") or []):
            shape = region.get("shape_attributes", {})
            if shape.get("name") != "polygon":
                message = (f"{filename}: region {idx} has shape "
                           f"{shape.get('name')!r}, only polygons are supported")
                if sink is not None:
                    sink.append(message)
                else:
                    logger.warning(message)
                continue
            xs = shape.get("all_points_x")
            ys = shape.get("all_points_y")
            if not isinstance(xs, list) or not isinstance(ys, list) or len(xs) != len(ys):
                raise RegionError(
                    f"{filename}: region {idx} has mismatched coordinate lists", image=filename
                )
            if len(xs) < 3:
                raise RegionError(
                    f"{filename}: region {idx} is a degenerate polygon with {len(xs)} vertices",
                    image=filename,
                )
            regions.append(Region(
                xs=tuple(float(x) for x in xs),
                ys=tuple(float(y) for y in ys),
                class_label=_region_class(region),
            ))
        images.append(AnnotatedImage(filename=filename, regions=tuple(regions)))
    return images


def _region_class(region: dict) -> str:
    """Pick the first region attribute whose value maps into the class set.

    Falls back to the first attribute value verbatim when nothing maps, so
    the unmappable label survives for later error reporting.
    """
    attributes = region.get("region_attributes", {})
    first_value = ""
    for value in attributes.values():
        if not isinstance(value, str):
            continue
        if not first_value:
            first_value = value
        mapped = map_label(value)
        if mapped is not None:
            return mapped
    return first_value


def parse_via_file(path, warnings: list[str] | None = None) -> list[AnnotatedImage]:
    return parse_via(Path(path).read_text(encoding="utf-8"), warnings=warnings)


def to_detection_set(annotated: AnnotatedImage, confidence: float = 1.0) -> DetectionSet:
    """Turn ground-truth regions into a detection set at fixed confidence."""
    bad = [r.class_label for r in annotated.regions if r.class_label not in CLASS_NAMES]
    if bad:
        raise UnmappableLabelError(bad)
    detections = tuple(
        Detection(
            class_name=region.class_label,
            confidence=confidence,
            polygon=tuple(zip(region.xs, region.ys)),
        )
        for region in annotated.regions
    )
    return DetectionSet(provenance=annotated.filename, detections=detections)

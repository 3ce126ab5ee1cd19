#!/usr/bin/env python3
"""Regenerate the committed 9-coordinate survey fixture corpus.

Writes tests/fixtures/survey9/: an imagery directory mirroring the cache
layout (640x640 PNGs plus JSON sidecars), the detector backend manifest,
and the survey config document.

The detection plan is authored here by hand. Expected outcomes, counted
manually from the plan below:

    idx 0: satellite missing; street counts 0            -> negative
    idx 1: 2+3+4+1 = 10                                  -> negative
    idx 2: 6+6+5+6 = 23  (> 20)                          -> POSITIVE
    idx 3: raw 5+2+1+0 with two below the 0.75 floor -> 6 -> negative
    idx 4: heading 180 missing; 5+4+0+3 = 12             -> negative
    idx 5: 5+5+5+5 = 20, one detection at exactly 0.75   -> negative (boundary)
    idx 6: all four street headings missing -> 0         -> negative
    idx 7: 4+6+5+6 = 21 (> 20), mixed classes            -> POSITIVE
    idx 8: 4+4+4+3 = 15                                  -> negative

Exactly two positives: idx 2 and idx 7.
"""

import json
from pathlib import Path

import numpy as np
from PIL import Image

from spotfinder.config import config_to_dict, SurveyConfig
from spotfinder.geo import GeoPoint, GridSpec, make_grid
from spotfinder.imagery import build_satellite_request, build_street_requests

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "tests" / "fixtures" / "survey9"

CENTER = GeoPoint(33.4184, -111.9328)
HALF_EXTENT = 40.0
SPACING = 40.0
SURVEY_ID = "fixture-9"
FETCHED_AT = "2026-01-01T00:00:00+00:00"

CLASS_CYCLE = ("short_wall", "railing", "stairs")

# Per coordinate: satellite present?, quadrant probs, and per-heading street
# detections as (class, confidence) lists. None marks a missing fixture.
PLAN = {
    0: {"sat": None, "street": [[], [], [], []]},
    1: {"sat": (0.10, 0.20, 0.05, 0.15),
        "street": [[("railing", 1.0)] * 2, [("stairs", 0.9)] * 3,
                   [("short_wall", 0.8)] * 4, [("railing", 1.0)]]},
    2: {"sat": (0.20, 0.90, 0.40, 0.10),
        "street": [[("railing", 1.0)] * 6, [("stairs", 0.95)] * 6,
                   [("short_wall", 0.9)] * 5, [("railing", 0.85)] * 6]},
    3: {"sat": (0.30, 0.10, 0.20, 0.10),
        "street": [[("railing", 1.0)] * 3 + [("railing", 0.5), ("stairs", 0.6)],
                   [("short_wall", 0.8)] * 2, [("stairs", 0.9)], []]},
    4: {"sat": (0.25, 0.35, 0.15, 0.05),
        "street": [[("railing", 0.9)] * 5, [("stairs", 0.8)] * 4,
                   None, [("short_wall", 1.0)] * 3]},
    5: {"sat": (0.40, 0.30, 0.20, 0.45),
        "street": [[("railing", 1.0)] * 5, [("stairs", 0.9)] * 5,
                   [("short_wall", 0.8)] * 5,
                   [("railing", 1.0)] * 4 + [("stairs", 0.75)]]},
    6: {"sat": (0.15, 0.10, 0.05, 0.20), "street": [None, None, None, None]},
    7: {"sat": (0.60, 0.30, 0.20, 0.20),
        "street": [
            [("short_wall", 1.0), ("short_wall", 0.9), ("railing", 1.0), ("stairs", 0.95)],
            [("short_wall", 0.9)] * 2 + [("railing", 0.85)] * 2 + [("stairs", 1.0)] * 2,
            [("short_wall", 0.8)] + [("railing", 0.9)] * 2 + [("stairs", 0.9)] * 2,
            [("short_wall", 1.0)] + [("railing", 0.95)] * 3 + [("stairs", 0.8)] * 2,
        ]},
    8: {"sat": (0.20, 0.25, 0.30, 0.10),
        "street": [[("railing", 0.9)] * 4, [("stairs", 0.85)] * 4,
                   [("short_wall", 0.95)] * 4, [("railing", 1.0)] * 3]},
}


def solid_png(path: Path, color):
    img = np.zeros((640, 640, 3), dtype=np.uint8)
    img[:, :] = color
    Image.fromarray(img).save(path)


def write_entry(imagery_dir: Path, request, color):
    key = request.cache_key()
    solid_png(imagery_dir / f"{key}.png", color)
    sidecar = {
        "canonical_request": request.canonical(),
        "fetched_at": FETCHED_AT,
        "source": "fixture",
    }
    (imagery_dir / f"{key}.json").write_text(
        json.dumps(sidecar, sort_keys=True), encoding="utf-8"
    )


def detections_for(entries):
    out = []
    for i, (class_name, confidence) in enumerate(entries):
        x = 20 + (i % 8) * 70
        y = 40 + (i // 8) * 90
        out.append({
            "class": class_name,
            "confidence": confidence,
            "polygon": [[x, y], [x + 50, y], [x + 50, y + 60], [x, y + 60]],
        })
    return out


def main():
    imagery_dir = OUT / "imagery"
    imagery_dir.mkdir(parents=True, exist_ok=True)
    for stale in imagery_dir.glob("*"):
        stale.unlink()

    points = make_grid(GridSpec(center=CENTER, half_extent=HALF_EXTENT, spacing=SPACING))
    assert len(points) == 9

    manifest = {"satellite": {}, "street": {}}
    for idx, point in enumerate(points):
        plan = PLAN[idx]
        sat_request = build_satellite_request(point)
        if plan["sat"] is not None:
            write_entry(imagery_dir, sat_request, (30 + idx * 22, 90, 140))
            for q, prob in enumerate(plan["sat"]):
                manifest["satellite"][f"{sat_request.canonical()}#q{q}"] = prob
        for heading_index, street_request in enumerate(build_street_requests(point)):
            entries = plan["street"][heading_index]
            if entries is None:
                continue  # NoCoverage heading: no fixture file at all
            write_entry(imagery_dir, street_request,
                        (40 + idx * 20, 60 + heading_index * 40, 80))
            manifest["street"][street_request.canonical()] = detections_for(entries)

    (OUT / "backend.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
    )

    config = SurveyConfig(
        survey_id=SURVEY_ID,
        center=CENTER,
        half_extent_m=HALF_EXTENT,
        spacing_m=SPACING,
        threshold=20,
        mode="street_only",
        backend="fixture:tests/fixtures/survey9/backend.json",
        provider="fixture:tests/fixtures/survey9/imagery",
        cache_root="survey9-cache",
        store_path="survey9-spots.jsonl",
        workers=4,
    )
    (OUT / "config.json").write_text(
        json.dumps(config_to_dict(config), indent=2), encoding="utf-8"
    )
    print(f"wrote {len(list(imagery_dir.glob('*.png')))} images to {imagery_dir}")


if __name__ == "__main__":
    main()

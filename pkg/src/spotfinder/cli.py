"""Command-line entry points.

    spotfinder survey dry-run --config survey.json
    spotfinder survey run --config survey.json
    spotfinder survey stats --store spots.jsonl
    spotfinder survey export --store spots.jsonl --format geojson --out spots.geojson
    spotfinder eval via --annotations project.json --backend fixture
    spotfinder review serve --store spots.jsonl --cache cache --port 8000
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np
from PIL import Image as PILImage

from .annotations import parse_via_file, to_detection_set
from .config import load_config
from .detectors import detection_to_dict, segment_street
from .errors import SpotFinderError
from .imagery import ImageCache
from .metrics import count_match_score
from .store import SpotStore
from .survey import dry_run, resolve_backend, run_survey


@click.group()
def main():
    """Find, score, and review parkour spot candidates."""


@main.group()
def survey():
    """Plan and run coordinate surveys."""


@survey.command("dry-run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def survey_dry_run(config_path):
    """Print coordinate, request, and cost totals without any network use."""
    plan = dry_run(load_config(config_path))
    click.echo(json.dumps(plan.as_dict(), indent=2))


@survey.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def survey_run(config_path):
    """Run the survey described by the config document."""
    config = load_config(config_path)
    try:
        stats = run_survey(config)
    except SpotFinderError as exc:
        raise click.ClickException(f"survey aborted: {exc}")
    click.echo(json.dumps(stats.as_dict(), indent=2))


@survey.command("stats")
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
@click.option("--survey-id", default=None)
def survey_stats(store_path, survey_id):
    """Show candidate and verdict counts, plus precision once verified."""
    store = SpotStore(store_path)
    try:
        stats = store.stats(survey_id)
    except SpotFinderError as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps(stats.as_dict(), indent=2))


@survey.command("export")
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", default="geojson", type=click.Choice(["geojson"]))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--status", default=None)
@click.option("--survey-id", default=None)
def survey_export(store_path, fmt, out_path, status, survey_id):
    """Write matching records as a GeoJSON FeatureCollection."""
    store = SpotStore(store_path)
    try:
        collection = store.export_geojson(status=status, survey_id=survey_id)
    except SpotFinderError as exc:
        raise click.ClickException(str(exc))
    Path(out_path).write_text(json.dumps(collection, indent=2), encoding="utf-8")
    click.echo(f"wrote {len(collection['features'])} features to {out_path}")


@main.group(name="eval")
def eval_group():
    """Evaluate detector backends against annotation ground truth."""


@eval_group.command("via")
@click.option("--annotations", "annotations_path", required=True,
              type=click.Path(exists=True))
@click.option("--backend", "backend_selector", default="fixture")
@click.option("--images", "images_dir", default=None, type=click.Path(exists=True),
              help="Directory holding the annotated images (needed for pixel backends).")
@click.option("--out", "out_path", default=None, type=click.Path())
def eval_via(annotations_path, backend_selector, images_dir, out_path):
    """Report per-class count deltas of a backend versus a VIA project.

    The special backend name "fixture" replays the annotations themselves,
    which pins the zero-delta baseline.
    """
    warnings: list[str] = []
    annotated = parse_via_file(annotations_path, warnings=warnings)

    per_image = {}
    aggregate = {}
    skipped = []
    for image in annotated:
        if backend_selector == "fixture":
            pred = to_detection_set(image)
        else:
            if images_dir is None:
                raise click.ClickException(f"backend {backend_selector!r} needs --images")
            image_path = Path(images_dir) / image.filename
            if not image_path.exists():
                skipped.append(image.filename)
                continue
            raster = np.asarray(PILImage.open(image_path).convert("RGB"), dtype=np.uint8)
            backend = resolve_backend(backend_selector)
            pred = segment_street(raster, backend, provenance=image.filename)
        deltas = count_match_score(pred, image)
        per_image[image.filename] = {
            "deltas": deltas,
            "predicted": [detection_to_dict(d) for d in pred.detections],
        }
        for name, delta in deltas.items():
            bucket = aggregate.setdefault(name, {"signed": 0, "abs": 0})
            bucket["signed"] += delta["signed"]
            bucket["abs"] += delta["abs"]

    report = {
        "backend": backend_selector,
        "n_images": len(per_image),
        "skipped": skipped,
        "warnings": warnings,
        "aggregate": aggregate,
        "images": per_image,
    }
    text = json.dumps(report, indent=2)
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
        click.echo(f"wrote report to {out_path}")
    else:
        click.echo(text)


@main.group()
def review():
    """Human verification tools."""


@review.command("serve")
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
@click.option("--cache", "cache_root", default=None, type=click.Path())
@click.option("--static", "static_dir", default=None, type=click.Path(),
              help="Built review UI to serve at /.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def review_serve(store_path, cache_root, static_dir, host, port):
    """Serve the review API (and optionally the UI) on loopback."""
    import uvicorn

    from .review import create_app

    store = SpotStore(store_path)
    cache = ImageCache(cache_root) if cache_root else None
    app = create_app(store, cache, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())

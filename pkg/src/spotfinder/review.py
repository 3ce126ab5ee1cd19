"""HTTP review API: candidates, imagery, detections, verdicts, and stats.

A read-only projection of the spot store plus one mutation, the verdict
POST. Meant for a single operator on loopback; there is no auth.
"""

from __future__ import annotations

import re
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .detectors import CLASS_NAMES
from .errors import AlreadyVerifiedError, NotFoundError
from .imagery import DEFAULT_SIZE, ImageCache
from .store import SpotCandidate, SpotStore, STATUSES

MAX_PAGE_SIZE = 200
DEFAULT_PAGE_SIZE = 50

STREET_SLOTS = tuple(f"street{i}" for i in range(4))
SLOTS = ("sat",) + STREET_SLOTS

_SIZE_RE = re.compile(r"size=(\d+)x(\d+)")


class VerdictBody(BaseModel):
    verdict: bool
    note: str | None = None


def _slot_key(record: SpotCandidate, slot: str) -> str | None:
    if slot == "sat":
        return record.imagery.get("sat")
    index = int(slot[len("street"):])
    street = record.imagery.get("street") or []
    return street[index] if index < len(street) else None


def _image_size_for(cache: ImageCache | None, key: str | None) -> list[int]:
    """Pixel dimensions for client-side overlay scaling, from the sidecar."""
    if cache is not None and key is not None:
        sidecar = cache.sidecar_path(key)
        if sidecar.exists():
            match = _SIZE_RE.search(sidecar.read_text(encoding="utf-8"))
            if match:
                return [int(match.group(1)), int(match.group(2))]
    return [DEFAULT_SIZE, DEFAULT_SIZE]


def candidate_view(record: SpotCandidate, cache: ImageCache | None = None) -> dict:
    street_keys = record.imagery.get("street") or [None] * 4
    street = []
    for slot, key in zip(STREET_SLOTS, street_keys):
        street.append({
            "slot": slot,
            "available": key is not None,
            "detections": record.detections.get(slot, []),
            "image_size": _image_size_for(cache, key),
        })
    return {
        "id": record.id,
        "survey_id": record.survey_id,
        "point": {"lat": record.point.lat, "lon": record.point.lon},
        "status": record.status,
        "counts": record.counts.as_dict(),
        "probability": record.probability,
        "positive": record.positive,
        "verdict_note": record.verdict_note,
        "sat": {"available": record.imagery.get("sat") is not None,
                "quadrant_probs": list(record.sat_probs) if record.sat_probs else None},
        "street": street,
    }


def _parse_bbox(raw: str) -> tuple[float, float, float, float]:
    parts = raw.split(",")
    if len(parts) != 4:
        raise HTTPException(status_code=400, detail="bbox must be min_lon,min_lat,max_lon,max_lat")
    try:
        min_lon, min_lat, max_lon, max_lat = (float(p) for p in parts)
    except ValueError:
        raise HTTPException(status_code=400, detail="bbox values must be numbers")
    if min_lon > max_lon or min_lat > max_lat:
        raise HTTPException(status_code=400, detail="bbox min exceeds max")
    return min_lon, min_lat, max_lon, max_lat


def create_app(store: SpotStore, cache: ImageCache | None = None,
               static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="spotfinder review")

    @app.get("/api/candidates")
    def list_candidates(
        bbox: str | None = None,
        status: str | None = None,
        min_total: int | None = None,
        survey_id: str | None = None,
        page: int = Query(default=1, ge=1),
        page_size: int = Query(default=DEFAULT_PAGE_SIZE, ge=1, le=MAX_PAGE_SIZE),
    ):
        if status is not None and status not in STATUSES:
            raise HTTPException(status_code=400, detail=f"unknown status {status!r}")
        box = _parse_bbox(bbox) if bbox is not None else None
        records = store.records(survey_id)
        matches = []
        for record in records:
            if status is not None and record.status != status:
                continue
            if min_total is not None and record.counts.total < min_total:
                continue
            if box is not None:
                min_lon, min_lat, max_lon, max_lat = box
                if not (min_lon <= record.point.lon <= max_lon
                        and min_lat <= record.point.lat <= max_lat):
                    continue
            matches.append(record)
        matches.sort(key=lambda r: r.id)
        start = (page - 1) * page_size
        items = matches[start:start + page_size]
        return {
            "items": [candidate_view(r, cache) for r in items],
            "page": page,
            "page_size": page_size,
            "total": len(matches),
        }

    @app.get("/api/candidates/{record_id}")
    def get_candidate(record_id: str):
        try:
            record = store.get(record_id)
        except NotFoundError:
            raise HTTPException(status_code=404, detail="unknown candidate")
        return candidate_view(record, cache)

    @app.get("/api/candidates/{record_id}/image/{slot}")
    def get_image(record_id: str, slot: str):
        try:
            record = store.get(record_id)
        except NotFoundError:
            raise HTTPException(status_code=404, detail="unknown candidate")
        if slot not in SLOTS:
            raise HTTPException(status_code=404, detail=f"unknown slot {slot!r}")
        key = _slot_key(record, slot)
        if key is None:
            raise HTTPException(status_code=404, detail={"reason": "no_coverage"})
        if cache is None:
            raise HTTPException(status_code=410, detail="no image cache configured")
        path = cache.image_path(key)
        if not path.exists():
            raise HTTPException(status_code=410, detail="cache entry evicted")
        return Response(content=path.read_bytes(), media_type="image/png")

    @app.post("/api/candidates/{record_id}/verdict")
    def post_verdict(record_id: str, body: VerdictBody):
        try:
            record = store.set_verdict(record_id, body.verdict, body.note)
        except NotFoundError:
            raise HTTPException(status_code=404, detail="unknown candidate")
        except AlreadyVerifiedError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return candidate_view(record, cache)

    @app.get("/api/stats")
    def get_stats(survey_id: str | None = None):
        try:
            stats = store.stats(survey_id)
        except NotFoundError:
            raise HTTPException(status_code=404, detail=f"unknown survey {survey_id!r}")
        return stats.as_dict()

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


def create_app_from_paths(store_path: str | Path, cache_root: str | Path | None = None,
                          static_dir: str | Path | None = None) -> FastAPI:
    store = SpotStore(store_path)
    cache = ImageCache(cache_root) if cache_root is not None else None
    return create_app(store, cache, static_dir=static_dir)

"""Persistent spot database: append-only JSON Lines event log with an
in-memory index rebuilt by replay.

Every mutation is one event line, flushed before the index updates, so a
crash mid-write loses at most the interrupted line and replaying the log
always reconstructs the exact store state. Verified records are immutable
apart from their note.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

from .detectors import CLASS_NAMES
from .errors import (
    AlreadyVerifiedError,
    DomainError,
    ImmutableRecordError,
    NotFoundError,
)
from .geo import GeoPoint, haversine
from .scoring import ClassCounts, SpotScore

STATUS_CANDIDATE = "candidate"
STATUS_VERIFIED_TRUE = "verified_true"
STATUS_VERIFIED_FALSE = "verified_false"
STATUSES = (STATUS_CANDIDATE, STATUS_VERIFIED_TRUE, STATUS_VERIFIED_FALSE)


def candidate_id(survey_id: str, grid_index: int) -> str:
    """Stable id from survey identity and lattice position, so re-runs
    land on the same records regardless of coordinate rounding."""
    digest = hashlib.sha256(f"{survey_id}:{grid_index}".encode("utf-8")).hexdigest()
    return digest[:16]


@dataclass(frozen=True)
class SpotCandidate:
    id: str
    survey_id: str
    grid_index: int
    point: GeoPoint
    counts: ClassCounts
    probability: float
    positive: bool
    mode: str
    imagery: dict  # {"sat": key | None, "street": [key | None x4]}
    detections: dict  # {"street0".."street3": [detection dicts]}
    status: str = STATUS_CANDIDATE
    verdict_note: str | None = None
    sat_probs: tuple[float, ...] | None = None
    created_at: str = ""
    updated_at: str = ""

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "survey_id": self.survey_id,
            "grid_index": self.grid_index,
            "point": {"lat": self.point.lat, "lon": self.point.lon},
            "counts": self.counts.as_dict(),
            "probability": self.probability,
            "positive": self.positive,
            "mode": self.mode,
            "imagery": self.imagery,
            "detections": self.detections,
            "status": self.status,
            "verdict_note": self.verdict_note,
            "sat_probs": list(self.sat_probs) if self.sat_probs is not None else None,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SpotCandidate":
        counts = data["counts"]
        return cls(
            id=data["id"],
            survey_id=data["survey_id"],
            grid_index=data["grid_index"],
            point=GeoPoint(lat=data["point"]["lat"], lon=data["point"]["lon"]),
            counts=ClassCounts(**{name: counts[name] for name in CLASS_NAMES}),
            probability=data["probability"],
            positive=data["positive"],
            mode=data["mode"],
            imagery=data["imagery"],
            detections=data["detections"],
            status=data.get("status", STATUS_CANDIDATE),
            verdict_note=data.get("verdict_note"),
            sat_probs=tuple(data["sat_probs"]) if data.get("sat_probs") is not None else None,
            created_at=data.get("created_at", ""),
            updated_at=data.get("updated_at", ""),
        )

    @classmethod
    def from_score(cls, survey_id: str, grid_index: int, point: GeoPoint, score: SpotScore,
                   imagery: dict, detections: dict, timestamp: str = "") -> "SpotCandidate":
        return cls(
            id=candidate_id(survey_id, grid_index),
            survey_id=survey_id,
            grid_index=grid_index,
            point=point,
            counts=score.counts,
            probability=score.probability,
            positive=score.positive,
            mode=score.mode,
            imagery=imagery,
            detections=detections,
            sat_probs=score.sat.quadrant_probs if score.sat is not None else None,
            created_at=timestamp,
            updated_at=timestamp,
        )


@dataclass(frozen=True)
class SurveyStats:
    n_coordinates: int = 0
    n_positive: int = 0
    n_verified_true: int = 0
    n_verified_false: int = 0

    @property
    def precision(self) -> float | None:
        verified = self.n_verified_true + self.n_verified_false
        if verified == 0:
            return None
        return self.n_verified_true / verified

    def as_dict(self) -> dict:
        return {
            "n_coordinates": self.n_coordinates,
            "n_positive": self.n_positive,
            "n_verified_true": self.n_verified_true,
            "n_verified_false": self.n_verified_false,
            "precision": self.precision,
        }


class SpotStore:
    """Single-writer spot database over one events.jsonl file."""

    def __init__(self, path: str | Path, clock=time.time):
        self.path = Path(path)
        self.clock = clock
        self._lock = threading.RLock()
        self._records: dict[str, SpotCandidate] = {}
        self._surveys: dict[str, dict] = {}
        self._errors: dict[str, list[dict]] = {}
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if self.path.exists():
            self._replay()

    # -- event log -------------------------------------------------------

    def _replay(self):
        with self.path.open("r", encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                self._apply(json.loads(line))

    def _append(self, event: dict):
        # Event hits disk before the index changes; replay is the truth.
        with self.path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(event, sort_keys=True) + "\n")
            handle.flush()
        self._apply(event)

    def _apply(self, event: dict):
        kind = event["type"]
        if kind == "upsert":
            record = SpotCandidate.from_dict(event["candidate"])
            self._records[record.id] = record
        elif kind == "verdict":
            record = self._records[event["id"]]
            status = STATUS_VERIFIED_TRUE if event["verdict"] else STATUS_VERIFIED_FALSE
            self._records[record.id] = replace(
                record, status=status, verdict_note=event.get("note"),
                updated_at=event.get("ts", ""),
            )
        elif kind == "survey":
            self._surveys[event["survey_id"]] = event
        elif kind == "error":
            self._errors.setdefault(event["survey_id"], []).append(event)
        else:
            raise DomainError(f"unknown event type {kind!r}")

    def _now(self) -> str:
        return datetime.fromtimestamp(self.clock(), tz=timezone.utc).isoformat()

    # -- operations ------------------------------------------------------

    def upsert_candidate(self, candidate: SpotCandidate) -> SpotCandidate:
        with self._lock:
            existing = self._records.get(candidate.id)
            if existing is not None and existing.status != STATUS_CANDIDATE:
                raise ImmutableRecordError(
                    f"record {candidate.id} is {existing.status} and cannot be replaced"
                )
            if not candidate.created_at:
                candidate = replace(candidate, created_at=self._now(), updated_at=self._now())
            self._append({"type": "upsert", "candidate": candidate.to_dict(),
                          "ts": candidate.updated_at})
            return self._records[candidate.id]

    def set_verdict(self, record_id: str, verdict: bool, note: str | None = None) -> SpotCandidate:
        with self._lock:
            record = self._records.get(record_id)
            if record is None:
                raise NotFoundError(f"no record with id {record_id}")
            if record.status != STATUS_CANDIDATE:
                raise AlreadyVerifiedError(f"record {record_id} is already {record.status}")
            self._append({"type": "verdict", "id": record_id, "verdict": bool(verdict),
                          "note": note, "ts": self._now()})
            return self._records[record_id]

    def get(self, record_id: str) -> SpotCandidate:
        with self._lock:
            record = self._records.get(record_id)
            if record is None:
                raise NotFoundError(f"no record with id {record_id}")
            return record

    def has(self, record_id: str) -> bool:
        with self._lock:
            return record_id in self._records

    def records(self, survey_id: str | None = None) -> list[SpotCandidate]:
        with self._lock:
            items = [r for r in self._records.values()
                     if survey_id is None or r.survey_id == survey_id]
        return sorted(items, key=lambda r: (r.survey_id, r.grid_index))

    def record_survey(self, survey_id: str, info: dict):
        with self._lock:
            self._append({"type": "survey", "survey_id": survey_id, **info,
                          "ts": self._now()})

    def record_error(self, survey_id: str, grid_index: int, message: str):
        with self._lock:
            self._append({"type": "error", "survey_id": survey_id,
                          "grid_index": grid_index, "error": message,
                          "ts": self._now()})

    def survey_info(self, survey_id: str) -> dict | None:
        with self._lock:
            return self._surveys.get(survey_id)

    def survey_errors(self, survey_id: str) -> list[dict]:
        with self._lock:
            return list(self._errors.get(survey_id, []))

    def survey_ids(self) -> list[str]:
        with self._lock:
            ids = {r.survey_id for r in self._records.values()} | set(self._surveys)
        return sorted(ids)

    def stats(self, survey_id: str | None = None) -> SurveyStats:
        if survey_id is not None and survey_id not in self.survey_ids():
            raise NotFoundError(f"unknown survey {survey_id!r}")
        records = self.records(survey_id)
        return SurveyStats(
            n_coordinates=len(records),
            n_positive=sum(r.positive for r in records),
            n_verified_true=sum(r.status == STATUS_VERIFIED_TRUE for r in records),
            n_verified_false=sum(r.status == STATUS_VERIFIED_FALSE for r in records),
        )

    def snapshot(self, path: str | Path):
        """Write the derived state as one human-inspectable JSON document."""
        with self._lock:
            state = {
                "records": [r.to_dict() for r in self.records()],
                "surveys": dict(sorted(self._surveys.items())),
            }
        Path(path).write_text(json.dumps(state, indent=2, sort_keys=True), encoding="utf-8")

    def export_geojson(self, status: str | None = None,
                       survey_id: str | None = None) -> dict:
        """FeatureCollection of matching records, coordinates [lon, lat]."""
        if status is not None and status not in STATUSES:
            raise DomainError(f"unknown status filter {status!r}")
        features = []
        for record in self.records(survey_id):
            if status is not None and record.status != status:
                continue
            properties = {
                "id": record.id,
                "status": record.status,
                "total_count": record.counts.total,
                "probability": record.probability,
            }
            properties.update({name: getattr(record.counts, name) for name in CLASS_NAMES})
            features.append({
                "type": "Feature",
                "geometry": {
                    "type": "Point",
                    "coordinates": [record.point.lon, record.point.lat],
                },
                "properties": properties,
            })
        return {"type": "FeatureCollection", "features": features}


def dedup(candidates: list[SpotCandidate], min_separation: float) -> list[SpotCandidate]:
    """Greedy spatial dedup: walk candidates by descending probability (id
    breaks ties) and drop any within min_separation meters of a kept one."""
    if min_separation < 0:
        raise DomainError(f"min_separation must be >= 0, got {min_separation}")
    if min_separation == 0:
        return list(candidates)
    kept: list[SpotCandidate] = []
    for candidate in sorted(candidates, key=lambda c: (-c.probability, c.id)):
        if all(haversine(candidate.point, other.point) >= min_separation for other in kept):
            kept.append(candidate)
    return kept

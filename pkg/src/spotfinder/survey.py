"""Pipeline orchestration: grid -> imagery -> preprocess -> detect -> score -> store.

Coordinates fan out across a worker pool, but results commit to the store
in grid order; completed coordinates are skipped on re-runs, keyed by their
candidate id, so an interrupted survey resumes where it stopped without
refetching anything already cached.
"""

from __future__ import annotations

import logging
import shlex
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .config import SurveyConfig
from .detectors import (
    DetectionSet,
    DetectorBackend,
    ExternalProcessBackend,
    FixtureBackend,
    HeuristicBackend,
    classify_tile,
    detection_to_dict,
    segment_street,
)
from .errors import BackendError, DomainError, FatalFetchError, RetryableFetchError
from .geo import GeoPoint, make_grid
from .imagery import (
    CostLedger,
    FixtureProvider,
    ImageCache,
    ImageryClient,
    NetworkProvider,
    NoCoverage,
    build_satellite_request,
    build_street_requests,
    estimate_cost,
)
from .preprocess import downscale, split_quadrants
from .scoring import combine, count_hits
from .store import SpotCandidate, SpotStore, SurveyStats, candidate_id

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SurveyPlan:
    """Dry-run result: what a survey would cost before any request is sent."""

    n_coordinates: int
    n_requests: int
    cost_usd: float

    def as_dict(self) -> dict:
        return {
            "n_coordinates": self.n_coordinates,
            "n_requests": self.n_requests,
            "cost_usd": round(self.cost_usd, 2),
        }


def dry_run(config: SurveyConfig) -> SurveyPlan:
    """Plan a survey without touching the network."""
    points = make_grid(config.grid_spec())
    requests, cost = estimate_cost(len(points), config.pricing)
    return SurveyPlan(n_coordinates=len(points), n_requests=requests, cost_usd=cost)


def resolve_backend(selector: str) -> DetectorBackend:
    """Backend selectors: "heuristic", "fixture:<manifest>", "external:<cmd>"."""
    if selector == "heuristic":
        return HeuristicBackend()
    if selector.startswith("fixture:"):
        return FixtureBackend.from_manifest(selector.split(":", 1)[1])
    if selector.startswith("external:"):
        return ExternalProcessBackend(shlex.split(selector.split(":", 1)[1]))
    raise DomainError(f"unknown backend selector {selector!r}")


def resolve_provider(selector: str):
    """Provider selectors: "network" or "fixture:<directory>"."""
    if selector == "network":
        return NetworkProvider()
    if selector.startswith("fixture:"):
        return FixtureProvider(selector.split(":", 1)[1])
    raise DomainError(f"unknown provider selector {selector!r}")


class SurveyRunner:
    """Runs one configured survey end to end."""

    def __init__(self, config: SurveyConfig, backend: DetectorBackend | None = None,
                 client: ImageryClient | None = None, store: SpotStore | None = None,
                 clock=time.time):
        self.config = config
        self.clock = clock
        self.backend = backend if backend is not None else resolve_backend(config.backend)
        if client is not None:
            self.client = client
        else:
            provider = resolve_provider(config.provider)
            self.client = ImageryClient(
                provider=provider,
                cache=ImageCache(config.cache_root),
                ledger=CostLedger(config.pricing),
                clock=clock,
            )
        self.store = store if store is not None else SpotStore(config.store_path, clock=clock)

    def _now(self) -> str:
        return datetime.fromtimestamp(self.clock(), tz=timezone.utc).isoformat()

    def _street_sets(self, point: GeoPoint) -> tuple[list[DetectionSet], list[str | None], dict]:
        sets, keys, detections = [], [], {}
        for slot, request in enumerate(build_street_requests(point)):
            outcome = self.client.fetch(request)
            if isinstance(outcome, NoCoverage):
                sets.append(DetectionSet(provenance=request.canonical()))
                keys.append(None)
                detections[f"street{slot}"] = []
                continue
            detection_set = segment_street(
                outcome.body, self.backend, provenance=request.canonical()
            )
            sets.append(detection_set)
            keys.append(request.cache_key())
            detections[f"street{slot}"] = [detection_to_dict(d) for d in detection_set.detections]
        return sets, keys, detections

    def _process(self, grid_index: int, point: GeoPoint) -> SpotCandidate:
        config = self.config

        sat_request = build_satellite_request(point, zoom=config.zoom)
        sat_outcome = self.client.fetch(sat_request)
        if isinstance(sat_outcome, NoCoverage):
            sat_score, sat_key = None, None
        else:
            quadrants = split_quadrants(downscale(sat_outcome.body),
                                        parent=sat_request.canonical())
            sat_score = classify_tile(quadrants, self.backend)
            sat_key = sat_request.cache_key()

        street_sets, street_keys, detections = self._street_sets(point)
        counts = count_hits(street_sets)
        score = combine(
            sat_score, counts,
            mode=config.mode, threshold=config.threshold,
            theta_sat=config.theta_sat, sat_weight=config.sat_weight,
        )
        return SpotCandidate.from_score(
            survey_id=config.survey_id,
            grid_index=grid_index,
            point=point,
            score=score,
            imagery={"sat": sat_key, "street": street_keys},
            detections=detections,
            timestamp=self._now(),
        )

    def run(self) -> SurveyStats:
        config = self.config
        points = make_grid(config.grid_spec())
        pending = [
            (i, p) for i, p in enumerate(points)
            if not self.store.has(candidate_id(config.survey_id, i))
        ]
        n_errors = 0
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            futures = [(i, pool.submit(self._process, i, p)) for i, p in pending]
            # Commit strictly in grid order so logs and resumes are deterministic.
            for grid_index, future in futures:
                try:
                    candidate = future.result()
                except (BackendError, RetryableFetchError, DomainError) as exc:
                    n_errors += 1
                    logger.warning("coordinate %d skipped: %s", grid_index, exc)
                    self.store.record_error(config.survey_id, grid_index, str(exc))
                    continue
                except FatalFetchError:
                    # Committed records are the checkpoint; a re-run resumes.
                    for _, leftover in futures:
                        leftover.cancel()
                    raise
                self.store.upsert_candidate(candidate)

        stats = self.store.stats(config.survey_id)
        self.store.record_survey(config.survey_id, {
            "n_coordinates": len(points),
            "n_positive": stats.n_positive,
            "n_errors": n_errors,
            "ledger": self.client.ledger.as_dict(),
        })
        return stats


def run_survey(config: SurveyConfig, backend: DetectorBackend | None = None,
               client: ImageryClient | None = None, store: SpotStore | None = None,
               clock=time.time) -> SurveyStats:
    return SurveyRunner(config, backend=backend, client=client, store=store,
                        clock=clock).run()

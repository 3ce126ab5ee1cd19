"""spotfinder: survey a region for parkour spots and keep the database honest."""

from .geo import GeoPoint, GridSpec, ground_resolution, haversine, make_grid, tile_footprint
from .imagery import (
    CostLedger,
    ImageryRequest,
    PricingModel,
    build_satellite_request,
    build_street_requests,
    estimate_cost,
)
from .scoring import ClassCounts, SpotScore, combine, count_hits, decide
from .store import SpotCandidate, SpotStore, SurveyStats, dedup
from .survey import SurveyPlan, dry_run, run_survey

__version__ = "0.1.0"

__all__ = [
    "GeoPoint", "GridSpec", "ground_resolution", "haversine", "make_grid",
    "tile_footprint", "CostLedger", "ImageryRequest", "PricingModel",
    "build_satellite_request", "build_street_requests", "estimate_cost",
    "ClassCounts", "SpotScore", "combine", "count_hits", "decide",
    "SpotCandidate", "SpotStore", "SurveyStats", "dedup",
    "SurveyPlan", "dry_run", "run_survey", "__version__",
]

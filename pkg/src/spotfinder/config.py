"""Survey configuration: one versioned JSON document drives a whole run.

Unknown keys are rejected rather than ignored so a typo never silently
falls back to a default. docs/config-format.md documents every field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DomainError
from .geo import GeoPoint, GridSpec, tile_footprint
from .imagery import (
    DEFAULT_SAT_PRICE_USD,
    DEFAULT_SIZE,
    DEFAULT_STREET_PRICE_USD,
    DEFAULT_ZOOM,
    STREET_HEADINGS,
    PricingModel,
)
from .scoring import DEFAULT_SAT_WEIGHT, DEFAULT_THETA_SAT, DEFAULT_THRESHOLD, MODES

CONFIG_VERSION = 1

KNOWN_KEYS = {
    "version", "survey_id", "center", "half_extent_m", "spacing_m", "zoom",
    "headings", "threshold", "theta_sat", "sat_weight", "mode",
    "pricing", "backend", "provider", "cache_root", "store_path", "workers",
}


@dataclass(frozen=True)
class SurveyConfig:
    survey_id: str
    center: GeoPoint
    half_extent_m: float
    zoom: int = DEFAULT_ZOOM
    spacing_m: float | None = None  # None -> satellite tile footprint
    headings: tuple[int, ...] = STREET_HEADINGS
    threshold: int = DEFAULT_THRESHOLD
    theta_sat: float = DEFAULT_THETA_SAT
    sat_weight: float = DEFAULT_SAT_WEIGHT
    mode: str = "street_only"
    pricing: PricingModel = field(default_factory=PricingModel)
    backend: str = "heuristic"
    provider: str = "network"
    cache_root: str = "cache"
    store_path: str = "spots.jsonl"
    workers: int = 4

    def __post_init__(self):
        if not self.survey_id:
            raise DomainError("survey_id must be non-empty")
        if self.mode not in MODES:
            raise DomainError(f"unknown mode {self.mode!r}")
        if tuple(self.headings) != STREET_HEADINGS:
            raise DomainError(f"headings must be {list(STREET_HEADINGS)}")
        if self.workers < 1:
            raise DomainError("workers must be >= 1")

    @property
    def spacing(self) -> float:
        """Grid step; defaults to the satellite footprint so tiles abut
        without overlap."""
        if self.spacing_m is not None:
            return self.spacing_m
        return tile_footprint(self.center.lat, self.zoom, DEFAULT_SIZE).width_m

    def grid_spec(self) -> GridSpec:
        return GridSpec(center=self.center, half_extent=self.half_extent_m,
                        spacing=self.spacing)


def config_from_dict(data: dict) -> SurveyConfig:
    unknown = set(data) - KNOWN_KEYS
    if unknown:
        raise DomainError(f"unknown config keys: {sorted(unknown)}")
    version = data.get("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise DomainError(f"unsupported config version {version}, expected {CONFIG_VERSION}")
    for required in ("survey_id", "center", "half_extent_m"):
        if required not in data:
            raise DomainError(f"config is missing required key {required!r}")
    center = data["center"]
    if not isinstance(center, dict) or set(center) != {"lat", "lon"}:
        raise DomainError('center must be an object {"lat": ..., "lon": ...}')

    pricing_data = data.get("pricing", {})
    unknown_pricing = set(pricing_data) - {"satellite_usd", "street_usd"}
    if unknown_pricing:
        raise DomainError(f"unknown pricing keys: {sorted(unknown_pricing)}")
    pricing = PricingModel(
        sat_price=pricing_data.get("satellite_usd", DEFAULT_SAT_PRICE_USD),
        street_price=pricing_data.get("street_usd", DEFAULT_STREET_PRICE_USD),
    )

    return SurveyConfig(
        survey_id=data["survey_id"],
        center=GeoPoint(lat=center["lat"], lon=center["lon"]),
        half_extent_m=float(data["half_extent_m"]),
        zoom=data.get("zoom", DEFAULT_ZOOM),
        spacing_m=data.get("spacing_m"),
        headings=tuple(data.get("headings", STREET_HEADINGS)),
        threshold=data.get("threshold", DEFAULT_THRESHOLD),
        theta_sat=data.get("theta_sat", DEFAULT_THETA_SAT),
        sat_weight=data.get("sat_weight", DEFAULT_SAT_WEIGHT),
        mode=data.get("mode", "street_only"),
        pricing=pricing,
        backend=data.get("backend", "heuristic"),
        provider=data.get("provider", "network"),
        cache_root=data.get("cache_root", "cache"),
        store_path=data.get("store_path", "spots.jsonl"),
        workers=data.get("workers", 4),
    )


def load_config(path: str | Path) -> SurveyConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}: invalid JSON at byte {exc.pos}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise DomainError(f"{path}: config must be a JSON object")
    return config_from_dict(data)


def config_to_dict(config: SurveyConfig) -> dict:
    return {
        "version": CONFIG_VERSION,
        "survey_id": config.survey_id,
        "center": {"lat": config.center.lat, "lon": config.center.lon},
        "half_extent_m": config.half_extent_m,
        "spacing_m": config.spacing_m,
        "zoom": config.zoom,
        "headings": list(config.headings),
        "threshold": config.threshold,
        "theta_sat": config.theta_sat,
        "sat_weight": config.sat_weight,
        "mode": config.mode,
        "pricing": {
            "satellite_usd": config.pricing.sat_price,
            "street_usd": config.pricing.street_price,
        },
        "backend": config.backend,
        "provider": config.provider,
        "cache_root": config.cache_root,
        "store_path": config.store_path,
        "workers": config.workers,
    }

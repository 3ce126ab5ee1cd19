"""Imagery acquisition: request canonicalization, disk cache, rate limiting,
and cost accounting.

Every request has one canonical query-string form; its SHA-256 is the cache
key and the filename stem of the PNG + JSON sidecar pair under the cache
root. The fixture provider reads the identical layout from a committed
directory, so offline runs and cached reruns go through the same code path.
The API credential is only ever read from the environment at dispatch time
and never appears in a canonical string.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import requests as requests_lib
from PIL import Image

from .errors import DomainError, FatalFetchError, RetryableFetchError
from .geo import GeoPoint

SATELLITE = "satellite"
STREET = "street"

DEFAULT_ZOOM = 21
DEFAULT_SIZE = 640
MAX_SIZE = 640  # documented maximum edge for the street-view endpoint
STREET_HEADINGS = (0, 90, 180, 270)
DEFAULT_FOV = 90

# Per-request prices; a config document normally overrides these.
DEFAULT_SAT_PRICE_USD = 0.002
DEFAULT_STREET_PRICE_USD = 0.007

API_KEY_ENV = "SPOTFINDER_API_KEY"
STATIC_MAPS_URL = "https://maps.googleapis.com/maps/api/staticmap"
STREET_VIEW_URL = "https://maps.googleapis.com/maps/api/streetview"
STREET_METADATA_URL = "https://maps.googleapis.com/maps/api/streetview/metadata"


@dataclass(frozen=True)
class ImageryRequest:
    """Descriptor for one satellite or street-view fetch."""

    kind: str
    point: GeoPoint
    zoom: int | None = None
    heading: int | None = None
    fov: int | None = None
    size: tuple[int, int] = (DEFAULT_SIZE, DEFAULT_SIZE)

    def __post_init__(self):
        w, h = self.size
        if not (0 < w <= MAX_SIZE and 0 < h <= MAX_SIZE):
            raise DomainError(f"size {w}x{h} outside the allowed 1..{MAX_SIZE} range")
        if self.kind == SATELLITE:
            if self.zoom is None or not 0 <= self.zoom <= 23:
                raise DomainError(f"satellite request needs zoom in [0, 23], got {self.zoom}")
            if self.heading is not None or self.fov is not None:
                raise DomainError("satellite requests carry no heading or fov")
        elif self.kind == STREET:
            if self.heading not in STREET_HEADINGS:
                raise DomainError(f"street heading must be one of {STREET_HEADINGS}, got {self.heading}")
            if self.zoom is not None:
                raise DomainError("street requests carry no zoom")
            if not (self.fov and 0 < self.fov <= 120):
                raise DomainError(f"street fov must be in (0, 120], got {self.fov}")
        else:
            raise DomainError(f"unknown imagery kind {self.kind!r}")

    def canonical(self) -> str:
        """Credential-free canonical query string; the identity of this request.

        Coordinates render with exactly 6 decimal places (~0.11 m), which
        pins cache keys against float formatting drift.
        """
        lat = f"{self.point.lat:.6f}"
        lon = f"{self.point.lon:.6f}"
        w, h = self.size
        if self.kind == SATELLITE:
            return f"center={lat},{lon}&zoom={self.zoom}&size={w}x{h}&maptype=satellite"
        return f"location={lat},{lon}&heading={self.heading}&fov={self.fov}&size={w}x{h}"

    def cache_key(self) -> str:
        return hashlib.sha256(self.canonical().encode("ascii")).hexdigest()


def build_satellite_request(point: GeoPoint, zoom: int = DEFAULT_ZOOM,
                            size: int = DEFAULT_SIZE) -> ImageryRequest:
    return ImageryRequest(kind=SATELLITE, point=point, zoom=zoom, size=(size, size))


def build_street_requests(point: GeoPoint, size: int = DEFAULT_SIZE) -> list[ImageryRequest]:
    """One request per compass heading; the four 90-degree views tile 360."""
    return [
        ImageryRequest(kind=STREET, point=point, heading=heading, fov=DEFAULT_FOV,
                       size=(size, size))
        for heading in STREET_HEADINGS
    ]


@dataclass(frozen=True)
class PricingModel:
    sat_price: float = DEFAULT_SAT_PRICE_USD
    street_price: float = DEFAULT_STREET_PRICE_USD

    def __post_init__(self):
        if self.sat_price < 0 or self.street_price < 0:
            raise DomainError("prices must be nonnegative")


class CostLedger:
    """Thread-safe count of paid requests. Only network fetches are billed."""

    def __init__(self, pricing: PricingModel | None = None):
        self.pricing = pricing or PricingModel()
        self.sat_requests = 0
        self.street_requests = 0
        self._lock = threading.Lock()

    def record(self, kind: str):
        with self._lock:
            if kind == SATELLITE:
                self.sat_requests += 1
            elif kind == STREET:
                self.street_requests += 1
            else:
                raise DomainError(f"unknown imagery kind {kind!r}")

    @property
    def requests(self) -> int:
        return self.sat_requests + self.street_requests

    @property
    def total(self) -> float:
        return (self.sat_requests * self.pricing.sat_price
                + self.street_requests * self.pricing.street_price)

    def as_dict(self) -> dict:
        return {
            "sat_requests": self.sat_requests,
            "street_requests": self.street_requests,
            "total_usd": round(self.total, 4),
        }


def estimate_cost(n_coordinates: int, pricing: PricingModel | None = None) -> tuple[int, float]:
    """Requests and cost for a survey of n coordinates: 1 satellite + 4 street each."""
    if n_coordinates < 0:
        raise DomainError(f"coordinate count must be >= 0, got {n_coordinates}")
    pricing = pricing or PricingModel()
    requests = 5 * n_coordinates
    cost = n_coordinates * pricing.sat_price + 4 * n_coordinates * pricing.street_price
    return requests, cost


@dataclass(frozen=True)
class CachedImage:
    request: ImageryRequest
    body: np.ndarray
    fetched_at: str
    source: str  # network | cache | fixture

    def __post_init__(self):
        w, h = self.request.size
        if self.body.shape[:2] != (h, w):
            raise DomainError(
                f"raster {self.body.shape[1]}x{self.body.shape[0]} does not match "
                f"requested size {w}x{h}"
            )


@dataclass(frozen=True)
class NoCoverage:
    """The provider has no panorama (or fixture) for this request.

    A recorded outcome, not an error: the coordinate is skipped, never
    scored from partial evidence it does not have.
    """

    request: ImageryRequest
    reason: str = "no_coverage"


def _utc_iso(epoch: float) -> str:
    return datetime.fromtimestamp(epoch, tz=timezone.utc).isoformat()


class ImageCache:
    """PNG + JSON sidecar per key under one root directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def image_path(self, key: str) -> Path:
        return self.root / f"{key}.png"

    def sidecar_path(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def get(self, request: ImageryRequest) -> CachedImage | None:
        key = request.cache_key()
        image_path = self.image_path(key)
        sidecar_path = self.sidecar_path(key)
        if not image_path.exists() or not sidecar_path.exists():
            return None
        meta = json.loads(sidecar_path.read_text(encoding="utf-8"))
        body = np.asarray(Image.open(image_path).convert("RGB"), dtype=np.uint8)
        return CachedImage(request=request, body=body,
                           fetched_at=meta.get("fetched_at", ""), source="cache")

    def put(self, request: ImageryRequest, body: np.ndarray, source: str,
            fetched_at: str) -> CachedImage:
        key = request.cache_key()
        Image.fromarray(body).save(self.image_path(key))
        sidecar = {
            "canonical_request": request.canonical(),
            "fetched_at": fetched_at,
            "source": source,
        }
        self.sidecar_path(key).write_text(
            json.dumps(sidecar, sort_keys=True), encoding="utf-8"
        )
        return CachedImage(request=request, body=body, fetched_at=fetched_at, source=source)


class RateLimiter:
    """Bounds in-flight network fetches and spaces out dispatches."""

    def __init__(self, max_inflight: int = 4, min_spacing_s: float = 0.1):
        self._semaphore = threading.Semaphore(max_inflight)
        self._min_spacing_s = min_spacing_s
        self._dispatch_lock = threading.Lock()
        self._last_dispatch = 0.0

    def __enter__(self):
        self._semaphore.acquire()
        with self._dispatch_lock:
            wait = self._last_dispatch + self._min_spacing_s - time.monotonic()
            if wait > 0:
                time.sleep(wait)
            self._last_dispatch = time.monotonic()
        return self

    def __exit__(self, *exc_info):
        self._semaphore.release()
        return False


class NetworkProvider:
    """Fetches from the static-map and street-view HTTPS endpoints.

    Street requests first hit the zero-cost metadata endpoint; anything
    but status OK comes back as NoCoverage so no paid fetch is wasted on a
    coordinate without a panorama.
    """

    name = "network"
    is_network = True

    def __init__(self, session=None, timeout_s: float = 30.0):
        self.session = session or requests_lib.Session()
        self.timeout_s = timeout_s

    def _api_key(self) -> str:
        key = os.environ.get(API_KEY_ENV, "")
        if not key:
            raise FatalFetchError(f"{API_KEY_ENV} is not set")
        return key

    def _get(self, url: str, params: dict):
        try:
            response = self.session.get(url, params=params, timeout=self.timeout_s)
        except requests_lib.RequestException as exc:
            raise RetryableFetchError(f"network failure: {exc}") from exc
        if response.status_code in (401, 403, 429):
            raise FatalFetchError(f"auth/quota failure: HTTP {response.status_code}")
        if response.status_code >= 500:
            raise RetryableFetchError(f"server error: HTTP {response.status_code}")
        if response.status_code != 200:
            raise RetryableFetchError(f"unexpected HTTP {response.status_code}")
        return response

    def fetch(self, request: ImageryRequest) -> np.ndarray | NoCoverage:
        key = self._api_key()
        w, h = request.size
        lat, lon = request.point.lat, request.point.lon
        location = f"{lat:.6f},{lon:.6f}"
        if request.kind == STREET:
            meta = self._get(STREET_METADATA_URL, {"location": location, "key": key})
            status = meta.json().get("status", "UNKNOWN")
            if status != "OK":
                return NoCoverage(request=request, reason=status.lower())
            params = {
                "location": location,
                "heading": request.heading,
                "fov": request.fov,
                "size": f"{w}x{h}",
                "key": key,
            }
            response = self._get(STREET_VIEW_URL, params)
        else:
            params = {
                "center": location,
                "zoom": request.zoom,
                "size": f"{w}x{h}",
                "maptype": "satellite",
                "key": key,
            }
            response = self._get(STATIC_MAPS_URL, params)
        try:
            image = Image.open(io.BytesIO(response.content)).convert("RGB")
        except Exception as exc:
            raise RetryableFetchError(f"undecodable image payload: {exc}") from exc
        return np.asarray(image, dtype=np.uint8)


class FixtureProvider:
    """Reads images from a committed directory mirroring the cache layout."""

    name = "fixture"
    is_network = False

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def fetch(self, request: ImageryRequest) -> np.ndarray | NoCoverage:
        path = self.root / f"{request.cache_key()}.png"
        if not path.exists():
            return NoCoverage(request=request, reason="missing_fixture")
        return np.asarray(Image.open(path).convert("RGB"), dtype=np.uint8)


class ImageryClient:
    """Cache-first fetch front end shared by the survey runner and the CLI."""

    def __init__(self, provider, cache: ImageCache, ledger: CostLedger | None = None,
                 limiter: RateLimiter | None = None, clock=time.time):
        self.provider = provider
        self.cache = cache
        self.ledger = ledger if ledger is not None else CostLedger()
        self.limiter = limiter if limiter is not None else RateLimiter()
        self.clock = clock
        self._master_lock = threading.Lock()
        self._key_locks: dict[str, threading.Lock] = {}

    def _key_lock(self, key: str) -> threading.Lock:
        with self._master_lock:
            lock = self._key_locks.get(key)
            if lock is None:
                lock = self._key_locks[key] = threading.Lock()
            return lock

    def fetch(self, request: ImageryRequest) -> CachedImage | NoCoverage:
        """Cache-first; on miss, one provider fetch per distinct request.

        Concurrent fetches of the same canonical request serialize on a
        per-key lock so the provider is hit exactly once per distinct
        request, however the callers overlap.
        """
        key = request.cache_key()
        with self._key_lock(key):
            hit = self.cache.get(request)
            if hit is not None:
                return hit
            if self.provider.is_network:
                with self.limiter:
                    fetched = self.provider.fetch(request)
            else:
                fetched = self.provider.fetch(request)
            if isinstance(fetched, NoCoverage):
                return fetched
            source = "network" if self.provider.is_network else "fixture"
            cached = self.cache.put(request, fetched, source=source,
                                    fetched_at=_utc_iso(self.clock()))
            if self.provider.is_network:
                self.ledger.record(request.kind)
            return cached

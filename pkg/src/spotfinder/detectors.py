"""Detector backends: quadrant classification and street-level instance detection.

Three interchangeable backends implement the same interface: a fixture
backend that replays recorded detections (tests, offline reruns), a pixel
heuristic (no-model demo), and an external-process runner that talks to a
real model over a small file-based JSON protocol (docs/backend-protocol.md).
"""

from __future__ import annotations

import json
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import BackendError, DomainError
from .preprocess import QUADRANT_SIZE, QuadrantSet, require_raster

# Closed class set: the only object kinds that count toward a spot.
CLASS_NAMES = ("short_wall", "railing", "stairs")

DEFAULT_MIN_CONFIDENCE = 0.75

# Pixels whose luminance gradient exceeds this count as edges.
EDGE_GRADIENT_THRESHOLD = 32.0
# Edge fraction at which the heuristic classifier saturates to 1.0.
EDGE_FRACTION_SCALE = 0.15

MAX_STREET_SIZE = 640


@dataclass(frozen=True)
class Detection:
    """One detected instance: class label, confidence, and pixel polygon."""

    class_name: str
    confidence: float
    polygon: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if self.class_name not in CLASS_NAMES:
            raise DomainError(f"unknown detection class {self.class_name!r}, expected one of {CLASS_NAMES}")
        if not 0.0 <= self.confidence <= 1.0:
            raise DomainError(f"confidence {self.confidence} outside [0, 1]")
        if len(self.polygon) < 3:
            raise DomainError(f"polygon needs >= 3 vertices, got {len(self.polygon)}")


@dataclass(frozen=True)
class DetectionSet:
    """Detections for one image, tagged with its provenance key."""

    provenance: str
    detections: tuple[Detection, ...] = ()
    image_size: tuple[int, int] | None = None  # (width, height) when known

    def __post_init__(self):
        if self.image_size is not None:
            w, h = self.image_size
            for det in self.detections:
                for x, y in det.polygon:
                    if not (0 <= x <= w and 0 <= y <= h):
                        raise DomainError(
                            f"polygon vertex ({x}, {y}) outside {w}x{h} image ({self.provenance})"
                        )

    def __len__(self):
        return len(self.detections)

    def filter(self, min_confidence: float) -> "DetectionSet":
        kept = tuple(d for d in self.detections if d.confidence >= min_confidence)
        return DetectionSet(provenance=self.provenance, detections=kept, image_size=self.image_size)

    def count_by_class(self) -> dict[str, int]:
        counts = {name: 0 for name in CLASS_NAMES}
        for det in self.detections:
            counts[det.class_name] += 1
        return counts


@dataclass(frozen=True)
class SatelliteScore:
    """Per-quadrant positive probabilities for one satellite tile."""

    quadrant_probs: tuple[float, float, float, float]

    def __post_init__(self):
        if len(self.quadrant_probs) != 4:
            raise DomainError(f"expected 4 quadrant probabilities, got {len(self.quadrant_probs)}")
        for p in self.quadrant_probs:
            if not 0.0 <= p <= 1.0:
                raise DomainError(f"probability {p} outside [0, 1]")

    @property
    def max_prob(self) -> float:
        return max(self.quadrant_probs)


class DetectorBackend:
    """Interface every backend implements.

    Backends must be deterministic for a fixed (backend identity, input)
    pair; `shareable` declares whether one instance may serve several
    workers concurrently.
    """

    name = "abstract"
    shareable = True

    def classify_quadrant(self, tile: np.ndarray, provenance: str = "") -> float:
        raise NotImplementedError

    def segment_street(self, img: np.ndarray, provenance: str = "") -> DetectionSet:
        raise NotImplementedError


def classify_tile(quadrants: QuadrantSet, backend: DetectorBackend) -> SatelliteScore:
    """Score all four quadrants of a satellite tile through one backend."""
    probs = []
    for i, tile in enumerate(quadrants.tiles):
        provenance = f"{quadrants.parent}#q{i}"
        try:
            p = float(backend.classify_quadrant(tile, provenance))
        except BackendError:
            raise
        except Exception as exc:
            raise BackendError(f"quadrant classification failed: {exc}", provenance=provenance) from exc
        probs.append(p)
    return SatelliteScore(quadrant_probs=tuple(probs))


def segment_street(
    img: np.ndarray,
    backend: DetectorBackend,
    provenance: str = "",
    min_confidence: float = DEFAULT_MIN_CONFIDENCE,
) -> DetectionSet:
    """Run street detection and drop detections below the confidence floor.

    The floor is inclusive: a detection at exactly min_confidence survives.
    """
    require_raster(img)
    if img.shape[0] > MAX_STREET_SIZE or img.shape[1] > MAX_STREET_SIZE:
        raise DomainError(f"street image {img.shape[0]}x{img.shape[1]} exceeds {MAX_STREET_SIZE}px")
    if not 0.0 <= min_confidence <= 1.0:
        raise DomainError(f"min_confidence {min_confidence} outside [0, 1]")
    try:
        detections = backend.segment_street(img, provenance)
    except BackendError:
        raise
    except Exception as exc:
        raise BackendError(f"street segmentation failed: {exc}", provenance=provenance) from exc
    return detections.filter(min_confidence)


def _luminance(img: np.ndarray) -> np.ndarray:
    rgb = img.astype(np.float64)
    return 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]


def edge_fraction(img: np.ndarray) -> float:
    """Fraction of pixels whose forward-difference gradient magnitude > 32.

    The last column has no horizontal neighbor and the last row no vertical
    one; those differences are zero, so a step edge at column c marks only
    column c itself.
    """
    lum = _luminance(img)
    gx = np.zeros_like(lum)
    gy = np.zeros_like(lum)
    gx[:, :-1] = lum[:, 1:] - lum[:, :-1]
    gy[:-1, :] = lum[1:, :] - lum[:-1, :]
    magnitude = np.hypot(gx, gy)
    return float(np.count_nonzero(magnitude > EDGE_GRADIENT_THRESHOLD)) / lum.size


def heuristic_satellite_prob(tile: np.ndarray) -> float:
    """Edge-density stand-in for the trained tile classifier.

    prob = min(1, edge_fraction / 0.15): flat tiles score 0, busy urban
    texture saturates to 1.
    """
    require_raster(tile, QUADRANT_SIZE)
    return min(1.0, edge_fraction(tile) / EDGE_FRACTION_SCALE)


class HeuristicBackend(DetectorBackend):
    """Model-free backend driven purely by edge density.

    Street detection tiles the image into an 8x8 cell grid and emits one
    detection per busy cell, cycling class labels deterministically by cell
    index. A demo stand-in, not a claim about real objects.
    """

    name = "heuristic"
    shareable = True

    GRID = 8

    def classify_quadrant(self, tile: np.ndarray, provenance: str = "") -> float:
        return heuristic_satellite_prob(tile)

    def segment_street(self, img: np.ndarray, provenance: str = "") -> DetectionSet:
        require_raster(img)
        h, w = img.shape[:2]
        ch, cw = h // self.GRID, w // self.GRID
        detections = []
        if ch == 0 or cw == 0:
            return DetectionSet(provenance=provenance, image_size=(w, h))
        for row in range(self.GRID):
            for col in range(self.GRID):
                cell = img[row * ch:(row + 1) * ch, col * cw:(col + 1) * cw]
                e = edge_fraction(cell)
                if e <= EDGE_FRACTION_SCALE:
                    continue
                x0, y0 = col * cw, row * ch
                x1, y1 = x0 + cw, y0 + ch
                detections.append(Detection(
                    class_name=CLASS_NAMES[(row * self.GRID + col) % len(CLASS_NAMES)],
                    confidence=min(1.0, 0.75 + e / 4.0),
                    polygon=((x0, y0), (x1, y0), (x1, y1), (x0, y1)),
                ))
        return DetectionSet(provenance=provenance, detections=tuple(detections), image_size=(w, h))


class FixtureBackend(DetectorBackend):
    """Replays recorded scores and detections keyed by provenance.

    The manifest maps provenance strings (quadrant keys under "satellite",
    image keys under "street") to recorded outputs; anything absent from
    the manifest replays as empty.
    """

    name = "fixture"
    shareable = True

    def __init__(self, satellite: dict[str, float] | None = None,
                 street: dict[str, list[dict]] | None = None):
        self.satellite = dict(satellite or {})
        self.street = dict(street or {})

    @classmethod
    def from_manifest(cls, path: str | Path) -> "FixtureBackend":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(satellite=data.get("satellite", {}), street=data.get("street", {}))

    def classify_quadrant(self, tile: np.ndarray, provenance: str = "") -> float:
        return float(self.satellite.get(provenance, 0.0))

    def segment_street(self, img: np.ndarray, provenance: str = "") -> DetectionSet:
        h, w = img.shape[:2]
        detections = tuple(
            _detection_from_dict(entry) for entry in self.street.get(provenance, [])
        )
        return DetectionSet(provenance=provenance, detections=detections, image_size=(w, h))


class ExternalProcessBackend(DetectorBackend):
    """Bridges to a model runner process through request/response files.

    Protocol (version 1, see docs/backend-protocol.md): the runner command
    is invoked with the request path as its last argument; the request
    names the image file and task kind, the response carries the score or
    detection list.
    """

    name = "external"
    shareable = False
    PROTOCOL_VERSION = 1

    def __init__(self, command: list[str], timeout_s: float = 120.0):
        if not command:
            raise DomainError("external backend needs a non-empty command")
        self.command = list(command)
        self.timeout_s = timeout_s

    def _roundtrip(self, img: np.ndarray, kind: str) -> dict:
        with tempfile.TemporaryDirectory(prefix="spotfinder-backend-") as tmp:
            tmp_path = Path(tmp)
            image_path = tmp_path / "input.png"
            Image.fromarray(img).save(image_path)
            request_path = tmp_path / "request.json"
            response_path = tmp_path / "response.json"
            request_path.write_text(json.dumps({
                "version": self.PROTOCOL_VERSION,
                "kind": kind,
                "image": str(image_path),
                "response": str(response_path),
            }), encoding="utf-8")
            try:
                subprocess.run(
                    self.command + [str(request_path)],
                    check=True, timeout=self.timeout_s, capture_output=True,
                )
            except (subprocess.CalledProcessError, subprocess.TimeoutExpired, OSError) as exc:
                raise BackendError(f"external backend failed: {exc}") from exc
            if not response_path.exists():
                raise BackendError("external backend wrote no response file")
            return json.loads(response_path.read_text(encoding="utf-8"))

    def classify_quadrant(self, tile: np.ndarray, provenance: str = "") -> float:
        response = self._roundtrip(tile, "satellite")
        try:
            return float(response["probability"])
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendError(f"bad satellite response: {exc}", provenance=provenance) from exc

    def segment_street(self, img: np.ndarray, provenance: str = "") -> DetectionSet:
        response = self._roundtrip(img, "street")
        h, w = img.shape[:2]
        try:
            detections = tuple(_detection_from_dict(entry) for entry in response["detections"])
        except (KeyError, TypeError) as exc:
            raise BackendError(f"bad street response: {exc}", provenance=provenance) from exc
        return DetectionSet(provenance=provenance, detections=detections, image_size=(w, h))


def _detection_from_dict(entry: dict) -> Detection:
    class_name = entry.get("class")
    if class_name not in CLASS_NAMES:
        raise BackendError(f"backend emitted unknown class {class_name!r}")
    return Detection(
        class_name=class_name,
        confidence=float(entry.get("confidence", 1.0)),
        polygon=tuple((float(x), float(y)) for x, y in entry["polygon"]),
    )


def detection_to_dict(det: Detection) -> dict:
    return {
        "class": det.class_name,
        "confidence": det.confidence,
        "polygon": [[x, y] for x, y in det.polygon],
    }

import json
import math
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spotfinder.detectors import (
    CLASS_NAMES,
    Detection,
    DetectionSet,
    ExternalProcessBackend,
    FixtureBackend,
    HeuristicBackend,
    SatelliteScore,
    classify_tile,
    edge_fraction,
    heuristic_satellite_prob,
    segment_street,
)
from spotfinder.errors import BackendError, DomainError
from spotfinder.preprocess import split_quadrants


def solid(size, value=0):
    return np.full((size, size, 3), value, dtype=np.uint8)


def detection(class_name="railing", confidence=1.0):
    return Detection(class_name=class_name, confidence=confidence,
                     polygon=((0, 0), (10, 0), (10, 10)))


def detection_set(confidences, provenance="img"):
    return DetectionSet(
        provenance=provenance,
        detections=tuple(detection(confidence=c) for c in confidences),
    )


class ConstantBackend:
    """Test double returning a fixed probability and fixed detections."""

    name = "constant"
    shareable = True

    def __init__(self, prob=0.0, detections=()):
        self.prob = prob
        self.detections = tuple(detections)

    def classify_quadrant(self, tile, provenance=""):
        return self.prob

    def segment_street(self, img, provenance=""):
        return DetectionSet(provenance=provenance, detections=self.detections)


class SequenceBackend(ConstantBackend):
    """Distinct probability per quadrant call."""

    def __init__(self, probs):
        super().__init__()
        self.probs = list(probs)
        self.calls = 0

    def classify_quadrant(self, tile, provenance=""):
        p = self.probs[self.calls]
        self.calls += 1
        return p


class TestTypes:
    def test_detection_rejects_unknown_class(self):
        with pytest.raises(DomainError):
            Detection(class_name="bench", confidence=0.9, polygon=((0, 0), (1, 0), (1, 1)))

    def test_detection_rejects_degenerate_polygon(self):
        with pytest.raises(DomainError):
            Detection(class_name="stairs", confidence=0.9, polygon=((0, 0), (1, 0)))

    def test_detection_rejects_bad_confidence(self):
        with pytest.raises(DomainError):
            detection(confidence=1.5)

    def test_detection_set_bounds_check(self):
        out = Detection(class_name="stairs", confidence=1.0,
                        polygon=((0, 0), (700, 0), (700, 700)))
        with pytest.raises(DomainError):
            DetectionSet(provenance="x", detections=(out,), image_size=(640, 640))

    def test_satellite_score_max(self):
        score = SatelliteScore(quadrant_probs=(0.1, 0.9, 0.2, 0.3))
        assert score.max_prob == 0.9


class TestClassifyTile:
    def test_constant_zero_backend(self):
        quadrants = split_quadrants(solid(512), parent="sat")
        score = classify_tile(quadrants, ConstantBackend(prob=0.0))
        assert score.max_prob == 0.0

    def test_max_aggregation(self):
        quadrants = split_quadrants(solid(512), parent="sat")
        score = classify_tile(quadrants, SequenceBackend([0.1, 0.9, 0.2, 0.3]))
        assert score.quadrant_probs == (0.1, 0.9, 0.2, 0.3)
        assert score.max_prob == 0.9

    def test_backend_failure_carries_provenance(self):
        class Boom(ConstantBackend):
            def classify_quadrant(self, tile, provenance=""):
                raise RuntimeError("model exploded")

        quadrants = split_quadrants(solid(512), parent="sat-request")
        with pytest.raises(BackendError) as excinfo:
            classify_tile(quadrants, Boom())
        assert "sat-request#q0" == excinfo.value.provenance


class TestConfidenceFilter:
    def test_floor_is_inclusive(self):
        backend = ConstantBackend(detections=[detection(confidence=c)
                                              for c in (0.74, 0.75, 0.76)])
        result = segment_street(solid(64), backend, min_confidence=0.75)
        assert len(result) == 2
        assert sorted(d.confidence for d in result.detections) == [0.75, 0.76]

    def test_empty_backend_output(self):
        result = segment_street(solid(64), ConstantBackend())
        assert len(result) == 0

    def test_oversize_image_rejected(self):
        with pytest.raises(DomainError):
            segment_street(solid(641), ConstantBackend())

    @given(st.lists(st.floats(min_value=0, max_value=1), max_size=30),
           st.floats(min_value=0, max_value=1), st.floats(min_value=0, max_value=1))
    def test_filter_monotone(self, confidences, floor_a, floor_b):
        low, high = sorted([floor_a, floor_b])
        s = detection_set(confidences)
        assert len(s.filter(high)) <= len(s.filter(low))

    @given(st.lists(st.floats(min_value=0, max_value=1), max_size=30),
           st.floats(min_value=0, max_value=1))
    def test_filter_idempotent(self, confidences, floor):
        s = detection_set(confidences)
        once = s.filter(floor)
        assert once.filter(floor) == once


def brute_force_edge_count(img):
    """Pixel-by-pixel oracle for the edge definition."""
    lum = 0.299 * img[:, :, 0].astype(float) + 0.587 * img[:, :, 1].astype(float) \
        + 0.114 * img[:, :, 2].astype(float)
    h, w = lum.shape
    count = 0
    for y in range(h):
        for x in range(w):
            gx = lum[y, x + 1] - lum[y, x] if x + 1 < w else 0.0
            gy = lum[y + 1, x] - lum[y, x] if y + 1 < h else 0.0
            if math.hypot(gx, gy) > 32:
                count += 1
    return count


class TestHeuristicProb:
    def test_constant_tile(self):
        assert heuristic_satellite_prob(solid(256)) == 0.0

    def test_checkerboard_saturates(self):
        img = np.zeros((256, 256, 3), dtype=np.uint8)
        ys, xs = np.indices((256, 256))
        img[(ys + xs) % 2 == 1] = 255
        assert heuristic_satellite_prob(img) == 1.0

    def test_half_black_half_white(self):
        img = np.zeros((256, 256, 3), dtype=np.uint8)
        img[:, 128:] = 255
        expected_count = brute_force_edge_count(img)
        assert expected_count == 256  # exactly one edge column
        prob = heuristic_satellite_prob(img)
        assert prob == pytest.approx((256 / 65536) / 0.15, rel=1e-12)
        assert prob == pytest.approx(0.026, abs=1e-3)

    def test_matches_brute_force_on_random_tile(self):
        rng = np.random.default_rng(3)
        img = rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
        assert edge_fraction(img) == brute_force_edge_count(img) / (32 * 32)

    def test_wrong_size_rejected(self):
        with pytest.raises(DomainError):
            heuristic_satellite_prob(solid(128))

    def test_flat_tile_scores_low_via_backend(self):
        prob = HeuristicBackend().classify_quadrant(solid(256))
        assert prob <= 0.1


class TestHeuristicBackend:
    def test_street_detections_deterministic(self):
        rng = np.random.default_rng(5)
        img = rng.integers(0, 256, size=(640, 640, 3), dtype=np.uint8)
        backend = HeuristicBackend()
        first = backend.segment_street(img, "p")
        second = backend.segment_street(img, "p")
        assert first == second
        assert all(d.class_name in CLASS_NAMES for d in first.detections)

    def test_flat_street_has_no_detections(self):
        assert len(HeuristicBackend().segment_street(solid(640), "p")) == 0


class TestFixtureBackend:
    def test_replay_by_provenance(self):
        backend = FixtureBackend(
            satellite={"sat#q1": 0.8},
            street={"img": [{"class": "stairs", "confidence": 1.0,
                             "polygon": [[0, 0], [5, 0], [5, 5]]}]},
        )
        assert backend.classify_quadrant(solid(256), "sat#q1") == 0.8
        assert backend.classify_quadrant(solid(256), "sat#q0") == 0.0
        result = backend.segment_street(solid(64), "img")
        assert len(result) == 1
        assert result.detections[0].class_name == "stairs"

    def test_unknown_class_is_backend_error(self):
        backend = FixtureBackend(street={"img": [{"class": "bench", "confidence": 1.0,
                                                  "polygon": [[0, 0], [5, 0], [5, 5]]}]})
        with pytest.raises(BackendError):
            backend.segment_street(solid(64), "img")

    def test_manifest_roundtrip(self, tmp_path):
        manifest = tmp_path / "manifest.json"
        manifest.write_text(json.dumps({
            "satellite": {"a#q0": 0.4},
            "street": {"b": [{"class": "railing", "confidence": 0.9,
                              "polygon": [[1, 1], [2, 1], [2, 2]]}]},
        }))
        backend = FixtureBackend.from_manifest(manifest)
        assert backend.classify_quadrant(solid(256), "a#q0") == 0.4
        assert len(backend.segment_street(solid(64), "b")) == 1


RUNNER = r"""
import json, sys
request = json.load(open(sys.argv[1]))
if request["kind"] == "satellite":
    result = {"probability": 0.625}
else:
    result = {"detections": [
        {"class": "short_wall", "confidence": 0.9,
         "polygon": [[0, 0], [8, 0], [8, 8]]}]}
open(request["response"], "w").write(json.dumps(result))
"""


class TestExternalProcessBackend:
    def test_roundtrip(self, tmp_path):
        runner = tmp_path / "runner.py"
        runner.write_text(RUNNER)
        backend = ExternalProcessBackend([sys.executable, str(runner)])
        assert backend.classify_quadrant(solid(256), "q") == 0.625
        result = backend.segment_street(solid(64), "img")
        assert len(result) == 1
        assert result.detections[0].class_name == "short_wall"

    def test_failing_command_is_backend_error(self):
        backend = ExternalProcessBackend([sys.executable, "-c", "raise SystemExit(3)"])
        with pytest.raises(BackendError):
            backend.classify_quadrant(solid(256), "q")

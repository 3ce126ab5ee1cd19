"""Per-coordinate evidence aggregation: hit counts, the threshold decision,
and the combined spot probability.

A coordinate is positive when its four street-view headings together show
strictly more than T parkour-usable objects. The probability map
min(1, total / 2T) is calibrated so 0.5 falls exactly on that decision
boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

from .detectors import CLASS_NAMES, DetectionSet, SatelliteScore
from .errors import DomainError

DEFAULT_THRESHOLD = 20
DEFAULT_THETA_SAT = 0.5
DEFAULT_SAT_WEIGHT = 0.5

MODES = ("street_only", "prefilter", "weighted")


@dataclass(frozen=True)
class ClassCounts:
    short_wall: int = 0
    railing: int = 0
    stairs: int = 0

    def __post_init__(self):
        for name in CLASS_NAMES:
            if getattr(self, name) < 0:
                raise DomainError(f"negative count for {name}")

    @property
    def total(self) -> int:
        return self.short_wall + self.railing + self.stairs

    def as_dict(self) -> dict[str, int]:
        return {name: getattr(self, name) for name in CLASS_NAMES} | {"total": self.total}


@dataclass(frozen=True)
class SpotScore:
    counts: ClassCounts
    probability: float
    positive: bool
    mode: str
    sat: SatelliteScore | None = None


def count_hits(sets: list[DetectionSet]) -> ClassCounts:
    """Sum per-class detections across the four heading images.

    Headings without coverage contribute empty sets. Objects visible from
    two headings count twice; the survey never deduplicates across views.
    """
    if len(sets) != 4:
        raise DomainError(f"expected one detection set per heading (4), got {len(sets)}")
    totals = {name: 0 for name in CLASS_NAMES}
    for detection_set in sets:
        for name, n in detection_set.count_by_class().items():
            totals[name] += n
    return ClassCounts(**totals)


def decide(counts: ClassCounts, threshold: int = DEFAULT_THRESHOLD) -> bool:
    """Positive iff strictly more than `threshold` objects were counted."""
    if threshold < 0:
        raise DomainError(f"threshold must be >= 0, got {threshold}")
    return counts.total > threshold


def street_probability(counts: ClassCounts, threshold: int) -> float:
    return min(1.0, counts.total / (2 * threshold))


def combine(
    sat: SatelliteScore | None,
    counts: ClassCounts,
    mode: str = "street_only",
    threshold: int = DEFAULT_THRESHOLD,
    theta_sat: float = DEFAULT_THETA_SAT,
    sat_weight: float = DEFAULT_SAT_WEIGHT,
) -> SpotScore:
    """Fuse satellite and street evidence into one score.

    street_only ignores the satellite signal entirely (the default: street
    counts alone proved the most reliable). prefilter zeroes coordinates
    whose best quadrant probability falls below theta_sat. weighted blends
    both probabilities but still decides positivity from the count rule.
    """
    if mode not in MODES:
        raise DomainError(f"unknown combination mode {mode!r}, expected one of {MODES}")
    if threshold <= 0:
        raise DomainError(f"threshold must be > 0, got {threshold}")
    if not 0.0 <= theta_sat <= 1.0:
        raise DomainError(f"theta_sat {theta_sat} outside [0, 1]")
    if mode in ("prefilter", "weighted") and sat is None:
        raise DomainError(f"mode {mode!r} needs a satellite score")

    positive = decide(counts, threshold)
    street_prob = street_probability(counts, threshold)

    if mode == "street_only":
        probability = street_prob
    elif mode == "prefilter":
        if sat.max_prob < theta_sat:
            return SpotScore(counts=counts, probability=0.0, positive=False, mode=mode, sat=sat)
        probability = street_prob
    else:  # weighted
        if not 0.0 <= sat_weight <= 1.0:
            raise DomainError(f"sat_weight {sat_weight} outside [0, 1]")
        probability = sat_weight * sat.max_prob + (1 - sat_weight) * street_prob

    return SpotScore(counts=counts, probability=probability, positive=positive, mode=mode, sat=sat)

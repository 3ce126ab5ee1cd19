"""Evaluation arithmetic for detector backends against annotation ground truth."""

from __future__ import annotations

from dataclasses import dataclass

from .annotations import AnnotatedImage
from .detectors import CLASS_NAMES, DetectionSet
from .errors import DomainError


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise DomainError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total

    @property
    def precision(self) -> float | None:
        if self.tp + self.fp == 0:
            return None
        return self.tp / (self.tp + self.fp)

    @property
    def recall(self) -> float | None:
        if self.tp + self.fn == 0:
            return None
        return self.tp / (self.tp + self.fn)

    def as_dict(self) -> dict:
        return {
            "tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
        }


def confusion(preds: list[bool], labels: list[bool]) -> ConfusionMatrix:
    """Standard 2x2 counts from paired boolean predictions and labels."""
    if len(preds) != len(labels):
        raise DomainError(f"length mismatch: {len(preds)} predictions vs {len(labels)} labels")
    if not preds:
        raise DomainError("need at least one prediction")
    tp = fp = tn = fn = 0
    for pred, label in zip(preds, labels):
        if pred and label:
            tp += 1
        elif pred and not label:
            fp += 1
        elif not pred and label:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def count_match_score(pred: DetectionSet, truth: AnnotatedImage) -> dict[str, dict[str, int]]:
    """Per-class count deltas between predicted detections and ground truth.

    The survey decision consumes only counts, so count agreement (not IoU)
    is the metric that matters downstream. signed = predicted - truth.
    """
    if pred.provenance != truth.filename:
        raise DomainError(
            f"provenance mismatch: predictions for {pred.provenance!r} "
            f"vs truth for {truth.filename!r}"
        )
    pred_counts = pred.count_by_class()
    truth_counts = {name: 0 for name in CLASS_NAMES}
    for region in truth.regions:
        if region.class_label in truth_counts:
            truth_counts[region.class_label] += 1
    return {
        name: {
            "signed": pred_counts[name] - truth_counts[name],
            "abs": abs(pred_counts[name] - truth_counts[name]),
        }
        for name in CLASS_NAMES
    }

import random

import pytest
from hypothesis import given, strategies as st

from spotfinder.annotations import AnnotatedImage, Region, parse_via_file, to_detection_set
from spotfinder.detectors import Detection, DetectionSet
from spotfinder.errors import DomainError
from spotfinder.metrics import ConfusionMatrix, confusion, count_match_score

from test_annotations import FIXTURE


class TestConfusion:
    def test_perfect_agreement(self):
        matrix = confusion([True] * 5, [True] * 5)
        assert matrix.tp == 5
        assert matrix.accuracy == 1.0

    def test_total_disagreement(self):
        matrix = confusion([True, False], [False, True])
        assert matrix.accuracy == 0.0

    def test_eighty_percent_toy_set(self):
        # 8 agreements out of 10; the trained model's headline accuracy at
        # toy scale.
        preds = [True, True, True, True, False, False, False, False, True, False]
        labels = [True, True, True, True, False, False, False, False, False, True]
        matrix = confusion(preds, labels)
        assert matrix.accuracy == pytest.approx(0.8)
        assert matrix.total == 10

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            confusion([True], [True, False])

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            confusion([], [])

    def test_precision_recall_edges(self):
        matrix = confusion([False, False], [True, False])
        assert matrix.precision is None
        assert matrix.recall == 0.0
        matrix = confusion([True, False], [False, False])
        assert matrix.recall is None

    @given(pairs=st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=50))
    def test_counts_sum_to_length(self, pairs):
        preds, labels = zip(*pairs)
        matrix = confusion(list(preds), list(labels))
        assert matrix.total == len(pairs)

    @given(pairs=st.lists(st.tuples(st.booleans(), st.booleans()), min_size=2, max_size=50),
           seed=st.integers(min_value=0, max_value=2**16))
    def test_accuracy_permutation_invariant(self, pairs, seed):
        preds, labels = map(list, zip(*pairs))
        matrix = confusion(preds, labels)
        order = list(range(len(pairs)))
        random.Random(seed).shuffle(order)
        shuffled = confusion([preds[i] for i in order], [labels[i] for i in order])
        assert shuffled.accuracy == matrix.accuracy

    def test_negative_counts_rejected(self):
        with pytest.raises(DomainError):
            ConfusionMatrix(tp=-1)


def triangle(class_name):
    return Detection(class_name=class_name, confidence=1.0,
                     polygon=((0, 0), (4, 0), (4, 4)))


class TestCountMatchScore:
    def test_fixture_replay_has_zero_deltas(self):
        for image in parse_via_file(FIXTURE):
            deltas = count_match_score(to_detection_set(image), image)
            assert all(d == {"signed": 0, "abs": 0} for d in deltas.values())

    def test_empty_prediction_vs_five_regions(self):
        truth = AnnotatedImage(filename="x.jpg", regions=tuple(
            Region(xs=(0, 4, 4), ys=(0, 0, 4), class_label=label)
            for label in ("short_wall", "short_wall", "railing", "stairs", "stairs")
        ))
        pred = DetectionSet(provenance="x.jpg")
        deltas = count_match_score(pred, truth)
        assert sum(d["abs"] for d in deltas.values()) == 5
        assert deltas["short_wall"]["signed"] == -2

    def test_one_extra_railing(self):
        truth = AnnotatedImage(filename="x.jpg", regions=(
            Region(xs=(0, 4, 4), ys=(0, 0, 4), class_label="railing"),
        ))
        pred = DetectionSet(provenance="x.jpg",
                            detections=(triangle("railing"), triangle("railing")))
        deltas = count_match_score(pred, truth)
        assert deltas["railing"] == {"signed": 1, "abs": 1}

    def test_provenance_mismatch(self):
        truth = AnnotatedImage(filename="a.jpg")
        pred = DetectionSet(provenance="b.jpg")
        with pytest.raises(DomainError):
            count_match_score(pred, truth)

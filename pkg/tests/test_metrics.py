import random

import pytest

from dmd_switcher import metrics
from dmd_switcher.errors import EmptyInputError
from dmd_switcher.models import ConfusionCounts


def test_confusion_counts_fall_as_positive():
    counts = metrics.confusion([1, 1, 0, 0, 1], [1, 0, 0, 1, 1])
    assert counts == ConfusionCounts(tp=2, fp=1, tn=1, fn=1)
    assert counts.total == 5


def test_f1_and_accuracy():
    counts = ConfusionCounts(tp=2, fp=1, tn=1, fn=1)
    assert metrics.f1_score(counts) == pytest.approx(4 / 6)
    assert metrics.accuracy(counts) == pytest.approx(3 / 5)


def test_f1_without_positives_is_zero():
    assert metrics.f1_score(ConfusionCounts(tn=4)) == 0.0


def test_accuracy_of_nothing_raises():
    with pytest.raises(EmptyInputError):
        metrics.accuracy(ConfusionCounts())


def test_confusion_rejects_length_mismatch():
    with pytest.raises(ValueError):
        metrics.confusion([1, 0], [1])


@pytest.mark.parametrize(
    "n, fraction, expected",
    [(10, 0.0, 0), (10, 0.1, 1), (10, 0.7, 7), (106, 0.6, 64), (7, 0.5, 4), (3, 1.0, 3), (0, 0.5, 0)],
)
def test_deferred_count_is_ceiling(n, fraction, expected):
    assert metrics.deferred_count(n, fraction) == expected


def _brute_force_f1(pairs):
    tp = sum(1 for p, t in pairs if p == 1 and t == 1)
    fp = sum(1 for p, t in pairs if p == 1 and t == 0)
    fn = sum(1 for p, t in pairs if p == 0 and t == 1)
    return 0.0 if 2 * tp + fp + fn == 0 else 2 * tp / (2 * tp + fp + fn)


def test_f1_matches_direct_counting_and_ignores_order():
    rng = random.Random(2024)
    for _ in range(50):
        n = rng.randint(0, 1000)
        pairs = [(rng.randint(0, 1), rng.randint(0, 1)) for _ in range(n)]
        f1 = metrics.f1_score(metrics.confusion_from_pairs(pairs))
        assert f1 == pytest.approx(_brute_force_f1(pairs), abs=1e-12)
        shuffled = list(pairs)
        rng.shuffle(shuffled)
        assert metrics.f1_score(metrics.confusion_from_pairs(shuffled)) == f1

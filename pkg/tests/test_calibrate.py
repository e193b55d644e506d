import numpy as np
import pytest

from dmd_switcher import calibrate
from dmd_switcher.config import MlpArchitecture
from dmd_switcher.errors import DimensionMismatchError, EmptyInputError, SchemaViolationError
from dmd_switcher.metrics import confusion, f1_score
from dmd_switcher.models import ScoredItem
from dmd_switcher.rng import SplitMix64
from dmd_switcher.switcher import network


def _random_items(rng: SplitMix64, n: int, coarse: bool = True):
    items = []
    for i in range(n):
        prob = rng.random()
        if coarse:
            # coarse probabilities force ties that only record_id can break
            prob = max(round(prob, 1), 0.05)
        items.append(
            ScoredItem(
                record_id=f"id-{int(rng.random() * 1e9):09d}-{i}",
                alignment_prob=prob,
                small_pred=int(rng.random() < 0.5),
                large_pred=int(rng.random() < 0.5),
                true_label=int(rng.random() < 0.5),
                small_prob=rng.random(),
            )
        )
    return items


def _oracle(items, bucket_count):
    """Materialise every deferred set explicitly and pick the best by exhaustive search."""
    n = len(items)
    ranked = sorted(items, key=lambda item: (item.alignment_prob, item.record_id))
    labels = [item.true_label for item in items]
    rows = []
    for k in range(1, bucket_count + 1):
        count = -(-k * n // bucket_count)
        deferred = {item.record_id for item in ranked[:count]}
        finals = [item.large_pred if item.record_id in deferred else item.small_pred for item in items]
        rows.append((k / bucket_count, f1_score(confusion(finals, labels)), count, deferred))
    best = rows[0]
    for row in rows[1:]:
        if row[1] > best[1]:
            best = row
    return rows, best


def test_curve_and_policy_match_brute_force_oracle():
    rng = SplitMix64(77)
    for trial in range(100):
        n = 1 + int(rng.random() * 200)
        bucket_count = 1 + int(rng.random() * 20)
        items = _random_items(rng, n, coarse=trial % 2 == 0)
        rows, best = _oracle(items, bucket_count)

        curve = calibrate.build_curve(items, bucket_count)
        assert [(p.fraction, p.combined_f1, p.deferred_count) for p in curve.points] == [r[:3] for r in rows]

        policy = calibrate.select_policy(curve, items)
        assert policy.deferred_fraction == best[0]
        chosen = {item.record_id for item in items if policy.defers(item.alignment_prob, item.record_id)}
        assert chosen == best[3]


def test_endpoints_equal_single_model_f1():
    rng = SplitMix64(5)
    for _ in range(1000):
        items = _random_items(rng, 1 + int(rng.random() * 30))
        labels = [item.true_label for item in items]
        small_f1 = f1_score(confusion([item.small_pred for item in items], labels))
        large_f1 = f1_score(confusion([item.large_pred for item in items], labels))
        assert calibrate.combined_f1_at_fraction(items, 0.0) == small_f1
        assert calibrate.combined_f1_at_fraction(items, 1.0) == large_f1


def _complementary_items(n: int = 100, split: int = 40):
    items = []
    for i in range(n):
        label = i % 2
        small, large = (1 - label, label) if i < split else (label, 1 - label)
        items.append(
            ScoredItem(record_id=f"r{i:03d}", alignment_prob=(i + 1) / (n + 1), small_pred=small,
                       large_pred=large, true_label=label, small_prob=0.9 if small else 0.1)
        )
    return items


def test_known_peak_is_selected():
    items = _complementary_items()
    curve = calibrate.build_curve(items, 10)
    policy = calibrate.select_policy(curve, items)
    assert policy.deferred_fraction == pytest.approx(0.4)
    assert policy.probability_cutoff == pytest.approx(40 / 101)
    assert policy.cutoff_record_id == "r039"
    assert curve.points[3].combined_f1 == 1.0
    assert policy.provenance["peak_f1"] == 1.0


def test_flat_curve_picks_smallest_fraction():
    items = [
        ScoredItem(record_id=f"r{i}", alignment_prob=0.5, small_pred=i % 2, large_pred=i % 2, true_label=1)
        for i in range(20)
    ]
    curve = calibrate.build_curve(items, 10)
    assert len({p.combined_f1 for p in curve.points}) == 1
    assert calibrate.select_policy(curve, items).deferred_fraction == pytest.approx(0.1)


def test_single_bucket():
    items = _complementary_items(10, 4)
    curve = calibrate.build_curve(items, 1)
    assert [(p.fraction, p.deferred_count) for p in curve.points] == [(1.0, 10)]


def test_bucket_counts_use_ceiling():
    items = _complementary_items(7, 3)
    counts = [p.deferred_count for p in calibrate.build_curve(items, 10).points]
    assert counts == [1, 2, 3, 3, 4, 5, 5, 6, 7, 7]


def test_empty_items():
    with pytest.raises(EmptyInputError):
        calibrate.build_curve([], 10)
    with pytest.raises(EmptyInputError):
        calibrate.combined_f1_at_fraction([], 0.5)


def test_uncertainty_baseline_defers_least_confident_first():
    items = [
        ScoredItem(record_id="a", alignment_prob=0.9, small_pred=1, large_pred=1, true_label=1, small_prob=0.99),
        ScoredItem(record_id="b", alignment_prob=0.8, small_pred=1, large_pred=0, true_label=0, small_prob=0.55),
        ScoredItem(record_id="c", alignment_prob=0.7, small_pred=0, large_pred=0, true_label=0, small_prob=0.3),
        ScoredItem(record_id="d", alignment_prob=0.1, small_pred=0, large_pred=1, true_label=1, small_prob=0.05),
    ]
    assert [item.record_id for item in calibrate.uncertainty_order(items)] == ["b", "c", "d", "a"]
    assert calibrate.uncertainty_rank(items, 0.25) == {"b"}
    # deferring b fixes one false positive; d stays a false negative
    assert calibrate.uncertainty_f1_at_fraction(items, 0.25) == pytest.approx(2 / 3)
    assert calibrate.combined_f1_at_fraction(items, 0.25) == pytest.approx(0.8)
    assert calibrate.build_uncertainty_curve(items, 4).points[0].deferred_count == 1


def test_uncertainty_needs_small_probabilities():
    items = [ScoredItem(record_id="a", alignment_prob=0.5, small_pred=1, large_pred=1, true_label=1)]
    with pytest.raises(SchemaViolationError):
        calibrate.uncertainty_order(items)


def test_small_only_point():
    items = _complementary_items(10, 4)
    point = calibrate.small_only_point(items)
    assert point.fraction == 0.0 and point.deferred_count == 0
    assert point.combined_f1 == calibrate.combined_f1_at_fraction(items, 0.0)


def test_score_items_uses_switcher_probabilities():
    model = network.init_model(MlpArchitecture(input_dim=3, hidden_dims=[4]), seed=1)
    inputs = [
        calibrate.ScoringInput(record_id=f"r{i}", features=[float(i), 1.0, -1.0], small_pred=1, large_pred=0,
                               true_label=1, small_prob=0.8)
        for i in range(3)
    ]
    items = calibrate.score_items(model, inputs)
    assert [item.alignment_prob for item in items] == [
        network.predict_alignment(model, entry.features) for entry in inputs
    ]
    bad = [calibrate.ScoringInput(record_id="x", features=[1.0], small_pred=1, large_pred=1, true_label=1)]
    with pytest.raises(DimensionMismatchError):
        calibrate.score_items(model, bad)

"""Contingency, optimal matching, merge-then-score, and dataset metrics.

Every numeric expectation here is derived by hand from small tables or by
a brute-force matcher over permutations, never from the code under test.
"""

from itertools import permutations

import numpy as np
import pytest

from walkcut.metrics import (
    IGNORE_LABEL,
    compute_metrics,
    contingency,
    evaluate_dataset,
    hungarian_match,
    oracle_merge,
)


def table_from_counts(counts):
    """Materialize pred/gt label arrays realizing a K x C contingency table."""
    counts = np.asarray(counts)
    pred, gt = [], []
    for i in range(counts.shape[0]):
        for j in range(counts.shape[1]):
            pred.extend([i] * counts[i, j])
            gt.extend([j] * counts[i, j])
    return np.array(pred), np.array(gt)


def brute_force_total(counts):
    k, c = counts.shape
    if k <= c:
        return max(
            sum(counts[i, perm[i]] for i in range(k)) for perm in permutations(range(c), k)
        )
    return max(
        sum(counts[perm[j], j] for j in range(c)) for perm in permutations(range(k), c)
    )


def matched_total(table, match):
    row_of = {int(p): i for i, p in enumerate(table.pred_ids)}
    col_of = {int(g): j for j, g in enumerate(table.gt_ids)}
    return sum(table.counts[row_of[p], col_of[g]] for p, g in match.pairs)


def test_contingency_counts_and_ids():
    pred = np.array([[0, 0, 2], [2, 2, 5]])
    gt = np.array([[1, 1, 1], [3, 3, 3]])
    t = contingency(pred, gt)
    np.testing.assert_array_equal(t.pred_ids, [0, 2, 5])
    np.testing.assert_array_equal(t.gt_ids, [1, 3])
    np.testing.assert_array_equal(t.counts, [[2, 0], [1, 2], [0, 1]])
    assert t.ignore_count == 0
    np.testing.assert_array_equal(t.pred_sizes, [2, 3, 1])
    np.testing.assert_array_equal(t.gt_sizes, [3, 3])


def test_contingency_excludes_ignore():
    pred = np.array([0, 1, 1, 2])
    gt = np.array([IGNORE_LABEL, 3, IGNORE_LABEL, 3])
    t = contingency(pred, gt)
    np.testing.assert_array_equal(t.pred_ids, [1, 2])
    np.testing.assert_array_equal(t.gt_ids, [3])
    np.testing.assert_array_equal(t.counts, [[1], [1]])
    assert t.ignore_count == 2


def test_contingency_custom_ignore_label():
    pred = np.array([0, 1])
    gt = np.array([0, 9])
    t = contingency(pred, gt, ignore_label=9)
    np.testing.assert_array_equal(t.gt_ids, [0])
    assert t.ignore_count == 1


def test_contingency_all_ignored_is_empty():
    t = contingency(np.zeros(5, dtype=int), np.full(5, IGNORE_LABEL))
    assert t.counts.shape == (0, 0)
    assert t.ignore_count == 5


def test_contingency_shape_mismatch():
    with pytest.raises(ValueError):
        contingency(np.zeros((2, 2)), np.zeros((2, 3)))


def test_hungarian_fixed_table():
    # optimal total is 10 + 6 + 7 = 23 via 0->0, 1->2, 2->1; the greedy
    # diagonal 10 + 5 + 1 = 16 is a trap
    pred, gt = table_from_counts([[10, 0, 0], [0, 5, 6], [0, 7, 1]])
    t = contingency(pred, gt)
    m = hungarian_match(t)
    assert set(m.pairs) == {(0, 0), (1, 2), (2, 1)}
    assert m.unmatched_preds == []
    assert matched_total(t, m) == 23


def test_hungarian_matches_brute_force():
    rng = np.random.default_rng(123)
    for trial in range(100):
        k = int(rng.integers(1, 6))
        c = int(rng.integers(1, 6))
        counts = rng.integers(0, 20, size=(k, c))
        counts.ravel()[rng.integers(0, k * c)] += 5  # avoid all-zero tables
        pred, gt = table_from_counts(counts)
        if pred.size == 0:
            continue
        t = contingency(pred, gt)
        m = hungarian_match(t)
        # reconstruct the realized table, which may drop empty rows/cols
        want = brute_force_total(t.counts)
        assert matched_total(t, m) == want, f"trial {trial}"
        assert len(m.pairs) == min(t.counts.shape)
        assert len(m.unmatched_preds) == max(0, t.counts.shape[0] - t.counts.shape[1])


def test_single_segment_two_equal_classes():
    # one predicted segment over a 50/50 ground truth: the matched class
    # scores IoU 1/2, the other 0 -> accuracy 1/2, mIoU 1/4, macro F1 1/3
    pred = np.zeros(100, dtype=int)
    gt = np.repeat([0, 1], 50)
    t = contingency(pred, gt)
    rep = compute_metrics(t, hungarian_match(t))
    assert abs(rep.accuracy - 0.5) < 1e-12
    assert abs(rep.miou - 0.25) < 1e-12
    assert abs(rep.f1 - 1.0 / 3.0) < 1e-12


def test_unmatched_segments_count_as_false_negatives():
    pred = np.array([0, 0, 1, 2])
    gt = np.zeros(4, dtype=int)
    t = contingency(pred, gt)
    m = hungarian_match(t)
    assert len(m.pairs) == 1
    assert set(m.unmatched_preds) == {1, 2}
    rep = compute_metrics(t, m)
    assert abs(rep.accuracy - 0.5) < 1e-12  # 2 of 4 pixels in the matched segment
    assert abs(rep.miou - 0.5) < 1e-12  # tp=2, fp=0, fn=2
    assert rep.per_class[0] == {"tp": 2, "fp": 0, "fn": 2, "iou": 0.5, "f1": 2 * 2 / (4 + 0 + 2)}


def test_compute_metrics_rejects_empty():
    t = contingency(np.zeros(3, dtype=int), np.full(3, IGNORE_LABEL))
    with pytest.raises(ValueError):
        compute_metrics(t, hungarian_match(t))


def test_perfect_prediction_scores_one():
    rng = np.random.default_rng(5)
    gt = rng.integers(0, 4, size=(20, 20))
    t = contingency(gt, gt)
    rep = compute_metrics(t, hungarian_match(t))
    assert rep.accuracy == 1.0 and rep.miou == 1.0 and rep.f1 == 1.0


def test_oracle_merge_plurality_and_tie():
    # segment 0: 3 votes for class 7, 1 for class 2 -> 7
    pred = np.array([0, 0, 0, 0])
    gt = np.array([7, 7, 7, 2])
    np.testing.assert_array_equal(oracle_merge(pred, gt), [7, 7, 7, 7])
    # exact tie 2-2 goes to the lower class id
    gt_tie = np.array([7, 7, 2, 2])
    np.testing.assert_array_equal(oracle_merge(pred, gt_tie), [2, 2, 2, 2])


def test_oracle_merge_ignore_only_segments_stay_fresh():
    pred = np.array([0, 0, 1])
    gt = np.array([IGNORE_LABEL, IGNORE_LABEL, 2])
    merged = oracle_merge(pred, gt)
    # segment 1 takes class 2; segment 0 saw only ignored pixels and gets a
    # fresh label above every class id
    assert merged[2] == 2
    assert merged[0] == merged[1] == 3


def test_oracle_merge_heals_oversegmentation():
    # four quadrant segments over a two-class half split
    pred = np.zeros((4, 4), dtype=int)
    pred[:2, 2:] = 1
    pred[2:, :2] = 2
    pred[2:, 2:] = 3
    gt = np.zeros((4, 4), dtype=int)
    gt[:, 2:] = 1
    merged = oracle_merge(pred, gt)
    np.testing.assert_array_equal(merged, gt)
    rep = evaluate_dataset([(pred, gt)], strategy="oracle_merged")
    assert rep.accuracy == 1.0 and rep.miou == 1.0
    plain = evaluate_dataset([(pred, gt)], strategy="global")
    assert plain.accuracy < 1.0


def test_oracle_merge_shape_mismatch():
    with pytest.raises(ValueError):
        oracle_merge(np.zeros((2, 2)), np.zeros(4))


def weighted_fixture():
    # image A: 100 pixels, perfect; image B: 10000 pixels, one segment over
    # a 60/40 class split
    pred_a = np.zeros((10, 10), dtype=int)
    gt_a = np.zeros((10, 10), dtype=int)
    pred_b = np.zeros((100, 100), dtype=int)
    gt_b = np.zeros((100, 100), dtype=int)
    gt_b[:, 60:] = 1
    return [(pred_a, gt_a), (pred_b, gt_b)]


def test_strategy_weighting_per_image_vs_global():
    pairs = weighted_fixture()
    per_image = evaluate_dataset(pairs, strategy="per_image")
    glob = evaluate_dataset(pairs, strategy="global")
    # per-image: mean(1.0, 0.6); global pools pixels: (100 + 6000) / 10100
    assert abs(per_image.accuracy - 0.8) < 1e-12
    assert abs(glob.accuracy - 6100 / 10100) < 1e-12
    # mIoU by the same arithmetic: B has IoU .6 and 0 -> mean .3
    assert abs(per_image.miou - (1.0 + 0.3) / 2) < 1e-12
    # global pools per class: class0 6100/10100, class1 0
    assert abs(glob.miou - (6100 / 10100) / 2) < 1e-12
    assert per_image.n_images == 2 and glob.n_images == 2
    assert per_image.strategy == "per_image" and glob.strategy == "global"


def test_evaluate_dataset_skips_fully_ignored_images():
    pairs = weighted_fixture()
    pairs.append((np.zeros((3, 3), dtype=int), np.full((3, 3), IGNORE_LABEL)))
    rep = evaluate_dataset(pairs, strategy="per_image")
    assert rep.n_images == 2
    assert rep.n_skipped == 1


def test_evaluate_dataset_errors():
    with pytest.raises(ValueError):
        evaluate_dataset([], strategy="nope")
    with pytest.raises(ValueError):
        evaluate_dataset([], strategy="global")
    ignored = [(np.zeros(4, dtype=int), np.full(4, IGNORE_LABEL))]
    with pytest.raises(ValueError):
        evaluate_dataset(ignored, strategy="per_image")


def test_report_json_dict():
    rep = evaluate_dataset(weighted_fixture(), strategy="global")
    doc = rep.to_json_dict()
    assert doc["strategy"] == "global"
    assert abs(doc["accuracy"] - 6100 / 10100) < 1e-12
    assert doc["n_images"] == 2
    assert "per_class" in doc

import itertools

import numpy as np
import pytest

from covertlink.errors import InputError
from covertlink.metrics import auc, best_f1_threshold, binary_metrics


def brute_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    total = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg)
    return total / (len(pos) * len(neg))


def exhaustive_best_f1(probs, labels):
    """Every cut of the sorted scores, as a predicted-positive set."""
    best = 0.0
    labels = np.asarray(labels, bool)
    for t in sorted(set(probs)) + [np.inf]:
        pred = np.asarray(probs) >= t
        tp = np.sum(pred & labels)
        fp = np.sum(pred & ~labels)
        fn = np.sum(~pred & labels)
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn)
        best = max(best, 2 * p * r / (p + r) if p + r else 0.0)
    return best


def test_counts_example():
    probs = [0.9] * 8 + [0.8] * 2 + [0.1] * 2 + [0.2] * 8
    labels = [1] * 8 + [0] * 2 + [1] * 2 + [0] * 8
    m = binary_metrics(probs, labels, 0.5)
    assert (m.counts.tp, m.counts.fp, m.counts.fn, m.counts.tn) == (8, 2, 2, 8)
    assert m.precision == pytest.approx(0.8) and m.recall == pytest.approx(0.8) and m.f1 == pytest.approx(0.8)


def test_all_negative_predictions():
    m = binary_metrics([0.1, 0.2], [1, 0], 0.5)
    assert m.precision == 0 and m.precision_undefined
    assert m.recall == 0 and m.f1 == 0


def test_hand_count_example():
    m = binary_metrics([0.9, 0.4, 0.5, 0.1], [1, 1, 0, 0], 0.5)
    assert (m.counts.tp, m.counts.fn, m.counts.fp, m.counts.tn) == (1, 1, 1, 1)
    assert m.precision == m.recall == m.f1 == 0.5


def test_threshold_tie_counts_positive():
    assert binary_metrics([0.5], [1], 0.5).counts.tp == 1


def test_length_mismatch():
    with pytest.raises(InputError):
        binary_metrics([0.1], [1, 0])
    with pytest.raises(InputError):
        auc([0.1, 0.2], [1])


def test_auc_examples():
    assert auc([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0]) == 1.0
    assert auc([0.3] * 6, [1, 0, 1, 0, 1, 0]) == 0.5
    assert auc([0.9, 0.4, 0.5, 0.1], [1, 1, 0, 0]) == 0.75
    assert brute_auc([0.9, 0.4, 0.5, 0.1], [1, 1, 0, 0]) == 0.75


def test_auc_single_class():
    with pytest.raises(InputError):
        auc([0.1, 0.2], [1, 1])


def test_auc_equals_brute_force_with_ties(rng):
    for _ in range(200):
        size = int(rng.integers(2, 300))
        scores = np.round(rng.random(size), int(rng.integers(1, 4)))  # rounding injects ties
        labels = rng.random(size) < 0.4
        labels[0], labels[1] = True, False
        assert auc(scores, labels) == brute_auc(scores.tolist(), labels.tolist())


def test_auc_monotone_invariance(rng):
    for _ in range(50):
        scores = rng.random(100)
        labels = rng.random(100) < 0.5
        labels[:2] = [True, False]
        base = auc(scores, labels)
        assert auc(2 * scores + 1, labels) == base
        assert auc(scores ** 3, labels) == base


def test_counts_sum(rng):
    for _ in range(20):
        p = rng.random(50)
        y = rng.random(50) < 0.5
        c = binary_metrics(p, y, rng.random()).counts
        assert c.tp + c.fp + c.tn + c.fn == 50


def test_best_f1_separated():
    t, f1 = best_f1_threshold([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
    assert f1 == 1.0 and t == pytest.approx(0.5)


def test_best_f1_all_equal():
    t, f1 = best_f1_threshold([0.4, 0.4, 0.4], [1, 0, 0])
    assert t == 0.4
    assert f1 == pytest.approx(0.5)  # all-positive: P=1/3, R=1


def test_best_f1_worked_example_matches_scan():
    probs, labels = [0.9, 0.4, 0.5, 0.1], [1, 1, 0, 0]
    t, f1 = best_f1_threshold(probs, labels)
    # predicting {0.9, 0.5, 0.4} positive: P=2/3, R=1 -> F1=0.8
    assert f1 == pytest.approx(exhaustive_best_f1(probs, labels))
    assert f1 == pytest.approx(0.8)
    assert 0.1 < t <= 0.4


def test_best_f1_matches_exhaustive(rng):
    for _ in range(50):
        p = np.round(rng.random(40), 2)
        y = rng.random(40) < 0.5
        y[:2] = [True, False]
        assert best_f1_threshold(p, y)[1] == pytest.approx(exhaustive_best_f1(p, y))

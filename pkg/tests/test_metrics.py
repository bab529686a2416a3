import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wsgat.errors import UndefinedMetricError
from wsgat.metrics import roc_auc, f1_score, mean_absolute_error


def auc_pairwise_oracle(scores, labels):
    """Brute-force over all (pos, neg) pairs with half credit for ties."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = sum(1.0 if p > q else (0.5 if p == q else 0.0) for p in pos for q in neg)
    return wins / (len(pos) * len(neg))


def f1_oracle(pred, labels):
    tp = sum(1 for p, y in zip(pred, labels) if p == 1 and y == 1)
    fp = sum(1 for p, y in zip(pred, labels) if p == 1 and y == 0)
    fn = sum(1 for p, y in zip(pred, labels) if p == 0 and y == 1)
    return 0.0 if 2 * tp + fp + fn == 0 else 2 * tp / (2 * tp + fp + fn)


def test_auc_perfect_ranking():
    assert roc_auc([0.9, 0.8, 0.3], [1, 1, 0]) == 1.0


def test_auc_half_from_pairwise_counting():
    # of the two (pos, neg) pairs exactly one is ranked correctly
    assert roc_auc([0.9, 0.2, 0.5], [1, 1, 0]) == 0.5


def test_auc_all_ties():
    assert roc_auc([0.4, 0.4, 0.4, 0.4], [1, 0, 1, 0]) == 0.5


def test_auc_single_class_undefined():
    with pytest.raises(UndefinedMetricError):
        roc_auc([0.1, 0.2], [1, 1])


def test_auc_matches_bruteforce_on_1000_instances():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(4, 40))
        scores = np.round(rng.standard_normal(n), 1)  # coarse grid forces ties
        labels = rng.integers(0, 2, n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        assert roc_auc(scores, labels) == auc_pairwise_oracle(scores, labels)


def test_auc_monotone_transform_invariance():
    rng = np.random.default_rng(1)
    scores = rng.standard_normal(60)
    labels = rng.integers(0, 2, 60)
    labels[:2] = [0, 1]
    base = roc_auc(scores, labels)
    assert roc_auc(np.exp(scores), labels) == base
    assert roc_auc(2.5 * scores - 7, labels) == base


def test_auc_complement_identity():
    rng = np.random.default_rng(2)
    scores = np.round(rng.standard_normal(40), 1)
    labels = rng.integers(0, 2, 40)
    labels[:2] = [0, 1]
    assert roc_auc(scores, labels) + roc_auc(scores, 1 - labels) == 1.0


def test_f1_perfect():
    assert f1_score([1, 0, 1], [1, 0, 1]) == 1.0


def test_f1_harmonic_mean():
    # precision 0.5, recall 1.0 -> 2/3
    assert f1_score([1, 1], [1, 0]) == pytest.approx(2 / 3)


def test_f1_zero_when_no_positive_anywhere():
    assert f1_score([0, 0], [0, 0]) == 0.0


def test_f1_all_positive_predictor_closed_form():
    # p = 0.8998 positive rate: F1 = 2p / (1 + p)
    n = 10000
    p = 0.8998
    labels = np.zeros(n, dtype=int)
    labels[: int(round(p * n))] = 1
    pred = np.ones(n, dtype=int)
    expect = 2 * p / (1 + p)
    assert f1_score(pred, labels) == pytest.approx(expect, abs=1e-4)
    assert expect == pytest.approx(0.9472, abs=1e-4)


def test_f1_matches_bruteforce_on_1000_instances():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        n = int(rng.integers(1, 30))
        pred = rng.integers(0, 2, n)
        labels = rng.integers(0, 2, n)
        assert f1_score(pred, labels) == f1_oracle(pred, labels)


def test_mae_identical():
    assert mean_absolute_error([1.0, 2.0], [1.0, 2.0]) == 0.0


def test_mae_simple():
    assert mean_absolute_error([1.0, 2.0], [0.0, 4.0]) == 1.5


def test_mae_length_mismatch():
    with pytest.raises(ValueError):
        mean_absolute_error([1.0], [1.0, 2.0])


def test_mae_matches_bruteforce_on_1000_instances():
    rng = np.random.default_rng(4)
    for _ in range(1000):
        n = int(rng.integers(1, 30))
        a, b = rng.standard_normal(n), rng.standard_normal(n)
        ref = sum(abs(x - y) for x, y in zip(a, b)) / n
        assert mean_absolute_error(a, b) == pytest.approx(ref, abs=1e-15)


@given(st.lists(st.tuples(st.floats(-10, 10), st.integers(0, 1)), min_size=2, max_size=50))
@settings(max_examples=300, deadline=None)
def test_auc_property_vs_oracle(pairs):
    scores = [s for s, _ in pairs]
    labels = [y for _, y in pairs]
    if len(set(labels)) < 2:
        labels[0] = 1 - labels[0]
    assert roc_auc(scores, labels) == auc_pairwise_oracle(scores, labels)

import itertools
import math

import numpy as np
import pytest

from recbench.bench_error import ArgumentError
from recbench.metrics import (ConfusionCounts, PredictionPair, RankedList,
                              confusion, is_relevant, mae, ndcg, ndcg_at_k,
                              precision_at_k, recall_at_k, rmse, roc_auc)


def test_accuracy():
    pairs = [PredictionPair(3.5, 4.0), PredictionPair(2.0, 1.0),
             PredictionPair(5.0, 5.0)]
    assert mae(pairs) == pytest.approx(0.5)
    assert rmse(pairs) == pytest.approx(math.sqrt(1.25 / 3))
    assert rmse([(4, 4)]) == 0
    assert rmse(pairs) >= mae(pairs)


def test_accuracy_errors():
    with pytest.raises(ArgumentError, match='no prediction pairs'):
        rmse([])
    with pytest.raises(ArgumentError, match='finite'):
        mae([(np.nan, 3.0)])


def test_precision_recall():
    recommended = ['A', 'B', 'C']
    relevant = {'A', 'C', 'D', 'E'}
    assert precision_at_k(recommended, relevant, 3) == pytest.approx(2 / 3)
    assert recall_at_k(recommended, relevant, 3) == pytest.approx(0.5)
    assert precision_at_k(recommended, relevant, 1) == 1.0
    # Fewer recommendations than k divide by the list length.
    assert precision_at_k(['A'], relevant, 10) == 1.0
    assert precision_at_k([], relevant, 10) == 0.0
    with pytest.raises(ArgumentError, match='empty'):
        recall_at_k(recommended, set(), 3)
    with pytest.raises(ArgumentError, match='at least 1'):
        precision_at_k(recommended, relevant, 0)


def test_ndcg_perfect_and_empty():
    assert ndcg(RankedList.from_grades([3, 2, 1, 0])) == pytest.approx(1.0)
    assert ndcg(RankedList.from_grades([0, 0, 0])) == 0.0
    with pytest.raises(ArgumentError, match='non-negative'):
        RankedList.from_grades([1, -1])


def test_ndcg_padding():
    ranked = RankedList((('a', 1), ('b', 0)), n=5)
    assert ranked.grades.tolist() == [1, 0, 0, 0, 0]
    assert ndcg(ranked) == pytest.approx(1.0)


def test_ndcg_at_k():
    relevant = {'A', 'C'}
    assert ndcg_at_k(['A', 'C', 'B'], relevant, 3) == pytest.approx(1.0)
    # An empty list earns nothing.
    assert ndcg_at_k([], relevant, 5) == 0.0
    # A short list is measured against every relevant item it could hold.
    assert ndcg_at_k(['A'], relevant, 5) == pytest.approx(
        1 / (1 + 1 / math.log2(3)))
    assert ndcg_at_k(['A'], {'A'}, 5) == 1.0
    assert ndcg_at_k(['B', 'A', 'C'], relevant, 1) == 0.0
    with pytest.raises(ArgumentError, match='at least 1'):
        ndcg_at_k(['A'], relevant, 0)
    with pytest.raises(ArgumentError, match='empty'):
        ndcg_at_k(['A'], set(), 3)


def test_roc_auc():
    assert roc_auc([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0]) == 1.0
    assert roc_auc([0.1, 0.2, 0.9, 0.8], [1, 1, 0, 0]) == 0.0
    assert roc_auc([0.5, 0.5], [1, 0]) == 0.5
    with pytest.raises(ArgumentError, match='both classes'):
        roc_auc([0.5, 0.6], [1, 1])


def test_confusion():
    counts = confusion([1, 1, 0, 0, 1], [1, 0, 0, 1, 1])
    assert counts == ConfusionCounts(tp=2, fp=1, tn=1, fn=1)
    assert counts.total == 5
    assert counts.tpr == pytest.approx(2 / 3)
    assert counts.fpr == pytest.approx(0.5)
    with pytest.raises(ArgumentError, match='length mismatch'):
        confusion([1], [1, 0])
    with pytest.raises(ArgumentError, match='0 or 1'):
        confusion([2], [1])


def test_is_relevant():
    assert is_relevant([3.5, 4.0, 5.0]).tolist() == [False, True, True]
    assert is_relevant([3.5, 4.0], threshold=3.5).tolist() == [True, True]


ORACLE_SEEDS = range(200)


def exact(value):
    return pytest.approx(value, rel=0, abs=1e-12)


def dcg(grades):
    return sum((2 ** g - 1) / math.log2(r + 2) for r, g in enumerate(grades))


def random_pairs(rng):
    n = int(rng.integers(1, 11))
    return rng.integers(1, 11, size=(n, 2)) / 2


@pytest.mark.parametrize('seed', ORACLE_SEEDS)
def test_mae_oracle(seed):
    pairs = random_pairs(np.random.default_rng(seed))
    expected = sum(abs(a - p) for p, a in pairs.tolist()) / len(pairs)
    assert mae(pairs) == exact(expected)


@pytest.mark.parametrize('seed', ORACLE_SEEDS)
def test_rmse_oracle(seed):
    pairs = random_pairs(np.random.default_rng(seed))
    expected = math.sqrt(sum((p - a) ** 2 for p, a in pairs.tolist())
                         / len(pairs))
    assert rmse(pairs) == exact(expected)
    assert rmse(pairs) >= mae(pairs) - 1e-12


def random_ranking(rng):
    universe = list(range(int(rng.integers(1, 7))))
    length = int(rng.integers(0, len(universe) + 1))
    recommended = rng.permutation(universe)[:length].tolist()
    n_relevant = int(rng.integers(1, len(universe) + 1))
    relevant = set(rng.choice(universe, n_relevant, replace=False).tolist())
    k = int(rng.integers(1, 8))
    return universe, recommended, relevant, k


@pytest.mark.parametrize('seed', ORACLE_SEEDS)
def test_precision_oracle(seed):
    _, recommended, relevant, k = random_ranking(np.random.default_rng(seed))
    top = recommended[:k]
    hits = len([item for item in top if item in relevant])
    expected = hits / len(top) if top else 0.0
    assert precision_at_k(recommended, relevant, k) == exact(expected)


@pytest.mark.parametrize('seed', ORACLE_SEEDS)
def test_recall_oracle(seed):
    _, recommended, relevant, k = random_ranking(np.random.default_rng(seed))
    hits = len(set(recommended[:k]) & relevant)
    assert recall_at_k(recommended, relevant, k) == exact(
        hits / len(relevant))


@pytest.mark.parametrize('seed', ORACLE_SEEDS)
def test_ndcg_oracle(seed):
    rng = np.random.default_rng(seed)
    grades = rng.integers(0, 4, size=rng.integers(1, 7)).tolist()
    # Ideal gain by trying every ordering.
    ideal = max(dcg(order) for order in itertools.permutations(grades))
    expected = dcg(grades) / ideal if ideal else 0.0
    assert ndcg(RankedList.from_grades(grades)) == exact(expected)


@pytest.mark.parametrize('seed', ORACLE_SEEDS)
def test_ndcg_at_k_oracle(seed):
    universe, recommended, relevant, k = random_ranking(
        np.random.default_rng(seed))
    ideal = max(dcg([float(item in relevant) for item in order[:k]])
                for order in itertools.permutations(universe))
    gain = dcg([float(item in relevant) for item in recommended[:k]])
    assert ndcg_at_k(recommended, relevant, k) == exact(gain / ideal)


@pytest.mark.parametrize('seed', ORACLE_SEEDS)
def test_roc_auc_oracle(seed):
    # Pairwise count of correctly ordered positive/negative pairs.
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 11))
    labels = rng.integers(0, 2, size=n)
    if labels.min() == labels.max():
        labels[0] = 1 - labels[0]
    scores = rng.integers(0, 4, size=n).astype(float)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = sum(1.0 if p > q else 0.5 if p == q else 0.0
               for p, q in itertools.product(pos, neg))
    expected = wins / (len(pos) * len(neg))
    assert roc_auc(scores, labels) == exact(expected)


@pytest.mark.parametrize('seed', ORACLE_SEEDS)
def test_confusion_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 11))
    predicted = rng.integers(0, 2, size=n).tolist()
    actual = rng.integers(0, 2, size=n).tolist()
    tally = {'tp': 0, 'fp': 0, 'tn': 0, 'fn': 0}
    for p, a in zip(predicted, actual):
        tally[('t' if p == a else 'f') + ('p' if p else 'n')] += 1
    counts = confusion(predicted, actual)
    assert counts == ConfusionCounts(**tally)
    assert counts.total == n
    if tally['tp'] + tally['fn']:
        assert counts.tpr == exact(tally['tp'] / (tally['tp'] + tally['fn']))
    else:
        assert math.isnan(counts.tpr)

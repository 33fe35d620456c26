'''
.. module:: recbench.metrics
    :synopsis: Accuracy and ranking metrics

All functions are pure and operate on plain sequences or numpy arrays.
Ratings are turned into binary relevance with :func:`is_relevant` using the
configurable threshold (4.0 by default).
'''
from collections import namedtuple
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .bench_error import ArgumentError
from .constants import DEFAULT_RELEVANCE_THRESHOLD

import logging
log = logging.getLogger(__name__)


PredictionPair = namedtuple('PredictionPair', 'predicted actual')


def _as_pairs(pairs, name):
    pairs = np.asarray(pairs, dtype=np.float64)
    if pairs.size == 0:
        raise ArgumentError(name, 'no prediction pairs')
    pairs = pairs.reshape(-1, 2)
    if not np.isfinite(pairs).all():
        raise ArgumentError(name, 'prediction pairs must be finite')
    return pairs[:, 0], pairs[:, 1]


def mae(pairs):
    '''
    Mean absolute error of (predicted, actual) pairs

    >>> mae([(1, 2), (3, 5)])
    1.5
    '''
    predicted, actual = _as_pairs(pairs, 'mae')
    return float(np.mean(np.abs(actual - predicted)))


def rmse(pairs):
    '''
    Root mean squared error of (predicted, actual) pairs

    >>> round(rmse([(1, 2), (3, 5)]), 4)
    1.5811
    '''
    predicted, actual = _as_pairs(pairs, 'rmse')
    return float(np.sqrt(np.mean((predicted - actual) ** 2)))


def _hits(recommended, relevant, k):
    if k < 1:
        raise ArgumentError('ranking', 'k must be at least 1')
    top = list(recommended)[:k]
    relevant = set(relevant)
    return sum(1 for item in top if item in relevant), len(top)


def precision_at_k(recommended, relevant, k):
    '''
    Share of the top `k` recommendations that are relevant

    The denominator is ``min(k, len(recommended))``. An empty recommendation
    list scores 0.

    >>> precision_at_k(['A', 'B', 'C'], {'A', 'C', 'D', 'E'}, 3)
    0.6666666666666666
    '''
    hits, n = _hits(recommended, relevant, k)
    if n == 0:
        return 0.0
    return hits / n


def recall_at_k(recommended, relevant, k):
    '''
    Share of the relevant items found in the top `k` recommendations

    >>> recall_at_k(['A', 'B', 'C'], {'A', 'C', 'D', 'E'}, 3)
    0.5
    '''
    relevant = set(relevant)
    if not relevant:
        raise ArgumentError('recall_at_k', 'relevant set is empty')
    hits, _ = _hits(recommended, relevant, k)
    return hits / len(relevant)


@dataclass(frozen=True)
class RankedList:
    '''
    Recommendation list as (item, relevance grade) entries in rank order

    Evaluation depth `n` defaults to the entry count. When `n` exceeds the
    entry count the list is padded with zero-relevance entries.
    '''
    entries: tuple
    n: int = None

    def __post_init__(self):
        entries = tuple((item, float(rel)) for item, rel in self.entries)
        object.__setattr__(self, 'entries', entries)
        if any(rel < 0 for _, rel in entries):
            raise ArgumentError('RankedList', 'relevance must be non-negative')
        if self.n is None:
            object.__setattr__(self, 'n', len(entries))
        elif self.n < 1:
            raise ArgumentError('RankedList', 'depth must be at least 1')

    @classmethod
    def from_grades(cls, grades, n=None):
        return cls(tuple(enumerate(grades)), n)

    @property
    def grades(self):
        grades = np.zeros(self.n)
        rel = np.array([r for _, r in self.entries[:self.n]], dtype=float)
        grades[:len(rel)] = rel
        return grades


def _dcg(grades):
    discount = np.log2(np.arange(2, len(grades) + 2))
    return float(np.sum((2.0 ** grades - 1) / discount))


def ndcg(ranked):
    '''
    Normalized discounted cumulative gain of a :class:`RankedList`

    The gain of the list is divided by the gain of the same entries sorted by
    decreasing relevance. A list without any relevant entry scores 0.

    >>> ndcg(RankedList.from_grades([1, 0]))
    1.0
    >>> round(ndcg(RankedList.from_grades([0, 1])), 4)
    0.6309
    '''
    ideal = np.sort([r for _, r in ranked.entries])[::-1][:ranked.n]
    ideal_grades = np.zeros(ranked.n)
    ideal_grades[:len(ideal)] = ideal
    z = _dcg(ideal_grades)
    if z == 0:
        return 0.0
    return _dcg(ranked.grades) / z


def ndcg_at_k(recommended, relevant, k):
    '''
    Binary nDCG of the first `k` recommendations

    Recommended items score 1 when they are in `relevant` and 0 otherwise.
    The ideal list holds ``min(len(relevant), k)`` relevant items, so a list
    shorter than `k` is not credited for relevant items it left out.

    >>> ndcg_at_k(['A', 'B'], {'A'}, 5)
    1.0
    >>> ndcg_at_k([], {'A'}, 5)
    0.0
    >>> round(ndcg_at_k(['B', 'A'], {'A', 'C'}, 5), 4)
    0.3869
    '''
    if k < 1:
        raise ArgumentError('ndcg_at_k', 'k must be at least 1')
    if not relevant:
        raise ArgumentError('ndcg_at_k', 'relevant set is empty')
    grades = np.array([float(item in relevant) for item in recommended[:k]])
    ideal = np.ones(min(len(relevant), k))
    return _dcg(grades) / _dcg(ideal)


def roc_auc(scores, labels):
    '''
    Area under the ROC curve

    Computed as the probability that a random positive outscores a random
    negative, with ties counting one half.

    >>> roc_auc([0.9, 0.6, 0.4], [1, 0, 1])
    0.5
    '''
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ArgumentError('roc_auc', 'scores and labels differ in length')
    positive = labels == 1
    n_pos = int(positive.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ArgumentError('roc_auc', 'labels must contain both classes')
    ranks = rankdata(scores)
    u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn

    @property
    def tpr(self):
        denom = self.tp + self.fn
        return self.tp / denom if denom else float('nan')

    @property
    def fpr(self):
        denom = self.fp + self.tn
        return self.fp / denom if denom else float('nan')


def confusion(predicted, actual):
    '''
    Tally binary predictions against binary outcomes

    >>> confusion([1, 0], [1, 0])
    ConfusionCounts(tp=1, fp=0, tn=1, fn=0)
    '''
    predicted = np.asarray(predicted)
    actual = np.asarray(actual)
    if len(predicted) != len(actual):
        raise ArgumentError('confusion', 'length mismatch (%d vs %d)'
                            % (len(predicted), len(actual)))
    if len(predicted) == 0:
        raise ArgumentError('confusion', 'no samples')
    for values in (predicted, actual):
        if not np.isin(values, (0, 1)).all():
            raise ArgumentError('confusion', 'labels must be 0 or 1')
    predicted = predicted == 1
    actual = actual == 1
    return ConfusionCounts(tp=int(np.sum(predicted & actual)),
                           fp=int(np.sum(predicted & ~actual)),
                           tn=int(np.sum(~predicted & ~actual)),
                           fn=int(np.sum(~predicted & actual)))


def is_relevant(values, threshold=DEFAULT_RELEVANCE_THRESHOLD):
    '''
    Binary relevance of ratings

    >>> is_relevant([3.5, 4.0, 5.0]).tolist()
    [False, True, True]
    '''
    return np.asarray(values, dtype=np.float64) >= threshold

'''
.. module:: recbench.baselines
    :synopsis: Damped global mean plus user and item bias predictor

The baseline is used directly as a predictor, to center ratings for the
Pearson-baseline similarity, as the bias part of the factorization models and
as the fallback when a neighborhood cannot score an item.
'''
from dataclasses import dataclass

import numpy as np

from .bench_error import ArgumentError
from .constants import DEFAULT_DAMPING

import logging
log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BaselineModel:
    '''
    Global mean `mu` plus per-ordinal biases

    `b_user` and `b_item` are indexed by the dense ordinals of the training
    set the model was fit on. Ordinals outside those arrays (including the
    -1 used for unknown entities) have a bias of zero.
    '''
    mu: float
    b_user: np.ndarray
    b_item: np.ndarray
    damping: float = DEFAULT_DAMPING

    def user_bias(self, users):
        return _lookup(self.b_user, users)

    def item_bias(self, items):
        return _lookup(self.b_item, items)


def _lookup(biases, ordinals):
    ordinals = np.asarray(ordinals, dtype=np.intp)
    known = (ordinals >= 0) & (ordinals < len(biases))
    return np.where(known, biases[np.where(known, ordinals, 0)]
                    if len(biases) else 0.0, 0.0)


def fit_baseline(train, damping=DEFAULT_DAMPING):
    '''
    Fit the damped baseline predictor

    Item biases are fit first against the global mean, then user biases are
    fit against the residual of the global mean and item bias. Each bias is
    a sum of residuals divided by ``damping + count``.

    Parameters
    ----------
    train : RatingsDataset
        Training ratings.
    damping : float
        Non-negative shrinkage constant added to every count.

    Raises
    ------
    ArgumentError
        If `train` is empty or `damping` is negative.
    '''
    if train.n_ratings == 0:
        raise ArgumentError('fit_baseline', 'training set is empty')
    if damping < 0:
        raise ArgumentError('fit_baseline', 'damping must be non-negative')

    mu = float(train.values.mean())
    residual = train.values - mu
    item_sums = np.bincount(train.items, weights=residual,
                            minlength=train.n_items)
    b_item = item_sums / (damping + train.item_counts)

    residual = residual - b_item[train.items]
    user_sums = np.bincount(train.users, weights=residual,
                            minlength=train.n_users)
    b_user = user_sums / (damping + train.user_counts)

    # A zero count with zero damping divides zero by zero.
    b_item = np.nan_to_num(b_item)
    b_user = np.nan_to_num(b_user)
    log.debug('baseline: mu=%.4f damping=%g', mu, damping)
    return BaselineModel(mu, b_user, b_item, float(damping))


def baseline_scores(model, users, items):
    '''
    Unclamped baseline estimate ``mu + b_u + b_i`` for ordinal arrays
    '''
    return model.mu + model.user_bias(users) + model.item_bias(items)


def predict_baseline(model, u, i, scale):
    '''
    Baseline prediction clamped to `scale`

    `u` and `i` are training ordinals (scalars or arrays). Unknown entities,
    marked by -1, contribute no bias.

    >>> m = BaselineModel(3.0, np.array([1.0]), np.array([1.5]))
    >>> from recbench.dataset import RatingScale
    >>> float(predict_baseline(m, 0, 0, RatingScale()))
    5.0
    >>> float(predict_baseline(m, -1, -1, RatingScale()))
    3.0
    '''
    return scale.clamp(baseline_scores(model, u, i))

'''
.. module:: recbench.factorization
    :synopsis: Latent factor models trained by ALS and by SGD

Three trainers are provided:

* :func:`als_fit` - alternating least squares with weighted-lambda
  regularization. Every row of the user (or item) factor matrix is the exact
  solution of its own ridge regression with a penalty of ``lam * n`` where
  ``n`` is the number of ratings in that row.
* :func:`sgd_fit` - the biased "Funk SVD" model trained by stochastic
  gradient descent over the ratings.
* :func:`svdpp_fit` - SVD++, which adds implicit item factors ``y_j`` summed
  over the items each user rated.

All models predict by :func:`mf_predict` (raw ids) or
:meth:`MfModel.predict_ordinals` (training ordinals). Users and items absent
from training take zero bias and zero factors.
'''
from dataclasses import dataclass

import numpy as np
import pandas as pd
from numba import njit
from scipy import linalg

from .baselines import BaselineModel, baseline_scores, fit_baseline
from .bench_error import ArgumentError, SolverError, TrainingDiverged
from .constants import DEFAULT_DAMPING
from .dataset import rating_matrix
from .util import make_rng

import logging
log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MfModel:
    '''
    Fitted factorization model

    Rows of `P` and `Q` are indexed by the training ordinals, whose raw ids
    are listed in `user_ids` and `item_ids`. When `baseline` is None the
    model has no bias terms and `mu` (the training mean) is only used for
    entities unseen in training.
    '''
    P: np.ndarray
    Q: np.ndarray
    baseline: BaselineModel
    mu: float
    scale: object
    user_ids: np.ndarray
    item_ids: np.ndarray

    @property
    def f(self):
        return self.P.shape[1]

    def _implicit(self, users):
        return 0.0

    def scores(self, users, items):
        '''
        Unclamped predictions for training ordinals (-1 marks unknown)
        '''
        users = np.atleast_1d(np.asarray(users, dtype=np.intp))
        items = np.atleast_1d(np.asarray(items, dtype=np.intp))
        known_u = users >= 0
        known_i = items >= 0
        p = np.where(known_u[:, None], self.P[np.where(known_u, users, 0)], 0)
        p = p + np.where(known_u[:, None], self._implicit(
            np.where(known_u, users, 0)), 0)
        q = np.where(known_i[:, None], self.Q[np.where(known_i, items, 0)], 0)
        dot = np.einsum('ij,ij->i', p, q)
        if self.baseline is None:
            return np.where(known_u & known_i, dot, self.mu)
        return baseline_scores(self.baseline, users, items) + dot

    def predict_ordinals(self, users, items):
        return self.scale.clamp(self.scores(users, items))

    def lookup(self, users, items):
        u = pd.Index(self.user_ids).get_indexer(np.atleast_1d(users))
        i = pd.Index(self.item_ids).get_indexer(np.atleast_1d(items))
        return u, i


@dataclass(frozen=True, eq=False)
class SvdppModel(MfModel):
    '''
    SVD++ model. `Z` caches ``|R(u)|^-1/2 * sum(Y[j] for j in R(u))`` per
    training user.
    '''
    Y: np.ndarray = None
    Z: np.ndarray = None

    def _implicit(self, users):
        return self.Z[users]


def mf_predict(model, u, i):
    '''
    Predict the rating of raw user `u` for raw item `i`, clamped to the
    model's scale
    '''
    return float(predict_many(model, [u], [i])[0])


def predict_many(model, users, items):
    '''
    Vectorized :func:`mf_predict` over raw id sequences
    '''
    u, i = model.lookup(users, items)
    return model.predict_ordinals(u, i)


@dataclass(frozen=True)
class AlsConfig:
    features: int = 15
    max_iterations: int = 100
    lam: float = 0.1
    damping: float = DEFAULT_DAMPING
    bias_enabled: bool = True
    stop_epsilon: float = 1e-4
    probe_fraction: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.features < 1:
            raise ArgumentError('AlsConfig', 'features must be at least 1')
        if self.max_iterations < 1:
            raise ArgumentError('AlsConfig',
                                'max_iterations must be at least 1')
        if self.lam < 0:
            raise ArgumentError('AlsConfig', 'lam must be non-negative')
        if not self.stop_epsilon > 0:
            raise ArgumentError('AlsConfig', 'stop_epsilon must be positive')
        if not 0 < self.probe_fraction < 1:
            raise ArgumentError('AlsConfig',
                                'probe_fraction must lie in (0, 1)')


def als_half_step(R, this, other, lam):
    '''
    Solve every row of `this` holding `other` fixed

    Row ``r`` of the result minimizes ``sum((R[r, j] - x . other[j])**2) +
    lam * n_r * |x|**2`` over the stored entries of row ``r`` of `R`. Rows
    without ratings are copied unchanged.

    Parameters
    ----------
    R : scipy.sparse.csr_matrix
        Ratings (or rating residuals) with rows matching `this`.
    this : ndarray
        Current factors for the rows of `R`.
    other : ndarray
        Fixed factors for the columns of `R`.
    lam : float
        Weighted-lambda regularization.

    Raises
    ------
    SolverError
        If a row's normal equations are singular.
    '''
    result = this.copy()
    nf = other.shape[1]
    eye = np.eye(nf)
    for row in range(R.shape[0]):
        lb, ub = R.indptr[row], R.indptr[row + 1]
        if lb == ub:
            continue
        M = other[R.indices[lb:ub]]
        A = M.T @ M + lam * (ub - lb) * eye
        b = M.T @ R.data[lb:ub]
        try:
            x = linalg.solve(A, b, assume_a='pos')
        except linalg.LinAlgError as e:
            raise SolverError('als_half_step', 'row %d: %s' % (row, e))
        if not np.isfinite(x).all():
            raise SolverError('als_half_step',
                              'row %d: singular normal equations' % row)
        result[row] = x
    return result


def als_objective(R, U, M, lam):
    '''
    Weighted-lambda ALS objective of factors `U`, `M` on ratings `R`
    '''
    coo = R.tocoo()
    pred = np.einsum('ij,ij->i', U[coo.row], M[coo.col])
    n_u = np.diff(R.indptr)
    n_m = np.bincount(R.indices, minlength=R.shape[1])
    penalty = np.sum(n_u * np.sum(U ** 2, axis=1)) \
        + np.sum(n_m * np.sum(M ** 2, axis=1))
    return float(np.sum((coo.data - pred) ** 2) + lam * penalty)


def _rmse(R, U, M):
    if R.nnz == 0:
        return float('nan')
    coo = R.tocoo()
    pred = np.einsum('ij,ij->i', U[coo.row], M[coo.col])
    return float(np.sqrt(np.mean((coo.data - pred) ** 2)))


def als_fit(train, config=None):
    '''
    Fit a matrix factorization by alternating least squares

    The item matrix is initialized with each item's mean target in the first
    feature and small seeded noise elsewhere. User and item matrices are
    then solved in turn until the RMSE on a seeded probe slice of the
    training data improves by less than ``stop_epsilon`` or
    ``max_iterations`` is reached. The probe slice is held out of the
    factorization; when it would be empty the training RMSE is used
    instead.

    With ``bias_enabled`` a damped baseline is fit first and the factors
    model the residuals ``r - mu - b_u - b_i``.

    Raises
    ------
    ArgumentError
        If `train` is empty.
    SolverError
        If a row's normal equations are singular (only possible with
        ``lam == 0``).
    '''
    config = AlsConfig() if config is None else config
    if train.n_ratings == 0:
        raise ArgumentError('als_fit', 'training set is empty')
    rng = make_rng(config.seed)

    if config.bias_enabled:
        baseline = fit_baseline(train, config.damping)
        targets = train.values - baseline_scores(baseline, train.users,
                                                 train.items)
    else:
        baseline = None
        targets = train.values.copy()

    n_probe = int(round(config.probe_fraction * train.n_ratings))
    probe = np.zeros(train.n_ratings, dtype=bool)
    if n_probe > 0:
        probe[rng.choice(train.n_ratings, n_probe, replace=False)] = True
    fit = ~probe
    shape = (train.n_users, train.n_items)
    R = rating_matrix(train.users[fit], train.items[fit], targets[fit], shape)
    RT = rating_matrix(train.items[fit], train.users[fit], targets[fit],
                       shape[::-1])
    R_probe = rating_matrix(train.users[probe], train.items[probe],
                            targets[probe], shape)
    R_stop = R_probe if n_probe > 0 else R

    nf = config.features
    counts = np.bincount(train.items[fit], minlength=train.n_items)
    sums = np.bincount(train.items[fit], weights=targets[fit],
                       minlength=train.n_items)
    item_mean = np.where(counts > 0, sums / np.maximum(counts, 1),
                         targets[fit].mean())
    M = np.empty((train.n_items, nf))
    M[:, 0] = item_mean
    M[:, 1:] = rng.normal(0, 0.01, (train.n_items, nf - 1))
    U = np.zeros((train.n_users, nf))

    previous = np.inf
    for iteration in range(config.max_iterations):
        U = als_half_step(R, U, M, config.lam)
        M = als_half_step(RT, M, U, config.lam)
        current = _rmse(R_stop, U, M)
        log.debug('als iteration %d: stopping rmse %.6f', iteration, current)
        if previous - current < config.stop_epsilon:
            break
        previous = current
    log.info('als: %d iterations, %d features', iteration + 1, nf)

    return MfModel(U, M, baseline, train.global_mean, train.scale,
                   train.user_ids, train.item_ids)


@dataclass(frozen=True)
class SgdConfig:
    factors: int = 100
    epochs: int = 20
    lr_gamma: float = 0.005
    reg_lambda: float = 0.02
    init_mean: float = 0.0
    init_std: float = 0.1
    biased: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.factors < 1:
            raise ArgumentError('SgdConfig', 'factors must be at least 1')
        if self.epochs < 1:
            raise ArgumentError('SgdConfig', 'epochs must be at least 1')
        if self.lr_gamma < 0:
            raise ArgumentError('SgdConfig', 'lr_gamma must be non-negative')
        if self.reg_lambda < 0:
            raise ArgumentError('SgdConfig',
                                'reg_lambda must be non-negative')
        if self.init_std < 0:
            raise ArgumentError('SgdConfig', 'init_std must be non-negative')


@njit(nogil=True)
def sgd_epoch(users, items, values, order, mu, bu, bi, P, Q, lr, reg,
              biased):
    '''
    One SGD sweep over the ratings at positions `order`, updating the
    parameter arrays in place
    '''
    nf = P.shape[1]
    for idx in order:
        u = users[idx]
        i = items[idx]
        dot = 0.0
        for f in range(nf):
            dot += P[u, f] * Q[i, f]
        err = values[idx] - (mu + bu[u] + bi[i] + dot)
        if biased:
            bu[u] += lr * (err - reg * bu[u])
            bi[i] += lr * (err - reg * bi[i])
        for f in range(nf):
            puf = P[u, f]
            qif = Q[i, f]
            P[u, f] += lr * (err * qif - reg * puf)
            Q[i, f] += lr * (err * puf - reg * qif)


@njit(nogil=True)
def svdpp_epoch(users, items, values, order, indptr, rated, mu, bu, bi, P,
                Q, Y, lr, reg):
    '''
    One SVD++ sweep. `indptr` and `rated` give each user's rated items.
    '''
    nf = P.shape[1]
    implicit = np.zeros(nf)
    for idx in order:
        u = users[idx]
        i = items[idx]
        lb = indptr[u]
        ub = indptr[u + 1]
        norm = 1.0 / np.sqrt(ub - lb) if ub > lb else 0.0
        implicit[:] = 0.0
        for jj in range(lb, ub):
            j = rated[jj]
            for f in range(nf):
                implicit[f] += Y[j, f]
        for f in range(nf):
            implicit[f] *= norm
        dot = 0.0
        for f in range(nf):
            dot += Q[i, f] * (P[u, f] + implicit[f])
        err = values[idx] - (mu + bu[u] + bi[i] + dot)
        bu[u] += lr * (err - reg * bu[u])
        bi[i] += lr * (err - reg * bi[i])
        for f in range(nf):
            puf = P[u, f]
            qif = Q[i, f]
            P[u, f] += lr * (err * qif - reg * puf)
            Q[i, f] += lr * (err * (puf + implicit[f]) - reg * qif)
            for jj in range(lb, ub):
                j = rated[jj]
                Y[j, f] += lr * (err * qif * norm - reg * Y[j, f])


def sgd_objective(train, mu, bu, bi, P, Q, reg):
    '''
    Regularized squared error of a biased factorization over `train`
    '''
    u, i = train.users, train.items
    pred = mu + bu[u] + bi[i] + np.einsum('ij,ij->i', P[u], Q[i])
    err = train.values - pred
    return float(np.sum(err ** 2) + reg * np.sum(
        bu[u] ** 2 + bi[i] ** 2 + np.sum(P[u] ** 2, axis=1)
        + np.sum(Q[i] ** 2, axis=1)))


def _check_finite(name, epoch, *arrays):
    for array in arrays:
        if not np.isfinite(array).all():
            raise TrainingDiverged(name, epoch)


def _init_sgd(train, config, rng):
    P = rng.normal(config.init_mean, config.init_std,
                   (train.n_users, config.factors))
    Q = rng.normal(config.init_mean, config.init_std,
                   (train.n_items, config.factors))
    return P, Q, np.zeros(train.n_users), np.zeros(train.n_items)


def sgd_fit(train, config=None):
    '''
    Fit a biased matrix factorization by stochastic gradient descent

    Biases start at zero and factors are drawn from a seeded normal
    distribution. Each epoch visits every rating in a fresh seeded order and
    applies, for error ``e = r - r_hat``::

        b_u += lr * (e - reg * b_u)
        b_i += lr * (e - reg * b_i)
        p_u += lr * (e * q_i - reg * p_u)
        q_i += lr * (e * p_u - reg * q_i)

    Raises
    ------
    ArgumentError
        If `train` is empty.
    TrainingDiverged
        If any parameter becomes non-finite. The error carries the epoch.
    '''
    config = SgdConfig() if config is None else config
    if train.n_ratings == 0:
        raise ArgumentError('sgd_fit', 'training set is empty')
    rng = make_rng(config.seed)
    P, Q, bu, bi = _init_sgd(train, config, rng)
    mu = train.global_mean if config.biased else 0.0

    for epoch in range(config.epochs):
        order = rng.permutation(train.n_ratings)
        sgd_epoch(train.users, train.items, train.values, order, mu, bu, bi,
                  P, Q, config.lr_gamma, config.reg_lambda, config.biased)
        _check_finite('sgd_fit', epoch, bu, bi, P, Q)
        log.debug('sgd epoch %d done', epoch)

    baseline = BaselineModel(mu, bu, bi, 0.0) if config.biased else None
    return MfModel(P, Q, baseline, train.global_mean, train.scale,
                   train.user_ids, train.item_ids)


def svdpp_fit(train, config=None):
    '''
    Fit SVD++ by stochastic gradient descent

    The prediction is ``mu + b_u + b_i + q_i . (p_u + |R(u)|^-1/2 *
    sum(y_j for j in R(u)))`` where ``R(u)`` is the set of items user ``u``
    rated in training. The implicit factors ``y_j`` share the learning rate
    and regularization of the explicit ones.
    '''
    config = SgdConfig() if config is None else config
    if train.n_ratings == 0:
        raise ArgumentError('svdpp_fit', 'training set is empty')
    rng = make_rng(config.seed)
    P, Q, bu, bi = _init_sgd(train, config, rng)
    Y = rng.normal(config.init_mean, config.init_std,
                   (train.n_items, config.factors))
    mu = train.global_mean
    indptr = train.csr.indptr.astype(np.int64)
    rated = train.csr.indices.astype(np.int64)

    for epoch in range(config.epochs):
        order = rng.permutation(train.n_ratings)
        svdpp_epoch(train.users, train.items, train.values, order, indptr,
                    rated, mu, bu, bi, P, Q, Y, config.lr_gamma,
                    config.reg_lambda)
        _check_finite('svdpp_fit', epoch, bu, bi, P, Q, Y)
        log.debug('svd++ epoch %d done', epoch)

    Z = implicit_sums(train.csr, Y)
    return SvdppModel(P, Q, BaselineModel(mu, bu, bi, 0.0), mu, train.scale,
                      train.user_ids, train.item_ids, Y, Z)


def implicit_sums(csr, Y):
    '''
    ``|R(u)|^-1/2 * sum(Y[j] for j in R(u))`` for every row of `csr`
    '''
    pattern = csr.copy()
    pattern.data = np.ones_like(pattern.data)
    counts = np.diff(csr.indptr)
    norm = np.where(counts > 0, 1 / np.sqrt(np.maximum(counts, 1)), 0)
    return np.asarray(pattern @ Y) * norm[:, None]

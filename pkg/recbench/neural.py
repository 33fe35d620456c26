'''
.. module:: recbench.neural
    :synopsis: Restricted Boltzmann machine and autoencoder rating models

Both models see a user as a set of one-hot blocks, one block of K units
(K = number of rating levels) per rated item. The visible layer therefore
has ``n_items * K`` units; unit ``i * K + k`` is on when the user gave item
``i`` the k-th rating level.

Predictions are the expected rating under a softmax distribution over the K
levels of the requested item, computed from probabilities rather than
samples so they are deterministic.
'''
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.special import expit, softmax

from .bench_error import ArgumentError, TrainingDiverged
from .dataset import rating_matrix
from .util import make_rng

import logging
log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class OneHotUserVector:
    '''
    One-hot encoding of a user's ratings

    `items` holds the item ordinals with a block present and `levels` the
    rating level (0 .. K-1) active in each block.
    '''
    user: int
    items: np.ndarray
    levels: np.ndarray
    K: int

    @classmethod
    def from_dataset(cls, train, u):
        '''
        Encode the training ratings of user ordinal `u` (-1 gives an empty
        vector)
        '''
        if u < 0:
            empty = np.array([], dtype=np.intp)
            return cls(u, empty, empty, train.scale.levels)
        items, values = train.user_row(u)
        return cls(u, items.astype(np.intp), train.scale.level_of(values),
                   train.scale.levels)

    @property
    def observed_items(self):
        return self.items

    @property
    def blocks(self):
        blocks = np.zeros((len(self.items), self.K))
        blocks[np.arange(len(self.items)), self.levels] = 1
        return blocks

    @property
    def units(self):
        return self.items * self.K + self.levels


def one_hot_matrix(train, rows=None):
    '''
    Sparse users x (n_items * K) one-hot matrix of `train`, restricted to the
    rating positions `rows` when given
    '''
    K = train.scale.levels
    users, items, values = train.users, train.items, train.values
    if rows is not None:
        users, items, values = users[rows], items[rows], values[rows]
    units = items * K + train.scale.level_of(values)
    return rating_matrix(users, units, np.ones(len(units)),
                         (train.n_users, train.n_items * K))


def _expected(logits, scale):
    return softmax(logits, axis=-1) @ scale.values


def _probe_split(n, fraction, rng):
    probe = np.zeros(n, dtype=bool)
    n_probe = int(round(fraction * n))
    if n_probe > 0:
        probe[rng.choice(n, n_probe, replace=False)] = True
    return probe


@dataclass(frozen=True)
class RbmConfig:
    hidden: int = 50
    epochs: int = 20
    lr: float = 0.1
    batch_size: int = 100
    K: int = None
    seed: int = 0
    early_stopping: bool = False
    probe_fraction: float = 0.05
    patience: int = 2

    def __post_init__(self):
        for name in ('hidden', 'epochs', 'batch_size', 'patience'):
            if getattr(self, name) < 1:
                raise ArgumentError('RbmConfig', '%s must be positive' % name)
        if self.lr < 0:
            raise ArgumentError('RbmConfig', 'lr must be non-negative')
        if self.K is not None and self.K < 2:
            raise ArgumentError('RbmConfig', 'K must be at least 2')
        if not 0 < self.probe_fraction < 1:
            raise ArgumentError('RbmConfig',
                                'probe_fraction must lie in (0, 1)')


@dataclass(frozen=True, eq=False)
class RbmModel:
    '''
    RBM parameters shared by all users

    `W` is indexed (item, level, hidden unit), `vb` (item, level) and `hb`
    (hidden unit). `history` lists the training reconstruction RMSE after
    every epoch.
    '''
    W: np.ndarray
    vb: np.ndarray
    hb: np.ndarray
    K: int
    F: int
    scale: object
    mu: float = 0.0
    item_ids: np.ndarray = None
    history: list = field(default_factory=list)

    def hidden(self, X):
        '''
        Hidden unit probabilities for the one-hot rows of `X`
        '''
        return expit(X @ self.W.reshape(-1, self.F) + self.hb)

    def predict_hidden(self, H, users, items):
        '''
        Expected ratings for (user row of `H`, item ordinal) pairs. Unknown
        items (-1) get the training mean.
        '''
        items = np.asarray(items, dtype=np.intp)
        known = items >= 0
        safe = np.where(known, items, 0)
        logits = self.vb[safe] + np.einsum('nkf,nf->nk', self.W[safe],
                                           H[users])
        return self.scale.clamp(np.where(known, _expected(logits, self.scale),
                                         self.mu))

    def user_hidden(self, train):
        '''
        Hidden probabilities of every user of `train`, plus a last row for
        a user without ratings (selected by the ordinal -1)
        '''
        return np.vstack([self.hidden(one_hot_matrix(train)),
                          expit(self.hb)[None, :]])

    def predict_ordinals(self, train, users, items):
        '''
        Predict for training ordinals, encoding users from `train`
        '''
        users = np.asarray(users, dtype=np.intp)
        return self.predict_hidden(self.user_hidden(train), users, items)


def rbm_predict(model, user_vector, i):
    '''
    Expected rating of item ordinal `i` for `user_vector`

    Hidden probabilities are computed from the user's observed blocks; the
    softmax over item `i`'s levels is computed from those probabilities.
    '''
    W2 = model.W.reshape(-1, model.F)
    h = expit(W2[user_vector.units].sum(axis=0) + model.hb)
    if i < 0 or i >= model.W.shape[0]:
        return float(model.scale.clamp(model.mu))
    logits = model.vb[i] + model.W[i] @ h
    return float(model.scale.clamp(_expected(logits, model.scale)))


def _reconstruction_rmse(model, X, train, rows):
    H = model.hidden(X)
    pred = model.predict_hidden(H, train.users[rows], train.items[rows])
    return float(np.sqrt(np.mean((pred - train.values[rows]) ** 2)))


def _check_levels(config_K, train, name):
    K = train.scale.levels
    if config_K is not None and config_K != K:
        raise ArgumentError(name, 'K=%d does not match the %d levels of the '
                            'rating scale' % (config_K, K))
    return K


def rbm_cd1(model, Xb, lr, rng):
    '''
    One contrastive divergence step on the users in `Xb`, in place

    `Xb` holds one-hot rows as built by :func:`one_hot_matrix`. Hidden units
    are sampled once from the positive phase; the negative phase
    reconstructs softmax distributions for the observed items only, so
    parameters of items no user in `Xb` rated are left untouched.
    '''
    K, F = model.K, model.F
    W2 = model.W.reshape(-1, F)
    hp = expit(Xb @ W2 + model.hb)
    hs = (rng.random(hp.shape) < hp).astype(np.float64)

    coo = Xb.tocoo()
    items = coo.col // K
    logits = model.vb[items] + np.einsum('nkf,nf->nk', model.W[items],
                                         hs[coo.row])
    vn = softmax(logits, axis=1)
    Xn = sparse.csr_matrix(
        (vn.ravel(),
         (np.repeat(coo.row, K),
          np.repeat(items * K, K) + np.tile(np.arange(K), len(items)))),
        shape=Xb.shape)
    hn = expit(Xn @ W2 + model.hb)

    n = Xb.shape[0]
    model.W[...] += (lr * (Xb.T @ hp - Xn.T @ hn) / n).reshape(model.W.shape)
    model.vb[...] += (lr * np.asarray(Xb.sum(axis=0) - Xn.sum(axis=0))
                      .ravel() / n).reshape(model.vb.shape)
    model.hb[...] += lr * (hp - hn).sum(axis=0) / n


def rbm_fit(train, config=None):
    '''
    Train an RBM with softmax visible units by one-step contrastive
    divergence

    Users are visited in seeded random minibatches. For each minibatch the
    hidden units are driven by the users' observed blocks, sampled once,
    and used to reconstruct softmax distributions for the observed items
    only. Weight and bias updates are ``lr * (positive - negative) /
    batch``; parameters of items nobody in the minibatch rated are left
    untouched.

    Raises
    ------
    ArgumentError
        If `train` is empty or ``config.K`` disagrees with the scale.
    TrainingDiverged
        If any parameter becomes non-finite.
    '''
    config = RbmConfig() if config is None else config
    if train.n_ratings == 0:
        raise ArgumentError('rbm_fit', 'training set is empty')
    K = _check_levels(config.K, train, 'rbm_fit')
    F = config.hidden
    rng = make_rng(config.seed)

    fit_rows = np.arange(train.n_ratings)
    probe_rows = None
    if config.early_stopping:
        probe = _probe_split(train.n_ratings, config.probe_fraction, rng)
        fit_rows, probe_rows = np.flatnonzero(~probe), np.flatnonzero(probe)
    X = one_hot_matrix(train, fit_rows)
    D = train.n_items * K

    W2 = rng.normal(0, 0.01, (D, F))
    vb = np.zeros(D)
    hb = np.zeros(F)
    model = RbmModel(W2.reshape(train.n_items, K, F), vb.reshape(-1, K), hb,
                     K, F, train.scale, train.global_mean, train.item_ids)
    best, best_rmse, stale = None, np.inf, 0

    for epoch in range(config.epochs):
        order = rng.permutation(train.n_users)
        for start in range(0, train.n_users, config.batch_size):
            batch = order[start:start + config.batch_size]
            Xb = X[batch]
            if Xb.nnz == 0:
                continue
            rbm_cd1(model, Xb, config.lr, rng)

        if not (np.isfinite(W2).all() and np.isfinite(vb).all()
                and np.isfinite(hb).all()):
            raise TrainingDiverged('rbm_fit', epoch)
        rmse = _reconstruction_rmse(model, X, train, fit_rows)
        model.history.append(rmse)
        log.debug('rbm epoch %d: reconstruction rmse %.4f', epoch, rmse)

        if probe_rows is not None and len(probe_rows):
            probe_rmse = _reconstruction_rmse(model, X, train, probe_rows)
            if probe_rmse < best_rmse:
                best_rmse, stale = probe_rmse, 0
                best = (W2.copy(), vb.copy(), hb.copy())
            else:
                stale += 1
                if stale >= config.patience:
                    log.info('rbm: early stop after epoch %d', epoch)
                    W2[:], vb[:], hb[:] = best
                    break
    return model


@dataclass(frozen=True)
class AeConfig:
    hidden: int = 50
    epochs: int = 20
    lr: float = 0.1
    batch_size: int = 200
    lam: float = 0.0
    seed: int = 0
    early_stopping: bool = False
    probe_fraction: float = 0.05
    patience: int = 2

    def __post_init__(self):
        for name in ('hidden', 'epochs', 'batch_size', 'patience'):
            if getattr(self, name) < 1:
                raise ArgumentError('AeConfig', '%s must be positive' % name)
        if self.lr < 0:
            raise ArgumentError('AeConfig', 'lr must be non-negative')
        if self.lam < 0:
            raise ArgumentError('AeConfig', 'lam must be non-negative')
        if not 0 < self.probe_fraction < 1:
            raise ArgumentError('AeConfig',
                                'probe_fraction must lie in (0, 1)')


@dataclass(frozen=True, eq=False)
class AutoRecModel:
    '''
    One-hot autoencoder ``out = W . sigmoid(V . x + mu_h) + b_v``

    `V` is (hidden, visible), `W` is (visible, hidden) and the visible
    dimension is ``n_items * K``.
    '''
    V: np.ndarray
    W: np.ndarray
    mu_h: np.ndarray
    b_v: np.ndarray
    K: int
    scale: object
    mu: float = 0.0
    item_ids: np.ndarray = None
    history: list = field(default_factory=list)

    @property
    def F(self):
        return self.V.shape[0]

    def hidden(self, X):
        return expit(X @ self.V.T + self.mu_h)

    def predict_hidden(self, H, users, items):
        items = np.asarray(items, dtype=np.intp)
        known = items >= 0
        safe = np.where(known, items, 0)
        W3 = self.W.reshape(-1, self.K, self.F)
        logits = np.einsum('nkf,nf->nk', W3[safe], H[users]) \
            + self.b_v.reshape(-1, self.K)[safe]
        return self.scale.clamp(np.where(known, _expected(logits, self.scale),
                                         self.mu))

    def user_hidden(self, train):
        return np.vstack([self.hidden(one_hot_matrix(train)),
                          expit(self.mu_h)[None, :]])

    def predict_ordinals(self, train, users, items):
        users = np.asarray(users, dtype=np.intp)
        return self.predict_hidden(self.user_hidden(train), users, items)


def ae_predict(model, user_vector, i):
    '''
    Expected rating of item ordinal `i` reconstructed from `user_vector`

    Item `i`'s K outputs are turned into a distribution by softmax.
    '''
    h = expit(model.V[:, user_vector.units].sum(axis=1) + model.mu_h)
    if i < 0 or i * model.K >= len(model.b_v):
        return float(model.scale.clamp(model.mu))
    block = slice(i * model.K, (i + 1) * model.K)
    logits = model.W[block] @ h + model.b_v[block]
    return float(model.scale.clamp(_expected(logits, model.scale)))


def observed_mask(X, K):
    '''
    Sparse mask covering every unit of each observed block in `X`
    '''
    coo = X.tocoo()
    start = (coo.col // K) * K
    rows = np.repeat(coo.row, K)
    cols = np.repeat(start, K) + np.tile(np.arange(K), len(start))
    return rating_matrix(rows, cols, np.ones(len(cols)), X.shape)


def _ae_forward(model, X, mask):
    H = model.hidden(X)
    rows = np.repeat(np.arange(mask.shape[0]), np.diff(mask.indptr))
    cols = mask.indices
    out = np.einsum('nf,nf->n', H[rows], model.W[cols]) + model.b_v[cols]
    target = np.asarray(X[rows, cols]).ravel()
    return H, rows, cols, out - target


def ae_loss(model, X, mask, lam=0.0):
    '''
    Masked reconstruction loss of the one-hot rows `X`

    ``0.5 * sum((out - x)**2 over mask) / n_rows + lam / 2 * (|W|**2 +
    |V|**2)``
    '''
    _, _, _, err = _ae_forward(model, X, mask)
    n = X.shape[0]
    return float(0.5 * np.sum(err ** 2) / n
                 + 0.5 * lam * (np.sum(model.W ** 2) + np.sum(model.V ** 2)))


def ae_gradients(model, X, mask, lam=0.0):
    '''
    Exact gradients of :func:`ae_loss` by backpropagation

    Returns
    -------
    grads : dict
        Gradient for each of ``V``, ``W``, ``mu_h`` and ``b_v``.
    '''
    H, rows, cols, err = _ae_forward(model, X, mask)
    n = X.shape[0]
    delta = sparse.csr_matrix((err / n, (rows, cols)), shape=mask.shape)
    grad_W = np.asarray(delta.T @ H) + lam * model.W
    grad_bv = np.bincount(cols, weights=err / n, minlength=len(model.b_v))
    delta_h = np.asarray(delta @ model.W) * H * (1 - H)
    grad_V = np.asarray(X.T @ delta_h).T + lam * model.V
    grad_mu = delta_h.sum(axis=0)
    return {'V': grad_V, 'W': grad_W, 'mu_h': grad_mu, 'b_v': grad_bv}


def ae_fit(train, config=None):
    '''
    Train the one-hot autoencoder by minibatch gradient descent

    The hidden layer is a sigmoid and the output layer is linear. The loss
    covers only the blocks of items each user rated.

    Raises
    ------
    ArgumentError
        If `train` is empty.
    TrainingDiverged
        If the loss or a parameter becomes non-finite.
    '''
    config = AeConfig() if config is None else config
    if train.n_ratings == 0:
        raise ArgumentError('ae_fit', 'training set is empty')
    K = train.scale.levels
    rng = make_rng(config.seed)

    fit_rows = np.arange(train.n_ratings)
    probe_rows = None
    if config.early_stopping:
        probe = _probe_split(train.n_ratings, config.probe_fraction, rng)
        fit_rows, probe_rows = np.flatnonzero(~probe), np.flatnonzero(probe)
    X = one_hot_matrix(train, fit_rows)
    D = train.n_items * K
    F = config.hidden

    model = AutoRecModel(rng.normal(0, 0.01, (F, D)),
                         rng.normal(0, 0.01, (D, F)),
                         np.zeros(F), np.zeros(D), K, train.scale,
                         train.global_mean, train.item_ids)
    params = {'V': model.V, 'W': model.W, 'mu_h': model.mu_h,
              'b_v': model.b_v}
    best, best_rmse, stale = None, np.inf, 0

    for epoch in range(config.epochs):
        order = rng.permutation(train.n_users)
        for start in range(0, train.n_users, config.batch_size):
            Xb = X[order[start:start + config.batch_size]]
            if Xb.nnz == 0:
                continue
            mask = observed_mask(Xb, K)
            loss = ae_loss(model, Xb, mask, config.lam)
            if not np.isfinite(loss):
                raise TrainingDiverged('ae_fit', epoch)
            grads = ae_gradients(model, Xb, mask, config.lam)
            for name, param in params.items():
                param -= config.lr * grads[name]

        if not all(np.isfinite(a).all() for a in params.values()):
            raise TrainingDiverged('ae_fit', epoch)
        rmse = _reconstruction_rmse(model, X, train, fit_rows)
        model.history.append(rmse)
        log.debug('autoencoder epoch %d: reconstruction rmse %.4f', epoch,
                  rmse)

        if probe_rows is not None and len(probe_rows):
            probe_rmse = _reconstruction_rmse(model, X, train, probe_rows)
            if probe_rmse < best_rmse:
                best_rmse, stale = probe_rmse, 0
                best = {k: a.copy() for k, a in params.items()}
            else:
                stale += 1
                if stale >= config.patience:
                    log.info('autoencoder: early stop after epoch %d', epoch)
                    for name, param in params.items():
                        param[:] = best[name]
                    break
    return model

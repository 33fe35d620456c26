'''
.. module:: recbench.neighborhood
    :synopsis: User-user nearest neighbor collaborative filtering

Similarities are computed over co-rated items only. A pair of users without
any co-rated item (or with fewer than ``min_support`` of them) has a
similarity of exactly 0.

Two interfaces are provided. The functional interface (:func:`similarity`,
:func:`find_neighbors`, :func:`score` and :func:`top_n_mfin`) works on raw
user and item identifiers. :class:`UserKnn` wraps the same computations for
the experiment harness and reuses each user's similarity vector for every
item scored for that user.
'''
from dataclasses import dataclass

import numpy as np

from .baselines import fit_baseline, predict_baseline
from .bench_error import ArgumentError
from .constants import (DEFAULT_DAMPING, DEFAULT_K_NEIGHBORS,
                        DEFAULT_RELEVANCE_THRESHOLD, DEFAULT_SHRINKAGE,
                        DEFAULT_TOP_N)

import logging
log = logging.getLogger(__name__)


SIMILARITY_VARIANTS = ('cosine', 'msd', 'pearson', 'pearson_baseline')


@dataclass(frozen=True)
class SimilarityKind:
    variant: str = 'cosine'
    shrinkage: float = DEFAULT_SHRINKAGE

    def __post_init__(self):
        if self.variant not in SIMILARITY_VARIANTS:
            raise ArgumentError('SimilarityKind', 'unknown similarity %r'
                                % self.variant)
        if self.shrinkage < 0:
            raise ArgumentError('SimilarityKind',
                                'shrinkage must be non-negative')

    @classmethod
    def parse(cls, text, shrinkage=DEFAULT_SHRINKAGE):
        '''
        Build a similarity from its name

        >>> SimilarityKind.parse('Pearson-Baseline').variant
        'pearson_baseline'
        '''
        if isinstance(text, cls):
            return text
        return cls(str(text).strip().lower().replace('-', '_'), shrinkage)

    def __str__(self):
        return self.variant


@dataclass(frozen=True)
class KnnConfig:
    k_neighbors: int = DEFAULT_K_NEIGHBORS
    top_n: int = DEFAULT_TOP_N
    min_similarity: float = 0.0
    min_support: int = 1
    pt_threshold: float = DEFAULT_RELEVANCE_THRESHOLD

    def __post_init__(self):
        for name in ('k_neighbors', 'top_n', 'min_support'):
            if getattr(self, name) < 1:
                raise ArgumentError('KnnConfig', '%s must be at least 1'
                                    % name)


@dataclass(frozen=True)
class NeighborSet:
    '''
    Neighbors of user ordinal `target` as (user ordinal, similarity) pairs in
    descending order of similarity
    '''
    target: int
    neighbors: tuple = ()

    def __len__(self):
        return len(self.neighbors)

    @property
    def users(self):
        return np.array([v for v, _ in self.neighbors], dtype=np.intp)

    @property
    def similarities(self):
        return np.array([s for _, s in self.neighbors], dtype=np.float64)


def similarity(u_ratings, v_ratings, kind, baseline=None, config=None,
               users=(-1, -1)):
    '''
    Similarity of two users from their ratings

    Parameters
    ----------
    u_ratings, v_ratings : dict
        Item to rating maps. Keys must be training item ordinals when `kind`
        is Pearson-baseline.
    kind : SimilarityKind
    baseline : {None, BaselineModel}
        Required for Pearson-baseline.
    config : {None, KnnConfig}
        Supplies ``min_support``.
    users : tuple of int
        Training ordinals of the two users, used for their baseline biases.

    >>> similarity({1: 4, 2: 3}, {1: 4, 2: 3}, SimilarityKind('msd'))
    1.0
    >>> similarity({1: 4}, {2: 3}, SimilarityKind('cosine'))
    0.0
    '''
    kind = SimilarityKind.parse(kind)
    config = KnnConfig() if config is None else config
    common = sorted(set(u_ratings) & set(v_ratings))
    n = len(common)
    if n == 0 or n < config.min_support:
        return 0.0
    ru = np.array([u_ratings[i] for i in common], dtype=np.float64)
    rv = np.array([v_ratings[i] for i in common], dtype=np.float64)
    shrink = 1.0

    if kind.variant == 'msd':
        return float(1.0 / (np.mean((ru - rv) ** 2) + 1.0))
    elif kind.variant == 'pearson':
        ru = ru - ru.mean()
        rv = rv - rv.mean()
    elif kind.variant == 'pearson_baseline':
        if baseline is None:
            raise ArgumentError('similarity',
                                'pearson_baseline requires a fitted baseline')
        b_item = baseline.item_bias(common)
        ru = ru - baseline.mu - baseline.user_bias(users[0]) - b_item
        rv = rv - baseline.mu - baseline.user_bias(users[1]) - b_item
        shrink = n / (n + kind.shrinkage)

    den = np.sqrt(np.sum(ru ** 2) * np.sum(rv ** 2))
    if den == 0:
        return 0.0
    return float(np.clip(np.dot(ru, rv) / den, -1, 1) * shrink)


class SimilarityIndex:
    '''
    Vectorized similarity of one user against every user of a training set

    Column slices of the item-major matrices give, for the target's rated
    items, the ratings and rating pattern of every other user. The sums
    needed by each similarity then reduce to sparse products.
    '''

    def __init__(self, train, kind, config=None, baseline=None):
        self.train = train
        self.kind = SimilarityKind.parse(kind)
        self.config = KnnConfig() if config is None else config
        self.baseline = baseline
        self.values = train.csc
        self.pattern = train.pattern.tocsc()
        if self.kind.variant == 'pearson_baseline':
            if baseline is None:
                raise ArgumentError('SimilarityIndex',
                                    'pearson_baseline requires a fitted '
                                    'baseline')
            residual = self.values.copy()
            rows = residual.indices
            cols = np.repeat(np.arange(train.n_items), train.item_counts)
            residual.data = residual.data - baseline.mu \
                - baseline.b_user[rows] - baseline.b_item[cols]
            self.residual = residual

    def vector(self, u):
        '''
        Similarities and co-rated counts of user ordinal `u` against every
        training user
        '''
        items, r = self.train.user_row(u)
        counts = np.asarray(self.pattern[:, items].sum(axis=1)).ravel()
        variant = self.kind.variant

        if variant == 'pearson_baseline':
            e = r - self.baseline.mu - self.baseline.b_user[u] \
                - self.baseline.b_item[items]
            E = self.residual[:, items]
            num = E @ e
            den = (self.pattern[:, items] @ e ** 2) \
                * np.asarray(E.power(2).sum(axis=1)).ravel()
            sims = _safe_ratio(num, np.sqrt(den))
            sims = np.clip(sims, -1, 1) \
                * counts / (counts + self.kind.shrinkage)
        else:
            S = self.values[:, items]
            P = self.pattern[:, items]
            s_uv = S @ r
            s_uu = P @ r ** 2
            s_vv = np.asarray(S.power(2).sum(axis=1)).ravel()
            if variant == 'cosine':
                sims = np.clip(_safe_ratio(s_uv, np.sqrt(s_uu * s_vv)), -1, 1)
            elif variant == 'msd':
                msd = (s_uu - 2 * s_uv + s_vv) / np.maximum(counts, 1)
                sims = 1.0 / (np.maximum(msd, 0) + 1.0)
            else:
                s_u = P @ r
                s_v = np.asarray(S.sum(axis=1)).ravel()
                n = np.maximum(counts, 1)
                cov = s_uv - s_u * s_v / n
                var_u = s_uu - s_u ** 2 / n
                var_v = s_vv - s_v ** 2 / n
                # Constant overlap vectors leave only rounding noise here.
                var_u[var_u <= 1e-9 * np.maximum(s_uu, 1)] = 0
                var_v[var_v <= 1e-9 * np.maximum(s_vv, 1)] = 0
                sims = np.clip(_safe_ratio(cov, np.sqrt(var_u * var_v)),
                               -1, 1)

        sims = np.where((counts == 0) | (counts < self.config.min_support),
                        0.0, sims)
        return sims, counts


def _safe_ratio(num, den):
    out = np.zeros_like(num, dtype=np.float64)
    np.divide(num, den, out=out, where=den > 0)
    return out


def _top_k(candidates, sims, k):
    order = np.lexsort((candidates, -sims[candidates]))[:k]
    chosen = candidates[order]
    return tuple((int(v), float(sims[v])) for v in chosen)


def find_neighbors(target, candidate_items, train, kind, config=None,
                   baseline=None):
    '''
    Find the users most similar to `target`

    Parameters
    ----------
    target : raw user id
        Must be present in `train`.
    candidate_items : {None, iterable of raw item ids}
        Items to be scored. Only users who rated at least one of them are
        considered. None stands for every item.
    train : RatingsDataset
    kind : SimilarityKind
    config : {None, KnnConfig}
    baseline : {None, BaselineModel}
        Required for Pearson-baseline.

    Returns
    -------
    neighbors : NeighborSet
        At most ``k_neighbors`` users co-rating at least one item with the
        target, with similarity of at least ``min_similarity``. Ties are
        broken by the lower user ordinal.

    Raises
    ------
    NotFoundError
        If `target` is not in `train`.
    '''
    config = KnnConfig() if config is None else config
    u = train.user_ordinal(target)
    index = SimilarityIndex(train, kind, config, baseline)
    sims, counts = index.vector(u)

    if candidate_items is None:
        rated_candidate = train.user_counts > 0
    else:
        items = train.lookup_items(list(candidate_items))
        items = items[items >= 0]
        rated_candidate = np.asarray(
            index.pattern[:, items].sum(axis=1)).ravel() > 0
    eligible = (counts >= config.min_support) & rated_candidate \
        & (sims >= config.min_similarity)
    eligible[u] = False
    neighbors = _top_k(np.flatnonzero(eligible), sims, config.k_neighbors)
    log.debug('user %r: %d neighbors', target, len(neighbors))
    return NeighborSet(u, neighbors)


def _weighted_deviation(neighbors, sims, item, train):
    raters, ratings = train.item_column(item)
    pos = np.searchsorted(raters, neighbors)
    pos = np.minimum(pos, max(len(raters) - 1, 0))
    rated = (raters[pos] == neighbors) if len(raters) else \
        np.zeros(len(neighbors), dtype=bool)
    if not rated.any():
        return None
    den = np.abs(sims[rated]).sum()
    if den == 0:
        return None
    dev = ratings[pos[rated]] - train.user_means[neighbors[rated]]
    return float(np.dot(sims[rated], dev) / den)


def score(target, item, neighbors, train, baseline, scale):
    '''
    Predict the rating of `target` for `item` from a neighborhood

    Each neighbor's rating is centered on that neighbor's mean, the
    centered ratings are averaged with weights ``sim / sum(|sim|)`` over the
    neighbors who rated the item and the target's mean is added back. When
    no neighbor rated the item the baseline prediction is returned.
    '''
    u = train.lookup_users([target])[0]
    i = train.lookup_items([item])[0]
    dev = None
    if u >= 0 and i >= 0 and len(neighbors):
        dev = _weighted_deviation(neighbors.users, neighbors.similarities, i,
                                  train)
    if dev is None:
        return float(predict_baseline(baseline, u, i, scale))
    return float(scale.clamp(train.user_means[u] + dev))


def _mfin(u, neighbors, train, config):
    sub = train.csr[neighbors]
    liked = sub.indices[sub.data >= config.pt_threshold]
    counts = np.bincount(liked, minlength=train.n_items)
    counts[train.user_row(u)[0]] = 0
    order = np.lexsort((np.arange(train.n_items), -counts))
    order = order[counts[order] > 0]
    return order[:config.top_n]


def top_n_mfin(target, neighbors, train, config=None):
    '''
    Most frequent items in the neighborhood

    Counts, for every item, the neighbors who rated it at or above
    ``pt_threshold`` and returns up to ``top_n`` raw item ids with a
    positive count in decreasing order of count (ties by lower item
    ordinal). Items the target already rated are never returned.
    '''
    config = KnnConfig() if config is None else config
    u = train.user_ordinal(target)
    if not len(neighbors):
        return []
    return train.item_ids[_mfin(u, neighbors.users, train, config)].tolist()


class UserKnn:
    '''
    User-user KNN estimator used by the experiment harness

    Parameters
    ----------
    kind : SimilarityKind
    config : KnnConfig
    damping : float
        Damping of the baseline used for fallbacks and Pearson-baseline.
    '''

    def __init__(self, kind='cosine', config=None, damping=DEFAULT_DAMPING):
        self.kind = SimilarityKind.parse(kind)
        self.config = KnnConfig() if config is None else config
        self.damping = damping

    def __str__(self):
        return 'UserKnn({}, k={})'.format(self.kind, self.config.k_neighbors)

    def fit(self, train):
        self.train = train
        self.baseline = fit_baseline(train, self.damping)
        self.index = SimilarityIndex(train, self.kind, self.config,
                                     self.baseline)
        log.debug('%s: fit on %s', self, train)
        return self

    def _eligible(self, u):
        sims, counts = self.index.vector(u)
        eligible = (counts >= self.config.min_support) \
            & (sims >= self.config.min_similarity)
        eligible[u] = False
        return sims, eligible

    def predict(self, users, items):
        '''
        Predict ratings for training ordinal arrays (-1 marks an unknown
        user or item)
        '''
        users = np.asarray(users, dtype=np.intp)
        items = np.asarray(items, dtype=np.intp)
        train = self.train
        out = predict_baseline(self.baseline, users, items, train.scale)
        out = np.array(out, dtype=np.float64, ndmin=1)
        known = np.flatnonzero((users >= 0) & (items >= 0))
        by_user = known[np.argsort(users[known], kind='stable')]
        bounds = np.flatnonzero(np.diff(users[by_user])) + 1
        for group in np.split(by_user, bounds):
            if not len(group):
                continue
            u = users[group[0]]
            sims, eligible = self._eligible(u)
            for pos in group:
                raters = train.item_column(items[pos])[0]
                candidates = raters[eligible[raters]]
                neighbors = _top_k(candidates, sims, self.config.k_neighbors)
                if not neighbors:
                    continue
                vs = np.array([v for v, _ in neighbors], dtype=np.intp)
                dev = _weighted_deviation(vs, sims[vs], items[pos], train)
                if dev is not None:
                    out[pos] = train.user_means[u] + dev
        return train.scale.clamp(out)

    def recommend(self, u, n=None):
        '''
        Top-N item ordinals for training user ordinal `u` by MFIN
        '''
        sims, eligible = self._eligible(u)
        neighbors = _top_k(np.flatnonzero(eligible), sims,
                           self.config.k_neighbors)
        if not neighbors:
            return np.array([], dtype=np.intp)
        config = self.config
        if n is not None:
            config = KnnConfig(config.k_neighbors, n, config.min_similarity,
                               config.min_support, config.pt_threshold)
        vs = np.array([v for v, _ in neighbors], dtype=np.intp)
        return _mfin(u, vs, self.train, config)

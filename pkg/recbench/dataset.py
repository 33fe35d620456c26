'''
.. module:: recbench.dataset
    :synopsis: Loading, indexing, subsampling and partitioning of rating data

A :class:`RatingsDataset` is an immutable, indexed collection of
(user, item, rating, timestamp) tuples on a fixed :class:`RatingScale`. Raw
user and item identifiers are mapped onto dense ordinals (``0 .. n-1``) in
sorted order of the raw identifier, and every subset produced by
:func:`subsample` or :func:`crossfold` rebuilds those ordinals over the
surviving population.

All derived structures (sparse matrices, per-user and per-item slices, user
means) are built once in the constructor so a dataset can be shared by any
number of reader threads.
'''
import re
from collections import namedtuple
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import pandas as pd
from scipy import sparse

from .bench_error import (ArgumentError, EmptyDatasetError, NotFoundError,
                          ParseError, RangeError, ValidationError)
from .constants import (CSV_HEADER, DEFAULT_SCALE_MAX, DEFAULT_SCALE_MIN,
                        DEFAULT_SCALE_STEP, FORMAT_ML_CSV, NO_TIMESTAMP,
                        RATING_COLUMNS, RATING_FORMATS)
from .util import get_data_path, make_rng

import logging
log = logging.getLogger(__name__)


Rating = namedtuple('Rating', 'user item value timestamp')


@dataclass(frozen=True)
class RatingScale:
    '''
    Discrete rating scale running from `min` to `max` in increments of `step`

    >>> RatingScale().levels
    10
    >>> RatingScale(1, 5, 1).values.tolist()
    [1.0, 2.0, 3.0, 4.0, 5.0]
    '''
    min: float = DEFAULT_SCALE_MIN
    max: float = DEFAULT_SCALE_MAX
    step: float = DEFAULT_SCALE_STEP

    def __post_init__(self):
        if not self.min < self.max:
            raise ArgumentError('RatingScale', 'min %r must be below max %r'
                                % (self.min, self.max))
        if not self.step > 0:
            raise ArgumentError('RatingScale', 'step must be positive')
        n = (self.max - self.min) / self.step
        if abs(n - round(n)) > 1e-9:
            raise ArgumentError('RatingScale', 'range %r-%r is not a multiple '
                                'of step %r' % (self.min, self.max, self.step))

    @classmethod
    def parse(cls, text):
        '''
        Build a scale from ``min:max:step`` text

        >>> RatingScale.parse('1:5:1')
        RatingScale(min=1.0, max=5.0, step=1.0)
        '''
        try:
            lb, ub, step = (float(t) for t in text.split(':'))
        except ValueError:
            raise ArgumentError('RatingScale',
                                'expected min:max:step, got %r' % text)
        return cls(lb, ub, step)

    @property
    def levels(self):
        return int(round((self.max - self.min) / self.step)) + 1

    @property
    def values(self):
        return self.min + self.step * np.arange(self.levels, dtype=np.float64)

    def level_of(self, value):
        '''
        Index of the level closest to `value` (scalar or array)
        '''
        level = np.rint((np.asarray(value, dtype=np.float64) - self.min)
                        / self.step).astype(np.intp)
        return np.clip(level, 0, self.levels - 1)

    def contains(self, value):
        '''
        True where `value` is exactly one of the scale's levels
        '''
        value = np.asarray(value, dtype=np.float64)
        offset = (value - self.min) / self.step
        on_grid = np.abs(offset - np.rint(offset)) < 1e-6
        in_range = (value >= self.min - 1e-9) & (value <= self.max + 1e-9)
        return on_grid & in_range

    def clamp(self, value):
        return np.clip(value, self.min, self.max)

    def __str__(self):
        return '{:g}-{:g} step {:g}'.format(self.min, self.max, self.step)


def rating_matrix(rows, cols, values, shape):
    '''
    CSR matrix of `values` at (`rows`, `cols`) with column indices sorted
    within each row. Zero values are kept as stored entries.
    '''
    matrix, _ = _sparse_groups(np.asarray(rows, dtype=np.intp),
                               np.asarray(cols, dtype=np.intp),
                               np.asarray(values, dtype=np.float64),
                               shape[0], shape[1], 'csr')
    return matrix


def _sparse_groups(major, minor, values, n_major, n_minor, kind):
    order = np.lexsort((minor, major))
    counts = np.bincount(major, minlength=n_major)
    indptr = np.zeros(n_major + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    cls = sparse.csr_matrix if kind == 'csr' else sparse.csc_matrix
    shape = (n_major, n_minor) if kind == 'csr' else (n_minor, n_major)
    matrix = cls((values[order], minor[order].astype(np.int32), indptr),
                 shape=shape)
    return matrix, order


class RatingsDataset:
    '''
    Immutable indexed collection of ratings

    Parameters
    ----------
    users : array-like
        Raw user identifier of each rating.
    items : array-like
        Raw item identifier of each rating.
    values : array-like
        Rating values. Each must be one of the levels of `scale`.
    timestamps : {None, array-like}
        Seconds since epoch for each rating. Use -1 (or None for the entire
        column) where the timestamp is unknown.
    scale : {None, RatingScale}
        Rating scale. Defaults to 0.5-5.0 in steps of 0.5.

    Raises
    ------
    ValidationError
        If a rating is off the scale, a timestamp is negative or a
        (user, item) pair occurs more than once.
    '''

    def __init__(self, users, items, values, timestamps=None, scale=None):
        self.scale = RatingScale() if scale is None else scale
        values = np.asarray(values, dtype=np.float64)
        n = len(values)
        if len(users) != n or len(items) != n:
            raise ValidationError('RatingsDataset', 'column lengths differ')
        if timestamps is None:
            timestamps = np.full(n, NO_TIMESTAMP, dtype=np.int64)
        else:
            timestamps = np.asarray(timestamps, dtype=np.int64)
            if len(timestamps) != n:
                raise ValidationError('RatingsDataset',
                                      'column lengths differ')

        if n:
            bad = ~self.scale.contains(values)
            if bad.any():
                raise ValidationError('RatingsDataset',
                                      'rating %r is off the %s scale'
                                      % (values[bad][0], self.scale))
            if (timestamps < NO_TIMESTAMP).any():
                raise ValidationError('RatingsDataset',
                                      'negative timestamp %d'
                                      % timestamps[timestamps < 0][0])

        user_ord, user_ids = pd.factorize(np.asarray(users), sort=True)
        item_ord, item_ids = pd.factorize(np.asarray(items), sort=True)
        self.users = user_ord.astype(np.intp)
        self.items = item_ord.astype(np.intp)
        self.values = values
        self.timestamps = timestamps
        self.user_ids = np.asarray(user_ids)
        self.item_ids = np.asarray(item_ids)
        self._user_lookup = pd.Index(user_ids)
        self._item_lookup = pd.Index(item_ids)
        self.n_users = len(user_ids)
        self.n_items = len(item_ids)
        self.n_ratings = n

        if n:
            key = self.users.astype(np.int64) * self.n_items + self.items
            unique, counts = np.unique(key, return_counts=True)
            if (counts > 1).any():
                dup = unique[counts > 1][0]
                u, i = divmod(int(dup), self.n_items)
                raise ValidationError('RatingsDataset',
                                      'duplicate rating for user %r item %r'
                                      % (self.user_ids[u], self.item_ids[i]))

        for array in (self.users, self.items, self.values, self.timestamps):
            array.flags.writeable = False

        self.csr, self._user_order = _sparse_groups(
            self.users, self.items, self.values, self.n_users, self.n_items,
            'csr')
        self.csc, self._item_order = _sparse_groups(
            self.items, self.users, self.values, self.n_items, self.n_users,
            'csc')
        # Same sparsity pattern with unit entries, for co-rating counts.
        self.pattern = self.csr.copy()
        self.pattern.data = np.ones_like(self.pattern.data)

        self.user_counts = np.diff(self.csr.indptr)
        self.item_counts = np.diff(self.csc.indptr)
        sums = np.bincount(self.users, weights=self.values,
                           minlength=self.n_users)
        self.user_means = sums / np.maximum(self.user_counts, 1)
        self.global_mean = float(values.mean()) if n else float('nan')
        log.debug('%s: indexed', self)

    def __len__(self):
        return self.n_ratings

    def __str__(self):
        return '<RatingsDataset {} ratings, {} users, {} items>'.format(
            self.n_ratings, self.n_users, self.n_items)

    __repr__ = __str__

    @cached_property
    def user_index(self):
        return {u: o for o, u in enumerate(self.user_ids.tolist())}

    @cached_property
    def item_index(self):
        return {i: o for o, i in enumerate(self.item_ids.tolist())}

    @cached_property
    def ratings(self):
        ts = [None if t == NO_TIMESTAMP else t
              for t in self.timestamps.tolist()]
        return [Rating(u, i, v, t) for u, i, v, t in
                zip(self.raw_users.tolist(), self.raw_items.tolist(),
                    self.values.tolist(), ts)]

    @property
    def raw_users(self):
        return self.user_ids[self.users]

    @property
    def raw_items(self):
        return self.item_ids[self.items]

    def lookup_users(self, raw):
        '''
        Map raw user ids onto ordinals, -1 where the user is unknown
        '''
        return self._user_lookup.get_indexer(np.atleast_1d(raw))

    def lookup_items(self, raw):
        '''
        Map raw item ids onto ordinals, -1 where the item is unknown
        '''
        return self._item_lookup.get_indexer(np.atleast_1d(raw))

    def user_ordinal(self, user):
        ordinal = self.lookup_users([user])[0]
        if ordinal < 0:
            raise NotFoundError('RatingsDataset', 'unknown user %r' % (user,))
        return int(ordinal)

    def item_ordinal(self, item):
        ordinal = self.lookup_items([item])[0]
        if ordinal < 0:
            raise NotFoundError('RatingsDataset', 'unknown item %r' % (item,))
        return int(ordinal)

    def user_row(self, u):
        '''
        Item ordinals (ascending) and values rated by user ordinal `u`
        '''
        lb, ub = self.csr.indptr[u], self.csr.indptr[u + 1]
        return self.csr.indices[lb:ub], self.csr.data[lb:ub]

    def item_column(self, i):
        '''
        User ordinals (ascending) and values for item ordinal `i`
        '''
        lb, ub = self.csc.indptr[i], self.csc.indptr[i + 1]
        return self.csc.indices[lb:ub], self.csc.data[lb:ub]

    def user_ratings(self, user):
        '''
        Ratings of raw user `user` as an item to value dictionary
        '''
        items, values = self.user_row(self.user_ordinal(user))
        return dict(zip(self.item_ids[items].tolist(), values.tolist()))

    def take(self, index):
        '''
        New dataset holding the ratings at positions `index`
        '''
        index = np.asarray(index, dtype=np.intp)
        return RatingsDataset(self.raw_users[index], self.raw_items[index],
                              self.values[index], self.timestamps[index],
                              self.scale)

    def to_frame(self):
        return pd.DataFrame({
            'user': self.raw_users,
            'item': self.raw_items,
            'rating': self.values,
            'timestamp': self.timestamps,
        })


@dataclass(frozen=True)
class TrainTestSplit:
    train: RatingsDataset
    test: RatingsDataset
    fold_id: int
    seed: int


def _parse_error_line(exc):
    match = re.search(r'line (\d+)', str(exc))
    return int(match.group(1)) if match else 0


def _coerce_ids(column):
    if column.str.fullmatch(r'-?\d+').all():
        return column.astype(np.int64).to_numpy()
    return column.to_numpy(dtype=object)


def load_movielens(path, format=FORMAT_ML_CSV, scale=None):
    '''
    Load a MovieLens rating file

    Parameters
    ----------
    path : str
        Path to the file. Relative paths are resolved against the working
        directory and ``RECBENCH_DATA``.
    format : {'ml100k-tab', 'ml-csv', 'ml-1m-colons'}
        Column layout of the file. All layouts store user, item, rating and
        timestamp in that order; ``ml-csv`` carries a header row.
    scale : {None, RatingScale}
        Rating scale the values must fall on.

    Returns
    -------
    dataset : RatingsDataset
        Duplicate (user, item) rows are resolved by keeping the rating with
        the latest timestamp.

    Raises
    ------
    ParseError
        If a row is malformed. The message names the line number.
    ValidationError
        If a rating is off-scale or a timestamp is negative.
    EmptyDatasetError
        If the file holds no ratings.
    '''
    scale = RatingScale() if scale is None else scale
    if format not in RATING_FORMATS:
        raise ArgumentError('load_movielens', 'unknown format %r (choose from '
                            '%s)' % (format, ', '.join(RATING_FORMATS)))
    layout = RATING_FORMATS[format]
    path = get_data_path(path)
    log.info('Loading %s ratings from %s', format, path)

    kwargs = dict(sep=layout['sep'], dtype=str, skip_blank_lines=False,
                  engine='python')
    if layout['header']:
        kwargs['header'] = 0
    else:
        kwargs['header'] = None
        kwargs['names'] = RATING_COLUMNS
    try:
        frame = pd.read_csv(path, **kwargs)
    except pd.errors.EmptyDataError:
        raise EmptyDatasetError(path, 'file is empty')
    except pd.errors.ParserError as e:
        raise ParseError(path, _parse_error_line(e), 'malformed row')

    offset = 2 if layout['header'] else 1
    if layout['header']:
        if frame.shape[1] not in (3, 4):
            raise ParseError(path, 1, 'expected 3 or 4 columns, found %d'
                             % frame.shape[1])
        frame.columns = RATING_COLUMNS[:frame.shape[1]]
        if 'timestamp' not in frame:
            frame['timestamp'] = None

    frame = frame.dropna(how='all')
    if frame.empty:
        raise EmptyDatasetError(path, 'file holds no ratings')
    lines = frame.index.to_numpy() + offset

    for column in ('user', 'item'):
        bad = frame[column].isna() | (frame[column].str.strip() == '')
        if bad.any():
            raise ParseError(path, lines[bad.to_numpy()][0],
                             'missing %s' % column)
        frame[column] = frame[column].str.strip()

    rating = pd.to_numeric(frame['rating'], errors='coerce')
    bad = rating.isna().to_numpy()
    if bad.any():
        raise ParseError(path, lines[bad][0], 'malformed rating %r'
                         % frame['rating'].to_numpy()[bad][0])

    timestamp = pd.to_numeric(frame['timestamp'], errors='coerce')
    present = frame['timestamp'].notna().to_numpy()
    bad = present & (timestamp.isna().to_numpy()
                     | (timestamp.fillna(0) % 1 != 0).to_numpy())
    if bad.any():
        raise ParseError(path, lines[bad][0], 'malformed timestamp %r'
                         % frame['timestamp'].to_numpy()[bad][0])
    timestamp = timestamp.fillna(NO_TIMESTAMP).to_numpy(dtype=np.int64)
    if (timestamp[present] < 0).any():
        line = lines[present & (timestamp < 0)][0]
        raise ValidationError('%s:%d' % (path, line), 'negative timestamp')

    values = rating.to_numpy(dtype=np.float64)
    off_scale = ~scale.contains(values)
    if off_scale.any():
        raise ValidationError('%s:%d' % (path, lines[off_scale][0]),
                              'rating %r is off the %s scale'
                              % (values[off_scale][0], scale))

    clean = pd.DataFrame({
        'user': _coerce_ids(frame['user']),
        'item': _coerce_ids(frame['item']),
        'rating': values,
        'timestamp': timestamp,
    })
    n_rows = len(clean)
    clean = clean.sort_values('timestamp', kind='mergesort') \
        .drop_duplicates(['user', 'item'], keep='last') \
        .sort_index()
    if len(clean) < n_rows:
        log.warning('%s: dropped %d duplicate ratings (kept latest)', path,
                    n_rows - len(clean))

    dataset = RatingsDataset(clean['user'].to_numpy(),
                             clean['item'].to_numpy(),
                             clean['rating'].to_numpy(),
                             clean['timestamp'].to_numpy(), scale)
    log.info('Loaded %s', dataset)
    return dataset


def save_ratings(dataset, path):
    '''
    Write `dataset` as a comma-separated file with a
    ``userId,movieId,rating,timestamp`` header (the ``ml-csv`` layout)
    '''
    frame = dataset.to_frame()
    frame['timestamp'] = frame['timestamp'].astype('Int64') \
        .mask(frame['timestamp'] == NO_TIMESTAMP)
    frame.columns = CSV_HEADER
    frame.to_csv(path, index=False)
    log.info('Wrote %d ratings to %s', dataset.n_ratings, path)


def subsample(source, n, seed):
    '''
    Draw exactly `n` ratings uniformly at random without replacement

    Parameters
    ----------
    source : RatingsDataset
        Population to sample from.
    n : int
        Number of ratings to keep.
    seed : int
        Seed for the draw. Equal seeds give equal samples.

    Raises
    ------
    ArgumentError
        If `n` is not positive.
    RangeError
        If `n` exceeds the number of ratings in `source`.
    '''
    n = int(n)
    if n <= 0:
        raise ArgumentError('subsample', 'sample size must be positive')
    if n > source.n_ratings:
        raise RangeError('subsample', 'sample size %d exceeds %d ratings'
                         % (n, source.n_ratings))
    index = make_rng(seed).choice(source.n_ratings, size=n, replace=False)
    index.sort()
    log.info('Subsampled %d of %d ratings (seed %d)', n, source.n_ratings,
             seed)
    return source.take(index)


CROSSFOLD_MODES = {
    'row': 'row',
    'row-based': 'row',
    'user': 'user',
    'user-based': 'user',
}


def crossfold(source, k, mode='row', seed=0, holdout_fraction=None):
    '''
    Partition `source` into `k` train/test splits

    Parameters
    ----------
    source : RatingsDataset
        Ratings to partition.
    k : int
        Number of folds (at least 2).
    mode : {'row', 'user'}
        ``row`` assigns every rating to exactly one test fold. ``user``
        assigns every user to exactly one test fold and holds out that
        user's ratings.
    seed : int
        Seed of the fold assignment.
    holdout_fraction : {None, float}
        User mode only. When set, only this share of each held-out user's
        ratings (at least one) goes to the test set and the rest stays in
        training.

    Returns
    -------
    splits : list of TrainTestSplit
        Test fold sizes (ratings for row mode, users for user mode) differ by
        at most one.
    '''
    if mode not in CROSSFOLD_MODES:
        raise ArgumentError('crossfold', 'unknown mode %r' % mode)
    mode = CROSSFOLD_MODES[mode]
    k = int(k)
    if k < 2:
        raise ArgumentError('crossfold', 'fold count must be at least 2')
    if holdout_fraction is not None:
        if mode != 'user':
            raise ArgumentError('crossfold',
                                'holdout_fraction requires user mode')
        if not 0 < holdout_fraction < 1:
            raise ArgumentError('crossfold',
                                'holdout_fraction must lie in (0, 1)')

    rng = make_rng(seed)
    if mode == 'row':
        if source.n_ratings < k:
            raise RangeError('crossfold', '%d folds exceed %d ratings'
                             % (k, source.n_ratings))
        blocks = np.array_split(rng.permutation(source.n_ratings), k)
        masks = []
        for block in blocks:
            mask = np.zeros(source.n_ratings, dtype=bool)
            mask[block] = True
            masks.append(mask)
    else:
        if source.n_users < k:
            raise RangeError('crossfold', '%d folds exceed %d users'
                             % (k, source.n_users))
        blocks = np.array_split(rng.permutation(source.n_users), k)
        masks = []
        for block in blocks:
            if holdout_fraction is None:
                masks.append(np.isin(source.users, block))
            else:
                masks.append(_sample_user_ratings(source, block,
                                                  holdout_fraction, rng))

    splits = []
    for fold_id, mask in enumerate(masks):
        test = source.take(np.flatnonzero(mask))
        train = source.take(np.flatnonzero(~mask))
        log.debug('fold %d: %d train, %d test', fold_id, len(train),
                  len(test))
        splits.append(TrainTestSplit(train, test, fold_id, seed))
    return splits


def _sample_user_ratings(source, block, fraction, rng):
    mask = np.zeros(source.n_ratings, dtype=bool)
    for u in np.sort(block):
        positions = source._user_order[source.csr.indptr[u]:
                                       source.csr.indptr[u + 1]]
        n_test = max(1, int(round(fraction * len(positions))))
        mask[rng.choice(positions, size=n_test, replace=False)] = True
    return mask

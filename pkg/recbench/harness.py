'''
.. module:: recbench.harness
    :synopsis: Crossvalidated experiments, grid search and result tables

An experiment is described by an :class:`ExperimentConfig`: which algorithm
to run with which hyperparameters, where the ratings come from and how they
are split into folds. :func:`run_experiment` fits the algorithm on every
training fold, predicts every test rating and reports per-fold and mean
metrics together with the wall-clock seconds spent fitting and predicting.

Configurations can be read from INI files with :func:`read_config` (and
grids with :func:`read_grid`)::

    [experiment]
    metrics = rmse, mae
    output = results.csv

    [dataset]
    path = ml-100k/u.data
    format = ml100k-tab
    scale = 1:5:1

    [folds]
    k = 5
    seed = 42

    [algorithm]
    kind = svd
    factors = 100

    [grid]
    lr_gamma = 0.005, 0.01

    [search]
    objective = rmse
'''
import configparser
import dataclasses
import itertools
import json
import time
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from . import metrics
from .algorithms import make_algorithm
from .bench_error import ConfigError, RecBenchError, ValidationError
from .constants import (ACCURACY_METRICS, BENCHMARK_RMSE,
                        DEFAULT_RELEVANCE_THRESHOLD, DEFAULT_TOP_N,
                        FORMAT_ML_CSV, HIGHER_IS_BETTER, RANKING_METRICS)
from .dataset import RatingScale, crossfold, load_movielens, subsample
from .util import coerce_value, get_thread_count, split_list

import logging
log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AlgorithmSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        # Raises ConfigError on an unknown kind or hyperparameter.
        make_algorithm(self.kind, self.params)


@dataclass(frozen=True)
class DatasetSpec:
    path: str
    format: str = FORMAT_ML_CSV
    subsample: int = None
    scale: RatingScale = field(default_factory=RatingScale)


@dataclass(frozen=True)
class FoldSpec:
    k: int = 5
    mode: str = 'row'
    seed: int = 42
    holdout_fraction: float = None

    def __post_init__(self):
        if self.k < 2:
            raise ConfigError('folds', 'k must be at least 2')


@dataclass(frozen=True)
class ExperimentConfig:
    algorithm: AlgorithmSpec
    dataset: DatasetSpec = None
    folds: FoldSpec = field(default_factory=FoldSpec)
    metrics: tuple = ('rmse', 'mae')
    relevance_threshold: float = DEFAULT_RELEVANCE_THRESHOLD
    top_n: int = DEFAULT_TOP_N
    output: str = None
    threads: int = None
    run_id: str = '0'

    def __post_init__(self):
        object.__setattr__(self, 'metrics', tuple(self.metrics))
        if not self.metrics:
            raise ConfigError('experiment', 'metrics must not be empty')
        for name in self.metrics:
            if name not in ACCURACY_METRICS + RANKING_METRICS:
                raise ConfigError('experiment', 'unknown metric %r' % name)
        if self.top_n < 1:
            raise ConfigError('experiment', 'top_n must be at least 1')

    @property
    def ranking_metrics(self):
        return [m for m in self.metrics if m in RANKING_METRICS]


@dataclass(frozen=True)
class GridSpec:
    '''
    Hyperparameter grid. Combinations are enumerated in axis order with the
    last axis varying fastest.
    '''
    axes: dict
    objective: str = 'rmse'

    def __post_init__(self):
        if not self.axes:
            raise ConfigError('grid', 'grid has no axes')
        for name, values in self.axes.items():
            if not len(values):
                raise ConfigError('grid', 'axis %r has no values' % name)
        if self.objective not in ACCURACY_METRICS + RANKING_METRICS:
            raise ConfigError('search', 'unknown objective %r'
                              % self.objective)

    @property
    def size(self):
        return int(np.prod([len(v) for v in self.axes.values()]))

    def combinations(self):
        names = list(self.axes)
        for values in itertools.product(*self.axes.values()):
            yield dict(zip(names, values))


@dataclass
class FoldResult:
    fold_id: int
    n_train: int
    n_test: int
    metrics: dict
    cold_start: int
    seconds: float = field(default=0.0, compare=False)


@dataclass
class RunResult:
    run_id: str
    algo: str
    params: dict
    data_size: int
    seed: int
    folds: list
    metrics: dict
    wall_clock_seconds: float = field(default=0.0, compare=False)

    @property
    def rmse(self):
        return self.metrics.get('rmse')

    @property
    def mae(self):
        return self.metrics.get('mae')

    def summary(self):
        return 'algo={} n={} rmse={:.4f} mae={:.4f} secs={:.2f}'.format(
            self.algo, self.data_size, self.metrics.get('rmse', np.nan),
            self.metrics.get('mae', np.nan), self.wall_clock_seconds)


def load_dataset(spec, seed):
    '''
    Load (and optionally subsample) the dataset named by a DatasetSpec
    '''
    dataset = load_movielens(spec.path, spec.format, spec.scale)
    if spec.subsample is not None:
        dataset = subsample(dataset, spec.subsample, seed)
    return dataset


def _ranking(algorithm, train, test, names, threshold, top_n):
    test_users = train.lookup_users(test.user_ids)
    values = {name: [] for name in names}
    for t, u in enumerate(test_users):
        if u < 0:
            continue
        items, ratings = test.user_row(t)
        relevant = set(test.item_ids[items[
            metrics.is_relevant(ratings, threshold)]].tolist())
        if not relevant:
            continue
        recommended = train.item_ids[algorithm.recommend(u, top_n)].tolist()
        if 'precision' in values:
            values['precision'].append(
                metrics.precision_at_k(recommended, relevant, top_n))
        if 'recall' in values:
            values['recall'].append(
                metrics.recall_at_k(recommended, relevant, top_n))
        if 'ndcg' in values:
            values['ndcg'].append(
                metrics.ndcg_at_k(recommended, relevant, top_n))
        if 'auc' in values:
            labels = metrics.is_relevant(ratings, threshold).astype(int)
            if 0 < labels.sum() < len(labels):
                i = train.lookup_items(test.item_ids[items])
                scores = algorithm.predict(np.full(len(i), u), i)
                values['auc'].append(metrics.roc_auc(scores, labels))
    return {name: float(np.mean(v)) if v else float('nan')
            for name, v in values.items()}


def _run_fold(kind, params, split, config):
    train, test = split.train, split.test
    try:
        algorithm = make_algorithm(kind, params)
        start = time.perf_counter()
        algorithm.fit(train)
        users = train.lookup_users(test.raw_users)
        items = train.lookup_items(test.raw_items)
        predicted = np.asarray(algorithm.predict(users, items),
                               dtype=np.float64)
        seconds = time.perf_counter() - start

        cold = int(np.sum((users < 0) | (items < 0)))
        if cold:
            log.warning('fold %d: %d cold-start test ratings', split.fold_id,
                        cold)
        pairs = np.column_stack((predicted, test.values))
        result = {}
        if 'rmse' in config.metrics:
            result['rmse'] = metrics.rmse(pairs)
        if 'mae' in config.metrics:
            result['mae'] = metrics.mae(pairs)
        if config.ranking_metrics:
            result.update(_ranking(algorithm, train, test,
                                   config.ranking_metrics,
                                   config.relevance_threshold, config.top_n))
    except RecBenchError as e:
        e.fold = split.fold_id
        raise
    log.info('fold %d: %s %s', split.fold_id, kind, ' '.join(
        '%s=%.4f' % item for item in result.items()))
    return FoldResult(split.fold_id, len(train), len(test), result, cold,
                      seconds)


def run_experiment(config, dataset=None, splits=None):
    '''
    Run a crossvalidated experiment

    Parameters
    ----------
    config : ExperimentConfig
    dataset : {None, RatingsDataset}
        Ratings to split. Loaded from ``config.dataset`` when omitted.
    splits : {None, list of TrainTestSplit}
        Precomputed folds. When given, `dataset` and ``config.folds`` are
        not used for splitting.

    Returns
    -------
    result : RunResult
        Mean metrics are the arithmetic means of the fold metrics. Folds are
        reported in fold order regardless of the number of threads.

    Raises
    ------
    ConfigError
        If a ranking metric is requested for an algorithm that cannot rank.
    RecBenchError
        Errors raised inside a fold carry the fold index in ``fold``.
    '''
    spec = config.algorithm
    algorithm = make_algorithm(spec.kind, spec.params)
    if config.ranking_metrics and not algorithm.ranking_supported:
        raise ConfigError(spec.kind, 'ranking metrics %s are undefined for '
                          'this algorithm'
                          % ', '.join(config.ranking_metrics))
    params = dict(spec.params)
    if algorithm.accepts_seed:
        params.setdefault('seed', config.folds.seed)

    if splits is None:
        if dataset is None:
            if config.dataset is None:
                raise ConfigError('experiment', 'no dataset configured')
            dataset = load_dataset(config.dataset, config.folds.seed)
        splits = crossfold(dataset, config.folds.k, config.folds.mode,
                           config.folds.seed, config.folds.holdout_fraction)
    data_size = len(splits[0].train) + len(splits[0].test)

    n_jobs = min(get_thread_count(config.threads), len(splits))
    log.info('run %s: %s on %d ratings, %d folds, %d threads',
             config.run_id, spec.kind, data_size, len(splits), n_jobs)
    start = time.perf_counter()
    folds = Parallel(n_jobs=n_jobs, prefer='threads')(
        delayed(_run_fold)(spec.kind, params, split, config)
        for split in splits)
    seconds = time.perf_counter() - start

    names = list(folds[0].metrics)
    means = {name: float(np.mean([f.metrics[name] for f in folds]))
             for name in names}
    result = RunResult(config.run_id, spec.kind, dict(spec.params),
                       data_size, config.folds.seed, folds, means, seconds)
    log.info('run %s: %s', config.run_id, result.summary())
    return result


def grid_search(kind, grid, config, dataset=None, splits=None):
    '''
    Evaluate every combination of a grid on identical folds

    Parameters
    ----------
    kind : str
        Algorithm kind.
    grid : GridSpec
    config : ExperimentConfig
        Base configuration. Its algorithm parameters are overridden by each
        combination.

    Returns
    -------
    best : dict
        Complete parameters of the combination with the best mean
        objective, the highest for ranking metrics and the lowest for error
        metrics. Ties keep the earliest combination.
    results : list of RunResult
        One result per combination in enumeration order.
    '''
    if splits is None:
        if dataset is None:
            if config.dataset is None:
                raise ConfigError('experiment', 'no dataset configured')
            dataset = load_dataset(config.dataset, config.folds.seed)
        splits = crossfold(dataset, config.folds.k, config.folds.mode,
                           config.folds.seed, config.folds.holdout_fraction)

    metrics_needed = tuple(config.metrics)
    if grid.objective not in metrics_needed:
        metrics_needed += (grid.objective,)

    sign = -1 if grid.objective in HIGHER_IS_BETTER else 1
    best, best_score, results = None, np.inf, []
    log.info('grid search over %d combinations of %s', grid.size,
             ', '.join(grid.axes))
    for n, combination in enumerate(grid.combinations()):
        params = dict(config.algorithm.params)
        params.update(combination)
        run = dataclasses.replace(
            config, algorithm=AlgorithmSpec(kind, params),
            metrics=metrics_needed, run_id=str(n))
        result = run_experiment(run, splits=splits)
        results.append(result)
        score = result.metrics[grid.objective]
        if sign * score < best_score:
            best, best_score = params, sign * score
    if best is None:
        best = results[0].params
    log.info('grid search best %s=%.4f at %r', grid.objective,
             sign * best_score, best)
    return best, results


def _result_rows(results, include_timing):
    hyper = []
    for r in results:
        for name in r.params:
            if name not in hyper:
                hyper.append(name)
    scores = []
    for r in results:
        for name in r.metrics:
            if name not in scores:
                scores.append(name)
    rows = []
    for r in results:
        row = {'run_id': r.run_id, 'algo': r.algo, 'data_size': r.data_size}
        for name in hyper:
            row[name] = r.params.get(name)
        for name in scores:
            row[name] = r.metrics.get(name)
        if include_timing:
            row['clock_seconds'] = r.wall_clock_seconds
        rows.append(row)
    columns = ['run_id', 'algo', 'data_size'] + hyper + scores
    if include_timing:
        columns.append('clock_seconds')
    return rows, columns


def export_results(results, format, path, include_timing=True):
    '''
    Write a results table

    Parameters
    ----------
    results : list of RunResult
    format : {'csv', 'json'}
        ``csv`` writes one row per run with columns run_id, algo,
        data_size, the hyperparameters, the metrics and clock_seconds.
        ``json`` writes the complete results including fold metrics.
    path : str
    include_timing : bool
        Without timing the output depends only on configuration and seeds.
    '''
    if not results:
        raise ConfigError('export_results', 'no results to export')
    if format == 'csv':
        rows, columns = _result_rows(results, include_timing)
        pd.DataFrame(rows, columns=columns).to_csv(path, index=False)
    elif format == 'json':
        data = []
        for r in results:
            entry = dataclasses.asdict(r)
            if not include_timing:
                del entry['wall_clock_seconds']
                for fold in entry['folds']:
                    del fold['seconds']
            data.append(entry)
        with open(path, 'w') as fh:
            json.dump(data, fh, indent=2)
            fh.write('\n')
    else:
        raise ConfigError('export_results', 'unknown format %r' % format)
    log.info('Wrote %d results to %s', len(results), path)


def load_results(path):
    '''
    Read results written by :func:`export_results` in json format
    '''
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValidationError(path, 'not a json file (%s)' % e)
    results = []
    try:
        for entry in data:
            folds = [FoldResult(**fold) for fold in entry.pop('folds')]
            results.append(RunResult(folds=folds, **entry))
    except (TypeError, KeyError, AttributeError) as e:
        raise ValidationError(path, 'not a results file (%s)' % e)
    return results


def benchmark_comparison(results, tolerance=0.1):
    '''
    Compare run RMSEs with published benchmark values

    Runs whose data size lies within `tolerance` (relative) of a benchmark
    size are matched against the benchmark for the same algorithm.

    Returns
    -------
    rows : list of dict
        Keys algo, data_size, benchmark_rmse, model_rmse and difference
        (benchmark minus model).
    '''
    rows = []
    for r in results:
        for (algo, size), value in BENCHMARK_RMSE.items():
            if algo != r.algo or abs(r.data_size - size) > tolerance * size:
                continue
            rows.append({'algo': r.algo, 'data_size': size,
                         'benchmark_rmse': value, 'model_rmse': r.rmse,
                         'difference': value - r.rmse})
    return rows


SECTIONS = {
    'experiment': ('metrics', 'relevance_threshold', 'top_n', 'output',
                   'threads'),
    'dataset': ('path', 'format', 'subsample', 'scale'),
    'folds': ('k', 'mode', 'seed', 'holdout_fraction'),
}


def _read_ini(path):
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as e:
        raise ConfigError(path, str(e).splitlines()[0])
    return parser


def _check_keys(path, parser, section, allowed):
    for key in parser[section]:
        if key not in allowed:
            raise ConfigError(path, 'unknown key %r in [%s]'
                              % (key, section))


def config_from_parser(parser, path='<config>', overrides=None):
    '''
    Build an ExperimentConfig from a parsed INI document
    '''
    for section in parser.sections():
        if section in SECTIONS:
            _check_keys(path, parser, section, SECTIONS[section])
        elif section not in ('algorithm', 'grid', 'search'):
            raise ConfigError(path, 'unknown section [%s]' % section)

    def get(section, key, default=None):
        if parser.has_option(section, key):
            return coerce_value(parser.get(section, key))
        return default

    if not parser.has_option('algorithm', 'kind'):
        raise ConfigError(path, 'missing key kind in [algorithm]')
    params = {k: coerce_value(v) for k, v in parser['algorithm'].items()
              if k != 'kind'}
    params.update(overrides or {})
    algorithm = AlgorithmSpec(parser.get('algorithm', 'kind').strip(),
                              params)

    dataset = None
    if parser.has_option('dataset', 'path'):
        scale = get('dataset', 'scale')
        dataset = DatasetSpec(str(get('dataset', 'path')),
                              get('dataset', 'format', FORMAT_ML_CSV),
                              get('dataset', 'subsample'),
                              RatingScale.parse(scale) if scale
                              else RatingScale())
    folds = FoldSpec(get('folds', 'k', 5), get('folds', 'mode', 'row'),
                     get('folds', 'seed', 42),
                     get('folds', 'holdout_fraction'))
    names = parser.get('experiment', 'metrics', fallback='rmse, mae')
    return ExperimentConfig(
        algorithm, dataset, folds,
        metrics=tuple(str(m) for m in split_list(names)),
        relevance_threshold=get('experiment', 'relevance_threshold',
                                DEFAULT_RELEVANCE_THRESHOLD),
        top_n=get('experiment', 'top_n', DEFAULT_TOP_N),
        output=get('experiment', 'output'),
        threads=get('experiment', 'threads'))


def read_config(path, overrides=None):
    '''
    Read an experiment configuration file

    Raises
    ------
    ConfigError
        On a malformed file, an unknown section or key, or invalid values.
        The message names the offending key.
    '''
    return config_from_parser(_read_ini(path), path, overrides)


def read_grid(path):
    '''
    Read the ``[grid]`` and ``[search]`` sections of a grid file

    Every key of ``[grid]`` is a hyperparameter axis with comma-separated
    candidate values.
    '''
    parser = _read_ini(path)
    if not parser.has_section('grid'):
        raise ConfigError(path, 'missing [grid] section')
    axes = {}
    for key, text in parser['grid'].items():
        values = split_list(text)
        if not values:
            raise ConfigError(path, 'grid axis %r has no values' % key)
        axes[key] = values
    if not axes:
        raise ConfigError(path, 'grid is empty')
    if parser.has_section('search'):
        _check_keys(path, parser, 'search', ('objective',))
    objective = parser.get('search', 'objective', fallback='rmse').strip()
    return GridSpec(axes, objective)

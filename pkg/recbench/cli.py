'''
Command line driver

Usage::

    recbench run --algo svd --data ml-100k/u.data --format ml100k-tab \\
        --scale 1:5:1 --folds 5 --seed 42 --out results.csv
    recbench grid --config svd.ini --grid svd.ini --out grid.csv
    recbench subsample --data ratings.csv --size 100000 --out r100k.csv
    recbench replicate --table 6 --data ratings.csv --size 250000
    recbench compare results.json

Exit status is 0 on success, 1 when the command line, a configuration file
or the input data is invalid and 2 when an experiment fails at run time.
'''
import argparse
import dataclasses
import logging
import os
import sys

from . import __version__
from .bench_error import ConfigError, RecBenchError
from .constants import (ALGORITHM_KINDS, DEFAULT_RELEVANCE_THRESHOLD,
                        DEFAULT_TOP_N, FORMAT_ML_CSV, RATING_FORMATS)
from .dataset import RatingScale, crossfold, save_ratings, subsample
from .harness import (AlgorithmSpec, DatasetSpec, ExperimentConfig, FoldSpec,
                      GridSpec, benchmark_comparison, export_results,
                      grid_search, load_dataset, load_results, read_config,
                      read_grid, run_experiment)
from .presets import TABLES, table_kind
from .util import coerce_value, get_data_path, split_list

log = logging.getLogger(__name__)


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, '%s: error: %s\n' % (self.prog, message))


def _parse_overrides(items):
    params = {}
    for item in items or []:
        key, sep, value = item.partition('=')
        if not sep or not key.strip():
            raise ConfigError('--set', 'expected key=value, got %r' % item)
        params[key.strip()] = coerce_value(value)
    return params


def _output_format(path):
    return 'json' if os.path.splitext(path)[1].lower() == '.json' else 'csv'


def _scale(text):
    return RatingScale.parse(text) if text else RatingScale()


def _dataset_spec(args, base=None):
    if args.data is None:
        return base
    return DatasetSpec(get_data_path(args.data), args.format,
                       args.size, _scale(args.scale))


def _experiment_config(args):
    overrides = _parse_overrides(args.set)
    if getattr(args, 'similarity', None) is not None:
        overrides['similarity'] = args.similarity

    if args.config is not None:
        config = read_config(args.config, overrides)
        changes = {}
        if args.algo is not None:
            changes['algorithm'] = AlgorithmSpec(
                args.algo, dict(config.algorithm.params))
        dataset = _dataset_spec(args, config.dataset)
        if dataset is not config.dataset:
            changes['dataset'] = dataset
        folds = {}
        if args.folds is not None:
            folds['k'] = args.folds
        if args.seed is not None:
            folds['seed'] = args.seed
        if args.mode is not None:
            folds['mode'] = args.mode
        if folds:
            changes['folds'] = dataclasses.replace(config.folds, **folds)
        if args.metrics is not None:
            changes['metrics'] = tuple(split_list(args.metrics))
        if args.out is not None:
            changes['output'] = args.out
        if args.threads is not None:
            changes['threads'] = args.threads
        config = dataclasses.replace(config, **changes)
    else:
        if args.algo is None:
            raise UsageError('the following arguments are required: --algo '
                             '(or --config)')
        if args.data is None:
            raise UsageError('the following arguments are required: --data '
                             '(or --config)')
        folds = FoldSpec(args.folds or 5, args.mode or 'row',
                         42 if args.seed is None else args.seed)
        config = ExperimentConfig(
            AlgorithmSpec(args.algo, overrides), _dataset_spec(args), folds,
            metrics=tuple(split_list(args.metrics or 'rmse,mae')),
            relevance_threshold=args.threshold, top_n=args.top_n,
            output=args.out, threads=args.threads)
    if config.dataset is None:
        raise UsageError('no dataset given (use --data or a [dataset] '
                         'section)')
    return config


def _export(results, path, args):
    if path is not None:
        export_results(results, _output_format(path), path,
                       include_timing=not args.no_timing)


def cmd_run(args):
    config = _experiment_config(args)
    result = run_experiment(config)
    _export([result], config.output, args)
    print(result.summary())
    return 0


def cmd_grid(args):
    config = _experiment_config(args)
    grid = read_grid(args.grid)
    best, results = grid_search(config.algorithm.kind, grid, config)
    _export(results, config.output, args)
    for result in results:
        print(result.summary())
    print('best: ' + ' '.join('{}={}'.format(k, v) for k, v in best.items()))
    return 0


def cmd_subsample(args):
    spec = DatasetSpec(get_data_path(args.data), args.format, None,
                       _scale(args.scale))
    dataset = load_dataset(spec, args.seed)
    sample = subsample(dataset, args.size, args.seed)
    save_ratings(sample, args.out)
    print('wrote {} ratings to {}'.format(len(sample), args.out))
    return 0


def _replicate_grid(table, config, splits):
    kind = table['kind']
    grid = GridSpec(table['grid'])
    best, results = grid_search(kind, grid, config, splits=splits)
    tuned = untuned = None
    for result in results:
        if tuned is None and result.params == best:
            tuned = result
        if untuned is None and all(result.params.get(k) == v for k, v in
                                   table['untuned'].items()):
            untuned = result
    return [dataclasses.replace(tuned, run_id='tuned'),
            dataclasses.replace(untuned, run_id='untuned')]


def cmd_replicate(args):
    if args.table not in TABLES:
        raise ConfigError('replicate', 'table %d is not a run set (choose '
                          'from %s)' % (args.table,
                                        ', '.join(map(str, TABLES))))
    table = TABLES[args.table]
    spec = DatasetSpec(get_data_path(args.data), args.format, args.size,
                       _scale(args.scale))
    folds = FoldSpec(args.folds or 5, 'row',
                     42 if args.seed is None else args.seed)
    log.info('Replicating table %d: %s', args.table, table['title'])
    dataset = load_dataset(spec, folds.seed)
    splits = crossfold(dataset, folds.k, folds.mode, folds.seed)

    if 'grid' in table:
        base = ExperimentConfig(AlgorithmSpec(table['kind']), spec, folds,
                                threads=args.threads)
        results = _replicate_grid(table, base, splits)
    else:
        results = []
        for label, params in table['rows']:
            config = ExperimentConfig(
                AlgorithmSpec(table_kind(table, label), params), spec, folds,
                threads=args.threads, run_id=label)
            results.append(run_experiment(config, splits=splits))

    for result in results:
        line = '{}: {}'.format(result.run_id, result.summary())
        reference = table['reference'].get(result.run_id)
        if reference is not None and 0.9 * 100000 <= result.data_size \
                <= 1.1 * 100000:
            line += ' published_rmse={:.4f}'.format(reference[0])
        print(line)
    _export(results, args.out, args)
    return 0


def cmd_compare(args):
    results = []
    for path in args.results:
        results.extend(load_results(path))
    rows = benchmark_comparison(results)
    if not rows:
        print('no results match a benchmark size')
    for row in rows:
        print('algo={algo} n={data_size} benchmark={benchmark_rmse:.4f} '
              'model={model_rmse:.4f} difference={difference:+.4f}'
              .format(**row))
    return 0


def _common(parser):
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='log progress (repeat for debug output)')
    parser.add_argument('--threads', type=int, default=None,
                        help='worker threads for fold parallelism '
                        '(capped by RECBENCH_THREADS; default: %(default)s)')
    parser.add_argument('--no-timing', action='store_true',
                        help='leave clock_seconds out of the results file')


def _data_flags(parser, required=False):
    parser.add_argument('--data', required=required, default=None,
                        help='rating file (searched in the working directory '
                        'and RECBENCH_DATA)')
    parser.add_argument('--format', default=FORMAT_ML_CSV,
                        choices=sorted(RATING_FORMATS),
                        help='rating file layout (default: %(default)s)')
    parser.add_argument('--scale', default=None,
                        help='rating scale as min:max:step (default: '
                        '0.5:5:0.5)')


def _run_flags(parser):
    parser.add_argument('--config', default=None,
                        help='experiment configuration file')
    parser.add_argument('--algo', default=None, choices=ALGORITHM_KINDS,
                        help='algorithm kind')
    _data_flags(parser)
    parser.add_argument('--size', type=int, default=None,
                        help='subsample this many ratings before splitting')
    parser.add_argument('--folds', type=int, default=None,
                        help='number of folds (default: 5)')
    parser.add_argument('--mode', default=None, choices=['row', 'user'],
                        help='crossfold mode (default: row)')
    parser.add_argument('--seed', type=int, default=None,
                        help='fold and model seed (default: 42)')
    parser.add_argument('--metrics', default=None,
                        help='comma-separated metrics (default: rmse,mae)')
    parser.add_argument('--top-n', type=int, default=DEFAULT_TOP_N,
                        help='length of recommendation lists for ranking '
                        'metrics (default: %(default)s)')
    parser.add_argument('--threshold', type=float,
                        default=DEFAULT_RELEVANCE_THRESHOLD,
                        help='minimum relevant rating (default: '
                        '%(default)s)')
    parser.add_argument('--similarity', default=None,
                        help='similarity for knn_user (ignored by mf_als)')
    parser.add_argument('--set', action='append', metavar='KEY=VALUE',
                        help='hyperparameter override (repeatable)')
    parser.add_argument('--out', default=None,
                        help='results file (.csv or .json)')


def build_parser():
    parser = Parser(prog='recbench', description='Collaborative filtering '
                    'benchmark harness')
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + __version__)
    sub = parser.add_subparsers(dest='command', parser_class=Parser)
    sub.required = True

    p = sub.add_parser('run', help='run a crossvalidated experiment',
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _run_flags(p)
    _common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser('grid', help='grid search over hyperparameters',
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument('--grid', required=True,
                   help='file with [grid] and optional [search] sections')
    _run_flags(p)
    _common(p)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser('subsample', help='write a random subset of ratings',
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _data_flags(p, required=True)
    p.add_argument('--size', type=int, required=True,
                   help='number of ratings to keep')
    p.add_argument('--seed', type=int, default=42, help='sampling seed')
    p.add_argument('--out', required=True, help='output ml-csv file')
    _common(p)
    p.set_defaults(func=cmd_subsample)

    p = sub.add_parser('replicate', help='rerun the rows of a result table',
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument('--table', type=int, required=True,
                   help='table id (%s)' % ', '.join(map(str, TABLES)))
    _data_flags(p, required=True)
    p.add_argument('--size', type=int, default=None,
                   help='subsample this many ratings first')
    p.add_argument('--folds', type=int, default=None, help='number of folds')
    p.add_argument('--seed', type=int, default=None, help='fold seed')
    p.add_argument('--out', default=None, help='results file (.csv or .json)')
    _common(p)
    p.set_defaults(func=cmd_replicate)

    p = sub.add_parser('compare', help='compare results with published '
                       'benchmark RMSE values',
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument('results', nargs='+', help='json results files')
    _common(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose,
                                                      logging.DEBUG)
    logging.basicConfig(level=level,
                        format='%(asctime)s %(name)s %(levelname)s '
                        '%(message)s')
    try:
        return args.func(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print('recbench: error: %s' % e, file=sys.stderr)
        return 1
    except RecBenchError as e:
        if isinstance(e, ArithmeticError):
            print('recbench: failed: %s' % e, file=sys.stderr)
            return 2
        print('recbench: error: %s' % e, file=sys.stderr)
        return 1
    except OSError as e:
        print('recbench: error: %s' % e, file=sys.stderr)
        return 1
    except Exception as e:
        log.debug('Experiment failed', exc_info=True)
        print('recbench: failed: %s' % e, file=sys.stderr)
        return 2

import logging

logger = logging.getLogger(__name__)
logger.addHandler(logging.NullHandler())

from .bench_error import RecBenchError
from .dataset import (RatingScale, RatingsDataset, TrainTestSplit, crossfold,
                      load_movielens, save_ratings, subsample)
from .algorithms import make_algorithm
from .harness import (AlgorithmSpec, DatasetSpec, ExperimentConfig, FoldSpec,
                      GridSpec, RunResult, export_results, grid_search,
                      read_config, run_experiment)
from .serialize import load_model, save_model

try:
    from importlib.metadata import version
    __version__ = version("recbench")
except Exception:
    # Catch a generic exception which will handle both PackageNotFoundError and
    # ImportError.
    try:
        from .version import __version__
    except ImportError:
        # package is not installed. probably some munging of Python path going
        # on here.
        __version__ = '0.0.0'

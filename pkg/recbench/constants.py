# Rating scale used by the MovieLens "latest" family (half-star ratings, ten
# distinct values). ML-100K and ML-1M use whole stars and must be loaded with
# an explicit 1-5 step 1 scale.
DEFAULT_SCALE_MIN = 0.5
DEFAULT_SCALE_MAX = 5.0
DEFAULT_SCALE_STEP = 0.5

WHOLE_STAR_SCALE = (1.0, 5.0, 1.0)

# Column layout of the supported rating files. Every format stores the
# columns in the order user, item, rating, timestamp.
FORMAT_ML100K_TAB = 'ml100k-tab'
FORMAT_ML_CSV = 'ml-csv'
FORMAT_ML1M_COLONS = 'ml-1m-colons'

RATING_FORMATS = {
    FORMAT_ML100K_TAB: {'sep': '\t', 'header': False},
    FORMAT_ML_CSV: {'sep': ',', 'header': True},
    FORMAT_ML1M_COLONS: {'sep': '::', 'header': False},
}

RATING_COLUMNS = ['user', 'item', 'rating', 'timestamp']
CSV_HEADER = ['userId', 'movieId', 'rating', 'timestamp']

# Marks a missing timestamp in the int64 timestamp column.
NO_TIMESTAMP = -1

# Defaults for the neighborhood and baseline models.
DEFAULT_DAMPING = 5.0
DEFAULT_SHRINKAGE = 100.0
DEFAULT_K_NEIGHBORS = 40
DEFAULT_TOP_N = 10
DEFAULT_RELEVANCE_THRESHOLD = 4.0

# Published benchmark RMSE values (algorithm, data size) used when comparing
# a run set against the reference framework's numbers.
BENCHMARK_RMSE = {
    ('knn_user', 100000): 0.98,
    ('knn_user', 1000000): 0.92,
    ('mf_als', 100000): 0.96,
    ('mf_als', 1000000): 0.92,
    ('svd', 100000): 0.93,
    ('svd', 1000000): 0.87,
    ('svdpp', 100000): 0.92,
    ('svdpp', 1000000): 0.86,
}

ALGORITHM_KINDS = ['knn_user', 'mf_als', 'svd', 'svdpp', 'rbm', 'autoencoder',
                   'baseline', 'global_mean']

ACCURACY_METRICS = ['rmse', 'mae']
RANKING_METRICS = ['precision', 'recall', 'ndcg', 'auc']
# Grid search maximizes these objectives and minimizes the rest.
HIGHER_IS_BETTER = frozenset(RANKING_METRICS)

# Version of the on-disk model dump. Readers accept any dump with the same
# major version.
MODEL_FORMAT_VERSION = '1.0'

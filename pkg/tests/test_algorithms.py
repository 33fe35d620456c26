import numpy as np
import pytest

from recbench.algorithms import ALGORITHMS, make_algorithm
from recbench.bench_error import ConfigError
from recbench.constants import ALGORITHM_KINDS
from recbench.dataset import RatingsDataset


SMALL_PARAMS = {
    'knn_user': {'k': 5},
    'mf_als': {'factors': 2, 'epochs': 3},
    'svd': {'factors': 3, 'epochs': 3},
    'svdpp': {'factors': 3, 'epochs': 3},
    'rbm': {'hidden': 3, 'epochs': 2, 'batch_size': 5},
    'autoencoder': {'hidden': 3, 'epochs': 2, 'batch_size': 5},
    'baseline': {},
    'global_mean': {},
}


@pytest.fixture
def train():
    rng = np.random.default_rng(0)
    mask = rng.random((20, 12)) < 0.4
    users, items = np.nonzero(mask)
    values = rng.integers(1, 11, size=len(users)) / 2
    return RatingsDataset(users, items, values)


def test_registry_covers_every_kind():
    assert sorted(ALGORITHMS) == sorted(ALGORITHM_KINDS)


@pytest.mark.parametrize('kind', ALGORITHM_KINDS)
def test_fit_predict(kind, train):
    algorithm = make_algorithm(kind, SMALL_PARAMS[kind]).fit(train)
    users = np.array([0, 1, -1, 2, -1])
    items = np.array([0, -1, 3, 4, -1])
    predicted = np.asarray(algorithm.predict(users, items))
    assert predicted.shape == (5,)
    assert np.all(np.isfinite(predicted))
    assert np.all((predicted >= 0.5) & (predicted <= 5.0))


@pytest.mark.parametrize('kind', [k for k in ALGORITHM_KINDS
                                  if k != 'global_mean'])
def test_recommend_excludes_rated(kind, train):
    algorithm = make_algorithm(kind, SMALL_PARAMS[kind]).fit(train)
    assert algorithm.ranking_supported
    recommended = np.asarray(algorithm.recommend(0, 4))
    assert len(recommended) <= 4
    assert not set(recommended.tolist()) & set(train.user_row(0)[0].tolist())


def test_global_mean(train):
    algorithm = make_algorithm('global_mean').fit(train)
    assert not algorithm.ranking_supported
    assert algorithm.predict([0, -1], [1, -1]).tolist() == \
        pytest.approx([train.global_mean] * 2)


def test_aliases_and_ignored_keys():
    als = make_algorithm('mf_als', {'lambda': 0.2, 'factors': 5,
                                    'similarity': 'msd'})
    assert als.config.lam == 0.2
    assert als.config.features == 5
    svd = make_algorithm('svd', {'lr': 0.01, 'reg': 0.05})
    assert svd.config.lr_gamma == 0.01
    assert svd.config.reg_lambda == 0.05
    knn = make_algorithm('knn_user', {'k': 20, 'n': 5,
                                      'similarity': 'pearson-baseline',
                                      'shrinkage': 50})
    assert knn.config.k_neighbors == 20
    assert knn.similarity.variant == 'pearson_baseline'
    assert knn.similarity.shrinkage == 50
    assert str(make_algorithm('baseline', {'damping': 2})) == \
        'baseline(damping=2)'


def test_config_errors():
    with pytest.raises(ConfigError, match='unknown kind'):
        make_algorithm('slope_one')
    with pytest.raises(ConfigError, match="unknown hyperparameter 'depth'"):
        make_algorithm('svd', {'depth': 3})
    with pytest.raises(ConfigError, match='factors must be at least 1'):
        make_algorithm('svd', {'factors': 0})
    with pytest.raises(ConfigError, match='unknown similarity'):
        make_algorithm('knn_user', {'similarity': 'jaccard'})
    with pytest.raises(ConfigError):
        make_algorithm('global_mean', {'damping': 1})

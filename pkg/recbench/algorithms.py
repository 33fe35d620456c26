'''
.. module:: recbench.algorithms
    :synopsis: Uniform fit/predict/recommend wrappers for every algorithm kind

The experiment harness only deals with :class:`Algorithm` objects. Each one
is built from a kind name and a dictionary of hyperparameters; the
dictionary is validated against the kind's configuration dataclass and
unknown keys are rejected.

Prediction works on training ordinals. Test users and items that are absent
from training arrive as -1 and take each model's cold-start path.
'''
import dataclasses

import numpy as np

from .baselines import fit_baseline, predict_baseline, baseline_scores
from .bench_error import ConfigError, RecBenchError
from .constants import DEFAULT_DAMPING, DEFAULT_SHRINKAGE
from .factorization import AlsConfig, SgdConfig, als_fit, sgd_fit, svdpp_fit
from .neighborhood import KnnConfig, SimilarityKind, UserKnn
from .neural import AeConfig, RbmConfig, ae_fit, rbm_fit

import logging
log = logging.getLogger(__name__)


def build_config(kind, config_class, params, aliases=None, ignored=(),
                 extra=()):
    '''
    Instantiate `config_class` from `params`

    Parameters
    ----------
    kind : str
        Algorithm kind, used in error messages.
    config_class : dataclass type
    params : dict
        Hyperparameters. Keys may use the names in `aliases`.
    aliases : {None, dict}
        Alternative name to field name map.
    ignored : sequence of str
        Keys accepted for compatibility but without effect.
    extra : sequence of str
        Keys consumed by the caller rather than the configuration.

    Raises
    ------
    ConfigError
        On an unknown key or a value the configuration rejects.
    '''
    aliases = aliases or {}
    names = {f.name for f in dataclasses.fields(config_class)}
    kwargs = {}
    for key, value in params.items():
        name = aliases.get(key, key)
        if name in ignored:
            log.info('%s: ignoring hyperparameter %s=%r', kind, key, value)
        elif name in extra:
            continue
        elif name not in names:
            raise ConfigError(kind, 'unknown hyperparameter %r' % key)
        else:
            kwargs[name] = value
    try:
        return config_class(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(kind, str(e))


def _top_scored(scores, exclude, n):
    scores = np.asarray(scores, dtype=np.float64).copy()
    order = np.lexsort((np.arange(len(scores)), -scores))
    keep = np.ones(len(scores), dtype=bool)
    keep[exclude] = False
    return order[keep[order]][:n]


class Algorithm:
    '''
    Base class of the algorithm wrappers

    Subclasses set `kind` and implement :meth:`fit` and :meth:`predict`.
    Score-based subclasses inherit :meth:`recommend`, which ranks every
    item the user has not rated by predicted score.
    '''

    kind = None
    ranking_supported = True
    accepts_seed = True

    def __init__(self, params=None):
        self.params = dict(params or {})
        self.configure(self.params)

    def __str__(self):
        return '{}({})'.format(self.kind, ', '.join(
            '{}={}'.format(k, v) for k, v in self.params.items()))

    def configure(self, params):
        pass

    def fit(self, train):
        raise NotImplementedError

    def predict(self, users, items):
        raise NotImplementedError

    def recommend(self, u, n):
        n_items = self.train.n_items
        scores = self.predict(np.full(n_items, u), np.arange(n_items))
        return _top_scored(scores, self.train.user_row(u)[0], n)


class GlobalMean(Algorithm):

    kind = 'global_mean'
    ranking_supported = False
    accepts_seed = False

    def configure(self, params):
        if params:
            raise ConfigError(self.kind, 'unknown hyperparameter %r'
                              % next(iter(params)))

    def fit(self, train):
        self.train = train
        self.mu = train.global_mean
        return self

    def predict(self, users, items):
        return np.full(len(users), self.train.scale.clamp(self.mu))


@dataclasses.dataclass(frozen=True)
class BaselineConfig:
    damping: float = DEFAULT_DAMPING

    def __post_init__(self):
        if self.damping < 0:
            raise ValueError('damping must be non-negative')


class Baseline(Algorithm):

    kind = 'baseline'
    accepts_seed = False

    def configure(self, params):
        self.config = build_config(self.kind, BaselineConfig, params)

    def fit(self, train):
        self.train = train
        self.model = fit_baseline(train, self.config.damping)
        return self

    def predict(self, users, items):
        return predict_baseline(self.model, users, items, self.train.scale)

    def recommend(self, u, n):
        items = np.arange(self.train.n_items)
        scores = baseline_scores(self.model, np.full(len(items), u), items)
        return _top_scored(scores, self.train.user_row(u)[0], n)


class KnnUserAlgorithm(Algorithm):

    kind = 'knn_user'
    accepts_seed = False

    def configure(self, params):
        self.config = build_config(self.kind, KnnConfig, params,
                                   aliases={'k': 'k_neighbors',
                                            'n': 'top_n'},
                                   extra=('similarity', 'shrinkage',
                                          'damping'))
        try:
            self.similarity = SimilarityKind.parse(
                params.get('similarity', 'cosine'),
                params.get('shrinkage', DEFAULT_SHRINKAGE))
        except RecBenchError as e:
            raise ConfigError(self.kind, e.mesg)
        self.damping = params.get('damping', DEFAULT_DAMPING)

    def fit(self, train):
        self.train = train
        self.model = UserKnn(self.similarity, self.config,
                             self.damping).fit(train)
        return self

    def predict(self, users, items):
        return self.model.predict(users, items)

    def recommend(self, u, n):
        return self.model.recommend(u, n)


class MfAlsAlgorithm(Algorithm):

    kind = 'mf_als'

    def configure(self, params):
        # similarity is accepted but has no effect on a factorization.
        self.config = build_config(self.kind, AlsConfig, params,
                                   aliases={'lambda': 'lam',
                                            'factors': 'features',
                                            'epochs': 'max_iterations',
                                            'bias': 'bias_enabled'},
                                   ignored=('similarity',))

    def fit(self, train):
        self.train = train
        self.model = als_fit(train, self.config)
        return self

    def predict(self, users, items):
        return self.model.predict_ordinals(users, items)


class SvdAlgorithm(Algorithm):

    kind = 'svd'
    fit_function = staticmethod(sgd_fit)

    def configure(self, params):
        self.config = build_config(self.kind, SgdConfig, params,
                                   aliases={'lr': 'lr_gamma',
                                            'reg': 'reg_lambda',
                                            'lambda': 'reg_lambda'})

    def fit(self, train):
        self.train = train
        self.model = self.fit_function(train, self.config)
        return self

    def predict(self, users, items):
        return self.model.predict_ordinals(users, items)


class SvdppAlgorithm(SvdAlgorithm):

    kind = 'svdpp'
    fit_function = staticmethod(svdpp_fit)


class RbmAlgorithm(Algorithm):

    kind = 'rbm'

    def configure(self, params):
        self.config = build_config(self.kind, RbmConfig, params,
                                   aliases={'learning_rate': 'lr'})

    def fit(self, train):
        self.train = train
        self.model = rbm_fit(train, self.config)
        self.hidden = self.model.user_hidden(train)
        return self

    def predict(self, users, items):
        users = np.asarray(users, dtype=np.intp)
        return self.model.predict_hidden(self.hidden, users, items)


class AutoencoderAlgorithm(RbmAlgorithm):

    kind = 'autoencoder'

    def configure(self, params):
        self.config = build_config(self.kind, AeConfig, params,
                                   aliases={'learning_rate': 'lr'})

    def fit(self, train):
        self.train = train
        self.model = ae_fit(train, self.config)
        self.hidden = self.model.user_hidden(train)
        return self


ALGORITHMS = {cls.kind: cls for cls in (
    KnnUserAlgorithm, MfAlsAlgorithm, SvdAlgorithm, SvdppAlgorithm,
    RbmAlgorithm, AutoencoderAlgorithm, Baseline, GlobalMean)}


def make_algorithm(kind, params=None):
    '''
    Build the algorithm wrapper for `kind`

    Raises
    ------
    ConfigError
        On an unknown kind or invalid hyperparameters.
    '''
    if kind not in ALGORITHMS:
        raise ConfigError('algorithm', 'unknown kind %r (choose from %s)'
                          % (kind, ', '.join(ALGORITHMS)))
    return ALGORITHMS[kind](params)

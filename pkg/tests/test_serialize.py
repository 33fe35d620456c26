import json

import numpy as np
import pytest

from recbench.bench_error import ValidationError
from recbench.dataset import RatingsDataset
from recbench.factorization import (AlsConfig, SgdConfig, als_fit,
                                    predict_many, sgd_fit, svdpp_fit)
from recbench.neural import AeConfig, RbmConfig, ae_fit, rbm_fit
from recbench.serialize import load_model, save_model


@pytest.fixture
def train():
    rng = np.random.default_rng(0)
    mask = rng.random((15, 10)) < 0.4
    users, items = np.nonzero(mask)
    values = rng.integers(1, 11, size=len(users)) / 2
    return RatingsDataset(['u%d' % u for u in users], items, values)


def test_mf_round_trip(tmp_path, train):
    model = sgd_fit(train, SgdConfig(factors=3, epochs=2))
    path = str(tmp_path / 'svd.npz')
    save_model(model, path)
    loaded = load_model(path)
    np.testing.assert_array_equal(loaded.P, model.P)
    np.testing.assert_array_equal(loaded.baseline.b_item,
                                  model.baseline.b_item)
    assert loaded.scale == model.scale
    users, items = train.raw_users, train.raw_items
    np.testing.assert_array_equal(predict_many(loaded, users, items),
                                  predict_many(model, users, items))


def test_unbiased_and_svdpp(tmp_path, train):
    path = str(tmp_path / 'als.npz')
    model = als_fit(train, AlsConfig(features=2, max_iterations=3,
                                     bias_enabled=False))
    save_model(model, path)
    assert load_model(path).baseline is None

    model = svdpp_fit(train, SgdConfig(factors=2, epochs=2))
    save_model(model, path)
    loaded = load_model(path)
    np.testing.assert_array_equal(loaded.Z, model.Z)
    np.testing.assert_array_equal(
        loaded.predict_ordinals(train.users, train.items),
        model.predict_ordinals(train.users, train.items))


def test_neural_round_trip(tmp_path, train):
    path = str(tmp_path / 'net.npz')
    rbm = rbm_fit(train, RbmConfig(hidden=3, epochs=2, batch_size=5))
    save_model(rbm, path)
    loaded = load_model(path)
    np.testing.assert_array_equal(loaded.W, rbm.W)
    assert loaded.history == rbm.history
    np.testing.assert_array_equal(
        loaded.predict_ordinals(train, train.users, train.items),
        rbm.predict_ordinals(train, train.users, train.items))

    ae = ae_fit(train, AeConfig(hidden=3, epochs=2, batch_size=5))
    save_model(ae, path)
    loaded = load_model(path)
    assert loaded.K == ae.K
    np.testing.assert_array_equal(loaded.V, ae.V)


def test_major_version_mismatch(tmp_path, train):
    model = sgd_fit(train, SgdConfig(factors=2, epochs=1))
    path = str(tmp_path / 'svd.npz')
    save_model(model, path)
    with np.load(path) as archive:
        arrays = {k: archive[k] for k in archive.files}
    header = json.loads(str(arrays.pop('header')))
    header['format_version'] = '2.0'
    with open(path, 'wb') as fh:
        np.savez(fh, header=np.array(json.dumps(header)), **arrays)
    with pytest.raises(ValidationError, match='unsupported model format'):
        load_model(path)


def test_minor_version_accepted(tmp_path, train):
    model = sgd_fit(train, SgdConfig(factors=2, epochs=1))
    path = str(tmp_path / 'svd.npz')
    save_model(model, path)
    with np.load(path) as archive:
        arrays = {k: archive[k] for k in archive.files}
    header = json.loads(str(arrays.pop('header')))
    header['format_version'] = '1.7'
    with open(path, 'wb') as fh:
        np.savez(fh, header=np.array(json.dumps(header)), **arrays)
    assert load_model(path).f == 2


def test_unsupported_model(tmp_path):
    with pytest.raises(ValidationError, match='cannot serialize'):
        save_model(object(), str(tmp_path / 'x.npz'))

import numpy as np
import pytest

from recbench.bench_error import (ArgumentError, RecBenchError, SolverError,
                                  TrainingDiverged)
from recbench.dataset import RatingsDataset, rating_matrix
from recbench.factorization import (AlsConfig, SgdConfig, als_fit,
                                    als_half_step, als_objective,
                                    implicit_sums, mf_predict, predict_many,
                                    sgd_epoch, sgd_fit, sgd_objective,
                                    svdpp_fit)


def random_dataset(seed, n_users=30, n_items=20, density=0.3):
    rng = np.random.default_rng(seed)
    mask = rng.random((n_users, n_items)) < density
    users, items = np.nonzero(mask)
    values = rng.integers(1, 11, size=len(users)) / 2
    return RatingsDataset(users, items, values)


def random_problem(rng, n_users=50, n_items=40, nf=4, density=0.2):
    mask = rng.random((n_users, n_items)) < density
    rows, cols = np.nonzero(mask)
    R = rating_matrix(rows, cols, rng.normal(3, 1, len(rows)),
                      (n_users, n_items))
    RT = R.T.tocsr()
    U = rng.normal(0, 0.1, (n_users, nf))
    M = rng.normal(0, 0.1, (n_items, nf))
    return R, RT, U, M


def test_half_step_solves_ridge():
    rng = np.random.default_rng(0)
    R, _, U, M = random_problem(rng)
    lam = 0.3
    U = als_half_step(R, U, M, lam)
    for row in range(R.shape[0]):
        lb, ub = R.indptr[row], R.indptr[row + 1]
        if lb == ub:
            continue
        other = M[R.indices[lb:ub]]
        grad = other.T @ (other @ U[row] - R.data[lb:ub]) \
            + lam * (ub - lb) * U[row]
        np.testing.assert_allclose(grad, 0, atol=1e-9)


@pytest.mark.parametrize('nf', [1, 2, 5])
def test_als_objective_non_increasing(nf):
    rng = np.random.default_rng(42 + nf)
    for _ in range(20):
        R, RT, U, M = random_problem(rng, nf=nf)
        lam = rng.uniform(0.01, 1)
        previous = als_objective(R, U, M, lam)
        for _ in range(5):
            U = als_half_step(R, U, M, lam)
            current = als_objective(R, U, M, lam)
            assert current <= previous + 1e-9
            previous = current
            M = als_half_step(RT, M, U, lam)
            current = als_objective(R, U, M, lam)
            assert current <= previous + 1e-9
            previous = current


def test_half_step_singular():
    R = rating_matrix([0, 0], [0, 1], [1.0, 2.0], (1, 2))
    other = np.zeros((2, 2))
    with pytest.raises(SolverError):
        als_half_step(R, np.zeros((1, 2)), other, 0.0)


def test_als_rank_one_recovery():
    rng = np.random.default_rng(11)
    a = rng.choice([1.0, 2.0], 30)
    b = rng.choice([0.5, 1.0, 1.5, 2.0, 2.5], 30)
    users, items = np.meshgrid(np.arange(30), np.arange(30), indexing='ij')
    users, items = users.ravel(), items.ravel()
    train = RatingsDataset(users, items, a[users] * b[items])
    config = AlsConfig(features=1, max_iterations=300, lam=1e-6,
                       bias_enabled=False, stop_epsilon=1e-15)
    model = als_fit(train, config)
    predicted = model.predict_ordinals(train.users, train.items)
    assert np.sqrt(np.mean((predicted - train.values) ** 2)) < 1e-3


def test_als_single_rating():
    train = RatingsDataset([0], [0], [4.0])
    config = AlsConfig(features=1, lam=1e-9, bias_enabled=False)
    model = als_fit(train, config)
    assert model.predict_ordinals(train.users, train.items)[0] == \
        pytest.approx(4.0, abs=1e-6)


def test_als_large_lambda_shrinks_factors():
    train = random_dataset(4)

    def largest(lam):
        model = als_fit(train, AlsConfig(features=3, lam=lam, seed=2))
        return max(np.abs(model.P).max(), np.abs(model.Q).max())

    assert largest(1e6) < 1e-6
    assert largest(1e6) < largest(1e2) < largest(1e-2)


def test_als_fit_biased_and_deterministic():
    train = random_dataset(3)
    config = AlsConfig(features=3, max_iterations=10, seed=5)
    first = als_fit(train, config)
    second = als_fit(train, config)
    np.testing.assert_array_equal(first.P, second.P)
    assert first.baseline is not None
    assert first.f == 3
    predicted = first.predict_ordinals(train.users, train.items)
    assert np.all((predicted >= 0.5) & (predicted <= 5))
    with pytest.raises(ArgumentError, match='features'):
        AlsConfig(features=0)


def test_sgd_step_is_gradient_step():
    rng = np.random.default_rng(7)
    nf, lr, reg, mu, r = 3, 0.01, 0.05, 3.0, 4.5
    bu = rng.normal(size=1)
    bi = rng.normal(size=1)
    P = rng.normal(size=(1, nf))
    Q = rng.normal(size=(1, nf))
    theta = np.concatenate([bu, bi, P[0], Q[0]])

    def loss(t):
        err = r - (mu + t[0] + t[1] + t[2:2 + nf] @ t[2 + nf:])
        return 0.5 * err ** 2 + 0.5 * reg * np.sum(t ** 2)

    eps = 1e-6
    grad = np.array([(loss(theta + eps * e) - loss(theta - eps * e))
                     / (2 * eps) for e in np.eye(len(theta))])
    sgd_epoch(np.array([0]), np.array([0]), np.array([r]), np.array([0]), mu,
              bu, bi, P, Q, lr, reg, True)
    updated = np.concatenate([bu, bi, P[0], Q[0]])
    np.testing.assert_allclose(updated, theta - lr * grad, rtol=1e-6,
                               atol=1e-9)


def test_sgd_zero_learning_rate_keeps_initial_state():
    train = random_dataset(4)
    config = SgdConfig(factors=5, epochs=3, lr_gamma=0.0, seed=11)
    model = sgd_fit(train, config)
    rng = np.random.default_rng(11)
    np.testing.assert_array_equal(
        model.P, rng.normal(0, 0.1, (train.n_users, 5)))
    np.testing.assert_array_equal(model.baseline.b_user, 0)
    np.testing.assert_array_equal(model.baseline.b_item, 0)


def test_sgd_reduces_objective():
    train = random_dataset(5)
    start = sgd_fit(train, SgdConfig(factors=5, epochs=1, lr_gamma=0.0,
                                     seed=1))
    fitted = sgd_fit(train, SgdConfig(factors=5, epochs=30, lr_gamma=0.01,
                                      seed=1))
    reg = SgdConfig().reg_lambda

    def objective(model):
        b = model.baseline
        return sgd_objective(train, b.mu, b.b_user, b.b_item, model.P,
                             model.Q, reg)

    assert objective(fitted) < objective(start)


def test_sgd_unbiased():
    train = random_dataset(6)
    model = sgd_fit(train, SgdConfig(factors=4, epochs=5, biased=False))
    assert model.baseline is None
    # Unseen entities fall back to the training mean.
    assert mf_predict(model, 'nobody', train.item_ids[0]) == \
        pytest.approx(train.global_mean)


def test_sgd_diverges():
    train = random_dataset(7)
    config = SgdConfig(factors=10, epochs=50, lr_gamma=100.0)
    with pytest.raises(TrainingDiverged) as exc:
        sgd_fit(train, config)
    assert isinstance(exc.value, RecBenchError)
    assert exc.value.epoch >= 0


def test_mf_predict_unknown_entities():
    train = random_dataset(8)
    model = sgd_fit(train, SgdConfig(factors=4, epochs=5))
    b = model.baseline
    item = train.item_ids[2]
    expected = np.clip(b.mu + b.b_item[2], 0.5, 5)
    assert mf_predict(model, 'nobody', item) == pytest.approx(expected)
    assert mf_predict(model, 'nobody', 'nothing') == \
        pytest.approx(np.clip(b.mu, 0.5, 5))
    batch = predict_many(model, train.raw_users[:5], train.raw_items[:5])
    np.testing.assert_allclose(
        batch, model.predict_ordinals(train.users[:5], train.items[:5]))


def test_implicit_sums():
    csr = rating_matrix([0, 0, 1], [0, 2, 1], [4.0, 0.0, 3.0], (3, 3))
    Y = np.arange(6, dtype=float).reshape(3, 2)
    Z = implicit_sums(csr, Y)
    np.testing.assert_allclose(Z[0], (Y[0] + Y[2]) / np.sqrt(2))
    np.testing.assert_allclose(Z[1], Y[1])
    np.testing.assert_allclose(Z[2], 0)


def test_svdpp_fit():
    train = random_dataset(9)
    model = svdpp_fit(train, SgdConfig(factors=4, epochs=5, seed=2))
    np.testing.assert_allclose(model.Z, implicit_sums(train.csr, model.Y))
    predicted = model.predict_ordinals(train.users, train.items)
    assert np.all(np.isfinite(predicted))
    again = svdpp_fit(train, SgdConfig(factors=4, epochs=5, seed=2))
    np.testing.assert_array_equal(model.Y, again.Y)

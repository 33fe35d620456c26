import numpy as np
import pytest

from recbench.baselines import (BaselineModel, baseline_scores, fit_baseline,
                                predict_baseline)
from recbench.bench_error import ArgumentError
from recbench.dataset import RatingScale, RatingsDataset


WHOLE = RatingScale(1, 5, 1)


@pytest.fixture
def train():
    return RatingsDataset(['a', 'a', 'b'], ['x', 'y', 'x'], [4, 2, 5],
                          scale=WHOLE)


def test_fit_undamped(train):
    model = fit_baseline(train, damping=0)
    assert model.mu == pytest.approx(11 / 3)
    assert model.b_item.tolist() == pytest.approx([5 / 6, -5 / 3])
    assert model.b_user.tolist() == pytest.approx([-0.25, 0.5])


def test_damping_shrinks_biases(train):
    loose = fit_baseline(train, damping=0)
    tight = fit_baseline(train, damping=25)
    assert np.all(np.abs(tight.b_item) < np.abs(loose.b_item))
    assert np.all(np.abs(tight.b_user) < np.abs(loose.b_user))


def test_predict_clamps_and_handles_unknown(train):
    model = BaselineModel(4.5, np.array([1.0]), np.array([0.5]))
    assert float(predict_baseline(model, 0, 0, WHOLE)) == 5.0
    assert float(baseline_scores(model, 0, 0)) == 6.0
    assert float(predict_baseline(model, -1, 0, WHOLE)) == 5.0
    assert float(predict_baseline(model, -1, -1, WHOLE)) == 4.5
    assert float(predict_baseline(model, 7, -1, WHOLE)) == 4.5


def test_fit_errors(train):
    with pytest.raises(ArgumentError, match='non-negative'):
        fit_baseline(train, damping=-1)
    empty = RatingsDataset([], [], [], scale=WHOLE)
    with pytest.raises(ArgumentError, match='empty'):
        fit_baseline(empty)

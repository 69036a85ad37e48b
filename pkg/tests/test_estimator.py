"""Scikit-learn front end: parameter plumbing, fit/predict, cloning."""

import numpy as np
import pytest
from sklearn.base import clone

from latentclass.estimator import DeepLatentClassModel
from latentclass.exceptions import ConfigError, DataError
from latentclass.model import simulate_dataset

from helpers import small_instance


@pytest.fixture(scope="module")
def fitted():
    cfg, hyper, params, data, z, W = small_instance(seed=14, p=5, q=2, d=2, p_x=2, p_t=1, n_obs=120)
    model = DeepLatentClassModel(
        n_attributes=2, n_classes=2, n_iters=200, random_state=11
    ).fit(data.X, data.Y, T=data.T)
    return model, data


def test_get_params_round_trip():
    model = DeepLatentClassModel(n_attributes=3, n_iters=50)
    params = model.get_params()
    assert params["n_attributes"] == 3
    other = clone(model)
    assert other.get_params() == params


def test_fit_populates_artifacts(fitted):
    model, data = fitted
    assert model.samples_.n_kept == 100
    assert model.samples_.relabeled
    assert model.waic_.waic == pytest.approx(
        -2 * (model.waic_.lppd - model.waic_.p_waic), abs=1e-9
    )
    assert model.summary_.G_mode.shape == (5, 2)


def test_predict_proba_shape_and_range(fitted):
    model, data = fitted
    phat = model.predict_proba(data.X[:7])
    assert phat.shape == (7, 5)
    assert np.all((phat > 0) & (phat < 1))
    assert set(np.unique(model.predict(data.X[:7]))) <= {0, 1}


def test_score_is_auc(fitted):
    model, data = fitted
    score = model.score(data.X, data.Y)
    assert 0.0 <= score <= 1.0


def test_unfitted_raises():
    with pytest.raises(ConfigError):
        DeepLatentClassModel().predict_proba(np.zeros((1, 2)))


def test_reproducible_given_random_state():
    cfg, hyper, params, data, z, W = small_instance(seed=2, p=4, n_obs=60)
    a = DeepLatentClassModel(n_iters=80, random_state=5).fit(data.X, data.Y, T=data.T)
    b = DeepLatentClassModel(n_iters=80, random_state=5).fit(data.X, data.Y, T=data.T)
    assert np.array_equal(a.samples_.A, b.samples_.A)
    assert a.waic_.waic == b.waic_.waic


def test_rejects_bad_outcomes():
    with pytest.raises(DataError):
        DeepLatentClassModel(n_iters=20).fit(None, np.array([[0, 2], [1, 0]]))


def test_intercept_only_model():
    cfg, hyper, params, data, z, W = small_instance(seed=3, p=3, p_x=0, p_t=0, n_obs=50)
    model = DeepLatentClassModel(n_iters=60, random_state=1).fit(None, data.Y)
    phat = model.predict_proba(None)
    assert phat.shape == (1, 3)


def test_entry_specs_string():
    cfg, hyper, params, data, z, W = small_instance(
        seed=4, p=2, q=1, d=1, n_obs=40,
        entry_specs=None,
    )
    model = DeepLatentClassModel(
        n_attributes=1, n_classes=1, n_iters=40, entry_specs="binary,binary", random_state=0
    ).fit(data.X, data.Y, T=data.T)
    assert model.config_.all_binary

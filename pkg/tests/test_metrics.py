"""Predictive means and the three evaluation metrics."""

import itertools
import math

import numpy as np
import pytest
from scipy.special import expit

from latentclass.config import SamplerSchedule
from latentclass.exceptions import DataError
from latentclass.gibbs import attribute_patterns, run_chain
from latentclass.metrics import (
    auc,
    cooccurrence_from_probs,
    cooccurrence_score,
    pairwise_cooccurrences,
    posterior_predictive_mean,
    rmse,
)
from latentclass.model import class_logits, softmax_rows

from helpers import small_instance, truth_archive


class TestPosteriorPredictive:
    def test_zero_coefficients_give_half(self):
        cfg, hyper, params, data, z, W = small_instance(seed=0, p=3, n_obs=5)
        for i in range(cfg.p):
            params.B[i][:] = 0.0
        arch = truth_archive(cfg, hyper, params, z, W, 5)
        arch.relabeled = True
        phat = posterior_predictive_mean(arch)
        assert np.allclose(phat, 0.5, atol=1e-12)

    def test_no_latent_dependence(self):
        # all loadings off: phat is the logistic intercept everywhere
        cfg, hyper, params, data, z, W = small_instance(seed=1, p=3, n_obs=4)
        params.G[:] = 0
        arch = truth_archive(cfg, hyper, params, z, W, 4)
        arch.relabeled = True
        phat = posterior_predictive_mean(arch)
        intercepts = expit(np.array([params.B[i][0, 0] for i in range(cfg.p)]))
        assert np.allclose(phat, intercepts[None, :], atol=1e-12)

    def test_out_of_sample_matches_pattern_enumeration(self):
        cfg, hyper, params, data, z, W = small_instance(seed=2, p=3, q=2, d=2, p_x=2, n_obs=4)
        arch = truth_archive(cfg, hyper, params, z, W, 4)
        arch.relabeled = True
        X_new = np.random.default_rng(5).standard_normal((6, 2))
        phat = posterior_predictive_mean(arch, X_new=X_new)
        pats = attribute_patterns(cfg.q)
        coef = params.binary_coef_matrix()
        expected = np.zeros((6, cfg.p))
        pz = softmax_rows(class_logits(X_new, params.Gamma))
        for n in range(6):
            for k, w in enumerate(pats):
                pw = sum(
                    pz[n, h] * np.prod(np.where(w == 1, params.A[:, h], 1 - params.A[:, h]))
                    for h in range(cfg.d)
                )
                eta = coef[:, 0] + (params.G * coef[:, 1:]) @ w
                expected[n] += pw * expit(eta)
        assert np.max(np.abs(phat - expected)) < 1e-12

    def test_in_sample_from_chain(self):
        cfg, hyper, params, data, z, W = small_instance(seed=3, n_obs=25)
        out = run_chain(data, cfg, hyper, SamplerSchedule(n_iters=60, burn_in=20, seed=0))
        out.relabeled = True
        phat = posterior_predictive_mean(out)
        assert phat.shape == data.Y.shape
        assert np.all((phat > 0) & (phat < 1))


class TestRmse:
    def test_perfect(self):
        y = np.array([[1.0, 0.0]])
        assert rmse(y, y) == 0.0

    def test_symmetric_errors(self):
        assert rmse(np.array([0.8, 0.2]), np.array([1.0, 0.0])) == pytest.approx(0.2)

    def test_bounded_by_one(self):
        rng = np.random.default_rng(0)
        phat = rng.random((10, 4))
        y = (rng.random((10, 4)) < 0.5).astype(float)
        assert rmse(phat, y) <= 1.0

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            rmse(np.ones((2, 2)), np.ones((2, 3)))


class TestAuc:
    def test_perfect_separation(self):
        assert auc(np.array([0.9, 0.8, 0.1, 0.2]), np.array([1, 1, 0, 0])) == 1.0

    def test_constant_predictions(self):
        assert auc(np.full(6, 0.4), np.array([1, 0, 1, 0, 1, 0])) == pytest.approx(0.5)

    def test_pair_enumeration_example(self):
        got = auc(np.array([0.9, 0.8, 0.3, 0.1]), np.array([1, 0, 1, 0]))
        assert got == pytest.approx(0.75)

    def test_single_class_undefined(self):
        assert auc(np.array([0.2, 0.6]), np.array([1, 1])) is None

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(4)
        phat = rng.random(50)
        y = (rng.random(50) < 0.5).astype(int)
        a = auc(phat, y)
        b = auc(np.exp(3 * phat) - 0.5, y)
        assert a == pytest.approx(b, abs=1e-12)

    def test_matches_pair_counting_oracle(self):
        rng = np.random.default_rng(9)
        phat = np.round(rng.random(40), 1)  # force ties
        y = (rng.random(40) < 0.5).astype(int)
        pos = phat[y == 1]
        neg = phat[y == 0]
        wins = sum((a > b) + 0.5 * (a == b) for a, b in itertools.product(pos, neg))
        assert auc(phat, y) == pytest.approx(wins / (len(pos) * len(neg)), abs=1e-12)

    def test_per_column_mode(self):
        phat = np.array([[0.9, 0.1], [0.1, 0.9], [0.8, 0.3], [0.2, 0.7]])
        y = np.array([[1, 0], [0, 1], [1, 0], [0, 1]])
        assert auc(phat, y, pooled=False) == pytest.approx(1.0)


class TestCooccurrence:
    def test_formula(self):
        # TP=1, FP=1, FN=0 -> 2/3
        pred = np.array([1, 1, 0])
        true = np.array([1, 0, 0])
        assert cooccurrence_score(pred, true) == pytest.approx(2.0 / 3.0)

    def test_perfect(self):
        pred = np.array([1, 0, 1])
        assert cooccurrence_score(pred, pred) == 1.0

    def test_undefined_when_no_positives(self):
        assert cooccurrence_score(np.zeros(4), np.zeros(4)) is None

    def test_bounded(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            pred = rng.random(20) < 0.5
            true = rng.random(20) < 0.5
            score = cooccurrence_score(pred, true)
            if score is not None:
                assert 0.0 <= score <= 1.0

    def test_pairwise_products(self):
        mat = np.array([[1.0, 0.0, 1.0]])
        pairs = pairwise_cooccurrences(mat)
        assert pairs.shape == (1, 3)
        assert np.array_equal(pairs[0], [0.0, 1.0, 0.0])

    def test_from_probs_threshold(self):
        y = np.array([[1, 1, 0], [1, 0, 1]])
        phat = np.array([[0.9, 0.9, 0.1], [0.9, 0.1, 0.9]])
        assert cooccurrence_from_probs(phat, y, threshold=0.5) == 1.0
        # a very low threshold predicts every pair on
        low = cooccurrence_from_probs(phat, y, threshold=1e-6)
        tp, fp = 2, 4
        assert low == pytest.approx(2 * tp / (2 * tp + fp))

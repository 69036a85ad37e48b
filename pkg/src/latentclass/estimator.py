"""Scikit-learn style front end: fit on (covariates, outcomes), predict
posterior predictive probabilities for new covariates."""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator

from .config import Dataset, Hyperparams, ModelConfig, SamplerSchedule
from .exceptions import ConfigError, DataError
from .gibbs import run_chain
from .io import parse_entry_specs
from .metrics import auc as auc_score
from .metrics import posterior_predictive_mean
from .postprocess import refine_g, relabel, summarize, waic


class DeepLatentClassModel(BaseEstimator):
    """Bayesian latent class regression with a binary attribute layer.

    Parameters mirror the sampler schedule; ``fit(X, Y)`` runs the Gibbs
    sampler on outcome matrix Y with per-observation covariates X (may be
    None for an intercept-only class model) and optional per-dimension
    meta-covariates T.  After fitting, ``samples_``, ``summary_`` and
    ``waic_`` hold the relabeled archive, its summary, and the WAIC.
    """

    def __init__(
        self,
        n_attributes: int = 2,
        n_classes: int = 2,
        n_iters: int = 2000,
        burn_in: Optional[int] = None,
        thin: int = 1,
        w_update_mode: str = "block",
        g_update_mode: str = "block",
        refine_threshold: Optional[float] = 2.0,
        entry_specs: Optional[str] = None,
        b_prior: float = 1.0,
        random_state: int = 0,
    ):
        self.n_attributes = n_attributes
        self.n_classes = n_classes
        self.n_iters = n_iters
        self.burn_in = burn_in
        self.thin = thin
        self.w_update_mode = w_update_mode
        self.g_update_mode = g_update_mode
        self.refine_threshold = refine_threshold
        self.entry_specs = entry_specs
        self.b_prior = b_prior
        self.random_state = random_state

    def fit(self, X, Y, T=None):
        Y = np.asarray(Y)
        if Y.ndim != 2:
            raise DataError(f"Y must be 2-dimensional, got shape {Y.shape}")
        data = Dataset(Y=Y, X=X, T=T)
        specs = None
        if self.entry_specs is not None:
            specs = parse_entry_specs(self.entry_specs, data.p)
        config = ModelConfig(
            p=data.p,
            q=self.n_attributes,
            d=self.n_classes,
            p_x=data.X.shape[1],
            p_t=data.T.shape[1],
            entry_specs=specs,
        )
        data.validate(config)
        burn_in = self.n_iters // 2 if self.burn_in is None else self.burn_in
        schedule = SamplerSchedule(
            n_iters=self.n_iters,
            burn_in=burn_in,
            thin=self.thin,
            seed=self.random_state,
            w_update_mode=self.w_update_mode,
            g_update_mode=self.g_update_mode,
        )
        hyper = Hyperparams.default(config, b=self.b_prior)
        samples = run_chain(data, config, hyper, schedule)
        samples = relabel(samples)
        if self.refine_threshold is not None:
            samples = refine_g(samples, self.refine_threshold)
        self.config_ = config
        self.samples_ = samples
        self.summary_ = summarize(samples)
        self.waic_ = waic(samples.loglik)
        return self

    def _check_fitted(self):
        if not hasattr(self, "samples_"):
            raise ConfigError("estimator is not fitted; call fit first")

    def predict_proba(self, X) -> np.ndarray:
        """Posterior predictive P(y = 1) for new covariate rows, (n, p)."""
        self._check_fitted()
        X = np.zeros((1, 0)) if X is None else np.atleast_2d(np.asarray(X, dtype=float))
        return posterior_predictive_mean(self.samples_, X_new=X)

    def predict(self, X) -> np.ndarray:
        """Most probable outcome vector per covariate row (threshold 1/2)."""
        return (self.predict_proba(X) >= 0.5).astype(int)

    def score(self, X, Y) -> float:
        """Pooled Mann-Whitney AUC of the predictive means against Y."""
        self._check_fitted()
        result = auc_score(self.predict_proba(X), np.asarray(Y))
        if result is None:
            raise DataError("AUC undefined: Y contains a single class")
        return result

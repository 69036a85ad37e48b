"""Posterior-predictive evaluation: predictive means, RMSE, AUC, co-occurrence F1."""

from __future__ import annotations

from typing import Optional

import numpy as np
from scipy.special import expit as logistic

from .config import BINARY, Dataset, ModelConfig
from .exceptions import ConfigError, DataError
from .gibbs import PosteriorSamples, attribute_patterns
from .model import class_logits, softmax_rows


def _require_all_binary(config: ModelConfig):
    if not config.all_binary:
        raise ConfigError("predictive metrics are defined for all-binary outcome models")


def posterior_predictive_mean(
    samples: PosteriorSamples, X_new: Optional[np.ndarray] = None
) -> np.ndarray:
    """(N, p) posterior predictive probabilities of a one at each entry.

    In-sample (default): averages the entry probabilities at each retained
    (W, G, B) snapshot.  Out-of-sample (``X_new`` given): for each snapshot the
    class is marginalized from its covariate logits and the attribute vector
    from the class, enumerating all 2^q patterns.
    """
    cfg = samples.config
    _require_all_binary(cfg)
    coef = samples.binary_coef_samples()  # (S, p, q+1)
    n_kept = samples.n_kept
    if X_new is None:
        total = 0.0
        for s in range(n_kept):
            eta = coef[s, :, 0][None, :] + samples.W[s].astype(float) @ (
                samples.G[s].astype(float) * coef[s, :, 1:]
            ).T
            total += logistic(eta)
        return total / n_kept
    X_new = np.asarray(X_new, dtype=float)
    if X_new.ndim != 2 or X_new.shape[1] != cfg.p_x:
        raise DataError(f"X_new must be (n, {cfg.p_x}), got {X_new.shape}")
    patterns = attribute_patterns(cfg.q)  # (K, q)
    total = 0.0
    for s in range(n_kept):
        pz = softmax_rows(class_logits(X_new, samples.Gamma[s]))  # (n, d)
        alpha = samples.A[s]  # (q, d)
        # P(pattern | class): product of Bernoulli probabilities
        log_pw = patterns @ np.log(alpha) + (1.0 - patterns) @ np.log1p(-alpha)  # (K, d)
        weight = pz @ np.exp(log_pw).T  # (n, K)
        eta = coef[s, :, 0][None, :] + patterns @ (samples.G[s].astype(float) * coef[s, :, 1:]).T
        total += weight @ logistic(eta)  # (n, p)
    return total / n_kept


def rmse(phat: np.ndarray, y: np.ndarray) -> float:
    """Root mean squared error between predictive means and binary outcomes."""
    phat = np.asarray(phat, dtype=float)
    y = np.asarray(y, dtype=float)
    if phat.shape != y.shape:
        raise DataError(f"shape mismatch: {phat.shape} vs {y.shape}")
    return float(np.sqrt(np.mean((phat - y) ** 2)))


def auc(phat: np.ndarray, y: np.ndarray, pooled: bool = True) -> Optional[float]:
    """Mann-Whitney AUC: fraction of (positive, negative) pairs ranked
    correctly, ties counted one half.

    Pooled over all entries by default; with ``pooled=False`` the per-column
    AUCs are averaged, skipping single-class columns.  Returns None when no
    positive/negative pair exists.
    """
    phat = np.asarray(phat, dtype=float)
    y = np.asarray(y)
    if phat.shape != y.shape:
        raise DataError(f"shape mismatch: {phat.shape} vs {y.shape}")
    if not pooled:
        if phat.ndim != 2:
            raise DataError("per-column AUC needs 2-dimensional inputs")
        per_col = [auc(phat[:, i], y[:, i]) for i in range(phat.shape[1])]
        defined = [a for a in per_col if a is not None]
        return float(np.mean(defined)) if defined else None
    scores = phat.ravel()
    labels = y.ravel().astype(int)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    if pos.size == 0 or neg.size == 0:
        return None
    order = np.argsort(np.concatenate([pos, neg]), kind="mergesort")
    ranks = np.empty(order.size)
    ranks[order] = np.arange(1, order.size + 1)
    # midranks for ties
    combined = np.concatenate([pos, neg])
    sorted_vals = combined[order]
    start = 0
    while start < order.size:
        stop = start
        while stop + 1 < order.size and sorted_vals[stop + 1] == sorted_vals[start]:
            stop += 1
        if stop > start:
            ranks[order[start : stop + 1]] = 0.5 * (start + stop) + 1.0
        start = stop + 1
    rank_sum = ranks[: pos.size].sum()
    u_stat = rank_sum - pos.size * (pos.size + 1) / 2.0
    return float(u_stat / (pos.size * neg.size))


def cooccurrence_score(pred_pairs: np.ndarray, true_pairs: np.ndarray) -> Optional[float]:
    """F1 on the positive class of binarized pairwise co-occurrences:
    2TP / (2TP + FP + FN).  Returns None when the denominator is zero."""
    pred = np.asarray(pred_pairs).astype(bool).ravel()
    true = np.asarray(true_pairs).astype(bool).ravel()
    if pred.shape != true.shape:
        raise DataError(f"shape mismatch: {pred.shape} vs {true.shape}")
    tp = int(np.sum(pred & true))
    fp = int(np.sum(pred & ~true))
    fn = int(np.sum(~pred & true))
    denom = 2 * tp + fp + fn
    if denom == 0:
        return None
    return 2.0 * tp / denom


def pairwise_cooccurrences(mat: np.ndarray) -> np.ndarray:
    """Products over all unordered column pairs: (N, p(p-1)/2) array."""
    mat = np.asarray(mat, dtype=float)
    i_idx, j_idx = np.triu_indices(mat.shape[1], k=1)
    return mat[:, i_idx] * mat[:, j_idx]


def cooccurrence_from_probs(
    phat: np.ndarray, y: np.ndarray, threshold: float = 0.5
) -> Optional[float]:
    """Convenience wrapper: threshold predicted pair products, then score.

    The prediction for a pair is phat_i * phat_j >= threshold; the truth is
    y_i * y_j.
    """
    phat = np.asarray(phat, dtype=float)
    y = np.asarray(y)
    if phat.shape != y.shape:
        raise DataError(f"shape mismatch: {phat.shape} vs {y.shape}")
    pred = pairwise_cooccurrences(phat) >= threshold
    true = pairwise_cooccurrences(y) == 1
    return cooccurrence_score(pred, true)

"""WAIC, label-switching resolution, loading-matrix refinement, summaries."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .exceptions import ConfigError, DataError
from .gibbs import PosteriorSamples


@dataclass(frozen=True)
class WaicResult:
    """waic = -2 (lppd - p_waic); p_waic is the effective-parameter penalty."""

    waic: float
    lppd: float
    p_waic: float


def waic(loglik: np.ndarray) -> WaicResult:
    """Widely applicable information criterion from an (S, N) log-likelihood matrix.

    lppd sums log mean predictive density per observation (log-sum-exp over
    samples); the penalty sums the per-observation sample variance of the
    log-likelihood (unbiased, divisor S-1).  A single sample gives p_waic = 0.
    """
    ll = np.asarray(loglik, dtype=float)
    if ll.ndim != 2:
        raise DataError(f"loglik must be 2-dimensional (S, N), got shape {ll.shape}")
    if not np.all(np.isfinite(ll)):
        raise DataError("loglik contains non-finite entries")
    n_samples = ll.shape[0]
    lppd = float(np.sum(logsumexp(ll, axis=0) - np.log(n_samples)))
    p_waic = 0.0 if n_samples == 1 else float(np.sum(np.var(ll, axis=0, ddof=1)))
    return WaicResult(waic=-2.0 * (lppd - p_waic), lppd=lppd, p_waic=p_waic)


def marginal_loglik(samples: PosteriorSamples, data) -> np.ndarray:
    """(S, N) per-observation log-likelihoods with the latent class and
    attribute vector integrated out at each retained parameter snapshot.

    The archive's stored ``loglik`` conditions on the sampled attributes;
    that variant rewards per-observation latent flexibility and barely
    separates attribute counts.  Integrating the latents (enumerating the 2^q
    patterns against the class mixture) gives the variant that discriminates
    model structure.
    """
    from .gibbs import _pattern_loglik, attribute_patterns
    from .model import class_logits, softmax_rows

    cfg = samples.config
    patterns = attribute_patterns(cfg.q)
    n_kept = samples.n_kept
    out = np.empty((n_kept, data.n_obs))
    for s in range(n_kept):
        params = samples.params_at(s)
        class_probs = softmax_rows(class_logits(data.X, params.Gamma))  # (N, d)
        log_pw_z = patterns @ np.log(params.A) + (1.0 - patterns) @ np.log1p(-params.A)  # (K, d)
        mix = np.clip(np.exp(log_pw_z) @ class_probs.T, 1e-300, None)  # (K, N)
        out[s] = logsumexp(np.log(mix).T + _pattern_loglik(params, cfg, data.Y, patterns), axis=1)
    return out


def _masked_coef_means(samples: PosteriorSamples) -> np.ndarray:
    """Mean over samples of the loading-masked coefficient array, (p, q+1).

    For multi-row blocks (categorical entries) rows are averaged so every
    dimension contributes one vector to the lexicographic key.
    """
    cfg = samples.config
    out = np.zeros((cfg.p, cfg.q + 1))
    for i in range(cfg.p):
        block = samples.B[i]  # (S, L, q+1)
        mask = np.concatenate(
            [np.ones((samples.n_kept, 1)), samples.G[:, i, :].astype(float)], axis=1
        )  # (S, q+1)
        masked = block * mask[:, None, :]
        out[i] = masked.mean(axis=(0, 1))
    return out


def _lex_column_order(M: np.ndarray) -> np.ndarray:
    """Ascending lexicographic order of the columns of M (row 0 most significant)."""
    return np.lexsort(M[::-1, :])


def _apply_attribute_perm(samples: PosteriorSamples, perm: np.ndarray):
    samples.A = samples.A[:, perm, :]
    samples.Theta = samples.Theta[:, perm, :]
    samples.G = samples.G[:, :, perm]
    samples.W = samples.W[:, :, perm]
    cols = np.concatenate([[0], 1 + perm])
    samples.B = [b[:, :, cols] for b in samples.B]


def _apply_class_perm(samples: PosteriorSamples, perm: np.ndarray):
    samples.A = samples.A[:, :, perm]
    gamma = samples.Gamma[:, perm, :]
    # re-pin the baseline: class probabilities are invariant to a common shift
    samples.Gamma = gamma - gamma[:, -1:, :]
    inverse = np.argsort(perm)
    samples.z = inverse[samples.z - 1] + 1


def _flip_attributes(samples: PosteriorSamples, flips) -> None:
    """Complement the given attributes in place, compensating coefficients.

    Flipping attribute j maps w_j to 1 - w_j, complements row j of A, negates
    coefficient column j, and shifts each intercept by the sample's masked
    coefficient g_{i,j} beta_{i,j}; the likelihood is exactly invariant.
    """
    cfg = samples.config
    for j in flips:
        samples.W[:, :, j] = 1 - samples.W[:, :, j]
        samples.A[:, j, :] = 1.0 - samples.A[:, j, :]
        for i in range(cfg.p):
            block = samples.B[i]  # (S, L, q+1)
            mask = samples.G[:, i, j].astype(float)[:, None]
            block[:, :, 0] += mask * block[:, :, 1 + j]
            block[:, :, 1 + j] *= -1.0


def _orientation_flips(samples: PosteriorSamples) -> tuple:
    """Flip set maximizing the coefficient-prior log-density of the archive
    means; resolves the exact attribute-complement invariance of the model.

    Ties break toward not flipping, so the choice is deterministic and
    idempotent.  Flip sets are enumerated jointly (intercept shifts couple the
    attributes); beyond 12 attributes a greedy coordinate pass is used.
    """
    cfg = samples.config
    hyper = samples.meta.get("hyper")
    if hyper is not None:
        v_inv = np.linalg.inv(hyper.V_beta)
        m = hyper.m_beta
    else:
        v_inv = np.eye(cfg.q + 1)
        m = np.zeros(cfg.q + 1)
    coef = _masked_coef_means(samples)  # (p, q+1)

    def log_density(flips):
        rows = coef.copy()
        for j in flips:
            rows[:, 0] += rows[:, 1 + j]
            rows[:, 1 + j] *= -1.0
        centered = rows - m
        return -0.5 * float(np.einsum("ik,kl,il->", centered, v_inv, centered))

    if cfg.q <= 12:
        best, best_val = (), log_density(())
        for mask in range(1, 2**cfg.q):
            flips = tuple(j for j in range(cfg.q) if mask >> j & 1)
            val = log_density(flips)
            if val > best_val + 1e-12:
                best, best_val = flips, val
        return best
    flips: list = []
    improved = True
    while improved:
        improved = False
        for j in range(cfg.q):
            trial = sorted(set(flips) ^ {j})
            if log_density(tuple(trial)) > log_density(tuple(flips)) + 1e-12:
                flips = trial
                improved = True
    return tuple(flips)


def relabel(samples: PosteriorSamples) -> PosteriorSamples:
    """Canonicalize the archive against the model's exact invariances.

    First each attribute is oriented (complemented or not) toward the
    representative with the larger coefficient-prior density; then attribute
    columns are ordered so the archive-mean masked coefficient columns sort
    lexicographically (read top to bottom); class columns then sort by the
    archive-mean attribute-probability columns.  The same flips and
    permutation pair are applied to every snapshot (A, B, Gamma, G, Theta, z,
    W); idempotent.
    """
    if samples.n_kept == 0:
        raise DataError("cannot relabel an empty archive")
    out = samples.copy()
    out.B = [b.copy() for b in out.B]
    _flip_attributes(out, _orientation_flips(out))
    coef_means = _masked_coef_means(out)  # (p, q+1)
    attr_perm = _lex_column_order(coef_means[:, 1:])
    _apply_attribute_perm(out, attr_perm)
    class_perm = _lex_column_order(out.A.mean(axis=0))
    _apply_class_perm(out, class_perm)
    out.relabeled = True
    return out


def refine_g(samples: PosteriorSamples, threshold: float = 2.0) -> PosteriorSamples:
    """Zero out loadings whose coefficient magnitude falls below ``threshold``.

    Applied per retained sample; entries are only ever switched off.  For
    multi-row blocks the largest non-baseline level magnitude is compared.
    """
    if threshold <= 0:
        raise ConfigError(f"threshold must be > 0, got {threshold}")
    out = samples.copy()
    cfg = out.config
    for i in range(cfg.p):
        block = out.B[i]  # (S, L, q+1)
        n_free = block.shape[1] - 1 if block.shape[1] > 1 else 1
        magnitude = np.abs(block[:, :n_free, 1:]).max(axis=1)  # (S, q)
        out.G[:, i, :] = np.where(magnitude < threshold, 0, out.G[:, i, :])
    out.meta = dict(out.meta, refine_threshold=threshold)
    return out


def _mode_along_axis0(values: np.ndarray, n_levels: int, offset: int) -> np.ndarray:
    """Majority vote over axis 0; ties break toward the smaller label."""
    counts = np.stack([(values == offset + l).sum(axis=0) for l in range(n_levels)])
    return counts.argmax(axis=0) + offset


@dataclass
class Summary:
    """Posterior means, equal-tailed 95% intervals, and entrywise modes."""

    A_mean: np.ndarray
    A_lower: np.ndarray
    A_upper: np.ndarray
    B_mean: list
    B_lower: list
    B_upper: list
    Gamma_mean: np.ndarray
    Gamma_lower: np.ndarray
    Gamma_upper: np.ndarray
    Theta_mean: np.ndarray
    Theta_lower: np.ndarray
    Theta_upper: np.ndarray
    G_mean: np.ndarray
    G_mode: np.ndarray
    z_mode: np.ndarray
    W_mode: np.ndarray
    class_probs: np.ndarray  # (N, d) membership frequencies


def _mean_and_interval(arr: np.ndarray):
    mean = arr.mean(axis=0)
    lower = np.quantile(arr, 0.025, axis=0)
    upper = np.quantile(arr, 0.975, axis=0)
    return mean, lower, upper


def summarize(samples: PosteriorSamples) -> Summary:
    """Entrywise means, 2.5%/97.5% quantiles, and majority-vote modes."""
    if samples.n_kept == 0:
        raise DataError("cannot summarize an empty archive")
    if not samples.relabeled:
        warnings.warn("summarizing an archive that has not been relabeled", stacklevel=2)
    cfg = samples.config
    a_mean, a_lo, a_hi = _mean_and_interval(samples.A)
    b_stats = [_mean_and_interval(b) for b in samples.B]
    g_stats = _mean_and_interval(samples.Gamma)
    t_stats = _mean_and_interval(samples.Theta)
    class_counts = np.stack([(samples.z == h + 1).mean(axis=0) for h in range(cfg.d)], axis=1)
    return Summary(
        A_mean=a_mean,
        A_lower=a_lo,
        A_upper=a_hi,
        B_mean=[s[0] for s in b_stats],
        B_lower=[s[1] for s in b_stats],
        B_upper=[s[2] for s in b_stats],
        Gamma_mean=g_stats[0],
        Gamma_lower=g_stats[1],
        Gamma_upper=g_stats[2],
        Theta_mean=t_stats[0],
        Theta_lower=t_stats[1],
        Theta_upper=t_stats[2],
        G_mean=samples.G.mean(axis=0),
        G_mode=_mode_along_axis0(samples.G, 2, 0).astype(np.int8),
        z_mode=_mode_along_axis0(samples.z, cfg.d, 1),
        W_mode=_mode_along_axis0(samples.W, 2, 0).astype(np.int8),
        class_probs=class_counts,
    )

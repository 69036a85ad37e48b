"""Generalized outcome layer: categorical and count entries.

Categorical entries keep the augmented Gaussian row updates (one level at a
time against the log-sum of the remaining levels); count entries have no
tractable augmentation and use a random-walk Metropolis step on their
coefficient row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.special import gammaln, logsumexp

from .config import BINARY, CATEGORICAL, EntrySpec, Hyperparams
from .exceptions import ConfigError, NumericError
from .model import log1pexp
from .polyagamma import draw_pg1


@dataclass(frozen=True)
class MhTuning:
    """Random-walk proposal scale for count-entry coefficient rows."""

    step_scale: float = 0.1

    def __post_init__(self):
        if self.step_scale <= 0:
            raise ConfigError(f"step_scale must be > 0, got {self.step_scale}")


def log_lik_entry_general(y, w, spec: EntrySpec, g_i, coeffs) -> float:
    """Log-likelihood of a single entry of any kind at one attribute vector.

    ``coeffs`` is the (n_rows, q+1) coefficient block for the entry; for
    categorical entries row l scores level l+1 and the last row is the pinned
    baseline.
    """
    w = np.asarray(w, dtype=float)
    g_i = np.asarray(g_i, dtype=float)
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    masked = g_i * w
    if spec.kind == BINARY:
        if y not in (0, 1):
            raise ConfigError(f"binary entry got y={y}")
        eta = coeffs[0, 0] + coeffs[0, 1:] @ masked
        return float(y * eta - log1pexp(eta))
    if spec.kind == CATEGORICAL:
        if not 1 <= int(y) <= spec.levels:
            raise ConfigError(f"categorical entry got y={y}, support 1..{spec.levels}")
        scores = coeffs[:, 0] + coeffs[:, 1:] @ masked
        return float(scores[int(y) - 1] - logsumexp(scores))
    if y < 0 or y != int(y):
        raise ConfigError(f"count entry got y={y}")
    eta = coeffs[0, 0] + coeffs[0, 1:] @ masked
    return float(y * eta - np.exp(eta) - gammaln(y + 1.0))


def draw_gaussian_conditional(prec: np.ndarray, rhs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw from N(prec^-1 rhs, prec^-1) via a Cholesky factor of the precision."""
    try:
        factor = cho_factor(prec, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"non-SPD posterior precision: {exc}") from None
    mean = cho_solve(factor, rhs)
    noise = solve_triangular(factor[0], rng.standard_normal(prec.shape[0]), lower=True, trans="T")
    return mean + noise


def gaussian_row_posterior(
    design: np.ndarray, omega: np.ndarray, kappa: np.ndarray, hyper: Hyperparams
):
    """Precision and rhs of the Gaussian coefficient-row conditional.

    design : (N, k) rows u_n; omega : (N,) augmentation weights;
    kappa  : (N,) linear coefficients (e.g. y - 1/2, plus any offset term).
    Returns (prec, rhs) with prec = V_beta^-1 + sum omega u u' and
    rhs = V_beta^-1 m_beta + sum kappa u.
    """
    V_inv = np.linalg.inv(hyper.V_beta)
    prec = V_inv + design.T @ (design * omega[:, None])
    rhs = V_inv @ hyper.m_beta + design.T @ kappa
    return prec, rhs


def categorical_scores(W_masked: np.ndarray, block: np.ndarray) -> np.ndarray:
    """(N, D) level scores for one categorical entry; W_masked = W * g_i."""
    return block[:, 0][None, :] + W_masked @ block[:, 1:].T


def update_categorical_rows(
    y: np.ndarray,
    W_masked: np.ndarray,
    block: np.ndarray,
    hyper: Hyperparams,
    rng: np.random.Generator,
):
    """Redraw the non-baseline coefficient rows of one categorical entry.

    Levels are scanned in order; each level's augmentation variables are drawn
    fresh against the current remaining-levels log-sum so the Gaussian
    conditional is exact at the moment it is used.  Returns the new block and
    the (N, D) matrix of augmentation draws.
    """
    n_obs, levels = y.shape[0], block.shape[0]
    block = block.copy()
    design = np.hstack([np.ones((n_obs, 1)), W_masked])
    omegas = np.zeros((n_obs, levels))
    V_inv = np.linalg.inv(hyper.V_beta)
    prior_rhs = V_inv @ hyper.m_beta
    for l in range(levels - 1):
        scores = categorical_scores(W_masked, block)
        others = np.delete(scores, l, axis=1)
        offset = logsumexp(others, axis=1)
        tilt = scores[:, l] - offset
        omega = draw_pg1(tilt, rng)
        omegas[:, l] = omega
        prec = V_inv + design.T @ (design * omega[:, None])
        kappa = (y == l + 1).astype(float) - 0.5 + omega * offset
        rhs = prior_rhs + design.T @ kappa
        block[l] = draw_gaussian_conditional(prec, rhs, rng)
    return block, omegas


def poisson_row_log_post(
    row: np.ndarray, y: np.ndarray, design: np.ndarray, hyper: Hyperparams
) -> float:
    """Gaussian prior plus Poisson log-likelihood for one count-entry row."""
    eta = design @ row
    centered = row - hyper.m_beta
    prior = -0.5 * centered @ np.linalg.solve(hyper.V_beta, centered)
    return float(prior + np.sum(y * eta - np.exp(eta)))


def mh_update_poisson_row(
    row: np.ndarray,
    y: np.ndarray,
    W_masked: np.ndarray,
    hyper: Hyperparams,
    tuning: MhTuning,
    rng: np.random.Generator,
):
    """Symmetric random-walk Metropolis step on a count-entry coefficient row.

    Returns (new_row, accepted).  The proposal perturbs the whole (q+1)-vector
    isotropically; on rejection the row is returned unchanged.
    """
    n_obs = y.shape[0]
    design = np.hstack([np.ones((n_obs, 1)), W_masked])
    proposal = row + tuning.step_scale * rng.standard_normal(row.shape[0])
    delta = poisson_row_log_post(proposal, y, design, hyper) - poisson_row_log_post(
        row, y, design, hyper
    )
    if np.log(rng.random()) < delta:
        return proposal, True
    return row.copy(), False

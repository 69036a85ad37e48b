"""Data-augmented Gibbs sampler: augmentation, latent and parameter updates,
chain orchestration, and the coreset/subsampling surrogate.

Sweep structure (one iteration):

  1. latents: z from its categorical conditional, then W (block over 2^q
     patterns or entrywise Bernoulli) -- both are exact conditionals with the
     augmentation variables integrated out;
  2. augmentation: PG(1, tilt) draws for binary entries, class logits (all d
     rows) and loading-prior logits, at the just-updated latents;
  3. parameters: A (conjugate Beta), B rows (Gaussian given the augmentation,
     Metropolis for count entries, per-level Gaussian scans for categorical
     entries), Theta rows, G (block or entrywise, augmentation-free), Gamma
     rows (Gaussian; rows beyond the first refresh their augmentation draws so
     every conditional is exact at the moment it is used).

Augmentation draws are regenerated every sweep and only ever consumed by
updates whose tilts still match the state they were drawn at, which keeps the
kernel exactly invariant for the joint posterior.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import expit as logistic
from scipy.special import gammaln, logsumexp

from . import glm
from .config import (
    BINARY,
    CATEGORICAL,
    Dataset,
    Hyperparams,
    LatentState,
    ModelConfig,
    Params,
    SamplerSchedule,
)
from .exceptions import ConfigError, NumericError
from .model import (
    ALPHA_CLIP,
    class_logits,
    draw_params_from_prior,
    log1pexp,
    log_lik_entries,
    log_lik_observations,
    softmax_rows,
)
from .polyagamma import draw_pg1


def attribute_patterns(q: int) -> np.ndarray:
    """All 2^q binary attribute vectors; pattern k has bit j-1 of k as w_j."""
    k = np.arange(2**q)
    return ((k[:, None] >> np.arange(q)[None, :]) & 1).astype(float)


def _sample_rows(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Categorical draw per row of a row-stochastic matrix; 0-based labels."""
    u = rng.random(probs.shape[0])
    idx = (u[:, None] > np.cumsum(probs, axis=1)).sum(axis=1)
    return np.minimum(idx, probs.shape[1] - 1)


def _logsumexp_excluding(logits: np.ndarray, col: int) -> np.ndarray:
    """Row-wise log-sum-exp over all columns except ``col``."""
    return logsumexp(np.delete(logits, col, axis=1), axis=1)


# ---------------------------------------------------------------------------
# Exact conditionals (exposed for enumeration tests and reused for sampling)
# ---------------------------------------------------------------------------


def z_conditional(params: Params, W: np.ndarray, X: np.ndarray) -> np.ndarray:
    """(N, d) conditional class probabilities given attributes and covariates."""
    logits = class_logits(X, params.Gamma)
    logA = np.log(params.A)
    log1mA = np.log1p(-params.A)
    Wf = np.asarray(W, dtype=float)
    scores = logits + Wf @ logA + (1.0 - Wf) @ log1mA
    return softmax_rows(scores)


def _pattern_loglik(
    params: Params,
    config: ModelConfig,
    Y: np.ndarray,
    patterns: np.ndarray,
    weights: Optional[np.ndarray] = None,
) -> np.ndarray:
    """(N, K) outcome log-likelihood at each candidate attribute pattern.

    ``weights`` is the per-dimension surrogate weight vector (ones = exact).
    """
    n = Y.shape[0]
    k = patterns.shape[0]
    if weights is None:
        weights = np.ones(config.p)
    total = np.zeros((n, k))
    bin_idx = [i for i, s in enumerate(config.entry_specs) if s.kind == BINARY and weights[i] != 0]
    if bin_idx:
        coef = np.vstack([params.B[i][0] for i in bin_idx])
        mask = params.G[bin_idx].astype(float)
        w_i = weights[bin_idx]
        scores = coef[:, 0][None, :] + patterns @ (mask * coef[:, 1:]).T  # (K, n_bin)
        total += (Y[:, bin_idx] * w_i) @ scores.T
        total -= (w_i * log1pexp(scores)).sum(axis=1)[None, :]
    for i, spec in enumerate(config.entry_specs):
        if weights[i] == 0 or spec.kind == BINARY:
            continue
        g_i = params.G[i].astype(float)
        block = params.B[i]
        masked = patterns * g_i
        y = Y[:, i]
        if spec.kind == CATEGORICAL:
            scores = block[:, 0][None, :] + masked @ block[:, 1:].T  # (K, D)
            lse = logsumexp(scores, axis=1)
            total += weights[i] * (scores[:, y.astype(int) - 1].T - lse[None, :])
        else:
            eta = block[0, 0] + masked @ block[0, 1:]  # (K,)
            contrib = y[:, None] * eta[None, :] - np.exp(eta)[None, :] - gammaln(y + 1.0)[:, None]
            total += weights[i] * contrib
    return total


def w_block_conditional(
    params: Params,
    config: ModelConfig,
    Y: np.ndarray,
    z: np.ndarray,
    weights: Optional[np.ndarray] = None,
) -> np.ndarray:
    """(N, 2^q) conditional probabilities over attribute patterns."""
    patterns = attribute_patterns(config.q)
    logit_a = np.log(params.A) - np.log1p(-params.A)  # (q, d)
    prior = patterns @ logit_a[:, np.asarray(z) - 1]  # (K, N)
    scores = prior.T + _pattern_loglik(params, config, Y, patterns, weights)
    return softmax_rows(scores)


def w_entry_conditional(
    params: Params,
    config: ModelConfig,
    Y: np.ndarray,
    z: np.ndarray,
    W: np.ndarray,
    j: int,
    weights: Optional[np.ndarray] = None,
) -> np.ndarray:
    """(N,) probability that attribute j is on, given all other attributes."""
    if weights is None:
        weights = np.ones(config.p)
    W1 = np.asarray(W, dtype=float).copy()
    W0 = W1.copy()
    W1[:, j] = 1.0
    W0[:, j] = 0.0
    diff = (log_lik_entries(Y, W1, params, config) - log_lik_entries(Y, W0, params, config)) @ weights
    alpha_j = params.A[j, np.asarray(z) - 1]
    log_odds = np.log(alpha_j) - np.log1p(-alpha_j) + diff
    return logistic(log_odds)


def _g_candidate_loglik(
    params: Params,
    config: ModelConfig,
    Y: np.ndarray,
    W: np.ndarray,
    i: int,
    patterns: np.ndarray,
) -> np.ndarray:
    """(K,) outcome log-likelihood of dimension i under each candidate g row."""
    spec = config.entry_specs[i]
    block = params.B[i]
    Wf = np.asarray(W, dtype=float)
    y = Y[:, i]
    if spec.kind == CATEGORICAL:
        out = np.zeros(patterns.shape[0])
        scores = np.stack(
            [block[l, 0] + Wf @ (patterns * block[l, 1:]).T for l in range(spec.levels)],
            axis=2,
        )  # (N, K, D)
        lse = logsumexp(scores, axis=2)
        picked = scores[np.arange(Y.shape[0]), :, y.astype(int) - 1]
        out = (picked - lse).sum(axis=0)
        return out
    eta = block[0, 0] + Wf @ (patterns * block[0, 1:]).T  # (N, K)
    if spec.kind == BINARY:
        return y @ eta - log1pexp(eta).sum(axis=0)
    return y @ eta - np.exp(eta).sum(axis=0) - gammaln(y + 1.0).sum()


def g_block_conditional(
    params: Params,
    config: ModelConfig,
    data: Dataset,
    W: np.ndarray,
    i: int,
    weight: float = 1.0,
) -> np.ndarray:
    """(2^q,) conditional probabilities over candidate rows of G for dim i."""
    patterns = attribute_patterns(config.q)
    t_logit = params.Theta[:, 0] + params.Theta[:, 1:] @ data.T[i]
    scores = patterns @ t_logit + weight * _g_candidate_loglik(params, config, data.Y, W, i, patterns)
    scores -= scores.max()
    probs = np.exp(scores)
    return probs / probs.sum()


def g_entry_conditional(
    params: Params,
    config: ModelConfig,
    data: Dataset,
    W: np.ndarray,
    i: int,
    j: int,
    weight: float = 1.0,
) -> float:
    """P(g_{i,j} = 1 | everything else)."""
    base = params.G[i].astype(float)
    patt = np.vstack([base, base])
    patt[0, j] = 0.0
    patt[1, j] = 1.0
    ll = _g_candidate_loglik(params, config, data.Y, W, i, patt)
    t_logit = params.Theta[j, 0] + params.Theta[j, 1:] @ data.T[i]
    return float(logistic(t_logit + weight * (ll[1] - ll[0])))


# ---------------------------------------------------------------------------
# Surrogate outcome log-likelihood
# ---------------------------------------------------------------------------


def surrogate_loglik(
    data: Dataset,
    W: np.ndarray,
    params: Params,
    config: ModelConfig,
    coreset,
    subsample,
) -> float:
    """Coreset plus reweighted-subsample estimate of the outcome log-likelihood.

    Exact when the coreset covers every dimension or the subsample is the full
    remainder.
    """
    coreset = np.asarray(sorted(set(int(i) for i in coreset)), dtype=int)
    subsample = np.asarray(sorted(set(int(i) for i in subsample)), dtype=int)
    p = config.p
    if coreset.size and (coreset.min() < 0 or coreset.max() >= p):
        raise ConfigError("coreset indices out of range")
    if np.intersect1d(coreset, subsample).size:
        raise ConfigError("coreset and subsample must be disjoint")
    if subsample.size and (subsample.min() < 0 or subsample.max() >= p):
        raise ConfigError("subsample indices out of range")
    if coreset.size < p and subsample.size == 0:
        raise ConfigError("subsample must be nonempty when the coreset does not cover all dimensions")
    per_dim = log_lik_entries(data.Y, np.asarray(W, dtype=float), params, config).sum(axis=0)
    total = per_dim[coreset].sum()
    if coreset.size < p:
        total += (p - coreset.size) / subsample.size * per_dim[subsample].sum()
    return float(total)


# ---------------------------------------------------------------------------
# Posterior archive
# ---------------------------------------------------------------------------


@dataclass
class PosteriorSamples:
    """Thinned chain archive: parameter snapshots, latent snapshots, and the
    per-sample per-observation outcome log-likelihood matrix."""

    A: np.ndarray  # (S, q, d)
    B: list  # per dimension: (S, n_rows_i, q+1)
    Gamma: np.ndarray  # (S, d, p_x+1)
    G: np.ndarray  # (S, p, q)
    Theta: np.ndarray  # (S, q, p_t+1)
    z: np.ndarray  # (S, N)
    W: np.ndarray  # (S, N, q)
    loglik: np.ndarray  # (S, N)
    meta: dict = field(default_factory=dict)
    relabeled: bool = False

    @property
    def n_kept(self) -> int:
        return self.A.shape[0]

    @property
    def config(self) -> ModelConfig:
        return self.meta["config"]

    def params_at(self, s: int) -> Params:
        return Params(
            A=self.A[s],
            B=[b[s] for b in self.B],
            Gamma=self.Gamma[s],
            G=self.G[s],
            Theta=self.Theta[s],
        )

    def latents_at(self, s: int):
        return self.z[s], self.W[s]

    def binary_coef_samples(self) -> np.ndarray:
        """(S, p, q+1) coefficient array; requires single-row blocks everywhere."""
        if any(b.shape[1] != 1 for b in self.B):
            raise ConfigError("binary_coef_samples requires single-row coefficient blocks")
        return np.concatenate([b for b in self.B], axis=1)

    def copy(self) -> "PosteriorSamples":
        return PosteriorSamples(
            A=self.A.copy(),
            B=[b.copy() for b in self.B],
            Gamma=self.Gamma.copy(),
            G=self.G.copy(),
            Theta=self.Theta.copy(),
            z=self.z.copy(),
            W=self.W.copy(),
            loglik=self.loglik.copy(),
            meta=dict(self.meta),
            relabeled=self.relabeled,
        )


# ---------------------------------------------------------------------------
# The sampler
# ---------------------------------------------------------------------------


class GibbsSampler:
    """Stateful sweep machine; ``run_chain`` is the one-call front end."""

    def __init__(
        self,
        data: Dataset,
        config: ModelConfig,
        hyper: Hyperparams,
        schedule: SamplerSchedule,
        rng: np.random.Generator,
        params: Optional[Params] = None,
        fixed_w: Optional[np.ndarray] = None,
        mh_tuning: Optional[glm.MhTuning] = None,
    ):
        data.validate(config)
        hyper.check(config)
        schedule.check(config)
        self.data = data
        self.config = config
        self.hyper = hyper
        self.schedule = schedule
        self.rng = rng
        self.mh_tuning = mh_tuning or glm.MhTuning()
        n = data.n_obs

        if params is None:
            params = draw_params_from_prior(config, hyper, data.T, rng)
        self.params = params.copy()
        self.params.validate(config)

        self.fixed_w = None
        if fixed_w is not None:
            self.fixed_w = np.asarray(fixed_w)
            if self.fixed_w.shape != (n, config.q):
                raise ConfigError(
                    f"fixed_w has shape {self.fixed_w.shape}, expected ({n}, {config.q})"
                )

        self.X1 = np.hstack([np.ones((n, 1)), data.X])
        self.T1 = np.hstack([np.ones((config.p, 1)), data.T])
        self.patterns = (
            attribute_patterns(config.q)
            if "block" in (schedule.w_update_mode, schedule.g_update_mode)
            else None
        )
        self.V_beta_inv = np.linalg.inv(hyper.V_beta)
        self.V_beta_inv_m = self.V_beta_inv @ hyper.m_beta
        self.V_gamma_inv = np.linalg.inv(hyper.V_gamma)
        self.V_gamma_inv_m = self.V_gamma_inv @ hyper.m_gamma

        self.state = self._init_latents()
        self.weights = np.ones(config.p)
        self.mh_proposals = np.zeros(config.p, dtype=int)
        self.mh_accepts = np.zeros(config.p, dtype=int)

    # -- initialization ------------------------------------------------------

    def _init_latents(self) -> LatentState:
        n, cfg, rng = self.data.n_obs, self.config, self.rng
        probs = softmax_rows(class_logits(self.data.X, self.params.Gamma))
        z = _sample_rows(probs, rng) + 1
        if self.fixed_w is not None:
            W = self.fixed_w.astype(np.int8).copy()
        else:
            alpha = self.params.A[:, z - 1].T
            W = (rng.random((n, cfg.q)) < alpha).astype(np.int8)
        omega_y = []
        for spec in cfg.entry_specs:
            if spec.kind == BINARY:
                omega_y.append(np.full(n, 0.25))
            elif spec.kind == CATEGORICAL:
                omega_y.append(np.full((n, spec.levels), 0.25))
            else:
                omega_y.append(None)
        return LatentState(
            z=z.astype(int),
            W=W,
            omega_y=omega_y,
            omega_z=np.full((n, cfg.d), 0.25),
            omega_g=np.full((cfg.p, cfg.q), 0.25),
        )

    # -- surrogate -----------------------------------------------------------

    def _refresh_weights(self):
        spec = self.schedule.surrogate
        if spec is None:
            return
        p = self.config.p
        coreset = np.asarray(spec.coreset, dtype=int)
        self.weights = np.zeros(p)
        self.weights[coreset] = 1.0
        rest = np.setdiff1d(np.arange(p), coreset)
        if rest.size:
            chosen = self.rng.choice(rest, size=spec.subsample_size, replace=False)
            self.weights[chosen] = (p - coreset.size) / spec.subsample_size

    # -- phase 1: latents ----------------------------------------------------

    def update_z(self):
        if self.config.d == 1:
            return
        probs = z_conditional(self.params, self.state.W, self.data.X)
        self.state.z = (_sample_rows(probs, self.rng) + 1).astype(int)

    def update_w(self):
        if self.fixed_w is not None:
            return
        cfg = self.config
        if self.schedule.w_update_mode == "block":
            probs = w_block_conditional(self.params, cfg, self.data.Y, self.state.z, self.weights)
            idx = _sample_rows(probs, self.rng)
            self.state.W = self.patterns[idx].astype(np.int8)
        else:
            for j in range(cfg.q):
                prob = w_entry_conditional(
                    self.params, cfg, self.data.Y, self.state.z, self.state.W, j, self.weights
                )
                self.state.W[:, j] = (self.rng.random(self.data.n_obs) < prob).astype(np.int8)

    # -- phase 2: augmentation -----------------------------------------------

    def update_augmented(self):
        cfg, n = self.config, self.data.n_obs
        Wf = self.state.W.astype(float)
        for i, spec in enumerate(cfg.entry_specs):
            if spec.kind != BINARY:
                continue
            block = self.params.B[i]
            g_i = self.params.G[i].astype(float)
            eta = block[0, 0] + Wf @ (g_i * block[0, 1:])
            if not np.all(np.isfinite(eta)):
                raise NumericError(f"non-finite logit in outcome dimension {i}")
            self.state.omega_y[i] = draw_pg1(eta, self.rng)
        if cfg.d > 1:
            logits = class_logits(self.data.X, self.params.Gamma)
            for h in range(cfg.d):
                tilt = logits[:, h] - _logsumexp_excluding(logits, h)
                self.state.omega_z[:, h] = draw_pg1(tilt, self.rng)
        g_logits = self.params.Theta[:, 0][None, :] + self.data.T @ self.params.Theta[:, 1:].T
        if not np.all(np.isfinite(g_logits)):
            raise NumericError("non-finite loading-prior logit")
        self.state.omega_g = draw_pg1(g_logits, self.rng)

    # -- phase 3: parameters ---------------------------------------------------

    def update_A(self):
        cfg = self.config
        one_hot = np.eye(cfg.d)[self.state.z - 1]  # (N, d)
        Wf = self.state.W.astype(float)
        ones = Wf.T @ one_hot
        zeros = (1.0 - Wf).T @ one_hot
        draws = self.rng.beta(self.hyper.b + ones, self.hyper.b + zeros)
        self.params.A = np.clip(draws, ALPHA_CLIP, 1.0 - ALPHA_CLIP)

    def update_B(self):
        cfg = self.config
        Wf = self.state.W.astype(float)
        for i, spec in enumerate(cfg.entry_specs):
            g_i = self.params.G[i].astype(float)
            W_masked = Wf * g_i
            y = self.data.Y[:, i]
            if spec.kind == BINARY:
                design = np.hstack([np.ones((self.data.n_obs, 1)), W_masked])
                omega = self.state.omega_y[i]
                prec = self.V_beta_inv + design.T @ (design * omega[:, None])
                rhs = self.V_beta_inv_m + design.T @ (y - 0.5)
                self.params.B[i][0] = glm.draw_gaussian_conditional(prec, rhs, self.rng)
            elif spec.kind == CATEGORICAL:
                block, omegas = glm.update_categorical_rows(
                    y, W_masked, self.params.B[i], self.hyper, self.rng
                )
                self.params.B[i] = block
                self.state.omega_y[i] = omegas
            else:
                row, accepted = glm.mh_update_poisson_row(
                    self.params.B[i][0], y, W_masked, self.hyper, self.mh_tuning, self.rng
                )
                self.params.B[i][0] = row
                self.mh_proposals[i] += 1
                self.mh_accepts[i] += int(accepted)

    def update_Theta(self):
        for j in range(self.config.q):
            omega = self.state.omega_g[:, j]
            prec = np.eye(self.config.p_t + 1) + self.T1.T @ (self.T1 * omega[:, None])
            rhs = self.T1.T @ (self.params.G[:, j] - 0.5)
            self.params.Theta[j] = glm.draw_gaussian_conditional(prec, rhs, self.rng)

    def update_G(self):
        cfg = self.config
        if self.schedule.g_update_mode == "block":
            for i in range(cfg.p):
                probs = g_block_conditional(
                    self.params, cfg, self.data, self.state.W, i, self.weights[i]
                )
                k = _sample_rows(probs[None, :], self.rng)[0]
                self.params.G[i] = self.patterns[k].astype(self.params.G.dtype)
        else:
            for i in range(cfg.p):
                for j in range(cfg.q):
                    prob = g_entry_conditional(
                        self.params, cfg, self.data, self.state.W, i, j, self.weights[i]
                    )
                    self.params.G[i, j] = int(self.rng.random() < prob)

    def update_Gamma(self):
        cfg = self.config
        if cfg.d == 1:
            return
        for h in range(cfg.d - 1):
            logits = class_logits(self.data.X, self.params.Gamma)
            offset = _logsumexp_excluding(logits, h)
            if h > 0:
                # earlier rows changed since the augmentation phase: refresh
                tilt = logits[:, h] - offset
                self.state.omega_z[:, h] = draw_pg1(tilt, self.rng)
            omega = self.state.omega_z[:, h]
            prec = self.V_gamma_inv + self.X1.T @ (self.X1 * omega[:, None])
            kappa = (self.state.z == h + 1).astype(float) - 0.5 + omega * offset
            rhs = self.V_gamma_inv_m + self.X1.T @ kappa
            self.params.Gamma[h] = glm.draw_gaussian_conditional(prec, rhs, self.rng)

    # -- orchestration ---------------------------------------------------------

    def update_latents(self):
        """Latent phase: class labels, then attribute vectors."""
        self.update_z()
        self.update_w()

    def update_params(self):
        """Parameter phase; requires the augmentation phase to have run after
        the latest latent update so every consumed tilt is current."""
        self.update_A()
        self.update_B()
        self.update_Theta()
        self.update_G()
        self.update_Gamma()

    def sweep(self):
        self._refresh_weights()
        self.update_latents()
        self.update_augmented()
        self.update_params()

    def observation_loglik(self) -> np.ndarray:
        return log_lik_observations(self.data.Y, self.state.W, self.params, self.config)


def run_chain(
    data: Dataset,
    config: ModelConfig,
    hyper: Hyperparams,
    schedule: SamplerSchedule,
    init: Optional[Params] = None,
    fixed_w: Optional[np.ndarray] = None,
    mh_tuning: Optional[glm.MhTuning] = None,
) -> PosteriorSamples:
    """Run the full sampler and return the thinned archive.

    Deterministic given ``schedule.seed``; initialization defaults to a prior
    draw.  ``fixed_w`` pins the attribute matrix (used by the oracle chain).
    """
    rng = np.random.default_rng(schedule.seed)
    sampler = GibbsSampler(
        data, config, hyper, schedule, rng, params=init, fixed_w=fixed_w, mh_tuning=mh_tuning
    )
    n, cfg = data.n_obs, config
    n_kept = schedule.n_kept
    out = PosteriorSamples(
        A=np.empty((n_kept, cfg.q, cfg.d)),
        B=[np.empty((n_kept, s.n_coef_rows, cfg.q + 1)) for s in cfg.entry_specs],
        Gamma=np.empty((n_kept, cfg.d, cfg.p_x + 1)),
        G=np.empty((n_kept, cfg.p, cfg.q), dtype=np.int8),
        Theta=np.empty((n_kept, cfg.q, cfg.p_t + 1)),
        z=np.empty((n_kept, n), dtype=int),
        W=np.empty((n_kept, n, cfg.q), dtype=np.int8),
        loglik=np.empty((n_kept, n)),
        meta={"config": cfg, "schedule": schedule, "hyper": hyper},
    )
    kept = 0
    for it in range(schedule.n_iters):
        sampler.sweep()
        if it >= schedule.burn_in and (it - schedule.burn_in) % schedule.thin == 0:
            out.A[kept] = sampler.params.A
            for i in range(cfg.p):
                out.B[i][kept] = sampler.params.B[i]
            out.Gamma[kept] = sampler.params.Gamma
            out.G[kept] = sampler.params.G
            out.Theta[kept] = sampler.params.Theta
            out.z[kept] = sampler.state.z
            out.W[kept] = sampler.state.W
            out.loglik[kept] = sampler.observation_loglik()
            kept += 1
    if kept != n_kept:
        raise NumericError(f"kept {kept} snapshots, expected {n_kept}")
    if not np.all(np.isfinite(out.loglik)):
        raise NumericError("non-finite log-likelihood recorded in the archive")
    if sampler.mh_proposals.any():
        with np.errstate(invalid="ignore"):
            rate = sampler.mh_accepts / np.maximum(sampler.mh_proposals, 1)
        out.meta["mh_acceptance"] = {
            i: float(rate[i]) for i in np.nonzero(sampler.mh_proposals)[0]
        }
    return out

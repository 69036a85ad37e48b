"""Shared test utilities: small model builders and the joint-distribution
(Geweke-style) simulators used by both the unit tests and the acceptance run."""

import numpy as np

from latentclass.config import Dataset, Hyperparams, ModelConfig, SamplerSchedule
from latentclass.gibbs import GibbsSampler, PosteriorSamples
from latentclass.model import draw_latents, draw_outcomes, draw_params_from_prior


def small_instance(seed=0, p=4, q=2, d=2, p_x=1, p_t=1, n_obs=6, entry_specs=None):
    """A tiny validated (config, hyper, params, data, z, W) tuple."""
    cfg = ModelConfig(p=p, q=q, d=d, p_x=p_x, p_t=p_t, entry_specs=entry_specs)
    hyper = Hyperparams.default(cfg)
    rng = np.random.default_rng(seed)
    T = rng.standard_normal((p, p_t))
    params = draw_params_from_prior(cfg, hyper, T, rng)
    X = rng.standard_normal((n_obs, p_x))
    z, W = draw_latents(cfg, params, X, rng)
    Y = draw_outcomes(cfg, params, W, rng)
    data = Dataset(Y=Y, X=X, T=T).validate(cfg)
    return cfg, hyper, params, data, z, W


def truth_archive(cfg, hyper, params, z, W, n_obs):
    """Wrap a single parameter/latent configuration as a one-sample archive."""
    return PosteriorSamples(
        A=params.A[None],
        B=[b[None] for b in params.B],
        Gamma=params.Gamma[None],
        G=params.G[None],
        Theta=params.Theta[None],
        z=np.asarray(z)[None],
        W=np.asarray(W)[None],
        loglik=np.zeros((1, n_obs)),
        meta={"config": cfg, "hyper": hyper},
    )


def joint_stats(params, z, W, Y, cfg):
    """Scalar statistics of the joint (parameters, latents, data) state."""
    coef = params.binary_coef_matrix()
    stats = [
        params.A.mean(),
        params.A[0, 0],
        params.A[-1, -1],
        coef[:, 0].mean(),
        coef[:, 1:].mean(),
        (coef**2).mean(),
        params.Gamma[0, 0],
        params.Gamma[: cfg.d - 1].mean() if cfg.d > 1 else 0.0,
        params.Theta.mean(),
        (params.Theta**2).mean(),
        params.G.mean(),
        W.mean(),
        (z == 1).mean(),
        Y.mean(),
    ]
    return np.array(stats)


def geweke_zscores(
    cfg,
    n_obs,
    n_steps,
    seed,
    w_mode="block",
    g_mode="block",
    stats_fn=joint_stats,
    n_batches=50,
):
    """z-scores comparing the marginal-conditional and successive-conditional
    simulators; the successive side uses batch-means standard errors."""
    rng = np.random.default_rng(seed)
    hyper = Hyperparams.default(cfg)
    X = rng.standard_normal((n_obs, cfg.p_x))
    T = rng.standard_normal((cfg.p, cfg.p_t))

    marginal = []
    for _ in range(n_steps):
        params = draw_params_from_prior(cfg, hyper, T, rng)
        z, W = draw_latents(cfg, params, X, rng)
        Y = draw_outcomes(cfg, params, W, rng)
        marginal.append(stats_fn(params, z, W, Y, cfg))
    marginal = np.array(marginal)

    params = draw_params_from_prior(cfg, hyper, T, rng)
    z, W = draw_latents(cfg, params, X, rng)
    Y = draw_outcomes(cfg, params, W, rng)
    schedule = SamplerSchedule(
        n_iters=1, burn_in=0, thin=1, seed=0, w_update_mode=w_mode, g_update_mode=g_mode
    )
    sampler = GibbsSampler(Dataset(Y=Y, X=X, T=T), cfg, hyper, schedule, rng, params=params)
    sampler.state.z = z.copy()
    sampler.state.W = W.copy()
    successive = []
    for _ in range(n_steps):
        sampler.data.Y[:] = draw_outcomes(cfg, sampler.params, sampler.state.W, rng)
        sampler.sweep()
        successive.append(stats_fn(sampler.params, sampler.state.z, sampler.state.W, sampler.data.Y, cfg))
    successive = np.array(successive)

    usable = (n_steps // n_batches) * n_batches
    batches = successive[:usable].reshape(n_batches, -1, successive.shape[1]).mean(axis=1)
    se_succ = batches.std(axis=0, ddof=1) / np.sqrt(n_batches)
    se_marg = marginal.std(axis=0, ddof=1) / np.sqrt(n_steps)
    return (successive.mean(axis=0) - marginal.mean(axis=0)) / np.sqrt(se_succ**2 + se_marg**2)

"""Bayesian latent class regression with a binary attribute layer.

High-dimensional discrete outcome vectors are modeled through a sparse binary
loading matrix onto latent attributes, which are in turn driven by a
covariate-dependent deep latent class.  Inference runs on an exact
data-augmented Gibbs sampler; model selection uses WAIC.
"""

__version__ = "0.1.0"

from .config import (
    Dataset,
    EntrySpec,
    Hyperparams,
    LatentState,
    ModelConfig,
    Params,
    SamplerSchedule,
    SurrogateSpec,
)
from .estimator import DeepLatentClassModel
from .exceptions import ConfigError, DataError, LatentClassError, NumericError
from .gibbs import GibbsSampler, PosteriorSamples, run_chain, surrogate_loglik
from .glm import MhTuning, log_lik_entry_general, mh_update_poisson_row
from .metrics import (
    auc,
    cooccurrence_from_probs,
    cooccurrence_score,
    posterior_predictive_mean,
    rmse,
)
from .model import (
    TruthConstraints,
    class_probs_given_x,
    draw_params_from_prior,
    log_lik_binary_entry,
    prob_w_given_z,
    simulate_dataset,
)
from .polyagamma import PgDraw, draw_pg1, pg_mean, pg_var
from .postprocess import (
    Summary,
    WaicResult,
    marginal_loglik,
    refine_g,
    relabel,
    summarize,
    waic,
)
from .experiments import (
    OracleReport,
    check_g_generic,
    check_g_strict,
    mixture_curse_demo,
    mixture_log_marginal,
    oracle_convergence_study,
    oracle_distance,
    oracle_probability_chain,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Dataset",
    "DeepLatentClassModel",
    "EntrySpec",
    "GibbsSampler",
    "Hyperparams",
    "LatentClassError",
    "LatentState",
    "MhTuning",
    "ModelConfig",
    "NumericError",
    "OracleReport",
    "Params",
    "PgDraw",
    "PosteriorSamples",
    "SamplerSchedule",
    "Summary",
    "SurrogateSpec",
    "TruthConstraints",
    "WaicResult",
    "auc",
    "check_g_generic",
    "check_g_strict",
    "class_probs_given_x",
    "cooccurrence_from_probs",
    "cooccurrence_score",
    "draw_params_from_prior",
    "draw_pg1",
    "log_lik_binary_entry",
    "log_lik_entry_general",
    "marginal_loglik",
    "mh_update_poisson_row",
    "mixture_curse_demo",
    "mixture_log_marginal",
    "oracle_convergence_study",
    "oracle_distance",
    "oracle_probability_chain",
    "pg_mean",
    "pg_var",
    "posterior_predictive_mean",
    "prob_w_given_z",
    "refine_g",
    "relabel",
    "rmse",
    "run_chain",
    "simulate_dataset",
    "summarize",
    "surrogate_loglik",
    "waic",
]

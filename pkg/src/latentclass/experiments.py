"""Diagnostic studies: Bernoulli-mixture dimensionality demo, oracle clustering
convergence, and static identifiability checkers for the loading matrix."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .config import Dataset, Hyperparams, ModelConfig, SamplerSchedule
from .exceptions import ConfigError, DataError
from .gibbs import run_chain
from .model import TruthConstraints, draw_latents, draw_outcomes, draw_params_from_prior

# ---------------------------------------------------------------------------
# Bernoulli-mixture marginal likelihood and the dimensionality demo
# ---------------------------------------------------------------------------


def canonical_partition(blocks) -> tuple:
    """Validate and canonicalize a partition: disjoint non-empty blocks sorted
    by smallest member, each block a sorted tuple."""
    cleaned = []
    seen = set()
    for block in blocks:
        items = tuple(sorted(int(i) for i in block))
        if not items:
            raise DataError("partition blocks must be non-empty")
        if seen & set(items):
            raise DataError("partition blocks must be disjoint")
        seen.update(items)
        cleaned.append(items)
    if seen != set(range(len(seen))):
        raise DataError("partition must cover 0..N-1 exactly")
    return tuple(sorted(cleaned, key=lambda b: b[0]))


def singleton_partition(n: int) -> tuple:
    return tuple((i,) for i in range(n))


def one_cluster_partition(n: int) -> tuple:
    return (tuple(range(n)),)


def enumerate_partitions(n: int):
    """All set partitions of 0..n-1 via restricted-growth strings (n <= 12)."""
    if n > 12:
        raise ConfigError("exhaustive partition enumeration is limited to N <= 12")

    def rec(labels, next_label):
        if len(labels) == n:
            blocks = [[] for _ in range(next_label)]
            for i, l in enumerate(labels):
                blocks[l].append(i)
            yield canonical_partition(blocks)
            return
        for l in range(next_label):
            yield from rec(labels + [l], next_label)
        yield from rec(labels + [next_label], next_label + 1)

    yield from rec([], 0)


def mixture_log_marginal(Y: np.ndarray, partition) -> float:
    """Log marginal likelihood of a Bernoulli mixture at a fixed partition,
    with uniform priors on every cluster-by-dimension probability.

    Each (dimension, block) pair contributes log Gamma(s+1) + log Gamma(f+1)
    - log Gamma(n_h+2), where s and f count ones and zeros inside the block.
    """
    Y = np.asarray(Y)
    if not np.all((Y == 0) | (Y == 1)):
        raise DataError("mixture marginal requires binary data")
    partition = canonical_partition(partition)
    total = 0.0
    for block in partition:
        sub = Y[list(block), :]
        ones = sub.sum(axis=0)
        n_h = len(block)
        total += float(np.sum(gammaln(ones + 1.0) + gammaln(n_h - ones + 1.0) - gammaln(n_h + 2.0)))
    return total


def mixture_partition_log_posterior(Y: np.ndarray):
    """Exhaustive log posterior over all partitions under a uniform partition
    prior; returns (partitions, normalized log probabilities)."""
    parts = list(enumerate_partitions(Y.shape[0]))
    logs = np.array([mixture_log_marginal(Y, p) for p in parts])
    logs -= logs.max()
    logs -= np.log(np.exp(logs).sum())
    return parts, logs


def mixture_curse_demo(n_obs: int, p_grid: Sequence[int], seed: int) -> list:
    """Simulate flat-probability binary data at the largest grid dimension and
    report (p, log ratio of all-singletons vs one-cluster marginals) rows.

    Columns are i.i.d., so one simulation serves every p by prefix sums.
    """
    if n_obs < 2:
        raise ConfigError("the demo needs at least two observations")
    p_grid = sorted(int(p) for p in p_grid)
    if p_grid and p_grid[0] < 0:
        raise ConfigError("dimensions must be non-negative")
    rng = np.random.default_rng(seed)
    p_max = p_grid[-1] if p_grid else 0
    Y = (rng.random((n_obs, p_max)) < 0.5).astype(np.int8)
    ones = Y.sum(axis=0)
    # per-column log ratio: singleton blocks each contribute log(1/2) per obs
    per_col = (
        n_obs * np.log(0.5)
        + gammaln(n_obs + 2.0)
        - gammaln(ones + 1.0)
        - gammaln(n_obs - ones + 1.0)
    )
    cums = np.concatenate([[0.0], np.cumsum(per_col)])
    return [(p, float(cums[p])) for p in p_grid]


# ---------------------------------------------------------------------------
# Oracle clustering probability
# ---------------------------------------------------------------------------


def class_frequencies(z_samples: np.ndarray, d: int) -> np.ndarray:
    """(N, d) per-observation class frequencies from an (S, N) label archive."""
    return np.stack([(z_samples == h + 1).mean(axis=0) for h in range(d)], axis=1)


def oracle_probability_chain(
    data: Dataset,
    w_star: np.ndarray,
    config: ModelConfig,
    hyper: Hyperparams,
    schedule: SamplerSchedule,
) -> np.ndarray:
    """Estimate oracle class probabilities by a chain with W pinned at truth.

    With the attributes fixed, the class labels' stationary distribution never
    sees the outcomes, so the retained-sample frequencies estimate the
    conditional class probabilities given covariates and true attributes.
    """
    samples = run_chain(data, config, hyper, schedule, fixed_w=np.asarray(w_star))
    return class_frequencies(samples.z, config.d)


def oracle_distance(posterior: np.ndarray, oracle: np.ndarray) -> float:
    """Mean absolute difference between two (N, d) row-stochastic matrices."""
    posterior = np.asarray(posterior, dtype=float)
    oracle = np.asarray(oracle, dtype=float)
    if posterior.shape != oracle.shape:
        raise DataError(f"shape mismatch: {posterior.shape} vs {oracle.shape}")
    return float(np.abs(posterior - oracle).mean())


def aligned_oracle_distance(posterior: np.ndarray, oracle: np.ndarray) -> float:
    """Oracle distance minimized over class relabelings of the posterior matrix.

    Class labels are only identified up to permutation, so the discrepancy is
    measured after the best column alignment (d! is small here).
    """
    d = posterior.shape[1]
    best = np.inf
    for perm in itertools.permutations(range(d)):
        best = min(best, oracle_distance(posterior[:, perm], oracle))
    return best


@dataclass
class OracleReport:
    """Per-dimension mean L1 distances between posterior and oracle class probabilities."""

    p_grid: list
    distances: list

    def rows(self):
        return list(zip(self.p_grid, self.distances))


def oracle_convergence_study(
    config_base: ModelConfig,
    p_grid: Sequence[int],
    seed: int,
    n_obs: int = 1000,
    schedule: Optional[SamplerSchedule] = None,
    min_effect: float = 2.5,
) -> OracleReport:
    """Fit the full model and the pinned-attribute oracle chain over a grid of
    outcome dimensionalities, sharing the class/attribute truth across p.

    The deep truth (class coefficients, attribute probabilities, covariates,
    true z and W) is drawn once; loadings, coefficients, meta-covariates, and
    outcomes are regenerated at each p.  Reported distances are aligned over
    class permutations.
    """
    p_grid = [int(p) for p in p_grid]
    master = np.random.default_rng(seed)
    shared_cfg = ModelConfig(
        p=1, q=config_base.q, d=config_base.d, p_x=config_base.p_x, p_t=config_base.p_t
    )
    shared_params = draw_params_from_prior(
        shared_cfg, Hyperparams.default(shared_cfg), np.zeros((1, config_base.p_t)), master
    )
    X = master.standard_normal((n_obs, config_base.p_x))
    z_true, w_true = draw_latents(shared_cfg, shared_params, X, master)

    distances = []
    for p in p_grid:
        cfg = ModelConfig(p=p, q=config_base.q, d=config_base.d, p_x=config_base.p_x, p_t=config_base.p_t)
        hyper = Hyperparams.default(cfg)
        cell = np.random.default_rng(np.random.SeedSequence([seed, p]))
        T = cell.standard_normal((p, cfg.p_t))
        truth = draw_params_from_prior(
            cfg,
            hyper,
            T,
            cell,
            constraints=TruthConstraints(identity_blocks=p >= 3 * cfg.q, min_effect=min_effect),
        )
        truth.A = shared_params.A
        truth.Gamma = shared_params.Gamma
        Y = draw_outcomes(cfg, truth, w_true, cell)
        data = Dataset(Y=Y, X=X, T=T).validate(cfg)
        if schedule is None:
            sched = SamplerSchedule(n_iters=2000, burn_in=1000, thin=1, seed=seed)
        else:
            sched = schedule
        full_sched = SamplerSchedule(
            n_iters=sched.n_iters,
            burn_in=sched.burn_in,
            thin=sched.thin,
            seed=int(np.random.SeedSequence([seed, p, 1]).generate_state(1)[0]),
            w_update_mode=sched.w_update_mode,
            g_update_mode=sched.g_update_mode,
        )
        oracle_sched = SamplerSchedule(
            n_iters=sched.n_iters,
            burn_in=sched.burn_in,
            thin=sched.thin,
            seed=int(np.random.SeedSequence([seed, p, 2]).generate_state(1)[0]),
            w_update_mode=sched.w_update_mode,
            g_update_mode=sched.g_update_mode,
        )
        full = run_chain(data, cfg, hyper, full_sched)
        posterior = class_frequencies(full.z, cfg.d)
        oracle = oracle_probability_chain(data, w_true, cfg, hyper, oracle_sched)
        distances.append(aligned_oracle_distance(posterior, oracle))
    return OracleReport(p_grid=p_grid, distances=distances)


# ---------------------------------------------------------------------------
# Static loading-matrix checkers
# ---------------------------------------------------------------------------


def check_g_strict(G: np.ndarray):
    """Three stacked identity blocks, up to row permutation (columns fixed).

    Equivalent to each canonical basis vector appearing as a row at least
    three times.  Returns (ok, witness); the witness is a (3, q) array of row
    indices, block by block, or None.
    """
    G = np.asarray(G)
    if G.ndim != 2 or not np.all((G == 0) | (G == 1)):
        raise DataError("G must be a binary matrix")
    p, q = G.shape
    if p < 3 * q:
        return False, None
    witness = np.empty((3, q), dtype=int)
    for j in range(q):
        basis = np.zeros(q)
        basis[j] = 1
        rows = np.nonzero((G == basis).all(axis=1))[0]
        if rows.size < 3:
            return False, None
        witness[:, j] = rows[:3]
    return True, witness


def _hall_violated(neighbors: list) -> bool:
    """Necessary condition: every column set C needs |N(C)| >= 2|C| + 1."""
    q = len(neighbors)
    if q > 16:
        return False  # skip the exponential filter; the search below is exact
    for r in range(1, q + 1):
        for combo in itertools.combinations(range(q), r):
            union = set().union(*(neighbors[j] for j in combo))
            if len(union) < 2 * r + 1:
                return True
    return False


def check_g_generic(G: np.ndarray) -> bool:
    """Condition for generic identifiability of the loading structure:
    distinct columns, two disjoint row blocks assignable with all-one
    diagonals, and remaining rows covering every column.

    The block assignment is found by exact backtracking (two rows per column,
    injective) with a Hall-type pruning filter; at each leaf the unassigned
    rows must still cover every column.
    """
    G = np.asarray(G)
    if G.ndim != 2 or not np.all((G == 0) | (G == 1)):
        raise DataError("G must be a binary matrix")
    p, q = G.shape
    cols = {tuple(G[:, j]) for j in range(q)}
    if len(cols) != q:
        return False
    if p < 2 * q:
        return False
    neighbors = [set(np.nonzero(G[:, j])[0]) for j in range(q)]
    if any(len(nb) < 3 for nb in neighbors):
        return False  # two assigned rows plus one uncovered row per column
    if _hall_violated(neighbors):
        return False

    order = sorted(range(q), key=lambda j: len(neighbors[j]))

    def assign(idx: int, used: frozenset) -> bool:
        if idx == q:
            return all(neighbors[j] - used for j in range(q))
        j = order[idx]
        avail = sorted(neighbors[j] - used)
        for pair in itertools.combinations(avail, 2):
            if assign(idx + 1, used | frozenset(pair)):
                return True
        return False

    return assign(0, frozenset())

"""Domain types: model dimensions, outcome entry kinds, data container, priors, schedule."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import ConfigError, DataError

BINARY = "binary"
CATEGORICAL = "categorical"
COUNT = "count"


@dataclass(frozen=True)
class EntrySpec:
    """Outcome kind of one data dimension.

    ``levels`` is only meaningful for categorical entries; the highest level is
    the pinned baseline.  Binary and count entries carry a single coefficient
    row, categorical entries carry one row per level (baseline row all zeros).
    """

    kind: str
    levels: int = 0

    def __post_init__(self):
        if self.kind not in (BINARY, CATEGORICAL, COUNT):
            raise ConfigError(f"unknown entry kind {self.kind!r}")
        if self.kind == CATEGORICAL and self.levels < 2:
            raise ConfigError("categorical entries need at least 2 levels")
        if self.kind != CATEGORICAL and self.levels != 0:
            raise ConfigError(f"levels only applies to categorical entries, got {self.levels}")

    @classmethod
    def binary(cls) -> "EntrySpec":
        return cls(BINARY)

    @classmethod
    def categorical(cls, levels: int) -> "EntrySpec":
        return cls(CATEGORICAL, levels)

    @classmethod
    def count(cls) -> "EntrySpec":
        return cls(COUNT)

    @property
    def n_coef_rows(self) -> int:
        """Number of stored coefficient rows (incl. the pinned baseline row)."""
        return self.levels if self.kind == CATEGORICAL else 1


@dataclass(frozen=True)
class ModelConfig:
    """Dimensions of the model: p outcome dims, q binary attributes, d deep classes.

    ``p_x`` is the per-observation covariate dimension and ``p_t`` the
    per-dimension meta-covariate dimension; both may be zero (intercept-only).
    """

    p: int
    q: int
    d: int
    p_x: int = 0
    p_t: int = 0
    entry_specs: Optional[tuple] = None

    def __post_init__(self):
        if self.p < 1 or self.q < 1 or self.d < 1:
            raise ConfigError(f"p, q, d must all be >= 1, got ({self.p}, {self.q}, {self.d})")
        if self.p_x < 0 or self.p_t < 0:
            raise ConfigError("covariate dimensions must be >= 0")
        if self.entry_specs is None:
            object.__setattr__(self, "entry_specs", tuple(EntrySpec.binary() for _ in range(self.p)))
        else:
            specs = tuple(self.entry_specs)
            if len(specs) != self.p:
                raise ConfigError(f"entry_specs has {len(specs)} entries, expected p={self.p}")
            object.__setattr__(self, "entry_specs", specs)

    @property
    def all_binary(self) -> bool:
        return all(s.kind == BINARY for s in self.entry_specs)

    def entry_indices(self, kind: str) -> np.ndarray:
        return np.array([i for i, s in enumerate(self.entry_specs) if s.kind == kind], dtype=int)


def _covariate_table(arr, name: str, n_rows: int) -> np.ndarray:
    if arr is None:
        return np.zeros((n_rows, 0))
    a = np.asarray(arr, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] != n_rows:
        raise DataError(f"{name} has shape {a.shape}, expected {n_rows} rows")
    return a


@dataclass
class Dataset:
    """Observed outcomes Y (N x p), covariates X (N x p_x), meta-covariates T (p x p_t)."""

    Y: np.ndarray
    X: Optional[np.ndarray] = None
    T: Optional[np.ndarray] = None

    def __post_init__(self):
        self.Y = np.asarray(self.Y)
        if self.Y.ndim != 2:
            raise DataError(f"Y must be 2-dimensional, got shape {self.Y.shape}")
        n, p = self.Y.shape
        self.X = _covariate_table(self.X, "X", n)
        self.T = _covariate_table(self.T, "T", p)

    @property
    def n_obs(self) -> int:
        return self.Y.shape[0]

    @property
    def p(self) -> int:
        return self.Y.shape[1]

    def validate(self, config: ModelConfig) -> "Dataset":
        """Check shapes and entry supports against the config; raises DataError."""
        if self.p != config.p:
            raise DataError(f"Y has {self.p} columns, config expects p={config.p}")
        if self.X.shape[1] != config.p_x:
            raise DataError(f"X has {self.X.shape[1]} columns, config expects p_x={config.p_x}")
        if self.T.shape[1] != config.p_t:
            raise DataError(f"T has {self.T.shape[1]} columns, config expects p_t={config.p_t}")
        if not np.all(np.isfinite(self.X)) or not np.all(np.isfinite(self.T)):
            raise DataError("covariates contain non-finite values")
        Y = self.Y
        if not np.all(np.isfinite(Y)):
            raise DataError("Y contains non-finite values")
        if np.any(Y != np.round(Y)):
            raise DataError("Y contains non-integer values")
        for i, spec in enumerate(config.entry_specs):
            col = Y[:, i]
            if spec.kind == BINARY:
                bad = np.nonzero((col != 0) & (col != 1))[0]
                if bad.size:
                    raise DataError(f"binary entry: Y[{bad[0]}, {i}] = {col[bad[0]]} not in {{0, 1}}")
            elif spec.kind == CATEGORICAL:
                bad = np.nonzero((col < 1) | (col > spec.levels))[0]
                if bad.size:
                    raise DataError(
                        f"categorical entry: Y[{bad[0]}, {i}] = {col[bad[0]]} not in 1..{spec.levels}"
                    )
            else:
                bad = np.nonzero(col < 0)[0]
                if bad.size:
                    raise DataError(f"count entry: Y[{bad[0]}, {i}] = {col[bad[0]]} is negative")
        return self


def _check_spd(V: np.ndarray, name: str):
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[0] != V.shape[1]:
        raise ConfigError(f"{name} must be a square matrix")
    if not np.allclose(V, V.T):
        raise ConfigError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(V)
    except np.linalg.LinAlgError:
        raise ConfigError(f"{name} must be positive definite") from None
    return V


@dataclass
class Hyperparams:
    """Prior hyperparameters: Beta(b, b) on attribute probabilities, Gaussian
    priors on regression coefficient rows.  Defaults are weakly informative
    (b = 1, zero means, identity covariances)."""

    b: float
    m_beta: np.ndarray
    V_beta: np.ndarray
    m_gamma: np.ndarray
    V_gamma: np.ndarray

    def __post_init__(self):
        if self.b <= 0:
            raise ConfigError(f"Beta symmetry parameter b must be > 0, got {self.b}")
        self.m_beta = np.asarray(self.m_beta, dtype=float).ravel()
        self.m_gamma = np.asarray(self.m_gamma, dtype=float).ravel()
        self.V_beta = _check_spd(self.V_beta, "V_beta")
        self.V_gamma = _check_spd(self.V_gamma, "V_gamma")
        if self.V_beta.shape[0] != self.m_beta.size:
            raise ConfigError("m_beta and V_beta dimensions disagree")
        if self.V_gamma.shape[0] != self.m_gamma.size:
            raise ConfigError("m_gamma and V_gamma dimensions disagree")

    @classmethod
    def default(cls, config: ModelConfig, b: float = 1.0) -> "Hyperparams":
        return cls(
            b=b,
            m_beta=np.zeros(config.q + 1),
            V_beta=np.eye(config.q + 1),
            m_gamma=np.zeros(config.p_x + 1),
            V_gamma=np.eye(config.p_x + 1),
        )

    def check(self, config: ModelConfig):
        if self.m_beta.size != config.q + 1:
            raise ConfigError(f"m_beta has length {self.m_beta.size}, expected q+1={config.q + 1}")
        if self.m_gamma.size != config.p_x + 1:
            raise ConfigError(
                f"m_gamma has length {self.m_gamma.size}, expected p_x+1={config.p_x + 1}"
            )


MAX_BLOCK_Q = 20  # 2^q candidate patterns are enumerated in block mode


@dataclass(frozen=True)
class SurrogateSpec:
    """Coreset/subsampling surrogate for the outcome log-likelihood.

    ``coreset`` is the fixed set of always-evaluated dimensions; at every sweep
    ``subsample_size`` further dimensions are drawn uniformly from the
    remainder and up-weighted by (p - |coreset|) / subsample_size.
    """

    coreset: tuple
    subsample_size: int

    def __post_init__(self):
        object.__setattr__(self, "coreset", tuple(sorted(set(int(i) for i in self.coreset))))
        if self.subsample_size < 0:
            raise ConfigError("subsample_size must be >= 0")

    def check(self, p: int):
        if any(i < 0 or i >= p for i in self.coreset):
            raise ConfigError("coreset indices out of range")
        n_rest = p - len(self.coreset)
        if n_rest > 0 and self.subsample_size == 0:
            raise ConfigError("subsample_size must be >= 1 when the coreset does not cover all dimensions")
        if self.subsample_size > n_rest:
            raise ConfigError("subsample_size exceeds the number of non-coreset dimensions")


@dataclass
class SamplerSchedule:
    """Gibbs sweep schedule: total sweeps, burn-in prefix, thinning stride, seed."""

    n_iters: int
    burn_in: int
    thin: int = 1
    seed: int = 0
    w_update_mode: str = "block"
    g_update_mode: str = "block"
    surrogate: Optional[SurrogateSpec] = None

    def __post_init__(self):
        if self.n_iters < 1:
            raise ConfigError("n_iters must be >= 1")
        if not 0 <= self.burn_in < self.n_iters:
            raise ConfigError(f"burn_in must be in [0, n_iters), got {self.burn_in}")
        if self.thin < 1:
            raise ConfigError("thin must be >= 1")
        for mode, name in ((self.w_update_mode, "w_update_mode"), (self.g_update_mode, "g_update_mode")):
            if mode not in ("block", "entrywise"):
                raise ConfigError(f"{name} must be 'block' or 'entrywise', got {mode!r}")

    def check(self, config: ModelConfig):
        if "block" in (self.w_update_mode, self.g_update_mode) and config.q > MAX_BLOCK_Q:
            raise ConfigError(
                f"block updates enumerate 2^q patterns; q={config.q} exceeds the guard q <= {MAX_BLOCK_Q}"
            )
        if self.surrogate is not None:
            self.surrogate.check(config.p)

    @property
    def n_kept(self) -> int:
        return (self.n_iters - self.burn_in + self.thin - 1) // self.thin


@dataclass
class Params:
    """Population-level parameters.

    A       : (q, d) attribute probabilities, entries strictly inside (0, 1).
    B       : per-dimension coefficient blocks; block i has shape
              (n_coef_rows_i, q + 1) with column 0 the intercept.  Categorical
              baselines (last row) are pinned to zero.
    Gamma   : (d, p_x + 1) class logit rows; baseline row d is pinned to zero.
    G       : (p, q) binary loading matrix.
    Theta   : (q, p_t + 1) loading-prior logit rows.
    """

    A: np.ndarray
    B: list
    Gamma: np.ndarray
    G: np.ndarray
    Theta: np.ndarray

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.Gamma = np.asarray(self.Gamma, dtype=float)
        self.G = np.asarray(self.G)
        self.Theta = np.asarray(self.Theta, dtype=float)
        self.B = [np.atleast_2d(np.asarray(b, dtype=float)) for b in self.B]

    def validate(self, config: ModelConfig) -> "Params":
        q, d, p = config.q, config.d, config.p
        if self.A.shape != (q, d):
            raise ConfigError(f"A has shape {self.A.shape}, expected ({q}, {d})")
        if np.any(self.A <= 0.0) or np.any(self.A >= 1.0):
            raise ConfigError("A entries must lie strictly inside (0, 1)")
        if self.Gamma.shape != (d, config.p_x + 1):
            raise ConfigError(f"Gamma has shape {self.Gamma.shape}, expected ({d}, {config.p_x + 1})")
        if np.any(self.Gamma[-1] != 0.0):
            raise ConfigError("baseline Gamma row (class d) must be pinned to zero")
        if self.G.shape != (p, q):
            raise ConfigError(f"G has shape {self.G.shape}, expected ({p}, {q})")
        if not np.all((self.G == 0) | (self.G == 1)):
            raise ConfigError("G entries must be 0 or 1")
        if self.Theta.shape != (q, config.p_t + 1):
            raise ConfigError(f"Theta has shape {self.Theta.shape}, expected ({q}, {config.p_t + 1})")
        if len(self.B) != p:
            raise ConfigError(f"B has {len(self.B)} blocks, expected p={p}")
        for i, (block, spec) in enumerate(zip(self.B, config.entry_specs)):
            if block.shape != (spec.n_coef_rows, q + 1):
                raise ConfigError(
                    f"B block {i} has shape {block.shape}, expected ({spec.n_coef_rows}, {q + 1})"
                )
            if spec.kind == CATEGORICAL and np.any(block[-1] != 0.0):
                raise ConfigError(f"B block {i}: categorical baseline row must be pinned to zero")
        return self

    def binary_coef_matrix(self) -> np.ndarray:
        """Stack the single coefficient rows into a (p, q+1) matrix.

        Only valid when every entry has one coefficient row (binary/count).
        """
        if any(b.shape[0] != 1 for b in self.B):
            raise ConfigError("binary_coef_matrix requires single-row coefficient blocks")
        return np.vstack([b[0] for b in self.B])

    def copy(self) -> "Params":
        return Params(
            A=self.A.copy(),
            B=[b.copy() for b in self.B],
            Gamma=self.Gamma.copy(),
            G=self.G.copy(),
            Theta=self.Theta.copy(),
        )


def coef_matrix_to_blocks(mat: np.ndarray) -> list:
    """Inverse of Params.binary_coef_matrix for all-single-row models."""
    return [mat[i : i + 1].copy() for i in range(mat.shape[0])]


@dataclass
class LatentState:
    """Per-observation latent variables plus all augmentation variables.

    omega_y holds one array per outcome dimension: shape (N,) for binary
    entries, (N, D_i) for categorical entries, and None for count entries
    (their coefficient rows are updated by Metropolis-Hastings, without
    augmentation).
    """

    z: np.ndarray
    W: np.ndarray
    omega_y: list
    omega_z: np.ndarray
    omega_g: np.ndarray

    def copy(self) -> "LatentState":
        return LatentState(
            z=self.z.copy(),
            W=self.W.copy(),
            omega_y=[None if w is None else w.copy() for w in self.omega_y],
            omega_z=self.omega_z.copy(),
            omega_g=self.omega_g.copy(),
        )

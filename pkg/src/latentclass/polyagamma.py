"""Exact PG(1, c) random variates and their analytic moments.

The sampler is the exact alternating-series accept/reject scheme for the
Jacobi-type density: proposals come from a two-piece mixture of a truncated
inverse-Gaussian (left of the cutover point) and a truncated exponential
(right of it), and the accept decision is settled by alternating partial sums
of the series density, so no truncation bias is introduced.  Only shape 1 is
provided; every augmentation variable in this model has shape 1.

All draws consume a caller-supplied numpy Generator, which keeps runs
reproducible and lets callers derive independent streams for parallel work.
"""

from __future__ import annotations

import math

from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr

# Cutover between the inverse-Gaussian and exponential proposal pieces.
_T = 0.64
_LOG_2_OVER_PI = math.log(2.0 / math.pi)


@dataclass(frozen=True)
class PgDraw:
    """One PG(1, tilt) variate together with the tilt it was drawn at."""

    value: float
    tilt: float

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError(f"PG draws are strictly positive, got {self.value}")


def pg_mean(c) -> np.ndarray | float:
    """Mean of PG(1, c): tanh(c/2) / (2c), with the c -> 0 limit 1/4.

    A two-term series is used for |c| < 1e-4 where the ratio loses precision.
    """
    c = np.asarray(c, dtype=float)
    small = np.abs(c) < 1e-4
    safe = np.where(small, 1.0, c)
    out = np.where(small, 0.25 - c * c / 48.0, np.tanh(safe / 2.0) / (2.0 * safe))
    return float(out) if out.ndim == 0 else out


def pg_var(c) -> np.ndarray | float:
    """Variance of PG(1, c): (sinh(c) - c) / (4 c^3 cosh^2(c/2)); limit 1/24 at 0."""
    c = np.asarray(c, dtype=float)
    small = np.abs(c) < 1e-3
    safe = np.where(small, 1.0, c)
    exact = (np.sinh(safe) - safe) / (4.0 * safe**3 * np.cosh(safe / 2.0) ** 2)
    series = 1.0 / 24.0 - c * c / 120.0
    out = np.where(small, series, exact)
    return float(out) if out.ndim == 0 else out


def _series_coef(n: np.ndarray, x: np.ndarray) -> np.ndarray:
    """n-th alternating-series coefficient of the base density, piecewise in x."""
    half = n + 0.5
    left = np.pi * half * np.exp(
        1.5 * (_LOG_2_OVER_PI - np.log(x)) - 2.0 * half * half / x
    )
    right = np.pi * half * np.exp(-half * half * np.pi**2 * x / 2.0)
    return np.where(x > _T, right, left)


def _exp_piece_prob(z: np.ndarray) -> np.ndarray:
    """P(proposal comes from the truncated-exponential piece) as a function of z."""
    rate = np.pi**2 / 8.0 + z * z / 2.0
    sqrt_inv_t = 1.0 / math.sqrt(_T)
    log_p = np.log(np.pi / (2.0 * rate)) - rate * _T
    # q = 2 [ e^{-z} Phi((tz-1)/sqrt(t)) + e^{z} Phi(-(tz+1)/sqrt(t)) ]
    log_q = np.log(2.0) + np.logaddexp(
        -z + log_ndtr(sqrt_inv_t * (_T * z - 1.0)),
        z + log_ndtr(-sqrt_inv_t * (_T * z + 1.0)),
    )
    return np.exp(log_p - np.logaddexp(log_p, log_q))


def _draw_truncated_invgauss(z: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Inverse-Gaussian(mu=1/z, lambda=1) draws restricted to (0, t]."""
    out = np.empty_like(z)
    # mean above the cutover (small z): rejection from the scaled one-sided stable
    todo = np.nonzero(z < 1.0 / _T)[0]
    while todo.size:
        e1 = rng.standard_exponential(todo.size)
        e2 = rng.standard_exponential(todo.size)
        x = _T / (1.0 + _T * e1) ** 2
        accept = (e1 * e1 <= 2.0 * e2 / _T) & (
            rng.random(todo.size) <= np.exp(-0.5 * z[todo] ** 2 * x)
        )
        out[todo[accept]] = x[accept]
        todo = todo[~accept]
    # mean below the cutover: plain inverse-Gaussian draws until one lands left of t
    todo = np.nonzero(z >= 1.0 / _T)[0]
    while todo.size:
        mu = 1.0 / z[todo]
        y = rng.standard_normal(todo.size) ** 2
        muy = mu * y
        x = mu + 0.5 * mu * muy - 0.5 * mu * np.sqrt(muy * (4.0 + muy))
        flip = rng.random(todo.size) > mu / (mu + x)
        x = np.where(flip, mu * mu / x, x)
        accept = x <= _T
        out[todo[accept]] = x[accept]
        todo = todo[~accept]
    return out


def _draw_jacobi(z: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Tilted Jacobi draws; PG(1, c) = output / 4 with z = |c| / 2."""
    n = z.size
    out = np.empty(n)
    pending = np.arange(n)
    rate = np.pi**2 / 8.0 + z * z / 2.0
    p_exp = _exp_piece_prob(z)
    while pending.size:
        zs = z[pending]
        use_exp = rng.random(pending.size) < p_exp[pending]
        x = np.empty(pending.size)
        if np.any(use_exp):
            x[use_exp] = _T + rng.standard_exponential(np.count_nonzero(use_exp)) / rate[pending][use_exp]
        if np.any(~use_exp):
            x[~use_exp] = _draw_truncated_invgauss(zs[~use_exp], rng)
        # alternating partial sums decide accept/reject exactly
        s = _series_coef(np.zeros_like(x), x)
        y = rng.random(pending.size) * s
        undecided = np.arange(pending.size)
        accepted = np.zeros(pending.size, dtype=bool)
        n_term = 0
        while undecided.size:
            n_term += 1
            coef = _series_coef(np.full(undecided.size, float(n_term)), x[undecided])
            if n_term % 2 == 1:
                s[undecided] -= coef
                newly = y[undecided] <= s[undecided]
                accepted[undecided[newly]] = True
                undecided = undecided[~newly]
            else:
                s[undecided] += coef
                newly = y[undecided] > s[undecided]
                undecided = undecided[~newly]
        out[pending[accepted]] = x[accepted]
        pending = pending[~accepted]
    return out


def draw_pg1(c, rng: np.random.Generator, size=None) -> np.ndarray | float:
    """Exact PG(1, c) draws; symmetric in the sign of c.

    ``c`` may be a scalar or an array; with ``size`` given, a scalar c is
    broadcast.  Returns a float for scalar input without ``size``.
    """
    c_arr = np.asarray(c, dtype=float)
    scalar = c_arr.ndim == 0 and size is None
    if size is not None:
        c_arr = np.broadcast_to(c_arr, size if isinstance(size, tuple) else (size,))
    shape = c_arr.shape
    flat = np.abs(c_arr).ravel()
    if flat.size and not np.all(np.isfinite(flat)):
        raise ValueError("PG tilt must be finite")
    draws = _draw_jacobi(flat / 2.0, rng) / 4.0
    if scalar:
        return float(draws[0])
    return draws.reshape(shape)


def draw_pg1_detailed(c: float, rng: np.random.Generator) -> PgDraw:
    """Single draw bundled with its tilt."""
    return PgDraw(value=draw_pg1(c, rng), tilt=float(c))

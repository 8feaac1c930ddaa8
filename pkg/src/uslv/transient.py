"""Finite-horizon distributions of chain states by randomization.

The matrix exponential of a generator is evaluated as a Poisson-weighted
series over powers of the stochastic matrix P = I + A/lambda, computed
with vector-matrix products only.  The same series accommodates a
stochastic time change: the Poisson weights are replaced by the moments
E[(lambda T_t)^n e^{-lambda T_t}]/n! of the subordinator, supplied by a
law object (see `itc.SubordinatorLaw`).

Truncation is certified: every result carries the Poisson (or law) mass
left beyond the truncation point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm
from scipy.special import gammaln

from .errors import ConfigError
from .generator import SparseGenerator

__all__ = [
    "TransientDistribution",
    "UniformizedChain",
    "uniformize",
    "poisson_truncation",
    "poisson_pmf_sequence",
    "transient_distribution",
    "scale_generator",
    "time_changed_distribution",
    "dense_transient",
    "weighted_power_series",
]

DEFAULT_EPSILON = 1e-10
DEFAULT_SAFETY = 1.02
TAU_MAX_CONFIDENCE = 1e-8


@dataclass
class TransientDistribution:
    """State probabilities at a horizon with a truncation certificate."""

    probabilities: np.ndarray
    horizon: float
    truncation_n: int
    tail_bound: float

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if np.any(p < -1e-14):
            raise ConfigError(f"distribution has entries below -1e-14: min={p.min()}")
        p = np.clip(p, 0.0, None)
        self.probabilities = p
        total = p.sum()
        if not (1.0 - self.tail_bound - 1e-12 <= total <= 1.0 + 1e-12):
            raise ConfigError(
                f"mass {total} outside [1 - tail - 1e-12, 1 + 1e-12] with tail={self.tail_bound}"
            )

    def expectation(self, values) -> float:
        return float(np.dot(self.probabilities, np.asarray(values, dtype=float)))


@dataclass
class UniformizedChain:
    """Discrete-time chain P = I + A/lambda subordinated to a Poisson clock."""

    lam: float
    p_matrix: sp.csr_matrix

    @property
    def dimension(self):
        return self.p_matrix.shape[0]


def uniformize(g: SparseGenerator, safety: float = DEFAULT_SAFETY) -> UniformizedChain:
    """Build the uniformized chain with lambda = safety * max |diagonal|.

    A zero generator gets lambda = 1 and the identity matrix.  The safety
    margin keeps the diagonal of P strictly positive, which conditions the
    power recursion.
    """
    if safety < 1.0:
        raise ConfigError(f"safety factor must be >= 1, got {safety}")
    lam = safety * g.max_exit_rate()
    if lam == 0.0:
        return UniformizedChain(lam=1.0, p_matrix=sp.identity(g.dimension, format="csr"))
    p = sp.identity(g.dimension, format="csr") + g.matrix / lam
    return UniformizedChain(lam=lam, p_matrix=sp.csr_matrix(p))


def poisson_truncation(lambda_t: float, epsilon: float) -> int:
    """Smallest n whose Poisson tail mass beyond n is below epsilon.

    Upward recursion on the pmf in log space; never under- or overflows.
    """
    if lambda_t < 0:
        raise ConfigError("lambda*t must be nonnegative")
    if not 0.0 < epsilon < 1.0:
        raise ConfigError(f"epsilon must be in (0,1), got {epsilon}")
    if lambda_t == 0.0:
        return 0
    log_lt = np.log(lambda_t)
    log_term = -lambda_t  # log pmf at n = 0
    cum = np.exp(log_term)
    n = 0
    n_cap = int(lambda_t + 40.0 * np.sqrt(lambda_t) + 200)
    while 1.0 - cum >= epsilon and n < n_cap:
        n += 1
        log_term += log_lt - np.log(n)
        cum += np.exp(log_term)
    return n


def poisson_pmf_sequence(lambda_t: float, n_max: int) -> np.ndarray:
    """Poisson pmf values psi(lambda_t, 0..n_max), log-stable."""
    if lambda_t == 0.0:
        w = np.zeros(n_max + 1)
        w[0] = 1.0
        return w
    n = np.arange(n_max + 1, dtype=float)
    logw = n * np.log(lambda_t) - lambda_t - gammaln(n + 1.0)
    return np.exp(logw)


def weighted_power_series(p0: np.ndarray, p_matrix: sp.csr_matrix, weights: np.ndarray):
    """sum_n weights[n] * p0 P^n via the vector recursion pi_n = pi_{n-1} P."""
    acc = weights[0] * p0
    v = p0
    for n in range(1, len(weights)):
        v = v @ p_matrix
        acc = acc + weights[n] * v
    return acc


def _check_p0(p0, dim):
    p0 = np.asarray(p0, dtype=float)
    if p0.shape != (dim,):
        raise ConfigError(f"initial distribution shape {p0.shape} does not match {dim} states")
    if abs(p0.sum() - 1.0) > 1e-9 or np.any(p0 < 0):
        raise ConfigError("initial distribution must be nonnegative and sum to 1")
    return p0


def transient_distribution(
    p0,
    g: SparseGenerator,
    t: float,
    epsilon: float = DEFAULT_EPSILON,
    safety: float = DEFAULT_SAFETY,
) -> TransientDistribution:
    """Distribution at horizon t for the chain with generator g."""
    p0 = _check_p0(p0, g.dimension)
    if t < 0:
        raise ConfigError("horizon must be nonnegative")
    if epsilon >= 0.1:
        raise ConfigError(f"epsilon {epsilon} is too loose to be meaningful")
    if t == 0.0:
        return TransientDistribution(p0.copy(), horizon=0.0, truncation_n=0, tail_bound=0.0)
    chain = uniformize(g, safety)
    lt = chain.lam * t
    n_max = poisson_truncation(lt, epsilon)
    weights = poisson_pmf_sequence(lt, n_max)
    probs = weighted_power_series(p0, chain.p_matrix, weights)
    tail = max(0.0, 1.0 - float(weights.sum()))
    return TransientDistribution(probs, horizon=t, truncation_n=n_max, tail_bound=tail)


def scale_generator(g: SparseGenerator, activity: float) -> SparseGenerator:
    """Scale every rate by a nonnegative activity (a deterministic time
    change: running the chain at speed y)."""
    return g.scaled(activity)


def time_changed_distribution(
    p0,
    g: SparseGenerator,
    law,
    t: float,
    epsilon: float = DEFAULT_EPSILON,
    safety: float = DEFAULT_SAFETY,
) -> TransientDistribution:
    """Distribution of the chain run on the stochastic clock T_t.

    `law` must expose quantile(t, q) and poisson_moment_weights(t, lam,
    n_max) returning E[(lam T_t)^n e^{-lam T_t}]/n!.  The series is
    truncated so that accuracy is controlled at the clock's upper
    quantile rather than at the mean horizon.
    """
    p0 = _check_p0(p0, g.dimension)
    if t < 0:
        raise ConfigError("horizon must be nonnegative")
    if epsilon >= 0.1:
        raise ConfigError(f"epsilon {epsilon} is too loose to be meaningful")
    if t == 0.0:
        return TransientDistribution(p0.copy(), horizon=0.0, truncation_n=0, tail_bound=0.0)
    chain = uniformize(g, safety)
    tau_max = law.quantile(t, 1.0 - TAU_MAX_CONFIDENCE)
    n_max = poisson_truncation(chain.lam * tau_max, epsilon)
    weights = np.asarray(law.poisson_moment_weights(t, chain.lam, n_max), dtype=float)
    if np.any(weights < -1e-12):
        raise ConfigError("time-change weights are negative: invalid Laplace input")
    total = float(weights.sum())
    if not (1.0 - 100 * max(epsilon, 1e-12) <= total <= 1.0 + 1e-9):
        raise ConfigError(
            f"time-change weights sum to {total}, not toward 1: invalid Laplace input"
        )
    probs = weighted_power_series(p0, chain.p_matrix, np.clip(weights, 0.0, None))
    tail = max(0.0, 1.0 - total)
    return TransientDistribution(probs, horizon=t, truncation_n=n_max, tail_bound=tail)


def dense_transient(p0, g: SparseGenerator, t: float, max_states: int = 400) -> np.ndarray:
    """Dense matrix-exponential evaluation, for verification only."""
    if g.dimension > max_states:
        raise ConfigError(f"dense oracle limited to {max_states} states, got {g.dimension}")
    p0 = _check_p0(p0, g.dimension)
    return p0 @ expm(g.matrix.toarray() * t)

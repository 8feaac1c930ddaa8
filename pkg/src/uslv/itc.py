"""Implied-time-change stochastic volatility.

The chain's two generator parts run on a hierarchical bivariate clock:
a parametric subordinator T_t drives everything, and a unit-mean dilaton
factor theta additionally dilates the level-changing part.  Conditioning
on theta reduces transition probabilities to a Laplace-weighted
randomization series; the law of theta itself is implied from option
quotes node by node through minimum-cross-entropy tilts of a prior, a
convex dual problem per timeline node.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import linprog
from scipy.special import gammaln
from scipy.stats import gamma as gamma_dist

from .errors import ConfigError, FitFailure, Infeasible
from .generator import GeneratorSplit, conditional_generator
from .grids import ThetaGrid
from .transient import (
    TransientDistribution,
    poisson_pmf_sequence,
    time_changed_distribution,
)

__all__ = [
    "SubordinatorLaw",
    "gamma_laplace",
    "poisson_weight_moments",
    "conditional_transient",
    "unconditional_transient",
    "subordinator_correlation",
    "ConstraintPanel",
    "constraint_panel",
    "DilatonPrior",
    "DilatonLaw",
    "mce_first_period",
    "mce_conditional_step",
    "implied_dilaton_process",
]


def gamma_laplace(nu: float, t: float, u: float) -> float:
    """Laplace transform (1 + nu u)^(-t/nu) of the gamma clock."""
    if nu <= 0 or t < 0 or u < 0:
        raise ConfigError("need nu > 0, t >= 0, u >= 0")
    return float((1.0 + nu * u) ** (-t / nu))


@dataclass(frozen=True)
class SubordinatorLaw:
    """Clock law: deterministic, gamma, or exponential-gamma.

    The gamma clock has shape t/nu and rate 1/nu, so mean t and variance
    nu t.  The exponential-gamma clock is exp(X_t) with X_t the same
    gamma process; its functionals are evaluated by Gauss-Legendre
    quadrature on the quantile transform with adaptive doubling.
    """

    kind: str
    nu: float = 0.0
    quad_tol: float = 1e-9

    def __post_init__(self):
        if self.kind not in ("deterministic", "gamma", "exp_gamma"):
            raise ConfigError(f"unknown subordinator kind {self.kind!r}")
        if self.kind != "deterministic" and self.nu <= 0:
            raise ConfigError("stochastic clocks need nu > 0")

    def mean(self, t: float) -> float:
        if self.kind == "deterministic":
            return t
        if self.kind == "gamma":
            return t
        return self._quad_moment(t, 1)

    def var(self, t: float) -> float:
        if self.kind == "deterministic":
            return 0.0
        if self.kind == "gamma":
            return self.nu * t
        m1 = self._quad_moment(t, 1)
        return self._quad_moment(t, 2) - m1 * m1

    def pdf(self, t: float, x):
        if self.kind != "gamma":
            raise ConfigError("closed-form density available for the gamma kind only")
        return gamma_dist.pdf(x, t / self.nu, scale=self.nu)

    def laplace(self, t: float, u: float) -> float:
        if self.kind == "deterministic":
            return float(np.exp(-u * t))
        if self.kind == "gamma":
            return gamma_laplace(self.nu, t, u)
        w = self._quadrature(t, lambda T: np.exp(-u * T))
        return float(w)

    def quantile(self, t: float, q: float) -> float:
        if not 0 < q < 1:
            raise ConfigError("quantile level must be in (0,1)")
        if self.kind == "deterministic":
            return t
        g = gamma_dist.ppf(q, t / self.nu, scale=self.nu)
        return float(g) if self.kind == "gamma" else float(np.exp(g))

    def poisson_moment_weights(self, t: float, lam: float, n_max: int) -> np.ndarray:
        """Weights E[(lam T_t)^n e^{-lam T_t}]/n! for n = 0..n_max."""
        if lam <= 0:
            raise ConfigError("need lam > 0")
        if self.kind == "deterministic":
            return poisson_pmf_sequence(lam * t, n_max)
        if self.kind == "gamma":
            a = t / self.nu
            b = 1.0 / self.nu
            n = np.arange(n_max + 1, dtype=float)
            logw = (
                n * np.log(lam)
                + gammaln(a + n)
                - gammaln(a)
                - gammaln(n + 1.0)
                + a * np.log(b)
                - (a + n) * np.log(b + lam)
            )
            return np.exp(logw)
        return self._exp_gamma_weights(t, lam, n_max)

    # Quadrature back end for the exp-gamma kind: composite Gauss-Legendre
    # on quantile panels refined dyadically toward both endpoints, where
    # the quantile transform loses smoothness.  Each interior panel is
    # analytic, so doubling the per-panel order converges spectrally.

    _END_PANELS = 45  # mass beyond the extreme panels ~ 2^-45, negligible

    def _nodes(self, t: float, per_panel: int):
        k = np.arange(2, self._END_PANELS + 1)
        edges = np.concatenate(([0.0], np.sort(0.5**k), [0.5], 1.0 - 0.5**k, [1.0 - 0.5 ** (self._END_PANELS + 1)]))
        edges = np.unique(edges)
        xi, om = leggauss(per_panel)
        u_all, w_all = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            u_all.append(a + (b - a) * 0.5 * (xi + 1.0))
            w_all.append((b - a) * 0.5 * om)
        u = np.concatenate(u_all)
        w = np.concatenate(w_all)
        logs = gamma_dist.ppf(u, t / self.nu, scale=self.nu)
        return logs, w / w.sum()

    _PER_PANEL_MAX = 128

    def _quadrature(self, t: float, fn) -> float:
        prev = None
        per_panel = 8
        while per_panel <= self._PER_PANEL_MAX:
            logs, w = self._nodes(t, per_panel)
            val = float(np.dot(w, fn(np.exp(logs))))
            if prev is not None and abs(val - prev) <= self.quad_tol * max(1.0, abs(val)):
                return val
            prev = val
            per_panel *= 2
        raise ConfigError(
            f"exp-gamma quadrature did not converge below {self.quad_tol} "
            f"(last change {abs(val - prev):.3g})"
        )

    def _quad_moment(self, t: float, p: int) -> float:
        return self._quadrature(t, lambda T: T**p)

    def _exp_gamma_weights(self, t: float, lam: float, n_max: int) -> np.ndarray:
        n_arr = np.arange(n_max + 1, dtype=float)[:, None]
        prev = None
        last_change = np.inf
        per_panel = 8
        while per_panel <= self._PER_PANEL_MAX:
            logs, w = self._nodes(t, per_panel)
            log_lt = np.log(lam) + logs[None, :]
            core = n_arr * log_lt - lam * np.exp(logs)[None, :] - gammaln(n_arr + 1.0)
            vals = np.exp(core) @ w
            if prev is not None:
                # Weights live in [0, 1]; change is judged against the
                # unit total mass so negligible tail weights cannot stall
                # the doubling.
                last_change = float(np.max(np.abs(vals - prev)))
                if last_change <= self.quad_tol:
                    return vals
            prev = vals
            per_panel *= 2
        raise ConfigError(
            f"exp-gamma weight quadrature did not converge (last change {last_change:.3g})"
        )


def poisson_weight_moments(law: SubordinatorLaw, t: float, lam: float, n_max: int):
    """Clock-moment weights replacing the Poisson probabilities in the
    randomization series."""
    return law.poisson_moment_weights(t, lam, n_max)


def conditional_transient(
    p0, split: GeneratorSplit, theta: float, law: SubordinatorLaw, t: float, epsilon: float = 1e-10
) -> TransientDistribution:
    """Distribution at horizon t conditional on the dilaton value theta.

    Builds A_theta = theta a1 + a2 and runs it on the clock T_t.  At
    theta = 1 with a deterministic clock this reproduces the plain
    transient solver exactly (same uniformization rate, same weights).
    """
    if theta < 0:
        raise ConfigError("theta must be nonnegative")
    a_theta = conditional_generator(split, theta, 1.0)
    return time_changed_distribution(p0, a_theta, law, t, epsilon)


def unconditional_transient(
    p0, split: GeneratorSplit, theta_probs, theta_grid: ThetaGrid,
    law: SubordinatorLaw, t: float, epsilon: float = 1e-10,
) -> TransientDistribution:
    """Average of conditional transients over a dilaton marginal."""
    theta_probs = np.asarray(theta_probs, dtype=float)
    if abs(theta_probs.sum() - 1.0) > 1e-9 or np.any(theta_probs < 0):
        raise ConfigError("dilaton marginal must be a probability vector")
    acc = None
    tail = 0.0
    n_used = 0
    for p_th, theta in zip(theta_probs, theta_grid.values):
        if p_th == 0.0:
            continue
        res = conditional_transient(p0, split, float(theta), law, t, epsilon)
        acc = p_th * res.probabilities if acc is None else acc + p_th * res.probabilities
        tail += p_th * res.tail_bound
        n_used = max(n_used, res.truncation_n)
    return TransientDistribution(acc, horizon=t, truncation_n=n_used, tail_bound=tail)


def subordinator_correlation(var_t: float, mean_t: float, var_theta: float) -> float:
    """Correlation between the dilated and undilated clock components."""
    if var_t < 0 or var_theta < 0:
        raise ConfigError("variances must be nonnegative")
    denom = var_t + var_theta * (var_t + mean_t**2)
    if denom == 0.0:
        raise ConfigError("correlation undefined: all variances vanish")
    return float(np.sqrt(var_t / denom))


@dataclass
class ConstraintPanel:
    """Constraint functionals per timeline node.

    g_values[i] has shape (n_constraints, n_theta); row 0 is always the
    unit-mean constraint G = theta with target 1, followed by one row per
    quote.  targets[i] aligns with the rows.
    """

    times: tuple
    theta_grid: ThetaGrid
    g_values: list
    targets: list

    def __post_init__(self):
        for i, (g, c) in enumerate(zip(self.g_values, self.targets)):
            if g.shape[0] != len(c):
                raise ConfigError(f"node {i}: {g.shape[0]} rows vs {len(c)} targets")
            if not np.allclose(g[0], self.theta_grid.values):
                raise ConfigError(f"node {i}: first row must be the unit-mean constraint")
            if not np.all(np.isfinite(g)):
                raise ConfigError(f"node {i}: non-finite constraint functional")


def constraint_panel(
    times,
    payoffs_per_node,
    targets_per_node,
    split: GeneratorSplit,
    law: SubordinatorLaw,
    theta_grid: ThetaGrid,
    p0,
    epsilon: float = 1e-10,
) -> ConstraintPanel:
    """Evaluate every quote payoff under the theta-conditional transients.

    payoffs_per_node[i] is an array (n_quotes_i, n_states) of payoff
    vectors; targets_per_node[i] the matching market prices.  The
    unit-mean row is injected at position 0 of every node.
    """
    times = tuple(float(t) for t in times)
    if any(t2 <= t1 for t1, t2 in zip(times, times[1:])) or times[0] <= 0:
        raise ConfigError("timeline nodes must be positive and increasing")
    g_values = []
    targets = []
    for i, t in enumerate(times):
        pays = np.atleast_2d(np.asarray(payoffs_per_node[i], dtype=float))
        tgts = np.asarray(targets_per_node[i], dtype=float)
        g = np.empty((1 + pays.shape[0], len(theta_grid)))
        g[0] = theta_grid.values
        for k, theta in enumerate(theta_grid.values):
            res = conditional_transient(p0, split, float(theta), law, t, epsilon)
            g[1:, k] = pays @ res.probabilities
        g_values.append(g)
        targets.append(np.concatenate(([1.0], tgts)))
    return ConstraintPanel(times=times, theta_grid=theta_grid, g_values=g_values, targets=targets)


@dataclass(frozen=True)
class DilatonPrior:
    """Reference measure for the implied dilaton.

    Marginal: discretized gamma density with unit mean and variance
    var_theta.  Kernel: stay-or-jump-up increments with exponential
    decay, zero below the diagonal (a discrete subordinator increment).
    """

    theta_grid: ThetaGrid
    var_theta: float = 0.25
    stay_prob: float = 0.5
    increment_scale: float = 0.05

    def marginal(self) -> np.ndarray:
        th = self.theta_grid.values
        shape = 1.0 / self.var_theta
        dens = gamma_dist.pdf(th, shape, scale=self.var_theta)
        edges = np.concatenate(([th[0]], np.sqrt(th[1:] * th[:-1]), [th[-1]]))
        w = np.diff(edges)
        q = np.clip(dens * w, 1e-300, None)
        return q / q.sum()

    def kernel(self) -> np.ndarray:
        th = self.theta_grid.values
        n = len(th)
        k = np.zeros((n, n))
        for a in range(n):
            k[a, a] = self.stay_prob
            gaps = th[a + 1 :] - th[a]
            if len(gaps):
                up = np.exp(-gaps / self.increment_scale)
                tot = up.sum()
                if tot > 0:
                    k[a, a + 1 :] = (1.0 - self.stay_prob) * up / tot
                else:
                    k[a, a] = 1.0
            else:
                k[a, a] = 1.0
        return k / k.sum(axis=1, keepdims=True)


@dataclass
class DilatonLaw:
    """Calibrated dilaton process on the sparse timeline.

    Marginals are unit-mean probability vectors; kernels are
    row-stochastic with no mass below the diagonal (theta never
    decreases).  Lagrange multipliers are kept for reproducibility.
    """

    theta_grid: ThetaGrid
    node_times: tuple
    marginals: list
    kernels: list
    multipliers: list

    def __post_init__(self):
        for i, p in enumerate(self.marginals):
            if abs(p.sum() - 1.0) > 1e-12:
                raise ConfigError(f"node {i} marginal not normalized: sum={p.sum()}")
            mean = float(np.dot(p, self.theta_grid.values))
            if abs(mean - 1.0) > 1e-8:
                raise ConfigError(f"node {i} dilaton mean {mean} deviates from 1 beyond 1e-8")
        for i, k in enumerate(self.kernels):
            if np.any(np.abs(k.sum(axis=1) - 1.0) > 1e-12):
                raise ConfigError(f"kernel {i} rows not stochastic")
            if np.any(np.tril(k, -1) != 0.0):
                raise ConfigError(f"kernel {i} has mass below the diagonal")

    def marginal_at(self, t: float) -> np.ndarray:
        """Piecewise-constant-from-the-left marginal for off-node times."""
        idx = 0
        for i, node in enumerate(self.node_times):
            if t >= node:
                idx = i
        return self.marginals[idx]

    def to_text(self) -> str:
        lines = ["theta " + " ".join(f"{v:.15g}" for v in self.theta_grid.values)]
        lines.append("times " + " ".join(f"{v:.15g}" for v in self.node_times))
        for i, p in enumerate(self.marginals):
            lines.append(f"marginal {i} " + " ".join(f"{v:.15g}" for v in p))
        for i, k in enumerate(self.kernels):
            for a, row in enumerate(k):
                lines.append(f"kernel {i} {a} " + " ".join(f"{v:.15g}" for v in row))
        for i, xi in enumerate(self.multipliers):
            lines.append(f"xi {i} " + " ".join(f"{v:.15g}" for v in xi))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DilatonLaw":
        theta = times = None
        marginals, kernel_rows, multipliers = {}, {}, {}
        for raw in text.strip().splitlines():
            parts = raw.split()
            if not parts:
                continue
            if parts[0] == "theta":
                theta = np.array([float(v) for v in parts[1:]])
            elif parts[0] == "times":
                times = tuple(float(v) for v in parts[1:])
            elif parts[0] == "marginal":
                marginals[int(parts[1])] = np.array([float(v) for v in parts[2:]])
            elif parts[0] == "kernel":
                kernel_rows.setdefault(int(parts[1]), {})[int(parts[2])] = [
                    float(v) for v in parts[3:]
                ]
            elif parts[0] == "xi":
                multipliers[int(parts[1])] = np.array([float(v) for v in parts[2:]])
            else:
                raise ConfigError(f"unknown dilaton-law line {parts[0]!r}")
        if theta is None or times is None:
            raise ConfigError("dilaton-law text is missing the grid or the timeline")
        kernels = []
        for i in sorted(kernel_rows):
            rows = kernel_rows[i]
            kernels.append(np.array([rows[a] for a in sorted(rows)]))
        return cls(
            theta_grid=ThetaGrid(values=theta, prior_mean=1.0),
            node_times=times,
            marginals=[marginals[i] for i in sorted(marginals)],
            kernels=kernels,
            multipliers=[multipliers[i] for i in sorted(multipliers)],
        )


def _check_feasible_first(prior, g, c):
    m, n = g.shape
    a_eq = np.vstack([g, np.ones(n)])
    b_eq = np.concatenate([c, [1.0]])
    res = linprog(np.zeros(n), A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * n, method="highs")
    if not res.success:
        bounds = [(float(row.min()), float(row.max())) for row in g]
        raise Infeasible(
            "targets outside the attainable hull of the constraint functionals",
            hull_bounds=bounds,
        )


def _check_feasible_conditional(p_prev, kernel_support, g, c):
    n = g.shape[1]
    rows = np.nonzero(p_prev > 0)[0]
    cols = {}
    var_idx = []
    for a in rows:
        for b in np.nonzero(kernel_support[a])[0]:
            cols[(a, b)] = len(var_idx)
            var_idx.append((a, b))
    nv = len(var_idx)
    a_eq = np.zeros((len(rows) + g.shape[0], nv))
    b_eq = np.zeros(len(rows) + g.shape[0])
    for r, a in enumerate(rows):
        for b in np.nonzero(kernel_support[a])[0]:
            a_eq[r, cols[(a, b)]] = 1.0
        b_eq[r] = p_prev[a]
    for j in range(g.shape[0]):
        for (a, b), k in cols.items():
            a_eq[len(rows) + j, k] = g[j, b]
        b_eq[len(rows) + j] = c[j]
    res = linprog(np.zeros(nv), A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * nv, method="highs")
    if not res.success:
        bounds = []
        for j in range(g.shape[0]):
            lo = hi = 0.0
            for a in rows:
                sup = np.nonzero(kernel_support[a])[0]
                lo += p_prev[a] * g[j, sup].min()
                hi += p_prev[a] * g[j, sup].max()
            bounds.append((float(lo), float(hi)))
        raise Infeasible(
            "aggregate targets outside the attainable hull given the kernel support",
            hull_bounds=bounds,
        )


def _minimize_dual(fgh, x0, gtol=1e-10, max_iter=300):
    """Damped Newton on a smooth convex dual with analytic derivatives."""
    x = np.asarray(x0, dtype=float)
    u, g, h = fgh(x)
    damping = 0.0
    n = len(x)
    iters = 0
    for _ in range(max_iter):
        iters += 1
        gnorm = float(np.max(np.abs(g)))
        if gnorm < gtol:
            return x, u, g, True, iters
        lam = damping
        moved = False
        for _ in range(60):
            try:
                step = np.linalg.solve(h + lam * np.eye(n), -g)
            except np.linalg.LinAlgError:
                lam = max(10.0 * lam, 1e-12)
                continue
            t = 1.0
            for _ in range(50):
                xn = x + t * step
                un, gn, hn = fgh(xn)
                if un <= u + 1e-14 * abs(u) or float(np.max(np.abs(gn))) < gnorm:
                    x, u, g, h = xn, un, gn, hn
                    moved = True
                    break
                t *= 0.5
            if moved:
                break
            lam = max(10.0 * lam, 1e-8)
        if not moved:
            break
        damping = lam / 100.0
    return x, u, g, float(np.max(np.abs(g))) < gtol, iters


def mce_first_period(prior, g, c, gtol=1e-10):
    """Tilt the prior marginal to meet the first node's constraints.

    Returns (p, xi): p proportional to prior * exp(xi . G) with every
    constraint met to the dual gradient tolerance.  The dual is convex;
    its gradient is the moment mismatch and its Hessian the constraint
    covariance under the tilted measure.
    """
    prior = np.asarray(prior, dtype=float)
    g = np.asarray(g, dtype=float)
    c = np.asarray(c, dtype=float)
    if np.any(prior <= 0):
        raise ConfigError("prior must be strictly positive on the grid")
    prior = prior / prior.sum()
    _check_feasible_first(prior, g, c)
    log_prior = np.log(prior)

    def tilted(xi):
        expo = log_prior + xi @ g
        shift = expo.max()
        w = np.exp(expo - shift)
        z = w.sum()
        return w / z, float(np.log(z) + shift)

    def fgh(xi):
        p, log_z = tilted(xi)
        moments = g @ p
        grad = moments - c
        centered = g - moments[:, None]
        hess = (centered * p[None, :]) @ centered.T
        return log_z - float(xi @ c), grad, hess

    xi0 = np.zeros(g.shape[0])
    xi, _, grad, ok, iters = _minimize_dual(fgh, xi0, gtol=gtol)
    if not ok:
        raise FitFailure(
            f"first-period dual did not converge: |grad|={np.max(np.abs(grad)):.3g} "
            f"after {iters} iterations"
        )
    p, _ = tilted(xi)
    return p, xi


def mce_conditional_step(p_prev, prior_kernel, g, c, gtol=1e-10):
    """Tilt the prior transition kernel to meet one node's constraints.

    The tilt acts on the arrival state only, so the kernel's support
    (zero below the diagonal) is preserved exactly.  The dual potential
    averages the per-row log partition over the standing marginal.
    """
    p_prev = np.asarray(p_prev, dtype=float)
    q = np.asarray(prior_kernel, dtype=float)
    g = np.asarray(g, dtype=float)
    c = np.asarray(c, dtype=float)
    if np.any(q < 0) or np.any(np.tril(q, -1) != 0.0):
        raise ConfigError("prior kernel must be nonnegative with zero mass below the diagonal")
    q = q / q.sum(axis=1, keepdims=True)
    support = q > 0
    _check_feasible_conditional(p_prev, support, g, c)
    with np.errstate(divide="ignore"):
        log_q = np.where(support, np.log(np.where(support, q, 1.0)), -np.inf)
    active = p_prev > 0

    def tilted(xi):
        expo = log_q + (xi @ g)[None, :]
        shift = expo.max(axis=1, keepdims=True)
        w = np.exp(expo - shift)
        z = w.sum(axis=1, keepdims=True)
        kern = w / z
        log_z = np.log(z).ravel() + shift.ravel()
        return kern, log_z

    def fgh(xi):
        kern, log_z = tilted(xi)
        row_moments = kern @ g.T  # (n_theta1, m)
        moments = p_prev @ row_moments
        grad = moments - c
        hess = np.zeros((len(c), len(c)))
        for a in np.nonzero(active)[0]:
            centered = g - row_moments[a][:, None]
            hess += p_prev[a] * (centered * kern[a][None, :]) @ centered.T
        u = float(np.dot(p_prev[active], log_z[active]) - xi @ c)
        return u, grad, hess

    xi0 = np.zeros(g.shape[0])
    xi, _, grad, ok, iters = _minimize_dual(fgh, xi0, gtol=gtol)
    if not ok:
        raise FitFailure(
            f"conditional dual did not converge: |grad|={np.max(np.abs(grad)):.3g} "
            f"after {iters} iterations"
        )
    kern, _ = tilted(xi)
    return kern, xi


def implied_dilaton_process(
    panel: ConstraintPanel,
    prior: DilatonPrior,
    gtol: float = 1e-10,
) -> DilatonLaw:
    """Calibrate the dilaton law node by node along the timeline.

    Node 1 tilts the prior marginal; each later node tilts the prior
    kernel given the standing marginal, which then propagates through
    the Chapman-Kolmogorov product.  Failures carry the node index;
    nodes already calibrated stay valid.
    """
    marginals = []
    kernels = []
    multipliers = []
    p = None
    for i, t in enumerate(panel.times):
        g = panel.g_values[i]
        c = panel.targets[i]
        try:
            if i == 0:
                p, xi = mce_first_period(prior.marginal(), g, c, gtol=gtol)
            else:
                kern, xi = mce_conditional_step(p, prior.kernel(), g, c, gtol=gtol)
                kernels.append(kern)
                p = p @ kern
        except (Infeasible, FitFailure) as exc:
            exc.args = (f"node {i} (t={t}): {exc.args[0]}",) + exc.args[1:]
            exc.partial = DilatonLaw(
                theta_grid=panel.theta_grid,
                node_times=panel.times[:i],
                marginals=marginals,
                kernels=kernels[: max(0, i - 1)],
                multipliers=multipliers,
            )
            raise
        marginals.append(p)
        multipliers.append(xi)
    return DilatonLaw(
        theta_grid=panel.theta_grid,
        node_times=panel.times,
        marginals=marginals,
        kernels=kernels,
        multipliers=multipliers,
    )

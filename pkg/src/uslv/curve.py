"""Term-structure curve layer.

Bond prices are affine in the Markov driver, so the whole curve at time t
is read off the current factor values without any convexity correction.
This module implements the one- and N-factor bond formulas, the short
rate, the deterministic (zero volatility) factor paths, the fractional
linear map from the positive martingale driver Z to the state X, the
state-price deflator, and a bounded least-squares curve fit.

Conventions: rates are continuously compounded, time in years.  The
driver Z starts at 1; the deflator is normalized so M(0, 1) = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .errors import ConfigError, FitFailure

__all__ = [
    "LgpParams",
    "CurveQuote",
    "bond_price_1f",
    "bond_price_nf",
    "short_rate",
    "zero_vol_path",
    "x_from_z",
    "deflator",
    "sigma_lambda_1f",
    "yield_curve",
    "calibrate_curve",
    "CurveFit",
]


@dataclass(frozen=True)
class LgpParams:
    """Curve-layer parameters.

    a : overall rate level (1/year), a > 0
    c : scale converting state units to rate units, c > 0
    mu : factor growth rates; length 1 or 2, mu[i] != a
    mu_bar : bound parameter in [mu, a] (one-factor only)
    y0 : initial ratio Y0 in [0, mu_bar/a) (one-factor only)
    eta0, xi0 : deterministic-solution constants (two-factor; eta0 also
        serves the one-factor mu == a branch of the deterministic path)
    """

    a: float
    c: float
    mu: tuple
    mu_bar: float = None
    y0: float = None
    eta0: float = None
    xi0: float = None

    def __post_init__(self):
        object.__setattr__(self, "mu", tuple(float(m) for m in np.atleast_1d(self.mu)))
        if self.a <= 0 or self.c <= 0:
            raise ConfigError(f"require a > 0 and c > 0, got a={self.a}, c={self.c}")
        if self.n_factors == 1:
            mu = self.mu[0]
            if self.mu_bar is not None:
                if not (mu <= self.mu_bar <= self.a):
                    raise ConfigError(
                        f"mu_bar must lie in [mu, a] = [{mu}, {self.a}], got {self.mu_bar}"
                    )
                if self.y0 is not None and not (0 <= self.y0 < self.mu_bar / self.a):
                    raise ConfigError(
                        f"y0={self.y0} outside [0, mu_bar/a) = [0, {self.mu_bar / self.a})"
                    )
        elif self.n_factors == 2:
            if not self.mu[1] < self.mu[0]:
                raise ConfigError(f"two-factor ordering requires mu2 < mu1, got {self.mu}")
        else:
            raise ConfigError(f"only 1 or 2 factors supported, got {self.n_factors}")

    @property
    def n_factors(self) -> int:
        return len(self.mu)

    # One-factor stochastic-map constants.
    @property
    def alpha(self) -> float:
        return self.a * self.y0

    @property
    def beta(self) -> float:
        return self.mu_bar - self.alpha

    def kappa(self, t):
        return 1.0 - (self.mu_bar / self.a) * np.exp(-(self.a - self.mu[0]) * t)


@dataclass(frozen=True)
class CurveQuote:
    """A zero-coupon yield quote: (maturity in years, zero yield)."""

    maturity: float
    zero_yield: float

    def __post_init__(self):
        if self.maturity <= 0:
            raise ConfigError(f"quote maturity must be positive, got {self.maturity}")


def _check_mu_not_a(p: LgpParams):
    for m in p.mu:
        if m == p.a:
            raise ConfigError(f"mu = a = {p.a} is a singular branch; rejected")


def bond_price_1f(p: LgpParams, t: float, T: float, x: float) -> float:
    """Zero-coupon bond price P(t, T) given the one-factor state x = X_t.

    P(t,T) = e^{-a tau} [1 + c e^{-mu t} (e^{(a-mu) tau} - 1)/(a - mu) x],
    tau = T - t.  Exactly 1 at T = t for any x.
    """
    if p.n_factors != 1:
        raise ConfigError("bond_price_1f requires one-factor parameters")
    if T < t:
        raise ConfigError(f"need T >= t, got t={t}, T={T}")
    _check_mu_not_a(p)
    mu = p.mu[0]
    tau = T - t
    g = (np.exp((p.a - mu) * tau) - 1.0) / (p.a - mu)
    return np.exp(-p.a * tau) * (1.0 + p.c * np.exp(-mu * t) * g * x)


def bond_price_nf(p: LgpParams, t: float, T: float, x) -> float:
    """N-factor bond price; reduces to `bond_price_1f` when N = 1."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if len(x) != p.n_factors:
        raise ConfigError(f"state has {len(x)} entries for {p.n_factors} factors")
    if T < t:
        raise ConfigError(f"need T >= t, got t={t}, T={T}")
    _check_mu_not_a(p)
    tau = T - t
    acc = 0.0
    for mu_i, x_i in zip(p.mu, x):
        acc += np.exp(-mu_i * t) * (np.expm1((p.a - mu_i) * tau) / (p.a - mu_i)) * x_i
    return np.exp(-p.a * tau) * (1.0 + p.c * acc)


def short_rate(p: LgpParams, t: float, x) -> float:
    """Short rate r_t = a - c * sum_i e^{-mu_i t} x_i."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if len(x) != p.n_factors:
        raise ConfigError(f"state has {len(x)} entries for {p.n_factors} factors")
    return p.a - p.c * float(np.sum(np.exp(-np.array(p.mu) * t) * x))


def zero_vol_path(p: LgpParams, t: float):
    """Deterministic factor path with volatility switched off.

    One factor: returns X_t (the undetrended state).  Uses eta0 = y0 for
    mu < a; the separate mu = a branch requires eta0 = 1/X_0.
    Two factors: returns the detrended pair (X~_1t, X~_2t).
    """
    if p.n_factors == 1:
        mu = p.mu[0]
        if mu == p.a:
            if p.eta0 is None:
                raise ConfigError("mu = a branch needs eta0 = 1/X0")
            den = p.eta0 + p.c * t
            if den <= 0:
                raise ConfigError(f"degenerate path: eta0 + c t = {den} <= 0")
            return np.exp(mu * t) / den
        eta0 = p.y0 if p.y0 is not None else p.eta0
        if eta0 is None:
            raise ConfigError("one-factor deterministic path needs y0 (or eta0)")
        den = 1.0 - eta0 * np.exp(-(p.a - mu) * t)
        if den <= 0:
            raise ConfigError(f"denominator 1 - eta0 e^{{-(a-mu)t}} = {den} <= 0")
        return (p.a - mu) / p.c * np.exp(mu * t) / den
    if p.eta0 is None or p.xi0 is None:
        raise ConfigError("two-factor deterministic path needs eta0 and xi0")
    mu1, mu2 = p.mu
    e1 = np.exp(-(mu1 - p.a) * t)
    e2 = np.exp(-(mu2 - p.a) * t)
    den = p.xi0 - p.eta0 * e2 + e1
    if den <= 0:
        raise ConfigError(f"two-factor path denominator {den} <= 0")
    x1 = (p.a - mu1) / p.c * e1 / den
    x2 = p.eta0 * (mu2 - p.a) / p.c * e2 / den
    return np.array([x1, x2])


def _require_map_params(p: LgpParams):
    if p.n_factors != 1 or p.mu_bar is None or p.y0 is None:
        raise ConfigError("driver map needs one-factor parameters with mu_bar and y0")
    if p.alpha == 0.0 and p.beta == 0.0:
        raise ConfigError("alpha = beta = 0: the Z map is degenerate")


def x_from_z(p: LgpParams, t: float, z: float) -> float:
    """Fractional-linear map from the martingale driver Z_t to X_t.

    Monotone in z, with range pinned between the detrended bounds
    (a-mu)/c and (a-mu)/(c kappa(t)).
    """
    _require_map_params(p)
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ConfigError("z must be nonnegative")
    mu = p.mu[0]
    num = p.alpha + p.beta * z
    den = p.alpha * p.kappa(t) + p.beta * z
    return (p.a - mu) / p.c * np.exp(mu * t) * num / den


def deflator(p: LgpParams, t: float, z) -> float:
    """State-price deflator M_t, affine in z and normalized to M(0,1) = 1.

    The normalizer is alpha*kappa(0) + beta, which both enforces M(0,1)=1
    and makes E[M_T] reproduce the bond price exactly.
    """
    _require_map_params(p)
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ConfigError("z must be nonnegative")
    if p.alpha + p.beta == 0.0:
        raise ConfigError("alpha + beta = 0: deflator undefined")
    mu = p.mu[0]
    norm = p.alpha * p.kappa(0.0) + p.beta
    if norm <= 0:
        raise ConfigError(f"deflator normalizer {norm} <= 0")
    return np.exp(-mu * t) * (p.alpha * p.kappa(t) + p.beta * z) / norm


def deflator_nf(params_per_factor, t: float, z) -> float:
    """N-factor deflator with one driver Z_i per factor, normalized to 1
    at t = 0, z = (1, .., 1)."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if len(z) != len(params_per_factor):
        raise ConfigError("need one z per factor")
    num = 0.0
    norm = 0.0
    for p_i, z_i in zip(params_per_factor, z):
        _require_map_params(p_i)
        mu = p_i.mu[0]
        num += np.exp(-mu * t) * (p_i.alpha * p_i.kappa(t) + p_i.beta * z_i)
        norm += p_i.alpha * p_i.kappa(0.0) + p_i.beta
    if norm <= 0:
        raise ConfigError(f"deflator normalizer {norm} <= 0")
    return num / norm


def sigma_lambda_1f(p: LgpParams, t: float, z: float, sigma_hat: float):
    """Volatility and market price of risk of X implied by the driver map.

    Both vanish as z -> 0 or z -> infinity (the X-space boundaries) and
    scale linearly in the driver volatility sigma_hat.
    """
    _require_map_params(p)
    if z < 0 or sigma_hat < 0:
        raise ConfigError("need z >= 0 and sigma_hat >= 0")
    mu = p.mu[0]
    den = p.alpha * p.kappa(t) + p.beta * z
    common = p.beta * z / den
    sigma_x = (
        p.alpha
        * sigma_hat
        * (p.mu_bar / p.a)
        * ((p.a - mu) / p.c)
        * common
        * np.exp(-(p.a - 2.0 * mu) * t)
        / den
    )
    lambda_x = sigma_hat * common
    return sigma_x, lambda_x


def yield_curve(p: LgpParams, x, maturities):
    """Zero yields -ln P(0,T)/T per maturity; NaN where P <= 0."""
    out = np.empty(len(maturities))
    for k, T in enumerate(maturities):
        if T <= 0:
            raise ConfigError(f"maturity must be positive, got {T}")
        price = bond_price_nf(p, 0.0, T, x)
        out[k] = -math.log(price) / T if price > 0 else np.nan
    return out


@dataclass
class CurveFit:
    """Result of `calibrate_curve`."""

    params: LgpParams
    x: np.ndarray
    residuals: np.ndarray
    converged: bool
    message: str = ""
    iterations: int = 0


def _unpack_theta(theta, n_factors):
    if n_factors == 1:
        a, gap, x0 = theta
        return a, (a - gap,), np.array([x0])
    a, g1, g2, x1, x2 = theta
    # mu1 = a + g1 + g2 > mu2 = a + g2 > a keeps the two-factor regime.
    return a, (a + g1 + g2, a + g2), np.array([x1, x2])


def calibrate_curve(quotes, n_factors=1, initial=None) -> CurveFit:
    """Bounded least-squares fit of (a, mu_i, x_i) to zero-yield quotes.

    The parametrization keeps mu below a (one factor) or above a in the
    ordered two-factor regime, so every iterate stays inside the model's
    admissible region.  Returns the best iterate with residuals even when
    the optimizer reports non-convergence.
    """
    if len(quotes) < n_factors + 2:
        raise ConfigError(f"need at least {n_factors + 2} quotes, got {len(quotes)}")
    mats = np.array([q.maturity for q in quotes])
    targets = np.array([q.zero_yield for q in quotes])
    c = 0.1 if initial is None or initial.get("c") is None else float(initial["c"])

    level = max(targets.mean(), 1e-3)
    if n_factors == 1:
        gaps = (0.002, 0.005, 0.02, 0.05, 0.1)
        offsets = (0.0, 0.005, 0.01, 0.03)
        starts = [np.array([level + off, g, 0.0]) for off in offsets for g in gaps]
        lo = [1e-4, 1e-6, -50.0]
        hi = [1.0, 0.5, 50.0]
    elif n_factors == 2:
        starts = [
            np.array([level, g1, g2, 0.0, 0.0])
            for g1 in (0.05, 0.2)
            for g2 in (0.05, 0.3)
        ]
        lo = [1e-4, 1e-6, 1e-6, -50.0, -50.0]
        hi = [1.0, 2.0, 2.0, 50.0, 50.0]
    else:
        raise ConfigError("n_factors must be 1 or 2")
    if initial is not None and initial.get("theta") is not None:
        starts = [np.asarray(initial["theta"], dtype=float)]

    def residual(theta):
        a, mu, x = _unpack_theta(theta, n_factors)
        p = LgpParams(a=a, c=c, mu=mu)
        ys = yield_curve(p, x, mats)
        ys = np.where(np.isnan(ys), 10.0, ys)  # arbitrage-violating iterate penalty
        return ys - targets

    sol = None
    for theta0 in starts:
        cand = least_squares(
            residual, theta0, bounds=(lo, hi), xtol=1e-15, ftol=1e-15, gtol=1e-15
        )
        if sol is None or cand.cost < sol.cost:
            sol = cand
        if sol.cost < 1e-22:
            break
    a, mu, x = _unpack_theta(sol.x, n_factors)
    params = LgpParams(a=a, c=c, mu=mu)
    res = residual(sol.x)
    converged = bool(sol.status > 0 and np.max(np.abs(res)) < 1e-6)
    fit = CurveFit(
        params=params,
        x=x,
        residuals=res,
        converged=converged,
        message=sol.message,
        iterations=int(sol.nfev),
    )
    if not sol.status > 0:
        raise FitFailure("curve optimizer failed to converge", residuals=res, report=fit)
    return fit

"""Nonparametric local-volatility layer: speed factors and their
calibration to vanilla quotes.

Speed factors are piecewise constant in time between option maturities
and piecewise linear in state between anchor nodes, with flat
extrapolation beyond the extreme anchors.  In the two-factor model the
state dependence collapses to a single composite argument
u = alpha1 z1 + alpha2 z2.

Calibration is bootstrapped maturity by maturity: the state distribution
at the previous maturity is frozen and only the current interval's
anchors move, with one anchor per quote so consistent quote sets can be
matched exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import least_squares

from .curve import LgpParams, deflator, deflator_nf
from .errors import ConfigError, FitFailure
from .generator import generator_1d, generator_2d_uniform
from .grids import Grid1D, Grid2D
from .transient import transient_distribution, dense_transient

__all__ = [
    "SpeedFactorSlice",
    "SpeedFactorTermStructure",
    "Quote",
    "QuoteSet",
    "sf_eval",
    "payoff_on_grid",
    "price_vanillas",
    "calibrate_sf",
    "LvFitReport",
]

KINDS = ("call", "put", "dcall", "dput")


@dataclass(frozen=True)
class SpeedFactorSlice:
    """Anchors of one maturity interval: locations and nonnegative values."""

    anchor_z: np.ndarray
    anchor_s: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.anchor_z, dtype=float)
        s = np.asarray(self.anchor_s, dtype=float)
        object.__setattr__(self, "anchor_z", z)
        object.__setattr__(self, "anchor_s", s)
        if z.shape != s.shape or z.ndim != 1 or len(z) == 0:
            raise ConfigError("anchor arrays must be equal-length 1D and nonempty")
        if len(z) > 1 and np.any(np.diff(z) <= 0):
            raise ConfigError("anchor locations must be strictly increasing")
        if np.any(s < 0):
            raise ConfigError("anchor values must be nonnegative")

    def eval(self, u):
        # np.interp is linear between anchors and flat beyond the ends.
        return np.interp(u, self.anchor_z, self.anchor_s)


@dataclass(frozen=True)
class SpeedFactorTermStructure:
    """Piecewise-constant-in-time stack of anchor slices.

    maturities[k] is the right edge of interval k; evaluation at t uses
    the first interval whose right edge exceeds t (times at or beyond the
    last maturity reuse the final slice).  weights (alpha1, alpha2) turn
    on the two-factor composite-argument mode.
    """

    maturities: tuple
    slices: tuple
    weights: tuple = None

    def __post_init__(self):
        mats = tuple(float(m) for m in self.maturities)
        object.__setattr__(self, "maturities", mats)
        object.__setattr__(self, "slices", tuple(self.slices))
        if len(mats) != len(self.slices) or not mats:
            raise ConfigError("need one anchor slice per maturity")
        if np.any(np.diff(mats) <= 0) or mats[0] <= 0:
            raise ConfigError("maturities must be positive and increasing")
        if self.weights is not None:
            w = tuple(float(w) for w in self.weights)
            if len(w) != 2 or w[0] < 0 or w[1] < 0:
                raise ConfigError("composite weights must be two nonnegative numbers")
            object.__setattr__(self, "weights", w)

    def interval_index(self, t: float) -> int:
        for k, m in enumerate(self.maturities):
            if t < m:
                return k
        return len(self.maturities) - 1

    def composite(self, z1, z2):
        if self.weights is None:
            raise ConfigError("two-factor evaluation needs composite weights")
        return self.weights[0] * np.asarray(z1) + self.weights[1] * np.asarray(z2)

    def eval(self, z, t: float):
        sl = self.slices[self.interval_index(t)]
        if isinstance(z, tuple) and len(z) == 2:
            return sl.eval(self.composite(z[0], z[1]))
        return sl.eval(z)


def sf_eval(sf: SpeedFactorTermStructure, z, t: float):
    """Speed factor at state z (scalar, array, or (z1, z2) pair) and time t."""
    return sf.eval(z, t)


@dataclass(frozen=True)
class Quote:
    maturity: float
    strike: float
    kind: str
    mid: float
    bid: float = None
    ask: float = None
    active: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown quote kind {self.kind!r}; expected one of {KINDS}")
        if self.mid <= 0:
            raise ConfigError(f"quote price must be positive, got {self.mid}")
        if self.maturity <= 0:
            raise ConfigError("quote maturity must be positive")


class QuoteSet:
    """Vanilla quotes checked for static arbitrage on ingest.

    Within each (maturity, kind) family, call prices must be decreasing
    and convex in strike, puts increasing and convex; violations are
    rejected before any optimizer sees them.
    """

    def __init__(self, quotes):
        self.quotes = sorted(quotes, key=lambda q: (q.maturity, q.kind, q.strike))
        self._check()

    def _check(self):
        tol = 1e-12
        groups = {}
        for q in self.quotes:
            groups.setdefault((q.maturity, q.kind), []).append(q)
        problems = []
        for (mat, kind), qs in groups.items():
            ks = np.array([q.strike for q in qs])
            ps = np.array([q.mid for q in qs])
            if len(np.unique(ks)) != len(ks):
                problems.append(f"duplicate strikes at T={mat} kind={kind}")
                continue
            if len(qs) >= 2:
                dp = np.diff(ps) / np.diff(ks)
                sign = -1.0 if kind in ("call", "dcall") else 1.0
                if np.any(sign * dp < -tol):
                    problems.append(f"monotonicity violated at T={mat} kind={kind}")
                if len(qs) >= 3 and np.any(np.diff(dp) < -tol):
                    problems.append(f"convexity violated at T={mat} kind={kind}")
        if problems:
            raise ConfigError("arbitrageable quote set: " + "; ".join(problems))

    def __iter__(self):
        return iter(self.quotes)

    def __len__(self):
        return len(self.quotes)

    @property
    def maturities(self):
        return sorted({q.maturity for q in self.quotes})

    def at_maturity(self, m, active_only=True):
        return [
            q
            for q in self.quotes
            if q.maturity == m and (q.active or not active_only)
        ]

    @classmethod
    def from_file(cls, path) -> "QuoteSet":
        quotes = []
        with open(path) as fh:
            for raw in fh:
                line = raw.split("#", 1)[0].strip()
                if not line or line.startswith("maturity"):
                    continue
                parts = line.replace(",", " ").split()
                if len(parts) < 4:
                    raise ConfigError(f"bad quote line: {raw!r}")
                quotes.append(
                    Quote(
                        maturity=float(parts[0]),
                        strike=float(parts[1]),
                        kind=parts[2],
                        mid=float(parts[3]),
                    )
                )
        return cls(quotes)

    def to_file(self, path):
        with open(path, "w") as fh:
            fh.write("maturity_years strike_z kind mid\n")
            for q in self.quotes:
                fh.write(f"{q.maturity:.15g} {q.strike:.15g} {q.kind} {q.mid:.15g}\n")


def payoff_on_grid(kind: str, strike: float, grid, maturity: float = None, lgp=None):
    """Payoff vector over the flattened grid states.

    Plain kinds pay on the driver itself (axis 1 in 2D); the d-kinds are
    deflator-weighted cash payoffs, requiring curve parameters.
    """
    if isinstance(grid, Grid2D):
        z1, z2 = grid.flat_nodes()
    else:
        z1 = grid.nodes
        z2 = None
    if kind in ("call", "dcall"):
        pay = np.clip(z1 - strike, 0.0, None)
    elif kind in ("put", "dput"):
        pay = np.clip(strike - z1, 0.0, None)
    else:
        raise ConfigError(f"unknown payoff kind {kind!r}")
    if kind in ("dcall", "dput"):
        if lgp is None or maturity is None:
            raise ConfigError("deflated payoff kinds need curve parameters and a maturity")
        if isinstance(grid, Grid2D):
            raise ConfigError("deflated 2D payoffs need per-factor curve parameter lists")
        pay = pay * deflator(lgp, maturity, z1)
    return pay


def _speeds_on_grid(sf: SpeedFactorTermStructure, grid, t: float):
    if isinstance(grid, Grid2D):
        z1, z2 = grid.flat_nodes()
        return sf.eval((z1, z2), t).reshape(grid.shape)
    return sf.eval(grid.nodes, t)


def _build_generator(sf, grid, t):
    s = _speeds_on_grid(sf, grid, t)
    if isinstance(grid, Grid2D):
        return generator_2d_uniform(grid, s, t)
    return generator_1d(grid, s, t)


def _initial_distribution(grid):
    if isinstance(grid, Grid2D):
        n = grid.n_states
        i = grid.axis1.index_of(1.0) if 1.0 in grid.axis1.nodes else int(
            np.argmin(np.abs(grid.axis1.nodes - 1.0))
        )
        j = grid.axis2.index_of(1.0) if 1.0 in grid.axis2.nodes else int(
            np.argmin(np.abs(grid.axis2.nodes - 1.0))
        )
        p0 = np.zeros(n)
        p0[grid.flat_index(i, j)] = 1.0
        return p0
    p0 = np.zeros(len(grid))
    p0[int(np.argmin(np.abs(grid.nodes - 1.0)))] = 1.0
    return p0


def chain_distributions(sf, grid, maturities, p0=None, epsilon=1e-10, oracle=False):
    """Distributions at each maturity, chained over the piecewise-constant
    intervals (Chapman-Kolmogorov across slices)."""
    p = _initial_distribution(grid) if p0 is None else np.asarray(p0, dtype=float)
    out = []
    t_prev = 0.0
    for m in maturities:
        gen = _build_generator(sf, grid, 0.5 * (t_prev + m))
        if oracle:
            probs = dense_transient(p / p.sum(), gen, m - t_prev)
            probs = np.clip(probs, 0.0, None)
        else:
            probs = transient_distribution(p / p.sum(), gen, m - t_prev, epsilon).probabilities
        out.append(probs)
        p = probs
        t_prev = m
    return out


def price_vanillas(sf, grid, quotes: QuoteSet, lgp=None, epsilon=1e-10, oracle=False):
    """Model prices for every quote, in quote order within maturity."""
    mats = quotes.maturities
    dists = chain_distributions(sf, grid, mats, epsilon=epsilon, oracle=oracle)
    prices = {}
    for m, pi in zip(mats, dists):
        for q in quotes.at_maturity(m, active_only=False):
            w = payoff_on_grid(q.kind, q.strike, grid, maturity=m, lgp=lgp)
            prices[(q.maturity, q.kind, q.strike)] = float(np.dot(pi, w))
    return np.array([prices[(q.maturity, q.kind, q.strike)] for q in quotes])


@dataclass
class LvFitReport:
    maturities: list
    residuals: np.ndarray
    iterations: list
    anchor_tables: list = field(default_factory=list)
    converged: bool = True

    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residuals))) if len(self.residuals) else 0.0


def _default_anchor_locations(mquotes, weights):
    strikes = np.array(sorted(q.strike for q in mquotes))
    if weights is None:
        return strikes
    return (weights[0] + weights[1]) * strikes


def calibrate_sf(
    quotes: QuoteSet,
    grid,
    lgp=None,
    prior_sf=None,
    weights=None,
    tol: float = 1e-8,
    epsilon: float = 1e-10,
    max_nfev: int = 200,
) -> tuple:
    """Bootstrap the speed-factor term structure to the quote set.

    One anchor per active quote and maturity, located at the quoted
    strikes (their composite image in two-factor mode).  Earlier
    intervals are frozen as later ones calibrate.  Raises FitFailure if
    any maturity stagnates above `tol`.
    """
    mats = quotes.maturities
    if isinstance(grid, Grid2D) and weights is None:
        weights = (0.5, 0.5)
    slices = []
    residual_chunks = []
    iterations = []
    p = _initial_distribution(grid)
    t_prev = 0.0
    for m in mats:
        active = [q for q in quotes.at_maturity(m) if q.active]
        if not active:
            raise ConfigError(f"no active quotes at maturity {m}")
        anchor_z = _default_anchor_locations(active, weights)
        if len(anchor_z) != len(active):
            raise ConfigError("anchor count must equal quote count per maturity")
        targets = np.array([q.mid for q in active])
        if prior_sf is not None:
            s0 = np.maximum(prior_sf.eval(anchor_z, 0.5 * (t_prev + m)), 1e-8)
        else:
            s0 = 0.04 * anchor_z**2  # flat 20% lognormal-style prior
        pay = [payoff_on_grid(q.kind, q.strike, grid, maturity=m, lgp=lgp) for q in active]
        p_start = p / p.sum()
        dt = m - t_prev
        trial = {"slices": tuple(slices)}

        def resid(log_s):
            sl = SpeedFactorSlice(anchor_z, np.exp(log_s))
            sf_k = SpeedFactorTermStructure(
                maturities=tuple(mats[: len(trial["slices"])]) + (m,),
                slices=trial["slices"] + (sl,),
                weights=weights,
            )
            gen = _build_generator(sf_k, grid, 0.5 * (t_prev + m))
            pi = transient_distribution(p_start, gen, dt, epsilon).probabilities
            return np.array([np.dot(pi, w) for w in pay]) - targets

        sol = least_squares(
            resid,
            np.log(s0),
            method="trf",
            xtol=1e-15,
            ftol=1e-15,
            gtol=1e-15,
            max_nfev=max_nfev,
        )
        res = resid(sol.x)
        iterations.append(int(sol.nfev))
        residual_chunks.append(res)
        slices.append(SpeedFactorSlice(anchor_z, np.exp(sol.x)))
        if np.max(np.abs(res)) > tol:
            report = LvFitReport(
                maturities=mats,
                residuals=np.concatenate(residual_chunks),
                iterations=iterations,
                converged=False,
            )
            raise FitFailure(
                f"speed-factor fit stagnated at maturity {m}: "
                f"max residual {np.max(np.abs(res)):.3g} > {tol}",
                residuals=res,
                report=report,
            )
        sf_partial = SpeedFactorTermStructure(
            maturities=tuple(mats[: len(slices)]), slices=tuple(slices), weights=weights
        )
        gen = _build_generator(sf_partial, grid, 0.5 * (t_prev + m))
        p = transient_distribution(p_start, gen, dt, epsilon).probabilities
        t_prev = m
    sf = SpeedFactorTermStructure(maturities=tuple(mats), slices=tuple(slices), weights=weights)
    report = LvFitReport(
        maturities=mats,
        residuals=np.concatenate(residual_chunks),
        iterations=iterations,
        anchor_tables=[(sl.anchor_z.copy(), sl.anchor_s.copy()) for sl in slices],
        converged=True,
    )
    return sf, report

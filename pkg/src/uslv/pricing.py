"""Backward-induction pricing on calibrated chains.

Values propagate backward through the same interval transition operators
the forward calibration uses, so forward-distribution and backward prices
of European payoffs agree to rounding (the operators are applied as exact
adjoints).  Early exercise is a nodewise maximum at flagged events; all
cash payoffs are valued in deflated units per the curve layer's policy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .generator import SparseGenerator
from .grids import Grid2D
from .itc import SubordinatorLaw, conditional_transient
from .lv import SpeedFactorTermStructure, _build_generator, _initial_distribution
from .transient import poisson_pmf_sequence, poisson_truncation, uniformize

__all__ = [
    "PayoffEvent",
    "PayoffSchedule",
    "LvChainModel",
    "ArChainModel",
    "ItcChainModel",
    "backward_induction_price",
    "forward_price",
    "PricingResult",
]


@dataclass(frozen=True)
class PayoffEvent:
    """One schedule event: a payoff vector over chain states at a time.

    Terminal events set the running value; cashflow events add to it;
    exercise events floor it at the payoff.
    """

    time: float
    payoff: np.ndarray
    kind: str = "cashflow"  # terminal | cashflow | exercise

    def __post_init__(self):
        if self.kind not in ("terminal", "cashflow", "exercise"):
            raise ConfigError(f"unknown event kind {self.kind!r}")
        object.__setattr__(self, "payoff", np.asarray(self.payoff, dtype=float))
        if not np.all(np.isfinite(self.payoff)):
            raise ConfigError("payoff must be finite on the grid")


@dataclass
class PayoffSchedule:
    events: list

    def __post_init__(self):
        self.events = sorted(self.events, key=lambda e: e.time)
        if not self.events:
            raise ConfigError("empty schedule")
        if self.events[0].time <= 0:
            raise ConfigError("event times must be positive")
        if self.events[-1].kind == "exercise":
            raise ConfigError("last event must carry a terminal or cashflow payoff")

    @property
    def horizon(self) -> float:
        return self.events[-1].time


class LvChainModel:
    """Driver-only chain (one or two curve factors) with uniformized
    interval operators."""

    def __init__(self, sf: SpeedFactorTermStructure, grid, lgp=None, epsilon=1e-10, oracle=False):
        self.sf = sf
        self.grid = grid
        self.lgp = lgp
        self.epsilon = epsilon
        self.oracle = oracle

    @property
    def n_states(self):
        return self.grid.n_states if isinstance(self.grid, Grid2D) else len(self.grid)

    @property
    def horizon(self):
        return np.inf  # flat extrapolation of the last slice

    def initial_distribution(self):
        return _initial_distribution(self.grid)

    def _pieces(self, t0, t1):
        """Chop [t0, t1] at speed-factor interval edges."""
        cuts = [t0] + [m for m in self.sf.maturities if t0 < m < t1] + [t1]
        return list(zip(cuts[:-1], cuts[1:]))

    def _series(self, vec, t0, t1, forward):
        pieces = self._pieces(t0, t1)
        if not forward:
            pieces = pieces[::-1]  # later operators hit the value first
        for a, b in pieces:
            gen = _build_generator(self.sf, self.grid, 0.5 * (a + b))
            if self.oracle:
                from scipy.linalg import expm

                et = expm(gen.matrix.toarray() * (b - a))
                vec = vec @ et if forward else et @ vec
                continue
            chain = uniformize(gen)
            lt = chain.lam * (b - a)
            n_max = poisson_truncation(lt, self.epsilon)
            w = poisson_pmf_sequence(lt, n_max)
            acc = w[0] * vec
            v = vec
            for n in range(1, n_max + 1):
                v = v @ chain.p_matrix if forward else chain.p_matrix @ v
                acc = acc + w[n] * v
            vec = acc
        return vec

    def apply_forward(self, pi, t0, t1):
        return self._series(pi, t0, t1, forward=True)

    def apply_backward(self, v, t0, t1):
        return self._series(v, t0, t1, forward=False)


class ArChainModel:
    """Joint driver/activity chain; per-step explicit operators from a
    completed forward-induction calibration."""

    def __init__(self, calibration):
        self.cal = calibration

    @property
    def n_states(self):
        return self.cal.components.grid.n_states * self.cal.components.n_y

    @property
    def horizon(self):
        return self.cal.horizon

    def initial_distribution(self):
        comp = self.cal.components
        grid = comp.grid
        i = int(np.argmin(np.abs(grid.axis1.nodes - 1.0)))
        j = int(np.argmin(np.abs(grid.axis2.nodes - 1.0)))
        return comp.initial_joint(grid.flat_index(i, j)).ravel()

    def _step_range(self, t0, t1):
        dt = self.cal.dt
        k0 = int(round(t0 / dt))
        k1 = int(round(t1 / dt))
        if abs(k0 * dt - t0) > 1e-9 or abs(k1 * dt - t1) > 1e-9:
            raise ConfigError(
                f"event times must sit on the induction grid (dt={dt}): [{t0}, {t1}]"
            )
        return k0, k1

    def apply_forward(self, pi, t0, t1):
        k0, k1 = self._step_range(t0, t1)
        comp = self.cal.components
        mat = np.asarray(pi, dtype=float).reshape(comp.grid.n_states, comp.n_y)
        for k in range(k0, k1):
            mat = self.cal.step_operator(k).forward(mat)
        return mat.ravel()

    def apply_backward(self, v, t0, t1):
        k0, k1 = self._step_range(t0, t1)
        comp = self.cal.components
        mat = np.asarray(v, dtype=float).reshape(comp.grid.n_states, comp.n_y)
        for k in reversed(range(k0, k1)):
            mat = self.cal.step_operator(k).backward(mat)
        return mat.ravel()


class ItcChainModel:
    """Time-changed chain: dilaton-averaged clock operators per interval.

    The dilaton marginal is read piecewise-constant from the left node;
    the clock increment law over an interval reuses the subordinator's
    time-homogeneous parametrization.
    """

    def __init__(self, split, law: SubordinatorLaw, dilaton_law, epsilon=1e-10):
        self.split = split
        self.law = law
        self.dilaton = dilaton_law
        self.epsilon = epsilon

    @property
    def n_states(self):
        return self.split.dimension

    @property
    def horizon(self):
        return self.dilaton.node_times[-1]

    def initial_distribution(self):
        raise ConfigError("ITC model needs an explicit initial distribution")

    def _theta_weights(self, t0):
        return self.dilaton.marginal_at(t0), self.dilaton.theta_grid.values

    def _apply(self, vec, t0, t1, forward):
        probs, thetas = self._theta_weights(t0)
        dt = t1 - t0
        acc = np.zeros_like(np.asarray(vec, dtype=float))
        for p_th, theta in zip(probs, thetas):
            if p_th == 0.0:
                continue
            gen = SparseGenerator(
                self.split.a1.matrix * float(theta) + self.split.a2.matrix,
                level_size=self.split.a1.level_size,
            )
            chain = uniformize(gen)
            tau_max = self.law.quantile(dt, 1.0 - 1e-8)
            n_max = poisson_truncation(chain.lam * tau_max, self.epsilon)
            w = self.law.poisson_moment_weights(dt, chain.lam, n_max)
            v = np.asarray(vec, dtype=float)
            acc_theta = w[0] * v
            for n in range(1, n_max + 1):
                v = v @ chain.p_matrix if forward else chain.p_matrix @ v
                acc_theta = acc_theta + w[n] * v
            acc = acc + p_th * acc_theta
        return acc

    def apply_forward(self, pi, t0, t1):
        return self._apply(pi, t0, t1, forward=True)

    def apply_backward(self, v, t0, t1):
        return self._apply(v, t0, t1, forward=False)


@dataclass
class PricingResult:
    value: float
    value_surface: np.ndarray
    initial_index: int
    times: list = field(default_factory=list)


def backward_induction_price(model, schedule: PayoffSchedule, initial_distribution=None) -> PricingResult:
    """Roll the schedule backward through the model's interval operators.

    Returns the value against the initial distribution (or the model's
    default point mass) along with the time-zero value surface.
    """
    if schedule.horizon > model.horizon + 1e-12:
        late = schedule.events[-1].time
        raise ConfigError(f"schedule event at t={late} lies beyond the calibrated horizon")
    v = np.zeros(model.n_states)
    t_right = None
    for ev in reversed(schedule.events):
        if t_right is not None and t_right > ev.time:
            v = model.apply_backward(v, ev.time, t_right)
        if ev.kind == "terminal":
            v = ev.payoff.copy()
        elif ev.kind == "cashflow":
            v = v + ev.payoff
        else:
            v = np.maximum(v, ev.payoff)
        t_right = ev.time
    v = model.apply_backward(v, 0.0, t_right)
    p0 = model.initial_distribution() if initial_distribution is None else np.asarray(initial_distribution)
    value = float(np.dot(p0, v))
    return PricingResult(
        value=value,
        value_surface=v,
        initial_index=int(np.argmax(p0)),
        times=[ev.time for ev in schedule.events],
    )


def forward_price(model, schedule: PayoffSchedule, initial_distribution=None) -> float:
    """Forward-distribution price of a European (single terminal event)
    schedule, for cross-checking backward induction."""
    if len(schedule.events) != 1 or schedule.events[0].kind != "terminal":
        raise ConfigError("forward pricing supports a single terminal event")
    p0 = model.initial_distribution() if initial_distribution is None else np.asarray(initial_distribution)
    pi = model.apply_forward(p0, 0.0, schedule.events[0].time)
    return float(np.dot(pi, schedule.events[0].payoff))

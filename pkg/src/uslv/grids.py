"""State grids for the chain drivers, the activity levels and the dilaton.

The driver grids are geometric by default (the driver is a positive
martingale started at 1, so equal relative steps are the natural choice)
with quoted strikes inserted as exact nodes.  Two-dimensional grids carry
the diffusion scales and correlation so the step-ratio admissibility band
can be enforced at build time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = [
    "Grid1D",
    "Grid2D",
    "YGrid",
    "ThetaGrid",
    "build_z_grid",
    "build_z_grid_2d",
    "build_y_grid",
    "build_theta_grid",
    "step_band",
]

_MERGE_RTOL = 1e-10


@dataclass(frozen=True)
class Grid1D:
    """Strictly increasing positive nodes with strike anchors.

    anchor_indices[k] is the node index holding the k-th quoted strike
    exactly (strikes sorted ascending).
    """

    nodes: np.ndarray
    anchor_indices: tuple = ()

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "anchor_indices", tuple(int(i) for i in self.anchor_indices))
        if nodes.ndim != 1 or len(nodes) < 2:
            raise ConfigError("grid needs at least 2 nodes")
        if np.any(nodes <= 0):
            raise ConfigError("grid nodes must be positive")
        if np.any(np.diff(nodes) <= 0):
            raise ConfigError("grid nodes must be strictly increasing")
        for i in self.anchor_indices:
            if not 0 <= i < len(nodes):
                raise ConfigError(f"anchor index {i} out of range")

    def __len__(self):
        return len(self.nodes)

    @property
    def anchors(self) -> np.ndarray:
        return self.nodes[list(self.anchor_indices)]

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def is_uniform(self) -> bool:
        h = self.steps
        return bool(np.allclose(h, h[0], rtol=1e-12, atol=0.0))

    def index_of(self, value: float) -> int:
        idx = int(np.searchsorted(self.nodes, value))
        for j in (idx - 1, idx, idx + 1):
            if 0 <= j < len(self.nodes) and self.nodes[j] == value:
                return j
        raise ConfigError(f"value {value} is not a grid node")


@dataclass(frozen=True)
class Grid2D:
    """Pair of 1D grids plus the diffusion scales used to build them.

    For two uniform axes the steps must satisfy
        |rho| (sigma2/sigma1) dz1 <= dz2 <= sigma2/(|rho| sigma1) dz1,
    which keeps every off-diagonal generator entry nonnegative.
    """

    axis1: Grid1D
    axis2: Grid1D
    sigma1: float = 1.0
    sigma2: float = 1.0
    rho: float = 0.0
    step2_adjusted: bool = False

    def __post_init__(self):
        if not -1.0 < self.rho < 1.0:
            raise ConfigError(f"require |rho| < 1, got {self.rho}")
        if self.sigma1 <= 0 or self.sigma2 <= 0:
            raise ConfigError("sigma1, sigma2 must be positive")
        if self.axis1.is_uniform and self.axis2.is_uniform and self.rho != 0.0:
            d1 = float(self.axis1.steps[0])
            d2 = float(self.axis2.steps[0])
            lo, hi = step_band(d1, self.sigma1, self.sigma2, self.rho)
            if not (lo - 1e-12 * hi <= d2 <= hi + 1e-12 * hi):
                raise ConfigError(
                    f"step dz2={d2} outside admissible band [{lo}, {hi}] "
                    f"for dz1={d1}, rho={self.rho}"
                )

    @property
    def shape(self):
        return (len(self.axis1), len(self.axis2))

    @property
    def n_states(self):
        return len(self.axis1) * len(self.axis2)

    def flat_index(self, i: int, j: int) -> int:
        # Level-major folding: level (axis1) transitions are block moves.
        return i * len(self.axis2) + j

    def node(self, i: int, j: int):
        return self.axis1.nodes[i], self.axis2.nodes[j]

    def flat_nodes(self):
        """Pair of arrays (z1, z2) over the folded state order."""
        z1 = np.repeat(self.axis1.nodes, len(self.axis2))
        z2 = np.tile(self.axis2.nodes, len(self.axis1))
        return z1, z2


@dataclass(frozen=True)
class YGrid:
    """Odd count of positive activity levels; the chain starts at the
    midpoint level."""

    levels: np.ndarray

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float)
        object.__setattr__(self, "levels", levels)
        if len(levels) % 2 == 0:
            raise ConfigError("activity grid needs an odd number of levels")
        if np.any(levels <= 0) or np.any(np.diff(levels) <= 0):
            raise ConfigError("activity levels must be positive and increasing")

    def __len__(self):
        return len(self.levels)

    @property
    def initial_index(self) -> int:
        return len(self.levels) // 2

    @property
    def initial_value(self) -> float:
        return float(self.levels[self.initial_index])


@dataclass(frozen=True)
class ThetaGrid:
    """Discretized dilaton levels, spanning at least [mean/5, 5 mean]."""

    values: np.ndarray
    prior_mean: float = 1.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if np.any(values <= 0) or np.any(np.diff(values) <= 0):
            raise ConfigError("dilaton levels must be positive and increasing")
        if values[0] > self.prior_mean / 5 + 1e-12 or values[-1] < 5 * self.prior_mean - 1e-9:
            raise ConfigError("dilaton grid must span at least [mean/5, 5*mean]")

    def __len__(self):
        return len(self.values)


def step_band(dz1: float, sigma1: float, sigma2: float, rho: float):
    """Admissible (lo, hi) band for the second-axis step given the first."""
    r = abs(rho)
    if r == 0.0:
        return 0.0, np.inf
    if r >= 1.0:
        raise ConfigError("band is empty at |rho| = 1")
    return r * sigma2 / sigma1 * dz1, sigma2 / (r * sigma1) * dz1


def build_z_grid(strikes, z_min: float, z_max: float, target_count: int) -> Grid1D:
    """Geometric grid on [z_min, z_max] with strikes inserted as nodes.

    Nearer-than-1e-10 (relative) coincidences between a base node and a
    strike merge onto the strike value, so quoted strikes are represented
    exactly.  Idempotent for fixed inputs.
    """
    strikes = sorted(float(k) for k in strikes)
    if not 0 < z_min < z_max:
        raise ConfigError(f"need 0 < z_min < z_max, got [{z_min}, {z_max}]")
    for k in strikes:
        if not z_min < k < z_max:
            raise ConfigError(f"strike {k} outside ({z_min}, {z_max})")
    if target_count < len(strikes) + 4:
        raise ConfigError(f"target_count must be >= strikes + 4, got {target_count}")

    base = np.geomspace(z_min, z_max, target_count)
    nodes = list(base)
    for k in strikes:
        nodes = [z for z in nodes if abs(z - k) > _MERGE_RTOL * k]
        nodes.append(k)
    nodes = np.array(sorted(nodes))
    anchor_indices = tuple(int(np.searchsorted(nodes, k)) for k in strikes)
    return Grid1D(nodes=nodes, anchor_indices=anchor_indices)


def build_z_grid_2d(
    axis1_spec,
    axis2_spec,
    sigma1: float = 1.0,
    sigma2: float = 1.0,
    rho: float = 0.0,
):
    """Uniform 2D grid with the second step auto-adjusted into the
    admissible band.

    Each axis spec is (z_min, z_max, count).  When the requested dz2
    violates the band, dz2 is reset to the band midpoint (keeping z_min
    and the count; z_max moves) and the adjustment is flagged on the
    returned grid.  Returns the Grid2D.
    """
    if not -1.0 < rho < 1.0:
        raise ConfigError(f"admissible band is empty at |rho| >= 1 (rho={rho})")
    lo1, hi1, n1 = axis1_spec
    lo2, hi2, n2 = axis2_spec
    ax1 = Grid1D(np.linspace(lo1, hi1, int(n1)))
    ax2 = Grid1D(np.linspace(lo2, hi2, int(n2)))
    adjusted = False
    if rho != 0.0:
        d1 = float(ax1.steps[0])
        d2 = float(ax2.steps[0])
        lo, hi = step_band(d1, sigma1, sigma2, rho)
        if not (lo <= d2 <= hi):
            d2_new = 0.5 * (lo + hi)
            ax2 = Grid1D(lo2 + d2_new * np.arange(int(n2)))
            adjusted = True
    return Grid2D(
        axis1=ax1, axis2=ax2, sigma1=sigma1, sigma2=sigma2, rho=rho, step2_adjusted=adjusted
    )


def build_y_grid(q: int, y_mid: float, spread: float) -> YGrid:
    """2q+1 geometrically spaced activity levels centered (in log) on
    y_mid, spanning [y_mid/spread, y_mid*spread]."""
    if q < 1:
        raise ConfigError("need q >= 1")
    if y_mid <= 0 or spread <= 1:
        raise ConfigError("need y_mid > 0 and spread > 1")
    exponents = np.arange(-q, q + 1) / q
    levels = y_mid * spread**exponents
    levels[q] = y_mid  # midpoint exact
    return YGrid(levels=levels)


def build_theta_grid(count: int = 15, prior_mean: float = 1.0, span: float = 5.0) -> ThetaGrid:
    """Log-spaced dilaton grid over [mean/span, span*mean], span >= 5."""
    if count < 3:
        raise ConfigError("dilaton grid needs at least 3 points")
    if span < 5.0:
        raise ConfigError("span must cover at least [mean/5, 5*mean]")
    values = np.geomspace(prior_mean / span, prior_mean * span, count)
    return ThetaGrid(values=values, prior_mean=prior_mean)

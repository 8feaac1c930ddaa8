"""Grid construction contracts: strike snapping, step bands, level grids."""

import numpy as np
import pytest

from uslv.errors import ConfigError
from uslv.grids import (
    Grid1D,
    Grid2D,
    ThetaGrid,
    YGrid,
    build_theta_grid,
    build_y_grid,
    build_z_grid,
    build_z_grid_2d,
    step_band,
)


class TestZGrid:
    def test_single_strike_contained(self):
        g = build_z_grid([1.0], 0.1, 10.0, 21)
        assert 21 <= len(g) <= 22
        assert 1.0 in g.nodes
        assert g.anchors.tolist() == [1.0]

    def test_empty_strikes_pure_geometric(self):
        g = build_z_grid([], 0.2, 5.0, 17)
        assert len(g) == 17
        ratios = g.nodes[1:] / g.nodes[:-1]
        assert np.allclose(ratios, ratios[0], rtol=1e-12)

    def test_anchor_indices_increasing_and_exact(self):
        strikes = [0.8, 1.0, 1.25]
        g = build_z_grid(strikes, 0.1, 10.0, 25)
        idx = list(g.anchor_indices)
        assert idx == sorted(idx)
        for k, i in zip(strikes, idx):
            assert g.nodes[i] == k

    def test_idempotent(self):
        a = build_z_grid([0.9, 1.1], 0.2, 6.0, 31)
        b = build_z_grid([0.9, 1.1], 0.2, 6.0, 31)
        assert np.array_equal(a.nodes, b.nodes)
        assert a.anchor_indices == b.anchor_indices

    def test_strike_outside_range_rejected(self):
        with pytest.raises(ConfigError):
            build_z_grid([11.0], 0.1, 10.0, 21)

    def test_count_floor(self):
        with pytest.raises(ConfigError):
            build_z_grid([1.0, 2.0], 0.1, 10.0, 5)

    def test_invariants(self):
        g = build_z_grid([0.5, 1.0, 2.0], 0.05, 20.0, 40)
        assert np.all(g.nodes > 0)
        assert np.all(np.diff(g.nodes) > 0)


class TestGrid2D:
    def test_zero_correlation_accepts_any_steps(self):
        g = build_z_grid_2d((0.5, 1.5, 11), (0.5, 2.5, 6), 1.0, 1.0, 0.0)
        assert not g.step2_adjusted

    def test_band_example(self):
        lo, hi = step_band(0.1, 1.0, 1.0, 0.5)
        assert lo == pytest.approx(0.05)
        assert hi == pytest.approx(0.2)
        g = build_z_grid_2d((0.0, 1.0, 11), (0.0, 3.0, 11), 1.0, 1.0, 0.5)
        assert g.step2_adjusted
        assert g.axis2.steps[0] == pytest.approx(0.125)

    def test_band_collapses_as_rho_to_one(self):
        lo, hi = step_band(0.1, 1.0, 0.8, 0.999)
        assert lo == pytest.approx(hi, rel=3e-3)
        with pytest.raises(ConfigError):
            build_z_grid_2d((0, 1, 5), (0, 1, 5), 1.0, 1.0, 1.0)

    def test_violating_grid_rejected_at_type_level(self):
        ax = Grid1D(np.linspace(0.5, 1.5, 11))
        ax2 = Grid1D(np.linspace(0.5, 0.52, 11))  # dz2 far below the band
        with pytest.raises(ConfigError):
            Grid2D(ax, ax2, sigma1=1.0, sigma2=1.0, rho=0.5)

    def test_flat_nodes_fold_level_major(self):
        g = build_z_grid_2d((1.0, 2.0, 3), (5.0, 6.0, 3), 1.0, 1.0, 0.0)
        z1, z2 = g.flat_nodes()
        k = g.flat_index(1, 2)
        assert z1[k] == 1.5 and z2[k] == 6.0


class TestYGrid:
    def test_three_level_example(self):
        g = build_y_grid(1, 1.0, 2.0)
        assert np.allclose(g.levels, [0.5, 1.0, 2.0])
        assert g.initial_index == 1
        assert g.initial_value == 1.0

    def test_log_uniform(self):
        g = build_y_grid(5, 1.0, 3.0)
        assert len(g) == 11
        d = np.diff(np.log(g.levels))
        assert np.allclose(d, d[0], atol=1e-12)

    def test_even_count_rejected(self):
        with pytest.raises(ConfigError):
            YGrid(levels=np.array([0.5, 1.0, 1.5, 2.0]))


class TestThetaGrid:
    def test_span_requirement(self):
        g = build_theta_grid(15, 1.0)
        assert g.values[0] <= 0.2 + 1e-12
        assert g.values[-1] >= 5.0 - 1e-9
        assert len(g) == 15
        with pytest.raises(ConfigError):
            ThetaGrid(values=np.linspace(0.5, 2.0, 9))

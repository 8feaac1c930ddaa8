"""Curve layer: closed forms, bounds, deterministic paths, calibration."""

import numpy as np
import pytest
import sympy as sp

from uslv.curve import (
    CurveQuote,
    LgpParams,
    bond_price_1f,
    bond_price_nf,
    calibrate_curve,
    deflator,
    short_rate,
    sigma_lambda_1f,
    x_from_z,
    yield_curve,
    zero_vol_path,
)
from uslv.errors import ConfigError

# Short-rate simulation figure parameters: a=0.085, mu=0.080, mu_bar=0.081,
# Y0=0.909 sits outside [0, mu_bar/a); the admissible variant used in tests
# keeps the same rates with Y0 well inside the strip.
FIG2 = dict(a=0.085, c=0.1, mu=(0.080,), mu_bar=0.081, y0=0.6)


def p1():
    return LgpParams(**FIG2)


class TestBondPrice:
    def test_maturity_collapse(self):
        p = p1()
        for x in (-3.0, 0.0, 0.7, 42.0):
            assert bond_price_1f(p, 1.5, 1.5, x) == 1.0

    def test_hand_substitution_long_bond(self):
        # independent hand evaluation of the closed form at the detrended
        # equilibrium state x = (a-mu)/c = 0.05, T = 30
        p = p1()
        a, mu, c, x, T = 0.085, 0.080, 0.1, 0.05, 30.0
        expected = np.exp(-a * T) * (1 + c * ((np.exp((a - mu) * T) - 1) / (a - mu)) * x)
        assert bond_price_1f(p, 0.0, T, x) == pytest.approx(expected, rel=1e-15)

    def test_derivative_matches_transport_equation(self):
        # dP/dT = -a P + c e^{-mu T} x, checked by central differences
        p = p1()
        t, T, x = 0.3, 4.0, 0.08
        h = 1e-6
        fd = (bond_price_1f(p, t, T + h, x) - bond_price_1f(p, t, T - h, x)) / (2 * h)
        rhs = -p.a * bond_price_1f(p, t, T, x) + p.c * np.exp(-p.mu[0] * T) * x
        assert fd == pytest.approx(rhs, rel=1e-8)

    def test_affine_in_state(self):
        p = p1()
        lam, x1, x2 = 0.3, -0.2, 0.9
        mix = bond_price_1f(p, 0.5, 7.0, lam * x1 + (1 - lam) * x2)
        split = lam * bond_price_1f(p, 0.5, 7.0, x1) + (1 - lam) * bond_price_1f(p, 0.5, 7.0, x2)
        assert mix == pytest.approx(split, rel=1e-14)

    def test_mu_equal_a_rejected(self):
        p = LgpParams(a=0.05, c=0.1, mu=(0.05,))
        with pytest.raises(ConfigError):
            bond_price_1f(p, 0.0, 2.0, 0.1)


class TestNFactor:
    def test_two_factor_curve_finite_and_smooth(self):
        # calibrated two-factor parameter set from the example fit
        p = LgpParams(a=0.041, c=1.0, mu=(0.520, 0.382))
        x = np.array([-0.151, 0.188])
        mats = np.linspace(0.05, 30.0, 200)
        ys = yield_curve(p, x, mats)
        assert np.all(np.isfinite(ys))
        assert np.max(np.abs(np.diff(ys, 2))) < 5e-3  # no kinks

    def test_reduces_to_one_factor(self):
        p = p1()
        for T in (0.5, 3.0, 20.0):
            got = bond_price_nf(p, 0.2, T, [0.07])
            ref = bond_price_1f(p, 0.2, T, 0.07)
            assert got == pytest.approx(ref, rel=1e-14)

    def test_unit_at_maturity(self):
        p = LgpParams(a=0.041, c=1.0, mu=(0.52, 0.382))
        assert bond_price_nf(p, 1.0, 1.0, [0.3, -0.1]) == 1.0


class TestShortRate:
    def test_zero_state(self):
        p = p1()
        assert short_rate(p, 2.0, [0.0]) == pytest.approx(p.a)

    def test_detrended_equilibrium(self):
        p = p1()
        t = 3.0
        x_eq = np.exp(p.mu[0] * t) * (p.a - p.mu[0]) / p.c
        assert short_rate(p, t, [x_eq]) == pytest.approx(p.mu[0], abs=1e-15)

    def test_bounds_on_admissible_draws(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            a = rng.uniform(0.01, 0.2)
            mu = a - rng.uniform(0.001, a * 0.9)
            mu_bar = rng.uniform(mu, a)
            eta0 = rng.uniform(0.0, mu_bar / a * 0.999)
            p = LgpParams(a=a, c=0.1, mu=(mu,), mu_bar=mu_bar, y0=eta0)
            for t in rng.uniform(0.0, 30.0, size=5):
                r = short_rate(p, t, [zero_vol_path(p, t)])
                lo = a - (a - mu) / (1 - (mu_bar / a) * np.exp(-(a - mu) * t))
                assert lo - 1e-12 <= r <= mu + 1e-12


class TestZeroVolPath:
    def test_initial_value(self):
        p = p1()
        x0 = (p.a - p.mu[0]) / p.c / (1 - p.y0)
        assert zero_vol_path(p, 0.0) == pytest.approx(x0, rel=1e-14)

    def test_long_run_detrended_level(self):
        # transient denominator term decays like e^{-(a-mu)t}
        p = p1()
        t = 8000.0
        assert np.exp(-p.mu[0] * t) * zero_vol_path(p, t) == pytest.approx(0.05, rel=1e-12)

    def test_mu_equal_a_branch(self):
        p = LgpParams(a=0.05, c=0.1, mu=(0.05,), eta0=2.0)
        t = 3.0
        assert zero_vol_path(p, t) == pytest.approx(np.exp(0.05 * t) / (2.0 + 0.1 * t))

    def test_two_factor_asymptotics(self):
        p = LgpParams(a=0.041, c=1.0, mu=(0.52, 0.382), eta0=0.7, xi0=1.5)
        t = 200.0
        x1, x2 = zero_vol_path(p, t)
        mu1, mu2 = p.mu
        lim1 = (p.a - mu1) / p.c / p.xi0 * np.exp(-(mu1 - p.a) * t)
        lim2 = (mu2 - p.a) / p.c * (p.eta0 / p.xi0) * np.exp(-(mu2 - p.a) * t)
        assert x1 == pytest.approx(lim1, rel=1e-8)
        assert x2 == pytest.approx(lim2, rel=1e-8)

    def test_inadmissible_denominator_rejected(self):
        p = LgpParams(a=0.05, c=0.1, mu=(0.03,), eta0=1.5)
        with pytest.raises(ConfigError):
            zero_vol_path(p, 0.0)


class TestDriverMap:
    def test_unit_driver_start(self):
        p = p1()
        x0 = (p.a - p.mu[0]) / p.c / (1 - p.y0)
        assert x_from_z(p, 0.0, 1.0) == pytest.approx(x0, rel=1e-14)

    def test_limits_hit_detrended_bounds(self):
        p = p1()
        t = 2.0
        lo = (p.a - p.mu[0]) / p.c
        hi = lo / p.kappa(t)
        detrended = lambda z: np.exp(-p.mu[0] * t) * x_from_z(p, t, z)
        assert detrended(1e12) == pytest.approx(lo, rel=1e-9)
        assert detrended(1e-12) == pytest.approx(hi, rel=1e-9)
        zs = np.geomspace(1e-6, 1e6, 41)
        vals = detrended(zs)
        assert np.all(np.diff(vals) < 0)  # monotone toward the lower bound
        assert np.all((vals >= lo - 1e-12) & (vals <= hi + 1e-12))

    def test_symbolic_oracle(self):
        # independent symbolic substitution of the fractional-linear map
        a, c, mu, mu_bar, y0 = sp.Rational(85, 1000), sp.Rational(1, 10), sp.Rational(8, 100), sp.Rational(81, 1000), sp.Rational(3, 5)
        t, z = 1, 2
        alpha = a * y0
        beta = mu_bar - alpha
        kappa = 1 - (mu_bar / a) * sp.exp(-(a - mu) * t)
        expected = (a - mu) / c * sp.exp(mu * t) * (alpha + beta * z) / (alpha * kappa + beta * z)
        got = x_from_z(p1(), float(t), float(z))
        assert got == pytest.approx(float(expected), rel=1e-14)

    def test_deflator_normalization_and_affinity(self):
        p = p1()
        assert deflator(p, 0.0, 1.0) == pytest.approx(1.0, rel=1e-15)
        z1, z2 = 0.4, 3.1
        mid = deflator(p, 1.3, 0.5 * (z1 + z2))
        assert mid == pytest.approx(0.5 * (deflator(p, 1.3, z1) + deflator(p, 1.3, z2)), rel=1e-14)

    def test_deflated_state_affine_in_driver(self):
        # M(t,z) * X(t,z) is affine in z: three-point collinearity
        p = p1()
        t = 2.4
        zs = np.array([0.5, 1.4, 3.7])
        vals = np.array([deflator(p, t, z) * x_from_z(p, t, z) for z in zs])
        slope1 = (vals[1] - vals[0]) / (zs[1] - zs[0])
        slope2 = (vals[2] - vals[1]) / (zs[2] - zs[1])
        assert slope1 == pytest.approx(slope2, rel=1e-12)

    def test_bond_price_equals_deflator_expectation(self):
        # E[M_T] with E[Z_T] = 1 reproduces the bond price off X_0 exactly
        p = p1()
        T = 7.0
        x0 = x_from_z(p, 0.0, 1.0)
        assert deflator(p, T, 1.0) == pytest.approx(bond_price_1f(p, 0.0, T, x0), rel=1e-14)


class TestSigmaLambda:
    def test_vanishing_at_edges(self):
        p = p1()
        assert sigma_lambda_1f(p, 1.0, 0.0, 0.3) == (0.0, 0.0)
        assert sigma_lambda_1f(p, 1.0, 2.0, 0.0) == (0.0, 0.0)
        sig_far, _ = sigma_lambda_1f(p, 1.0, 1e9, 0.3)
        assert sig_far < 1e-8

    def test_ito_drift_identity(self):
        # The map applied to the driftless driver must reproduce the state
        # equation's drift r X + sigma lambda; the realized drift of
        # X = f(t, Z) is f_t + 0.5 f_zz sigma_hat^2 z^2 by the expansion.
        p = p1()
        sigma_hat, t, z = 0.6, 0.8, 1.3
        h = 1e-5
        f = lambda tt, zz: x_from_z(p, tt, zz)
        f_t = (f(t + h, z) - f(t - h, z)) / (2 * h)
        f_zz = (f(t, z + h) - 2 * f(t, z) + f(t, z - h)) / h**2
        realized_drift = f_t + 0.5 * f_zz * sigma_hat**2 * z**2
        x = f(t, z)
        sig, lam = sigma_lambda_1f(p, t, z, sigma_hat)
        model_drift = short_rate(p, t, [x]) * x + sig * lam
        assert realized_drift == pytest.approx(model_drift, rel=1e-5)

    def test_realized_diffusion_by_simulation(self):
        # quadratic variation of the mapped state over small steps
        p = p1()
        sigma_hat, t, z = 0.6, 0.8, 1.3
        rng = np.random.default_rng(11)
        dt = 1e-6
        dw = rng.normal(scale=np.sqrt(dt), size=200_000)
        z_next = z * (1.0 - sigma_hat * dw)
        dx = x_from_z(p, t + dt, z_next) - x_from_z(p, t, z)
        sig, _ = sigma_lambda_1f(p, t, z, sigma_hat)
        realized = np.mean(dx**2) / dt
        se = np.std(dx**2) / dt / np.sqrt(len(dw))
        assert abs(realized - sig**2) < 4 * se + 1e-12


class TestYieldCurveShapes:
    def test_flat_at_zero_state(self):
        p = p1()
        ys = yield_curve(p, [0.0], [1.0, 5.0, 17.0])
        assert np.allclose(ys, p.a, rtol=1e-13)

    def test_increasing_concave_and_inverted(self):
        mats = np.linspace(0.25, 30.0, 60)
        rng = np.random.default_rng(3)
        for _ in range(25):
            a = rng.uniform(0.02, 0.15)
            mu = a - rng.uniform(0.002, a * 0.8)
            mu_bar = rng.uniform(mu, a)
            eta0 = rng.uniform(1e-3, mu_bar / a * 0.98)
            p = LgpParams(a=a, c=0.1, mu=(mu,))
            x0 = (a - mu) / 0.1 / (1 - eta0)
            ys = yield_curve(p, [x0], mats)
            assert np.all(np.diff(ys) > -1e-12)
            assert np.all(np.diff(ys, 2) < 1e-12)
            x_inv = (a - mu) / 0.1 / (1 + abs(eta0))  # eta0 < 0
            ys_inv = yield_curve(p, [x_inv], mats)
            assert np.all(np.diff(ys_inv) < 1e-12)


class TestCalibration:
    def test_round_trip_yields(self):
        p = LgpParams(a=0.06, c=0.1, mu=(0.035,))
        x0 = 0.5
        mats = [1, 2, 3, 5, 7, 10, 20, 30]
        quotes = [CurveQuote(m, y) for m, y in zip(mats, yield_curve(p, [x0], mats))]
        fit = calibrate_curve(quotes, n_factors=1)
        assert np.max(np.abs(fit.residuals)) < 1e-8

    def test_flat_quotes_recover_zero_state(self):
        quotes = [CurveQuote(m, 0.05) for m in (1, 2, 5, 10, 20)]
        fit = calibrate_curve(quotes, n_factors=1)
        assert np.max(np.abs(fit.residuals)) < 1e-8
        assert abs(fit.x[0]) < 1e-4

    def test_two_factor_fit_is_finite(self):
        p = LgpParams(a=0.041, c=0.1, mu=(0.52, 0.382))
        x = np.array([-0.151, 0.188])
        mats = [0.5, 1, 2, 3, 5, 7, 10, 20, 30]
        quotes = [CurveQuote(m, y) for m, y in zip(mats, yield_curve(p, x, mats))]
        fit = calibrate_curve(quotes, n_factors=2)
        assert np.all(np.isfinite(fit.residuals))
        assert np.max(np.abs(fit.residuals)) < 1e-6

    def test_too_few_quotes(self):
        with pytest.raises(ConfigError):
            calibrate_curve([CurveQuote(1.0, 0.05)], n_factors=1)

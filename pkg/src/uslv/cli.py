"""Batch command-line interface.

    uslv <subcommand> --config <path> [--out <dir>] [--oracle] [--tol <x>]

Subcommands: calibrate-curve, build-generator, calibrate-lv, calibrate-ar,
calibrate-itc, price, validate.  Every run writes structured text reports
(and one figure) into the output directory.  Exit codes: 0 success,
2 configuration or file problems, 3 numerical failures (fit stagnation,
infeasible constraints, calibration breaks, invalid generators).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import config as cfgmod
from .ar import ArComponents, JumpCouplingParams, OuParams, forward_induction_calibrate
from .config import EngineConfig, fmt
from .curve import calibrate_curve, yield_curve
from .errors import (
    CalibrationBreak,
    ConfigError,
    FitFailure,
    Infeasible,
    InvalidGeneratorError,
    UslvError,
)
from .generator import generator_1d, generator_2d_uniform, validate_generator, split_generator
from .grids import Grid2D, build_theta_grid, build_y_grid
from .itc import (
    DilatonLaw,
    DilatonPrior,
    SubordinatorLaw,
    constraint_panel,
    implied_dilaton_process,
)
from .lv import QuoteSet, calibrate_sf, payoff_on_grid, price_vanillas, _build_generator
from .pricing import (
    ArChainModel,
    ItcChainModel,
    LvChainModel,
    PayoffEvent,
    PayoffSchedule,
    backward_induction_price,
    forward_price,
)
from . import reports

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _cmd_calibrate_curve(cfg: EngineConfig, out: str, args) -> int:
    quotes = cfgmod.read_curve_quotes(cfg.path("curve", "quotes"))
    n_factors = cfg.get("curve", "n_factors", default=1, kind=int)
    fit = calibrate_curve(quotes, n_factors=n_factors)
    mats = np.array([q.maturity for q in quotes])
    market = np.array([q.zero_yield for q in quotes])
    model = market + fit.residuals
    cfgmod.write_curve_params(os.path.join(out, "curve_params.txt"), fit.params, fit.x)
    reports.write_table(
        os.path.join(out, "curve_residuals.csv"),
        ["maturity_years", "market_yield", "model_yield", "residual"],
        [mats, market, model, fit.residuals],
    )
    reports.plot_curve_fit(os.path.join(out, "curve_fit.png"), mats, market, model)
    reports.write_kv(
        os.path.join(out, "curve_report.txt"),
        [
            ("converged", str(fit.converged).lower()),
            ("iterations", fit.iterations),
            ("max_abs_residual", float(np.max(np.abs(fit.residuals)))),
            ("a", fit.params.a),
            ("mu", " ".join(fmt(m) for m in fit.params.mu)),
        ],
    )
    return EXIT_OK


def _speeds_from_config(cfg: EngineConfig, grid):
    if cfg.has("sf") and cfg.parser.has_option("sf", "file"):
        return cfgmod.read_speed_factors(cfg.path("sf", "file"))
    sigma_hat = cfg.get("sf", "flat_sigma_hat", default=0.3, kind=float)
    from .lv import SpeedFactorSlice, SpeedFactorTermStructure

    if isinstance(grid, Grid2D):
        u = 0.5 * grid.axis1.nodes[0] + 0.5 * grid.axis2.nodes[0]
        hi = 0.5 * grid.axis1.nodes[-1] + 0.5 * grid.axis2.nodes[-1]
        anchors = np.linspace(u, hi, 5)
        sl = SpeedFactorSlice(anchors, sigma_hat**2 * anchors**2)
        return SpeedFactorTermStructure((30.0,), (sl,), weights=(0.5, 0.5))
    sl = SpeedFactorSlice(grid.nodes, sigma_hat**2 * grid.nodes**2)
    return SpeedFactorTermStructure((30.0,), (sl,))


def _cmd_build_generator(cfg: EngineConfig, out: str, args) -> int:
    grid = cfg.build_grid(strikes=())
    sf = _speeds_from_config(cfg, grid)
    gen = _build_generator(sf, grid, cfg.get("sf", "at_time", default=0.0, kind=float))
    report = validate_generator(gen)
    with open(os.path.join(out, "generator.coo"), "w") as fh:
        fh.write(gen.to_coo_text())
    reports.write_kv(
        os.path.join(out, "generator_report.txt"),
        [
            ("states", gen.dimension),
            ("stored_nonzeros", gen.stored_nonzeros),
            ("matrix_nonzeros", gen.matrix.nnz),
            ("valid", str(report.ok).lower()),
            ("max_exit_rate", gen.max_exit_rate()),
        ],
    )
    rates = -gen.matrix.diagonal()
    reports.plot_value_surface(os.path.join(out, "generator_rates.png"), np.arange(len(rates)), rates)
    if not report.ok:
        raise InvalidGeneratorError(report.summary(), report.violations)
    return EXIT_OK


def _cmd_calibrate_lv(cfg: EngineConfig, out: str, args) -> int:
    quotes = QuoteSet.from_file(cfg.path("lv", "quotes"))
    strikes = sorted({q.strike for q in quotes})
    grid = cfg.build_grid(strikes=strikes)
    lgp = None
    if cfg.has("curve") and cfg.parser.has_option("curve", "params"):
        lgp, _ = cfgmod.read_curve_params(cfg.path("curve", "params"))
    tol = args.tol if args.tol is not None else cfg.get("lv", "tol", default=1e-8, kind=float)
    sf, rep = calibrate_sf(quotes, grid, lgp=lgp, tol=tol)
    model = price_vanillas(sf, grid, quotes, lgp=lgp, oracle=args.oracle)
    market = np.array([q.mid for q in quotes])
    cfgmod.write_speed_factors(os.path.join(out, "lv_anchors.txt"), sf)
    reports.write_table(
        os.path.join(out, "lv_residuals.csv"),
        ["maturity_years", "strike_z", "kind", "market", "model", "residual"],
        [
            np.array([q.maturity for q in quotes]),
            np.array([q.strike for q in quotes]),
            [q.kind for q in quotes],
            market,
            model,
            model - market,
        ],
    )
    reports.plot_speed_factors(os.path.join(out, "lv_fit.png"), sf)
    reports.write_kv(
        os.path.join(out, "lv_report.txt"),
        [
            ("max_abs_residual", rep.max_residual()),
            ("iterations", " ".join(str(i) for i in rep.iterations)),
            ("maturities", " ".join(fmt(m) for m in rep.maturities)),
            ("converged", str(rep.converged).lower()),
        ],
    )
    return EXIT_OK


def _ar_components(cfg: EngineConfig, grid) -> ArComponents:
    sf = cfgmod.read_speed_factors(cfg.path("ar", "sf"))
    ygrid = build_y_grid(
        cfg.get("ar", "ygrid_q", default=1, kind=int),
        cfg.get("ar", "ygrid_mid", default=1.0, kind=float),
        cfg.get("ar", "ygrid_spread", default=2.0, kind=float),
    )
    ou = OuParams(
        k1=cfg.get("ar", "k1", kind=float),
        k2=cfg.get("ar", "k2", kind=float),
        eta1=cfg.get("ar", "eta1", default=0.0, kind=float),
        eta2=cfg.get("ar", "eta2", default=0.0, kind=float),
        nu1=cfg.get("ar", "nu1", kind=float),
        nu2=cfg.get("ar", "nu2", kind=float),
        rho_y=cfg.get("ar", "rho_y", default=0.0, kind=float),
    )
    jumps = JumpCouplingParams(
        gamma1=cfg.get("ar", "gamma1", default=0.0, kind=float),
        gamma2=cfg.get("ar", "gamma2", default=0.0, kind=float),
        q1=cfg.get("ar", "q1", default=1.0, kind=float),
        q2=cfg.get("ar", "q2", default=1.0, kind=float),
    )
    return ArComponents(grid=grid, sf=sf, ygrid1=ygrid, ygrid2=ygrid, ou=ou, jumps=jumps)


def _cmd_calibrate_ar(cfg: EngineConfig, out: str, args) -> int:
    grid = cfg.build_grid()
    if not isinstance(grid, Grid2D):
        raise ConfigError("the activity-rate model needs a uniform2d grid")
    comp = _ar_components(cfg, grid)
    dt = cfg.get("ar", "dt", kind=float)
    horizon = cfg.get("ar", "horizon", kind=float)
    cal = forward_induction_calibrate(comp, dt=dt, horizon=horizon)
    reports.write_table(
        os.path.join(out, "ar_trace.csv"),
        ["time", "marginal_gap", "q_min", "q_max", "mass_defect"],
        [
            cal.step_times,
            cal.trace["marginal_gap"],
            cal.trace["q_min"],
            cal.trace["q_max"],
            cal.trace["mass_defect"],
        ],
    )
    reports.plot_ar_trace(os.path.join(out, "ar_trace.png"), cal.step_times, cal.trace)
    reports.write_kv(
        os.path.join(out, "ar_report.txt"),
        [
            ("steps", len(cal.step_times)),
            ("max_marginal_gap", cal.marginal_gap()),
            ("max_mass_defect", float(cal.trace["mass_defect"].max())),
            ("q_min", float(cal.trace["q_min"].min())),
            ("q_max", float(cal.trace["q_max"].max())),
        ],
    )
    return EXIT_OK


def _cmd_calibrate_itc(cfg: EngineConfig, out: str, args) -> int:
    grid = cfg.build_grid()
    if not isinstance(grid, Grid2D):
        raise ConfigError("the implied-time-change model needs a uniform2d grid")
    sf = cfgmod.read_speed_factors(cfg.path("itc", "sf"))
    gen = _build_generator(sf, grid, 0.0)
    split = split_generator(gen)
    law = SubordinatorLaw(
        cfg.get("itc", "law", default="gamma"), nu=cfg.get("itc", "nu", kind=float)
    )
    theta_grid = build_theta_grid(cfg.get("itc", "theta_points", default=15, kind=int))
    timeline = cfg.get_floats("itc", "timeline")
    quotes = QuoteSet.from_file(cfg.path("itc", "quotes"))
    payoffs, targets = [], []
    for t in timeline:
        node_quotes = [q for q in quotes if abs(q.maturity - t) < 1e-12]
        payoffs.append(
            np.array([payoff_on_grid(q.kind, q.strike, grid) for q in node_quotes]).reshape(
                len(node_quotes), -1
            )
        )
        targets.append(np.array([q.mid for q in node_quotes]))
    p0 = np.zeros(grid.n_states)
    i0 = int(np.argmin(np.abs(grid.axis1.nodes - 1.0)))
    j0 = int(np.argmin(np.abs(grid.axis2.nodes - 1.0)))
    p0[grid.flat_index(i0, j0)] = 1.0
    panel = constraint_panel(timeline, payoffs, targets, split, law, theta_grid, p0)
    prior = DilatonPrior(
        theta_grid,
        var_theta=cfg.get("itc", "prior_var", default=0.25, kind=float),
        stay_prob=cfg.get("itc", "stay_prob", default=0.5, kind=float),
        increment_scale=cfg.get("itc", "increment_scale", default=0.05, kind=float),
    )
    law_out = implied_dilaton_process(panel, prior)
    with open(os.path.join(out, "dilaton_law.txt"), "w") as fh:
        fh.write(law_out.to_text())
    rows = []
    for i in range(len(timeline)):
        reprice = panel.g_values[i] @ law_out.marginals[i]
        rows.append(
            (
                f"node_{i}_max_reprice_error",
                float(np.max(np.abs(reprice - panel.targets[i]))),
            )
        )
        rows.append((f"node_{i}_mean", float(np.dot(law_out.marginals[i], theta_grid.values))))
    reports.write_kv(os.path.join(out, "itc_report.txt"), rows)
    reports.plot_theta_marginals(
        os.path.join(out, "itc_marginals.png"),
        theta_grid.values,
        law_out.marginals,
        timeline,
    )
    return EXIT_OK


def _read_schedule(path, grid, lgp=None, n_y: int = 1):
    events = []
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line or line.startswith("time"):
                continue
            t_s, event_kind, payoff_kind, strike_s = line.split()[:4]
            t = float(t_s)
            if payoff_kind == "unit":
                base = np.ones(grid.n_states if isinstance(grid, Grid2D) else len(grid))
            else:
                base = payoff_on_grid(payoff_kind, float(strike_s), grid, maturity=t, lgp=lgp)
            if n_y > 1:
                base = np.repeat(base, n_y)
            events.append(PayoffEvent(t, base, event_kind))
    return PayoffSchedule(events)


def _cmd_price(cfg: EngineConfig, out: str, args) -> int:
    flavor = cfg.get("price", "flavor")
    if flavor not in cfgmod.FLAVORS:
        raise ConfigError(f"unknown flavor {flavor!r}; expected one of {cfgmod.FLAVORS}")
    grid = cfg.build_grid(strikes=cfg.get_floats("grid", "strikes", default=[]))
    lgp = None
    if cfg.has("curve") and cfg.parser.has_option("curve", "params"):
        lgp, _ = cfgmod.read_curve_params(cfg.path("curve", "params"))
    if flavor == "lv":
        sf = cfgmod.read_speed_factors(cfg.path("price", "sf"))
        model = LvChainModel(sf, grid, lgp=lgp, oracle=args.oracle)
        schedule = _read_schedule(cfg.path("price", "schedule"), grid, lgp)
    elif flavor == "ar":
        comp = _ar_components(cfg, grid)
        cal = forward_induction_calibrate(
            comp,
            dt=cfg.get("ar", "dt", kind=float),
            horizon=cfg.get("ar", "horizon", kind=float),
            collect_trace=False,
        )
        model = ArChainModel(cal)
        schedule = _read_schedule(cfg.path("price", "schedule"), grid, lgp, n_y=comp.n_y)
    else:
        sf = cfgmod.read_speed_factors(cfg.path("itc", "sf"))
        split = split_generator(_build_generator(sf, grid, 0.0))
        law = SubordinatorLaw(
            cfg.get("itc", "law", default="gamma"), nu=cfg.get("itc", "nu", kind=float)
        )
        with open(cfg.path("price", "dilaton_law")) as fh:
            dl = DilatonLaw.from_text(fh.read())
        model = ItcChainModel(split, law, dl)
        schedule = _read_schedule(cfg.path("price", "schedule"), grid, lgp)
    p0 = None
    if flavor == "itc":
        p0 = np.zeros(grid.n_states)
        i0 = int(np.argmin(np.abs(grid.axis1.nodes - 1.0)))
        j0 = int(np.argmin(np.abs(grid.axis2.nodes - 1.0)))
        p0[grid.flat_index(i0, j0)] = 1.0
    result = backward_induction_price(model, schedule, initial_distribution=p0)
    items = [("value", result.value), ("events", len(schedule.events))]
    if len(schedule.events) == 1 and schedule.events[0].kind == "terminal":
        fwd = forward_price(model, schedule, initial_distribution=p0)
        items.append(("forward_price_crosscheck", fwd))
        items.append(("backward_forward_gap", abs(fwd - result.value)))
    reports.write_kv(os.path.join(out, "price_report.txt"), items)
    surface = result.value_surface
    if flavor == "ar":
        comp_n_y = model.cal.components.n_y
        surface = surface.reshape(-1, comp_n_y)[:, comp_n_y // 2]
    if isinstance(grid, Grid2D):
        z1, z2 = grid.flat_nodes()
        reports.write_table(
            os.path.join(out, "value_surface.csv"),
            ["z1", "z2", "value"],
            [z1, z2, surface],
        )
        reports.plot_value_surface(os.path.join(out, "value_surface.png"), z1, surface)
    else:
        reports.write_table(
            os.path.join(out, "value_surface.csv"),
            ["z", "value"],
            [grid.nodes, surface],
        )
        reports.plot_value_surface(os.path.join(out, "value_surface.png"), grid.nodes, surface)
    return EXIT_OK


def _cmd_validate(cfg: EngineConfig, out: str, args) -> int:
    violations = []
    checks = []
    grid = cfg.build_grid(strikes=cfg.get_floats("grid", "strikes", default=[]))
    checks.append(("grid", "ok"))
    sf = _speeds_from_config(cfg, grid)
    gen = _build_generator(sf, grid, 0.0)
    rep = validate_generator(gen)
    checks.append(("generator", "ok" if rep.ok else rep.summary()))
    violations.extend(rep.violations)
    if cfg.has("lv") and cfg.parser.has_option("lv", "quotes"):
        try:
            QuoteSet.from_file(cfg.path("lv", "quotes"))
            checks.append(("lv_quotes", "ok"))
        except ConfigError as exc:
            checks.append(("lv_quotes", str(exc)))
            violations.append(("quotes", 0, 0, 0.0))
    reports.write_kv(
        os.path.join(out, "validation_report.txt"),
        checks + [("violations", len(violations))],
    )
    if violations:
        raise InvalidGeneratorError(f"{len(violations)} validation violation(s)", violations)
    return EXIT_OK


_COMMANDS = {
    "calibrate-curve": _cmd_calibrate_curve,
    "build-generator": _cmd_build_generator,
    "calibrate-lv": _cmd_calibrate_lv,
    "calibrate-ar": _cmd_calibrate_ar,
    "calibrate-itc": _cmd_calibrate_itc,
    "price": _cmd_price,
    "validate": _cmd_validate,
}


def run_command(argv) -> int:
    """Execute one subcommand; returns the process exit status."""
    parser = argparse.ArgumentParser(prog="uslv", description=__doc__)
    parser.add_argument("subcommand", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=".")
    parser.add_argument("--oracle", action="store_true", help="use the dense-exponential verification path")
    parser.add_argument("--tol", type=float, default=None)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = EngineConfig.load(args.config)
        out = reports.ensure_out_dir(args.out)
        return _COMMANDS[args.subcommand](cfg, out, args)
    except (FitFailure, CalibrationBreak, Infeasible, InvalidGeneratorError) as exc:
        print(f"error category=numerical kind={type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, OSError) as exc:
        print(f"error category=config kind={type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main():
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()

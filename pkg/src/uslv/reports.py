"""Report emission: structured text plus rendered figures.

Every subcommand writes key/value reports and delimited tables next to a
matplotlib figure of the headline result.  Output is deterministic: no
wall-clock stamps, fixed ordering, 15 significant digits.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .config import fmt

__all__ = [
    "write_kv",
    "write_table",
    "plot_curve_fit",
    "plot_speed_factors",
    "plot_ar_trace",
    "plot_theta_marginals",
    "plot_value_surface",
]


def write_kv(path, items):
    """Key/value report, one pair per line, insertion order preserved."""
    with open(path, "w") as fh:
        for key, val in items:
            if isinstance(val, float):
                val = fmt(val)
            fh.write(f"{key} {val}\n")


def write_table(path, header, columns):
    cols = [np.atleast_1d(c) for c in columns]
    with open(path, "w") as fh:
        fh.write(" ".join(header) + "\n")
        for row in zip(*cols):
            fh.write(" ".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_curve_fit(path, maturities, market, model):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(maturities, 100 * np.asarray(market), "o", label="market", ms=5)
    ax.plot(maturities, 100 * np.asarray(model), "-", label="model")
    ax.set_xlabel("maturity (years)")
    ax.set_ylabel("zero yield (%)")
    ax.legend()
    ax.grid(alpha=0.3)
    _save(fig, path)


def plot_speed_factors(path, sf):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    t_prev = 0.0
    for m, sl in zip(sf.maturities, sf.slices):
        ax.plot(sl.anchor_z, sl.anchor_s, "o-", label=f"({t_prev:g}, {m:g}]")
        t_prev = m
    ax.set_xlabel("state")
    ax.set_ylabel("speed factor")
    ax.legend(title="interval")
    ax.grid(alpha=0.3)
    _save(fig, path)


def plot_ar_trace(path, step_times, trace):
    fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    axes[0].semilogy(step_times, np.maximum(trace["marginal_gap"], 1e-18))
    axes[0].set_ylabel("per-step marginal gap")
    axes[0].grid(alpha=0.3)
    axes[1].plot(step_times, trace["q_min"], label="min q")
    axes[1].plot(step_times, trace["q_max"], label="max q")
    axes[1].set_xlabel("time (years)")
    axes[1].set_ylabel("adjustment factors")
    axes[1].legend()
    axes[1].grid(alpha=0.3)
    _save(fig, path)


def plot_theta_marginals(path, theta_values, marginals, node_times):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for t, p in zip(node_times, marginals):
        ax.plot(theta_values, p, "o-", label=f"t={t:g}")
    ax.set_xscale("log")
    ax.set_xlabel("dilaton level")
    ax.set_ylabel("probability")
    ax.legend()
    ax.grid(alpha=0.3)
    _save(fig, path)


def plot_value_surface(path, states, values):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(states, values, "-")
    ax.set_xlabel("driver state")
    ax.set_ylabel("value")
    ax.grid(alpha=0.3)
    _save(fig, path)


def ensure_out_dir(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    return out_dir

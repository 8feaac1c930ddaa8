"""Engine configuration and text artifact formats.

Configuration is a sectioned key/value document (INI).  Calibrated
artifacts travel between subcommands as plain structured text: key/value
blocks and whitespace-delimited tables, all numbers at 15 significant
digits so reruns are byte-identical.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass

import numpy as np

from .curve import CurveQuote, LgpParams
from .errors import ConfigError
from .grids import Grid1D, Grid2D, build_z_grid, build_z_grid_2d
from .lv import SpeedFactorSlice, SpeedFactorTermStructure

__all__ = [
    "EngineConfig",
    "read_curve_quotes",
    "write_curve_quotes",
    "write_curve_params",
    "read_curve_params",
    "write_speed_factors",
    "read_speed_factors",
    "fmt",
]

FLAVORS = ("lv", "ar", "itc")


def fmt(x) -> str:
    """Uniform 15-significant-digit numeric formatting."""
    return f"{float(x):.15g}"


@dataclass
class EngineConfig:
    """Parsed configuration with path resolution and flavor checks."""

    parser: configparser.ConfigParser
    base_dir: str

    @classmethod
    def load(cls, path) -> "EngineConfig":
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
        return cls(parser=parser, base_dir=os.path.dirname(os.path.abspath(path)))

    def has(self, section: str) -> bool:
        return self.parser.has_section(section)

    def require(self, section: str):
        if not self.has(section):
            raise ConfigError(f"config is missing the [{section}] section")
        return self.parser[section]

    def get(self, section: str, key: str, default=None, kind=str):
        if not self.parser.has_option(section, key):
            if default is None:
                raise ConfigError(f"config is missing {section}.{key}")
            return default
        raw = self.parser.get(section, key).strip()
        if kind is str:
            return raw
        if kind is float:
            return float(raw)
        if kind is int:
            return int(raw)
        if kind is bool:
            return raw.lower() in ("1", "true", "yes", "on")
        raise ConfigError(f"unsupported config kind {kind}")

    def get_floats(self, section: str, key: str, default=None):
        if not self.parser.has_option(section, key):
            if default is None:
                raise ConfigError(f"config is missing {section}.{key}")
            return default
        raw = self.parser.get(section, key)
        return [float(v) for v in raw.replace(",", " ").split()]

    def path(self, section: str, key: str, must_exist: bool = True) -> str:
        rel = self.get(section, key)
        full = rel if os.path.isabs(rel) else os.path.join(self.base_dir, rel)
        if must_exist and not os.path.exists(full):
            raise ConfigError(f"{section}.{key} points to a missing file: {full}")
        return full

    # Grid construction from the [grid] section.

    def build_grid(self, strikes=()):
        sec = self.require("grid")
        kind = sec.get("kind", "geometric").strip()
        if kind == "geometric":
            z_min = self.get("grid", "z_min", kind=float)
            z_max = self.get("grid", "z_max", kind=float)
            count = self.get("grid", "count", kind=int)
            conf_strikes = self.get("grid", "strikes", default="from_quotes")
            if conf_strikes != "from_quotes":
                strikes = [float(v) for v in conf_strikes.replace(",", " ").split()]
            return build_z_grid(strikes, z_min, z_max, count)
        if kind == "uniform2d":
            a1 = self.get_floats("grid", "axis1")
            a2 = self.get_floats("grid", "axis2")
            return build_z_grid_2d(
                (a1[0], a1[1], int(a1[2])),
                (a2[0], a2[1], int(a2[2])),
                sigma1=self.get("grid", "sigma1", default=1.0, kind=float),
                sigma2=self.get("grid", "sigma2", default=1.0, kind=float),
                rho=self.get("grid", "rho", default=0.0, kind=float),
            )
        raise ConfigError(f"unknown grid kind {kind!r}")


def read_curve_quotes(path):
    """Delimited curve quotes: maturity_years zero_yield."""
    quotes = []
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line or line.startswith("maturity"):
                continue
            parts = line.replace(",", " ").split()
            if len(parts) < 2:
                raise ConfigError(f"bad curve quote line: {raw!r}")
            quotes.append(CurveQuote(maturity=float(parts[0]), zero_yield=float(parts[1])))
    if not quotes:
        raise ConfigError(f"no quotes found in {path}")
    return quotes


def write_curve_quotes(path, quotes):
    with open(path, "w") as fh:
        fh.write("maturity_years zero_yield\n")
        for q in quotes:
            fh.write(f"{fmt(q.maturity)} {fmt(q.zero_yield)}\n")


def write_curve_params(path, params: LgpParams, x):
    lines = [f"n_factors {params.n_factors}", f"a {fmt(params.a)}", f"c {fmt(params.c)}"]
    lines.append("mu " + " ".join(fmt(m) for m in params.mu))
    for name in ("mu_bar", "y0", "eta0", "xi0"):
        val = getattr(params, name)
        if val is not None:
            lines.append(f"{name} {fmt(val)}")
    lines.append("x " + " ".join(fmt(v) for v in np.atleast_1d(x)))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_curve_params(path):
    vals = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, *rest = line.split()
            vals[key] = rest
    try:
        kwargs = dict(
            a=float(vals["a"][0]),
            c=float(vals["c"][0]),
            mu=tuple(float(v) for v in vals["mu"]),
        )
    except KeyError as exc:
        raise ConfigError(f"curve parameter file {path} is missing {exc}") from exc
    for name in ("mu_bar", "y0", "eta0", "xi0"):
        if name in vals:
            kwargs[name] = float(vals[name][0])
    params = LgpParams(**kwargs)
    x = np.array([float(v) for v in vals.get("x", ["0"] * params.n_factors)])
    return params, x


def write_speed_factors(path, sf: SpeedFactorTermStructure):
    lines = []
    if sf.weights is not None:
        lines.append("weights " + " ".join(fmt(w) for w in sf.weights))
    for m, sl in zip(sf.maturities, sf.slices):
        lines.append(f"maturity {fmt(m)}")
        lines.append("anchors_z " + " ".join(fmt(z) for z in sl.anchor_z))
        lines.append("anchors_s " + " ".join(fmt(s) for s in sl.anchor_s))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_speed_factors(path) -> SpeedFactorTermStructure:
    weights = None
    maturities = []
    slices = []
    pending = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, *rest = line.split()
            if key == "weights":
                weights = tuple(float(v) for v in rest)
            elif key == "maturity":
                pending = {"m": float(rest[0])}
                maturities.append(pending["m"])
            elif key == "anchors_z":
                pending["z"] = np.array([float(v) for v in rest])
            elif key == "anchors_s":
                pending["s"] = np.array([float(v) for v in rest])
                slices.append(SpeedFactorSlice(pending["z"], pending["s"]))
            else:
                raise ConfigError(f"unknown speed-factor line {key!r} in {path}")
    if len(slices) != len(maturities):
        raise ConfigError(f"truncated speed-factor file {path}")
    return SpeedFactorTermStructure(
        maturities=tuple(maturities), slices=tuple(slices), weights=weights
    )

"""Flat key=value run configuration (INI sections, fail-fast validation).

Every value is validated against the downstream preconditions before any
solve starts; errors name the offending section/key.  See the README for a
fully annotated example.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass

import numpy as np

from .grids import Field, Grid
from .diagnostics import IdsManifold, PesManifold, initial_layer
from .dynamics import Full, IdsLimit, ModelParams, PesLimit
from .experiments import (
    EpsPrepared,
    IdsSweep,
    IllPrepared,
    PesSweep,
    SweepConfig,
    WellPrepared,
)
from .initial_data import constant_density, cosine_mode, gaussian_bump, two_bump

__all__ = ["ConfigError", "RunConfig", "load_config"]


class ConfigError(ValueError):
    """Malformed or inconsistent configuration; message names the key."""


@dataclass
class RunConfig:
    """Parsed configuration for one CLI invocation."""

    grid: Grid
    dt: float
    t_end: float
    params: ModelParams | None  # single-trajectory regimes only
    n0: Field
    c0: Field
    w0: Field
    sweep: SweepConfig | None
    stride: int
    snapshots: int
    prefix: str


def _get(cp, section, key, cast, default=None, required=False):
    if not cp.has_option(section, key):
        if required:
            raise ConfigError(f"missing required key [{section}] {key}")
        return default
    raw = cp.get(section, key)
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for [{section}] {key} = {raw!r}: {exc}") from exc


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_floats(raw: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in raw.replace(";", ",").split(",") if tok.strip())


def _build_grid(cp) -> Grid:
    kind = _get(cp, "grid", "kind", str, default="interval").strip().lower()
    if kind == "interval":
        return Grid.interval(
            _get(cp, "grid", "length", float, default=1.0),
            _get(cp, "grid", "nodes", int, default=256),
        )
    if kind == "rectangle":
        return Grid.rectangle(
            _get(cp, "grid", "lx", float, default=1.0),
            _get(cp, "grid", "ly", float, default=1.0),
            _get(cp, "grid", "nx", int, default=64),
            _get(cp, "grid", "ny", int, default=64),
        )
    if kind in ("radial_ball", "ball", "radial"):
        return Grid.radial_ball(
            _get(cp, "grid", "dim", int, required=True),
            _get(cp, "grid", "radius", float, default=1.0),
            _get(cp, "grid", "nodes", int, default=128),
        )
    raise ConfigError(f"unknown [grid] kind = {kind!r}")


def _build_density(cp, grid: Grid) -> Field:
    preset = _get(cp, "initial", "density", str, default="gaussian").strip().lower()
    mass = _get(cp, "initial", "mass", float, default=0.5)
    if mass <= 0:
        raise ConfigError(f"[initial] mass must be positive, got {mass}")
    width = _get(cp, "initial", "width", float)
    if preset == "gaussian":
        center = _get(cp, "initial", "center", float)
        return gaussian_bump(grid, mass, center=center, width=width)
    if preset == "two_bump":
        return two_bump(grid, mass, width=width)
    if preset == "constant":
        return constant_density(grid, mass)
    raise ConfigError(f"unknown [initial] density = {preset!r}")


def _build_signals(cp, grid: Grid, n0: Field, manifold, seed: int) -> tuple[Field, Field]:
    mode = _get(cp, "initial", "signals", str, default="manifold").strip().lower()
    proj = initial_layer(n0, n0, n0, manifold)
    if mode == "manifold":
        return proj.c_limit0, proj.w_limit0
    if mode == "zero":
        zero = Field.constant(grid, 0.0)
        return zero, zero
    if mode == "constant":
        value = _get(cp, "initial", "signal_value", float, default=0.0)
        if value < 0:
            raise ConfigError("[initial] signal_value must be >= 0")
        const = Field.constant(grid, value)
        return const, const
    if mode == "perturbed":
        amp = _get(cp, "initial", "perturb_amplitude", float, default=0.25)
        mnum = _get(cp, "initial", "perturb_mode", int, default=1)
        bump = cosine_mode(grid, amp, mnum)
        c0 = Field(grid, np.maximum(proj.c_limit0.values + bump.values, 0.0))
        w0 = Field(grid, np.maximum(proj.w_limit0.values + bump.values, 0.0))
        return c0, w0
    if mode == "random":
        rng = np.random.default_rng(seed)
        vals = np.zeros(grid.shape)
        for k in range(1, 5):
            vals += rng.normal(0, 0.1) * cosine_mode(grid, 1.0, k).values
        c0 = Field(grid, np.maximum(proj.c_limit0.values + vals, 0.0))
        w0 = Field(grid, np.maximum(proj.w_limit0.values + vals, 0.0))
        return c0, w0
    raise ConfigError(f"unknown [initial] signals = {mode!r}")


def _build_regime(cp):
    name = _get(cp, "model", "regime", str, default="full").strip().lower()
    tau = _get(cp, "model", "tau", float, default=1.0)
    if name == "full":
        eps = _get(cp, "model", "epsilon", float, default=1.0)
        return Full(eps, tau)
    if name == "pes":
        return PesLimit(tau)
    if name == "ids":
        return IdsLimit()
    raise ConfigError(f"unknown [model] regime = {name!r}")


def _build_sweep(cp, grid: Grid, n0: Field, dt: float, t_end: float,
                 c0: Field, w0: Field) -> SweepConfig | None:
    if not cp.has_section("sweep"):
        return None
    kind = _get(cp, "sweep", "kind", str, required=True).strip().lower()
    family_name = _get(cp, "sweep", "family", str, default="well").strip().lower()
    if family_name == "well":
        family = WellPrepared()
    elif family_name == "ill":
        family = IllPrepared(c0, w0)
    elif family_name == "eps":
        family = EpsPrepared(
            _get(cp, "sweep", "eps_amplitude", float, default=1.0),
            _get(cp, "sweep", "eps_mode", int, default=2),
        )
    else:
        raise ConfigError(f"unknown [sweep] family = {family_name!r}")
    epsilons = _get(cp, "sweep", "epsilons", _parse_floats, required=True)
    if kind == "pes":
        sweep = PesSweep(_get(cp, "sweep", "tau", float, default=1.0), epsilons)
    elif kind == "ids":
        ratio = _get(cp, "sweep", "tau_ratio", float, default=1.0)
        if ratio <= 0:
            raise ConfigError("[sweep] tau_ratio must be positive")
        sweep = IdsSweep(tuple((e, ratio * e) for e in epsilons))
    else:
        raise ConfigError(f"unknown [sweep] kind = {kind!r}")
    return SweepConfig(sweep, grid, n0, t_end, dt, family)


def load_config(path: str, seed: int = 0) -> RunConfig:
    """Parse and validate a config file; raises ConfigError on any problem."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as fh:
            cp.read_file(fh, source=path)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc

    from .grids import GridError

    try:
        grid = _build_grid(cp)
        dt = _get(cp, "time", "dt", float, default=1e-3)
        t_end = _get(cp, "time", "t_end", float, default=0.5)
        if dt <= 0 or t_end <= 0:
            raise ConfigError("[time] dt and t_end must be positive")
        n0 = _build_density(cp, grid)

        regime = _build_regime(cp) if cp.has_section("model") else None
        zero_chemo = _get(cp, "model", "zero_chemotaxis", _parse_bool, default=False) \
            if cp.has_section("model") else False
        params = (
            ModelParams(regime, dt, t_end, zero_chemotaxis=zero_chemo)
            if regime is not None
            else None
        )

        # the manifold used for signal presets follows the sweep/model tau
        sweep_kind = (
            _get(cp, "sweep", "kind", str, default="pes").strip().lower()
            if cp.has_section("sweep")
            else None
        )
        if sweep_kind == "ids" or isinstance(regime, IdsLimit):
            manifold = IdsManifold()
        else:
            tau = (
                _get(cp, "sweep", "tau", float, default=1.0)
                if cp.has_section("sweep")
                else _get(cp, "model", "tau", float, default=1.0)
            )
            manifold = PesManifold(tau)
        c0, w0 = _build_signals(cp, grid, n0, manifold, seed)

        sweep = _build_sweep(cp, grid, n0, dt, t_end, c0, w0)
        stride = _get(cp, "output", "stride", int, default=1)
        snapshots = _get(cp, "output", "snapshots", int, default=2)
        prefix = _get(cp, "output", "prefix", str, default="run").strip()
        if stride < 1 or snapshots < 0:
            raise ConfigError("[output] stride must be >= 1 and snapshots >= 0")
    except GridError as exc:
        # geometry/value problems are configuration mistakes (exit 2);
        # sweep-viability errors stay SweepError so the CLI can exit 3
        raise ConfigError(str(exc)) from exc

    return RunConfig(
        grid=grid,
        dt=dt,
        t_end=t_end,
        params=params,
        n0=n0,
        c0=c0,
        w0=w0,
        sweep=sweep,
        stride=stride,
        snapshots=snapshots,
        prefix=prefix,
    )

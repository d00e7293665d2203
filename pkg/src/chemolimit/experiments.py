"""Singular-limit sweeps, error accumulation, rate fitting, CSV reports.

A sweep solves the relevant limit system once as the reference, then the
full system for every relaxation value in the list, always from the same
density.  Differences of the two discrete solutions define the error
fields; no separate error system is discretized.  Per-value error norms
are accumulated in L^inf(0,T;X) (max over recorded steps) and L^2(0,T;X)
(left-endpoint Riemann sum), then log-log slopes are fitted against the
relaxation scale.

Fits refuse points sitting below three times the discretization floor,
the reference's own mesh/step error estimated by a refinement run: such
points measure the mesh, not the limit.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from .grids import Field, Grid, integrate, norm_lp, norm_sobolev
from .initial_data import cosine_mode
from .diagnostics import (
    IdsManifold,
    PesManifold,
    initial_layer,
    manifold_distance,
    manifold_residuals,
)
from .dynamics import (
    Full,
    IdsLimit,
    ModelParams,
    PesLimit,
    SimulationError,
    Trajectory,
    simulate,
)

__all__ = [
    "PesSweep",
    "IdsSweep",
    "WellPrepared",
    "IllPrepared",
    "EpsPrepared",
    "SweepConfig",
    "SweepError",
    "RateFit",
    "RateReport",
    "fit_rate",
    "discretization_floor",
    "run_pes_sweep",
    "run_ids_sweep",
    "emit_csv",
    "parse_report_csv",
]

ERROR_METRICS = (
    "err_n_LinfL2",
    "err_n_L2H1",
    "err_c_LinfH1",
    "err_c_L2H1",
    "err_w_LinfL2",
    "err_w_L2H1",
    "res_manifold_L2H1",
    "res_second_L2",
)
AUX_METRICS = ("dist", "dist_01", "layer_c", "layer_w")

# Not every recorded series carries a fittable rate at desk scale: on PES
# sweeps the second residual, and on IDS sweeps the w-errors against the
# collapsed limit (w = n), are dominated by the first-order step error of
# the measurement itself (they shrink when dt does, not when the relaxation
# does).  Those series are recorded in the report but excluded from slope
# fitting; the refinement guard would reject them anyway.
FITTED_METRICS = {
    "pes": tuple(m for m in ERROR_METRICS if m != "res_second_L2"),
    "ids": tuple(
        m for m in ERROR_METRICS if m not in ("err_w_LinfL2", "err_w_L2H1")
    ),
}

FLOOR_FACTOR = 3.0
MIN_FIT_POINTS = 4


class SweepError(RuntimeError):
    """Sweep configuration or fit viability failure."""


@dataclass(frozen=True)
class PesSweep:
    tau: float
    epsilons: tuple[float, ...]

    def __post_init__(self):
        _check_decreasing(self.epsilons)
        if self.tau <= 0:
            raise SweepError("PES sweep needs tau > 0")


@dataclass(frozen=True)
class IdsSweep:
    kappas: tuple[tuple[float, float], ...]  # (epsilon, tau) pairs

    def __post_init__(self):
        scales = tuple(e + t for e, t in self.kappas)
        _check_decreasing(scales)
        if any(e <= 0 or t <= 0 for e, t in self.kappas):
            raise SweepError("IDS sweep needs positive epsilon and tau")


def _check_decreasing(xs):
    if len(xs) < MIN_FIT_POINTS:
        raise SweepError(
            f"rate fits need >= {MIN_FIT_POINTS} relaxation values, got {len(xs)}"
        )
    if any(b >= a for a, b in zip(xs, xs[1:])):
        raise SweepError("relaxation values must be strictly decreasing")


@dataclass(frozen=True)
class WellPrepared:
    """Project the signals onto the critical manifold (zero distance)."""


@dataclass(frozen=True)
class IllPrepared:
    """Explicit signal data, typically off the manifold (O(1) distance)."""

    c0: Field
    w0: Field


@dataclass(frozen=True)
class EpsPrepared:
    """Manifold data plus an eps-scaled perturbation (distance O(eps))."""

    amplitude: float = 1.0
    mode: int = 2


@dataclass(frozen=True)
class SweepConfig:
    sweep: PesSweep | IdsSweep
    grid: Grid
    n0: Field
    t_end: float
    dt: float
    family: WellPrepared | IllPrepared | EpsPrepared = WellPrepared()

    def __post_init__(self):
        if self.t_end <= 0 or self.dt <= 0:
            raise SweepError("T and dt must be positive")
        steps = self.t_end / self.dt
        if abs(steps - round(steps)) > 1e-9 * steps:
            raise SweepError(f"T/dt must be integral, got {steps}")
        if self.n0.grid != self.grid:
            raise SweepError("n0 must live on the sweep grid")


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    stderr: float
    npoints: int


@dataclass
class RateReport:
    """Sweep outcome: abscissae, per-metric series, fits and annotations."""

    kind: str  # "pes" or "ids"
    abscissae: list[float]
    metrics: dict[str, list[float]]
    slopes: dict[str, RateFit | None] = dc_field(default_factory=dict)
    floor: float = 0.0
    paired_floor: dict[str, float] = dc_field(default_factory=dict)
    flags: list[str] = dc_field(default_factory=list)
    failures: dict[float, str] = dc_field(default_factory=dict)
    runtimes: list[float] = dc_field(default_factory=list)

    def rejected_fits(self) -> list[str]:
        return [m for m, f in self.slopes.items() if f is None]


def fit_rate(xs, es) -> RateFit:
    """Least-squares slope of log(error) against log(scale).

    Returns the slope, intercept and standard error of the slope; requires
    at least four strictly positive points.
    """
    xs = np.asarray(xs, dtype=float)
    es = np.asarray(es, dtype=float)
    if xs.size < MIN_FIT_POINTS:
        raise SweepError(f"need >= {MIN_FIT_POINTS} points, got {xs.size}")
    if np.any(xs <= 0) or np.any(es <= 0):
        raise SweepError("rate fits need positive scales and errors")
    lx, le = np.log(xs), np.log(es)
    if np.ptp(lx) == 0:
        raise SweepError("degenerate abscissae")
    sxx = np.sum((lx - lx.mean()) ** 2)
    slope = float(np.sum((lx - lx.mean()) * (le - le.mean())) / sxx)
    intercept = float(le.mean() - slope * lx.mean())
    resid = le - (intercept + slope * lx)
    dof = max(xs.size - 2, 1)
    stderr = float(np.sqrt(np.sum(resid**2) / dof / sxx))
    return RateFit(slope, intercept, stderr, int(xs.size))


# ---------------------------------------------------------------------------
# error accumulation between a full run and its limit reference
# ---------------------------------------------------------------------------


def _h1(f: Field) -> float:
    return norm_sobolev(f, 1, 2)


def _pair_metrics(full: Trajectory, ref: Trajectory, kind) -> dict[str, float]:
    if len(full.states) != len(ref.states):
        raise SweepError("trajectories are not sampled at the same times")
    dt = full.params.dt
    out = {m: 0.0 for m in ERROR_METRICS}
    sq = {m: 0.0 for m in ("err_n_L2H1", "err_c_L2H1", "err_w_L2H1",
                           "res_manifold_L2H1", "res_second_L2")}
    last = len(full.states) - 1
    for k, (sf, sr) in enumerate(zip(full.states, ref.states)):
        grid = sf.grid
        dn = Field(grid, sf.n.values - sr.n.values)
        dc = Field(grid, sf.c.values - sr.c.values)
        dw = Field(grid, sf.w.values - sr.w.values)
        out["err_n_LinfL2"] = max(out["err_n_LinfL2"], norm_lp(dn, 2))
        out["err_c_LinfH1"] = max(out["err_c_LinfH1"], _h1(dc))
        out["err_w_LinfL2"] = max(out["err_w_LinfL2"], norm_lp(dw, 2))
        if k < last:  # left-endpoint rule in time
            r1, r2 = manifold_residuals(sf, kind)
            sq["err_n_L2H1"] += dt * _h1(dn) ** 2
            sq["err_c_L2H1"] += dt * _h1(dc) ** 2
            sq["err_w_L2H1"] += dt * _h1(dw) ** 2
            sq["res_manifold_L2H1"] += dt * _h1(r1) ** 2
            sq["res_second_L2"] += dt * norm_lp(r2, 2) ** 2
    for m, v in sq.items():
        out[m] = math.sqrt(v)
    return out


def _limit_params(cfg: SweepConfig, sweep_kind, tau: float | None) -> ModelParams:
    if sweep_kind == "pes":
        return ModelParams(PesLimit(tau), cfg.dt, cfg.t_end)
    return ModelParams(IdsLimit(), cfg.dt, cfg.t_end)


def _family_signals(cfg: SweepConfig, manifold, epsilon: float) -> tuple[Field, Field]:
    """Initial (c0, w0) for the full solve under the configured family."""
    proj = initial_layer(cfg.n0, cfg.n0, cfg.n0, manifold)
    c_star, w_star = proj.c_limit0, proj.w_limit0
    fam = cfg.family
    if isinstance(fam, WellPrepared):
        return c_star, w_star
    if isinstance(fam, IllPrepared):
        return fam.c0, fam.w0
    bump = cosine_mode(cfg.grid, fam.amplitude * epsilon, fam.mode)
    c0 = Field(cfg.grid, c_star.values + bump.values)
    w0 = Field(cfg.grid, w_star.values + bump.values)
    return c0, w0


def _fine_config(cfg: SweepConfig) -> SweepConfig:
    fine_grid = _refine_grid(cfg.grid)
    fine_n0 = _refine_field(cfg.n0, fine_grid)
    family = cfg.family
    if isinstance(family, IllPrepared):
        family = IllPrepared(
            _refine_field(family.c0, fine_grid), _refine_field(family.w0, fine_grid)
        )
    return SweepConfig(cfg.sweep, fine_grid, fine_n0, cfg.t_end, cfg.dt / 2, family)


def discretization_floor(cfg: SweepConfig) -> float:
    """Reference-solution change under (h, dt) -> (h/2, dt/2) refinement.

    Measured in the same L^inf(0,T;L^2) norm as the density error series.
    This is the limit solver's own mesh/step error; note that the sweep's
    paired differences (full minus reference, same scheme, same mesh)
    cancel most of it, so fit exclusion uses the refinement sensitivity of
    the measured metrics themselves (see :func:`_run_sweep`).
    """
    manifold, tau = _manifold_of(cfg)
    coarse = _reference_trajectory(cfg, manifold, tau)
    fine = _reference_trajectory(_fine_config(cfg), manifold, tau)
    worst = 0.0
    for k, sc in enumerate(coarse.states):
        sf = fine.states[2 * k]
        restricted = _restrict_values(sf.n.values, cfg.grid)
        diff = Field(cfg.grid, sc.n.values - restricted)
        worst = max(worst, norm_lp(diff, 2))
    return worst


def _manifold_of(cfg: SweepConfig):
    if isinstance(cfg.sweep, PesSweep):
        return PesManifold(cfg.sweep.tau), cfg.sweep.tau
    return IdsManifold(), None


def _reference_trajectory(cfg: SweepConfig, manifold, tau) -> Trajectory:
    proj = initial_layer(cfg.n0, cfg.n0, cfg.n0, manifold)
    params = _limit_params(cfg, "pes" if tau is not None else "ids", tau)
    return simulate(params, (cfg.n0, proj.c_limit0, proj.w_limit0))


def _refine_grid(grid: Grid) -> Grid:
    nodes = tuple(2 * n - 1 for n in grid.nodes)
    if grid.kind == "interval":
        return Grid.interval(grid.lengths[0], nodes[0])
    if grid.kind == "rectangle":
        return Grid.rectangle(*grid.lengths, *nodes)
    return Grid.radial_ball(grid.dim, grid.lengths[0], nodes[0])


def _refine_field(f: Field, fine: Grid) -> Field:
    # linear interpolation; coarse nodes coincide with even fine nodes
    if f.values.ndim == 1:
        v = np.empty(fine.shape[0])
        v[0::2] = f.values
        v[1::2] = 0.5 * (f.values[:-1] + f.values[1:])
        return Field(fine, v)
    vx = np.empty((fine.shape[0], f.values.shape[1]))
    vx[0::2] = f.values
    vx[1::2] = 0.5 * (f.values[:-1] + f.values[1:])
    v = np.empty(fine.shape)
    v[:, 0::2] = vx
    v[:, 1::2] = 0.5 * (vx[:, :-1] + vx[:, 1:])
    return Field(fine, v)


def _restrict_values(fine_values: np.ndarray, coarse: Grid) -> np.ndarray:
    if fine_values.ndim == 1:
        return fine_values[0::2]
    return fine_values[0::2, 0::2]


def _solve_point(cfg, manifold, regime, epsilon, reference):
    c0, w0 = _family_signals(cfg, manifold, epsilon)
    layer = initial_layer(cfg.n0, c0, w0, manifold)
    dist = manifold_distance(cfg.n0, c0, w0, manifold, 0, 0, 2)
    dist01 = manifold_distance(cfg.n0, c0, w0, manifold, 0, 1, 2)
    traj = simulate(ModelParams(regime, cfg.dt, cfg.t_end), (cfg.n0, c0, w0))
    vals = _pair_metrics(traj, reference, manifold)
    vals["dist"] = dist
    vals["dist_01"] = dist01
    vals["layer_c"] = layer.layer_c
    vals["layer_w"] = layer.layer_w
    return vals


def _run_sweep(cfg: SweepConfig, kind: str, threads: int = 1) -> RateReport:
    manifold, tau = _manifold_of(cfg)
    if kind == "ids" and cfg.grid.dim > 2:
        raise SweepError("IDS sweeps are limited to dimensions N <= 2")

    reference = _reference_trajectory(cfg, manifold, tau)

    # the limit solver's own refinement error (reported; see exclusion below)
    fine_cfg = _fine_config(cfg)
    fine_manifold, fine_tau = _manifold_of(fine_cfg)
    fine_reference = _reference_trajectory(fine_cfg, fine_manifold, fine_tau)
    floor = 0.0
    for k, sc in enumerate(reference.states):
        sf = fine_reference.states[2 * k]
        diff = Field(cfg.grid, sc.n.values - _restrict_values(sf.n.values, cfg.grid))
        floor = max(floor, norm_lp(diff, 2))

    if kind == "pes":
        points = [(e, Full(e, cfg.sweep.tau), e) for e in cfg.sweep.epsilons]
    else:
        points = [(e + t, Full(e, t), e) for e, t in cfg.sweep.kappas]

    def run_one(item):
        abscissa, regime, epsilon = item
        started = time.perf_counter()
        try:
            vals = _solve_point(cfg, manifold, regime, epsilon, reference)
        except SimulationError as exc:
            return abscissa, None, str(exc), time.perf_counter() - started
        return abscissa, vals, None, time.perf_counter() - started

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_one, points))
    else:
        results = [run_one(p) for p in points]

    report = RateReport(
        kind=kind,
        abscissae=[],
        metrics={m: [] for m in ERROR_METRICS + AUX_METRICS},
        floor=floor,
    )
    survivors = []
    for (abscissa, vals, failure, elapsed), point in zip(results, points):
        report.runtimes.append(elapsed)
        if failure is not None:
            report.failures[abscissa] = failure
            continue
        survivors.append(point)
        report.abscissae.append(abscissa)
        for m in ERROR_METRICS + AUX_METRICS:
            report.metrics[m].append(vals[m])

    if len(report.abscissae) < MIN_FIT_POINTS:
        raise SweepError(
            f"only {len(report.abscissae)} sweep points survived; "
            f"rate fits need {MIN_FIT_POINTS}"
        )

    # Mesh-stability of the measurement itself: re-measure the smallest
    # surviving point on the refined mesh.  Points whose error is within
    # FLOOR_FACTOR times the coarse/fine measurement gap are mesh-dominated
    # and are excluded from fits.  The paired differences cancel the bulk
    # of the reference floor, so that floor itself is reported but not used
    # as the cutoff.
    _, probe_regime, probe_eps = survivors[-1]
    probe_idx = len(report.abscissae) - 1
    try:
        fine_vals = _solve_point(
            fine_cfg, fine_manifold, probe_regime, probe_eps, fine_reference
        )
        report.paired_floor = {
            m: abs(report.metrics[m][probe_idx] - fine_vals[m])
            for m in ERROR_METRICS
        }
    except SimulationError:
        report.paired_floor = {m: np.inf for m in ERROR_METRICS}

    for m in FITTED_METRICS[kind]:
        cutoff = FLOOR_FACTOR * report.paired_floor[m]
        xs = [x for x, e in zip(report.abscissae, report.metrics[m]) if e > cutoff]
        es = [e for e in report.metrics[m] if e > cutoff]
        if len(xs) >= MIN_FIT_POINTS:
            report.slopes[m] = fit_rate(xs, es)
        else:
            report.slopes[m] = None
            report.flags.append(f"fit_rejected {m} surviving={len(xs)}")

    _apply_mass_flags(cfg, report, kind)
    _apply_plateau_flag(report)
    return report


def _apply_mass_flags(cfg: SweepConfig, report: RateReport, kind: str):
    total = integrate(cfg.n0)
    if kind == "ids" and cfg.grid.dim == 2 and total >= 4.0 * np.pi:
        report.flags.append(
            f"mass_above_ids_threshold M={total:.6g} >= 4*pi"
        )
    if (
        kind == "pes"
        and cfg.grid.kind == "radial_ball"
        and cfg.grid.dim == 4
        and total >= 64.0 * cfg.sweep.tau * np.pi**2
    ):
        report.flags.append(
            f"mass_above_pes_threshold M={total:.6g} >= 64*tau*pi^2"
        )


def _apply_plateau_flag(report: RateReport):
    errs = report.metrics.get("err_w_LinfL2")
    if errs and len(errs) >= 2 and errs[-1] >= 0.5 * errs[0]:
        report.flags.append("w_plateau")


def run_pes_sweep(cfg: SweepConfig, threads: int = 1) -> RateReport:
    """Fixed-tau relaxation sweep against the parabolic-elliptic reference."""
    if not isinstance(cfg.sweep, PesSweep):
        raise SweepError("run_pes_sweep needs a PesSweep configuration")
    return _run_sweep(cfg, "pes", threads)


def run_ids_sweep(cfg: SweepConfig, threads: int = 1) -> RateReport:
    """Joint (epsilon, tau) sweep against the Keller-Segel reference."""
    if not isinstance(cfg.sweep, IdsSweep):
        raise SweepError("run_ids_sweep needs an IdsSweep configuration")
    return _run_sweep(cfg, "ids", threads)


# ---------------------------------------------------------------------------
# CSV report emission / parsing
# ---------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def emit_csv(report: RateReport, path):
    """Write the report in the stable interchange schema.

    Rows are (abscissa, metric, value, slope_group) sorted by abscissa
    descending; error metrics carry their own name as slope group, while
    auxiliary records (distances, layers) use group "aux".  A trailing
    comment block carries the fitted slopes, the discretization floor and
    any flags.  Runtimes are intentionally not emitted: output bytes must
    not depend on machine speed.
    """
    lines = ["abscissa,metric,value,slope_group"]
    order = list(ERROR_METRICS + AUX_METRICS)
    for i in range(len(report.abscissae)):
        for m in order:
            group = m if m in ERROR_METRICS else "aux"
            lines.append(
                f"{_fmt(report.abscissae[i])},{m},{_fmt(report.metrics[m][i])},{group}"
            )
    lines.append("# slopes:")
    for m, f in report.slopes.items():
        if f is None:
            lines.append(f"# {m},nan,nan,0")
        else:
            lines.append(f"# {m},{_fmt(f.slope)},{_fmt(f.stderr)},{f.npoints}")
    lines.append(f"# floor: {_fmt(report.floor)}")
    for m in ERROR_METRICS:
        if m in report.paired_floor and np.isfinite(report.paired_floor[m]):
            lines.append(f"# paired_floor: {m},{_fmt(report.paired_floor[m])}")
    for flag in report.flags:
        lines.append(f"# flag: {flag}")
    for abscissa, reason in sorted(report.failures.items(), reverse=True):
        lines.append(f"# failed: {_fmt(abscissa)} {reason}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_report_csv(path):
    """Parse an emitted report back into (rows, slopes, floor, flags)."""
    rows: list[tuple[float, str, float, str]] = []
    slopes: dict[str, tuple[float, float, int]] = {}
    flags: list[str] = []
    floor = None
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "abscissa,metric,value,slope_group":
            raise SweepError(f"unexpected report header: {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("# ").strip()
                if body == "slopes:":
                    continue
                if body.startswith("floor:"):
                    floor = float(body.split(":", 1)[1])
                elif body.startswith("paired_floor:"):
                    continue
                elif body.startswith("flag:"):
                    flags.append(body.split(":", 1)[1].strip())
                elif body.startswith("failed:"):
                    continue
                else:
                    name, slope, stderr, npts = body.split(",")
                    if slope != "nan":
                        slopes[name] = (float(slope), float(stderr), int(npts))
                continue
            a, m, v, _g = line.split(",")
            rows.append((float(a), m, float(v), _g))
    return rows, slopes, floor, flags

"""Command-line front end.

Subcommands: simulate, pes-rates, ids-rates, energy-check, semigroup-check.
Exit codes are stable API: 0 success, 2 configuration problem, 3 rate fit
rejected, 4 trajectory/check failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .diagnostics import (
    EnergyRecord,
    dissipation,
    energy_identity_residual,
    lyapunov,
    transport_dissipation,
)
from .dynamics import Full, ModelParams, SimulationError, State, simulate
from .experiments import (
    RateReport,
    SweepError,
    emit_csv,
    run_ids_sweep,
    run_pes_sweep,
)
from .grids import Field
from .initial_data import cosine_mode, gaussian_bump, two_bump
from .operators import elliptic_solve, resolvent_via_semigroup

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FIT_REJECTED = 3
EXIT_RUN_FAILED = 4

ENERGY_RATIO_WINDOW = (1.5, 3.0)
SEMIGROUP_TOL = 1e-4


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _thread_count(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("CHEMO_LIMIT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            print(f"warning: ignoring CHEMO_LIMIT_THREADS={env!r}", file=sys.stderr)
    return 1


def _load(args) -> RunConfig:
    return load_config(args.config, seed=args.seed)


def _energy_records(cfg: RunConfig, traj) -> list[EnergyRecord]:
    regime = cfg.params.regime
    tau = getattr(regime, "tau", 0.0)
    records = []
    for s in traj.states:
        if isinstance(regime, Full):
            diss = dissipation(s, regime.epsilon, regime.tau)
        else:
            # limit regimes sit on the manifold: only transport dissipates
            diss = transport_dissipation(s)
        records.append(EnergyRecord(s.t, lyapunov(s, tau), diss))
    return records


def _write_energy_csv(path: str, cfg: RunConfig, traj) -> None:
    lines = ["t,E,D"]
    for rec in _energy_records(cfg, traj):
        lines.append(f"{_fmt(rec.t)},{_fmt(rec.energy)},{_fmt(rec.dissipation)}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_state_csv(path: str, s: State) -> None:
    grid = s.grid
    coords = grid.coordinates()
    with open(path, "w", newline="\n") as fh:
        if grid.kind == "rectangle":
            fh.write("x,y,n,c,w\n")
            for i, x in enumerate(coords[0]):
                for j, y in enumerate(coords[1]):
                    fh.write(
                        f"{_fmt(x)},{_fmt(y)},{_fmt(s.n.values[i, j])},"
                        f"{_fmt(s.c.values[i, j])},{_fmt(s.w.values[i, j])}\n"
                    )
        else:
            label = "r" if grid.kind == "radial_ball" else "x"
            fh.write(f"{label},n,c,w\n")
            for i, x in enumerate(coords[0]):
                fh.write(
                    f"{_fmt(x)},{_fmt(s.n.values[i])},{_fmt(s.c.values[i])},"
                    f"{_fmt(s.w.values[i])}\n"
                )


def cmd_simulate(args) -> int:
    cfg = _load(args)
    if cfg.params is None:
        raise ConfigError("simulate needs a [model] section")
    os.makedirs(args.out, exist_ok=True)
    try:
        traj = simulate(
            cfg.params, (cfg.n0, cfg.c0, cfg.w0), stride=cfg.stride
        )
    except SimulationError as exc:
        print(f"error: trajectory failed: {exc}", file=sys.stderr)
        return EXIT_RUN_FAILED
    energy_path = os.path.join(args.out, f"{cfg.prefix}_energy.csv")
    _write_energy_csv(energy_path, cfg, traj)
    written = [energy_path]
    if cfg.snapshots > 0 and traj.states:
        count = min(cfg.snapshots, len(traj.states))
        picks = np.unique(
            np.linspace(0, len(traj.states) - 1, count).round().astype(int)
        )
        for idx in picks:
            p = os.path.join(args.out, f"{cfg.prefix}_state_{idx:05d}.csv")
            _write_state_csv(p, traj.states[idx])
            written.append(p)
    print(f"wrote {len(written)} files to {args.out}")
    return EXIT_OK


def _print_slope_table(report: RateReport) -> None:
    print(f"{'metric':24s} {'slope':>9s} {'stderr':>9s} {'n':>3s}")
    for metric, fit in report.slopes.items():
        if fit is None:
            print(f"{metric:24s} {'rejected':>9s} {'-':>9s} {'-':>3s}")
        else:
            print(f"{metric:24s} {fit.slope:9.4f} {fit.stderr:9.4f} {fit.npoints:3d}")
    print(f"floor: {report.floor:.6e}")
    for flag in report.flags:
        print(f"flag: {flag}")
    for abscissa, reason in report.failures.items():
        print(f"failed at {abscissa:.3e}: {reason}")


def _cmd_rates(args, runner, kind: str) -> int:
    cfg = _load(args)
    if cfg.sweep is None:
        raise ConfigError(f"{kind}-rates needs a [sweep] section")
    os.makedirs(args.out, exist_ok=True)
    try:
        report = runner(cfg.sweep, threads=_thread_count(args))
    except SimulationError as exc:
        print(f"error: sweep reference failed: {exc}", file=sys.stderr)
        return EXIT_RUN_FAILED
    out_path = os.path.join(args.out, f"{cfg.prefix}_rates.csv")
    emit_csv(report, out_path)
    _print_slope_table(report)
    print(f"report: {out_path}")
    if report.rejected_fits():
        return EXIT_FIT_REJECTED
    return EXIT_OK


def cmd_pes_rates(args) -> int:
    return _cmd_rates(args, run_pes_sweep, "pes")


def cmd_ids_rates(args) -> int:
    return _cmd_rates(args, run_ids_sweep, "ids")


def cmd_energy_check(args) -> int:
    cfg = _load(args)
    if cfg.params is None or not isinstance(cfg.params.regime, Full):
        raise ConfigError("energy-check needs [model] regime = full")
    regime = cfg.params.regime
    residuals = []
    for dt in (cfg.dt, cfg.dt / 2):
        params = ModelParams(regime, dt, cfg.t_end)
        try:
            traj = simulate(params, (cfg.n0, cfg.c0, cfg.w0))
        except SimulationError as exc:
            print(f"error: trajectory failed: {exc}", file=sys.stderr)
            return EXIT_RUN_FAILED
        residuals.append(
            energy_identity_residual(traj.states, dt, regime.epsilon, regime.tau)
        )
    coarse, fine = residuals
    scale = max(1.0, abs(lyapunov(State(0.0, cfg.n0, cfg.c0, cfg.w0),
                                  regime.tau)))
    print(f"identity residual at dt:   {coarse:.6e}")
    print(f"identity residual at dt/2: {fine:.6e}")
    if coarse < 1e-10 * scale and fine < 1e-10 * scale:
        print("residuals at round-off; identity holds exactly (pass)")
        return EXIT_OK
    ratio = coarse / fine
    lo, hi = ENERGY_RATIO_WINDOW
    print(f"ratio: {ratio:.3f} (pass window [{lo}, {hi}])")
    return EXIT_OK if lo <= ratio <= hi else EXIT_RUN_FAILED


def cmd_semigroup_check(args) -> int:
    cfg = _load(args)
    grid = cfg.grid
    fields = [
        gaussian_bump(grid, 0.5),
        two_bump(grid, 1.0),
        Field(grid, cosine_mode(grid, 0.4, 1).values + 1.0),
    ]
    worst = 0.0
    for a in (1.0, 0.1):
        for idx, g in enumerate(fields):
            direct = elliptic_solve(a, g)
            quad = resolvent_via_semigroup(a, g)
            defect = float(np.max(np.abs(direct.values - quad.values)))
            worst = max(worst, defect)
            print(f"a={a:<4g} field {idx}: defect {defect:.3e}")
    print(f"max defect: {worst:.3e} (tolerance {SEMIGROUP_TOL:g})")
    return EXIT_OK if worst < SEMIGROUP_TOL else EXIT_RUN_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chemo-limit",
        description="Simulate indirect-signalling chemotaxis and verify its "
        "fast-signal limit rates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("simulate", cmd_simulate),
        ("pes-rates", cmd_pes_rates),
        ("ids-rates", cmd_ids_rates),
        ("energy-check", cmd_energy_check),
        ("semigroup-check", cmd_semigroup_check),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the run config")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="sweep parallelism (default: CHEMO_LIMIT_THREADS or 1)")
        p.add_argument("--seed", type=int, default=0,
                       help="seed for randomized initial-data presets")
        p.set_defaults(handler=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SweepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FIT_REJECTED


if __name__ == "__main__":
    sys.exit(main())

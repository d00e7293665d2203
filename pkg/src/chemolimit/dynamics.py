"""Time integration of the three model regimes.

The full system evolves the density n together with two relaxing signals
c and w whose time derivatives carry a small factor eps; tau scales the
diffusion of w.  Two singular limits are integrated with the same density
update: the parabolic-elliptic regime (eps -> 0, signals solve shifted
elliptic equations each step) and the direct-signalling regime
(eps, tau -> 0, where w collapses onto n and the classical Keller-Segel
system remains).

One step is a sequential IMEX update in the order w, c, n.  The stiff
relaxation is implicit (so the step size never has to resolve eps), the
signal diffusion is implicit, and the chemotactic flux is explicit and
upwinded using the freshest signal.  With this ordering the eps -> 0
degeneration of a full step is exactly the parabolic-elliptic step, which
the rate experiments rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .grids import Field, Grid, GridError
from .operators import EllipticOperator, chemotaxis_divergence, gradient_magnitude

__all__ = [
    "Full",
    "PesLimit",
    "IdsLimit",
    "ModelParams",
    "State",
    "Stepper",
    "SimulationError",
    "Trajectory",
    "step_full",
    "step_pes",
    "step_ids",
    "simulate",
    "cfl_limit",
]

_POSITIVITY_TOL = -1e-12
_MAX_STEPS = 10**7


class SimulationError(RuntimeError):
    """A trajectory aborted; ``time`` carries the failure instant."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t={time:.6g})")
        self.time = time


@dataclass(frozen=True)
class Full:
    epsilon: float
    tau: float

    def __post_init__(self):
        if self.epsilon <= 0 or self.tau <= 0:
            raise GridError("full regime needs epsilon > 0 and tau > 0")


@dataclass(frozen=True)
class PesLimit:
    tau: float

    def __post_init__(self):
        if self.tau <= 0:
            raise GridError("parabolic-elliptic regime needs tau > 0")


@dataclass(frozen=True)
class IdsLimit:
    pass


@dataclass(frozen=True)
class ModelParams:
    regime: Full | PesLimit | IdsLimit
    dt: float
    t_end: float
    zero_chemotaxis: bool = False  # diagnostic: force c' = 0, n obeys pure heat

    def __post_init__(self):
        if self.dt <= 0 or self.t_end <= 0:
            raise GridError("dt and t_end must be positive")


@dataclass(frozen=True)
class State:
    """Phase point (n, c, w) at time t; all fields share one grid."""

    t: float
    n: Field
    c: Field
    w: Field

    def __post_init__(self):
        if not (self.n.grid == self.c.grid == self.w.grid):
            raise GridError("state fields must share a grid")
        low = float(np.min(self.n.values))
        if low < _POSITIVITY_TOL:
            raise SimulationError(
                f"density positivity violated, min n = {low:.3e}", self.t
            )

    @property
    def grid(self) -> Grid:
        return self.n.grid


class Stepper:
    """One-step integrator for a fixed (grid, regime, dt).

    The elliptic operators are assembled once and reused; a Stepper is
    immutable after construction and safe to share between trajectories on
    the same parameters.
    """

    def __init__(self, grid: Grid, regime, dt: float, zero_chemotaxis: bool = False):
        self.grid = grid
        self.regime = regime
        self.dt = float(dt)
        self.zero_chemotaxis = zero_chemotaxis
        self._op_n = EllipticOperator(grid, self.dt)
        if isinstance(regime, Full):
            blend = self.dt / (regime.epsilon + self.dt)
            self._op_w = EllipticOperator(grid, regime.tau * blend)
            self._op_c = EllipticOperator(grid, blend)
        elif isinstance(regime, PesLimit):
            self._op_w = EllipticOperator(grid, regime.tau)
            self._op_c = EllipticOperator(grid, 1.0)
        else:
            self._op_c = EllipticOperator(grid, 1.0)

    def _signals(self, s: State) -> tuple[Field, Field]:
        r, dt = self.regime, self.dt
        if isinstance(r, Full):
            eps = r.epsilon
            w2 = self._op_w.solve_field(
                Field(self.grid, (eps * s.w.values + dt * s.n.values) / (eps + dt))
            )
            c2 = self._op_c.solve_field(
                Field(self.grid, (eps * s.c.values + dt * w2.values) / (eps + dt))
            )
        elif isinstance(r, PesLimit):
            w2 = self._op_w.solve_field(s.n)
            c2 = self._op_c.solve_field(w2)
        else:
            w2 = s.n
            c2 = self._op_c.solve_field(s.n)
        return w2, c2

    def step(self, s: State) -> State:
        w2, c2 = self._signals(s)
        if self.zero_chemotaxis:
            c2 = Field.constant(self.grid, 0.0)
            rhs = s.n.values
        else:
            rhs = s.n.values - self.dt * chemotaxis_divergence(s.n, c2).values
        n2 = self._op_n.solve_field(Field(self.grid, rhs))
        return State(s.t + self.dt, n2, c2, w2)


def step_full(s: State, epsilon: float, tau: float, dt: float) -> State:
    return Stepper(s.grid, Full(epsilon, tau), dt).step(s)


def step_pes(s: State, tau: float, dt: float) -> State:
    return Stepper(s.grid, PesLimit(tau), dt).step(s)


def step_ids(s: State, dt: float) -> State:
    return Stepper(s.grid, IdsLimit(), dt).step(s)


@dataclass
class Trajectory:
    """Recorded run: sampled states, probe series, and the final state."""

    params: ModelParams
    times: list[float] = field(default_factory=list)
    states: list[State] = field(default_factory=list)
    probes: list[list[float]] = field(default_factory=list)
    final_state: State | None = None


def simulate(
    params: ModelParams,
    init: tuple[Field, Field, Field],
    observers: Sequence[Callable[[State], float]] = (),
    stride: int = 1,
    record_states: bool = True,
) -> Trajectory:
    """Integrate the configured regime from ``init`` up to ``t_end``.

    Observers are probe callbacks evaluated on the initial state, on every
    ``stride``-th step, and on the final state.  Any stepper failure aborts
    the run with the failing time attached.
    """
    n0, c0, w0 = init
    for name, f in (("n0", n0), ("c0", c0), ("w0", w0)):
        if float(np.min(f.values)) < _POSITIVITY_TOL:
            raise GridError(f"initial data {name} must be nonnegative")
    n_steps = math.ceil(params.t_end / params.dt - 1e-9)
    if n_steps > _MAX_STEPS:
        raise GridError(f"t_end/dt = {n_steps} exceeds the runaway guard")
    if stride < 1:
        raise GridError("stride must be >= 1")

    stepper = Stepper(n0.grid, params.regime, params.dt, params.zero_chemotaxis)
    state = State(0.0, n0, c0, w0)
    traj = Trajectory(params=params, probes=[[] for _ in observers])

    def record(s: State):
        traj.times.append(s.t)
        if record_states:
            traj.states.append(s)
        for slot, obs in zip(traj.probes, observers):
            slot.append(float(obs(s)))

    record(state)
    for k in range(1, n_steps + 1):
        try:
            state = stepper.step(state)
        except SimulationError:
            raise
        except Exception as exc:  # solver or finiteness failure mid-run
            raise SimulationError(str(exc), state.t + params.dt) from exc
        if k % stride == 0 or k == n_steps:
            record(state)
    traj.final_state = state
    return traj


def cfl_limit(s: State) -> float:
    """Documented step-size guard dt <= h^2 / (2 max|grad c| + 4).

    Conservative bound under which the explicit upwind flux keeps the
    density nonnegative; production runs merely monitor positivity.
    """
    h = min(s.grid.spacing)
    gmax = float(np.max(gradient_magnitude(s.c).values))
    return h**2 / (2.0 * gmax + 4.0)

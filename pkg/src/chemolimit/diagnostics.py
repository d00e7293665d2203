"""Structure-aware measurements on simulation states.

Covers the conserved mass, the multiple-time-scale energy functional and
its dissipation, residuals and distances relative to the two critical
manifolds (the sets where the fast equations are in equilibrium), and the
initial-layer fields induced by the limit systems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import Field, GridError, integrate, norm_lp, norm_sobolev
from .dynamics import State
from .operators import elliptic_solve, gradient_magnitude, laplacian

__all__ = [
    "PesManifold",
    "IdsManifold",
    "EnergyRecord",
    "InitialLayer",
    "mass",
    "lyapunov",
    "dissipation",
    "transport_dissipation",
    "manifold_residuals",
    "manifold_distance",
    "initial_layer",
    "energy_identity_residual",
]


@dataclass(frozen=True)
class PesManifold:
    """Equilibria of both signal equations at fixed tau > 0."""

    tau: float

    def __post_init__(self):
        if self.tau <= 0:
            raise GridError("PES manifold needs tau > 0")


@dataclass(frozen=True)
class IdsManifold:
    """Equilibria with the secondary signal collapsed onto the density."""


ManifoldKind = PesManifold | IdsManifold


@dataclass(frozen=True)
class EnergyRecord:
    t: float
    energy: float
    dissipation: float


@dataclass(frozen=True)
class InitialLayer:
    """Limit-induced initial signals and the L2 layer magnitudes."""

    c_limit0: Field
    w_limit0: Field
    layer_c: float
    layer_w: float


def mass(s: State) -> float:
    return integrate(s.n)


def _xlogx(n: np.ndarray) -> np.ndarray:
    # n log n with the usual continuous extension 0 at n = 0
    out = np.zeros_like(n)
    pos = n > 0.0
    out[pos] = n[pos] * np.log(n[pos])
    return out


def lyapunov(s: State, tau: float) -> float:
    """Energy E = int n(log n - c) + (1/2)|Lc - c + w|^2 + (tau/2)|Lc|^2
    + ((1+tau)/2)|grad c|^2 + (1/2)c^2, assembled from the operator
    stencils (L is the Neumann Laplacian)."""
    if float(np.min(s.n.values)) < -1e-12:
        raise GridError("energy needs nonnegative density")
    n, c, w = s.n.values, s.c.values, s.w.values
    lap_c = laplacian(s.c).values
    grad_c = gradient_magnitude(s.c).values
    resid = lap_c - c + w
    density = (
        _xlogx(np.maximum(n, 0.0))
        - n * c
        + 0.5 * resid**2
        + 0.5 * tau * lap_c**2
        + 0.5 * (1.0 + tau) * grad_c**2
        + 0.5 * c**2
    )
    return integrate(Field(s.grid, density))


def _face_h1_seminorm_sq(f: Field) -> float:
    """Sum over faces of w_face * (jump/h)^2, the mesh H1 seminorm."""
    grid = f.grid
    total = 0.0
    for axis, h in enumerate(grid.spacing):
        jumps = np.diff(f.values, axis=axis) / h
        total += float(np.sum(grid.face_volumes(axis) * jumps**2))
    return total


def transport_dissipation(s: State) -> float:
    """The density transport part int n |grad(log n - c)|^2.

    Evaluated per face as |dn/sqrt(n) - sqrt(n) dc|^2 with sqrt(n) averaged
    onto the face; algebraically identical for n > 0 but avoids logarithms
    of small densities.  This is the whole dissipation of the limit
    regimes, where the relaxation residuals vanish.
    """
    grid = s.grid
    n = np.maximum(s.n.values, 0.0)
    sqrt_n = np.sqrt(n)
    total = 0.0
    for axis, h in enumerate(grid.spacing):
        dn = np.diff(n, axis=axis) / h
        dc = np.diff(s.c.values, axis=axis) / h
        sq = 0.5 * (
            np.take(sqrt_n, range(0, n.shape[axis] - 1), axis=axis)
            + np.take(sqrt_n, range(1, n.shape[axis]), axis=axis)
        )
        q = np.zeros_like(sq)
        m = sq > 0.0
        q[m] = (dn[m] / sq[m] - sq[m] * dc[m]) ** 2
        total += float(np.sum(grid.face_volumes(axis) * q))
    return total


def dissipation(s: State, epsilon: float, tau: float) -> float:
    """Dissipation D = int n|grad(log n - c)|^2
    + ((1+tau)/eps)|grad(Lc - c + w)|^2 + (2/eps)|Lc - c + w|^2."""
    if epsilon <= 0:
        raise GridError(f"dissipation needs epsilon > 0, got {epsilon}")
    resid = Field(
        s.grid, laplacian(s.c).values - s.c.values + s.w.values
    )
    return (
        transport_dissipation(s)
        + (1.0 + tau) / epsilon * _face_h1_seminorm_sq(resid)
        + 2.0 / epsilon * norm_lp(resid, 2) ** 2
    )


def manifold_residuals(s: State, kind: ManifoldKind) -> tuple[Field, Field]:
    """Fast-equation right-hand sides at the state.

    PES: (Lc - c + w, tau Lw - w + n); IDS: (Lc - c + w, -w + n).
    """
    first = Field(s.grid, laplacian(s.c).values - s.c.values + s.w.values)
    if isinstance(kind, PesManifold):
        second = Field(
            s.grid,
            kind.tau * laplacian(s.w).values - s.w.values + s.n.values,
        )
    else:
        second = Field(s.grid, s.n.values - s.w.values)
    return first, second


def manifold_distance(
    n0: Field,
    c0: Field,
    w0: Field,
    kind: ManifoldKind,
    k: int = 0,
    l: int = 0,
    p: float = 2,
) -> float:
    """Distance of initial data to the critical manifold in
    W^{k,p} x W^{l,p}: the root of the summed squared residual norms."""
    rc = Field(n0.grid, -laplacian(c0).values + c0.values - w0.values)
    if isinstance(kind, PesManifold):
        rw = Field(
            n0.grid,
            -kind.tau * laplacian(w0).values + w0.values - n0.values,
        )
    else:
        rw = Field(n0.grid, w0.values - n0.values)
    return float(np.sqrt(norm_sobolev(rc, k, p) ** 2 + norm_sobolev(rw, l, p) ** 2))


def initial_layer(
    n0: Field, c0: Field, w0: Field, kind: ManifoldKind
) -> InitialLayer:
    """Signals the limit system forces at t = 0 and the layer magnitudes.

    PES recovers w(0) = (-tau L + I)^{-1} n0 and c(0) = (-L + I)^{-1} w(0);
    IDS takes w(0) = n0.  The layers are the L2 gaps between the given
    signals and the recovered ones; data on the manifold has zero layer.
    """
    if isinstance(kind, PesManifold):
        w_lim = elliptic_solve(kind.tau, n0)
    else:
        w_lim = n0
    c_lim = elliptic_solve(1.0, w_lim)
    layer_c = norm_lp(Field(c0.grid, c0.values - c_lim.values), 2)
    layer_w = norm_lp(Field(w0.grid, w0.values - w_lim.values), 2)
    return InitialLayer(c_lim, w_lim, layer_c, layer_w)


def energy_identity_residual(
    states: list[State], dt: float, epsilon: float, tau: float
) -> float:
    """Time-averaged defect |(E^{k+1} - E^k)/dt + D^{k+1/2}|.

    The dissipation is sampled at the midpoint state (arithmetic average of
    consecutive states), matching the first-order stepping; the defect
    should shrink roughly linearly in dt on smooth trajectories.
    """
    if len(states) < 2:
        raise GridError("need at least two states")
    defects = []
    for a, b in zip(states[:-1], states[1:]):
        e_a = lyapunov(a, tau)
        e_b = lyapunov(b, tau)
        mid = State(
            0.5 * (a.t + b.t),
            Field(a.grid, 0.5 * (a.n.values + b.n.values)),
            Field(a.grid, 0.5 * (a.c.values + b.c.values)),
            Field(a.grid, 0.5 * (a.w.values + b.w.values)),
        )
        defects.append(abs((e_b - e_a) / dt + dissipation(mid, epsilon, tau)))
    return float(np.mean(defects))

"""Discretized Neumann domains, nodal scalar fields, quadrature and norms.

Three domain kinds are supported: a 1D interval, a 2D rectangle, and a
radially symmetric N-ball (N in {2,3,4}) reduced to a weighted 1D problem
in the radius.  All grids use a cell-vertex layout (nodes on the boundary)
with uniform spacing per axis.

Quadrature assigns every node its control volume: trapezoid weights on the
interval/rectangle (half cells at the boundary) and exact spherical-shell
volumes on the radial ball.  The flux-form operators in ``operators`` use
the same control volumes, so discrete conservation identities hold to
round-off rather than to discretization order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

__all__ = [
    "Grid",
    "Field",
    "GridError",
    "integrate",
    "norm_lp",
    "norm_sobolev",
]

# surface measure |S^{N-1}| of the unit sphere for N = 2, 3, 4
_SPHERE_SURFACE = {2: 2.0 * np.pi, 3: 4.0 * np.pi, 4: 2.0 * np.pi**2}


class GridError(ValueError):
    """Invalid grid geometry or an operation applied to unsupported data."""


def _uniform_axis_volumes(length: float, nodes: int) -> np.ndarray:
    h = length / (nodes - 1)
    w = np.full(nodes, h)
    w[0] = w[-1] = 0.5 * h
    return w


@dataclass(frozen=True)
class Grid:
    """Immutable structured grid with Neumann (no-flux) boundary.

    Attributes:
        kind: "interval", "rectangle" or "radial_ball".
        lengths: extent per axis (radius for the radial ball).
        nodes: node count per axis, each >= 3.
        dim: embedding dimension N for the radial ball, else the axis count.
    """

    kind: str
    lengths: Tuple[float, ...]
    nodes: Tuple[int, ...]
    dim: int

    def __post_init__(self):
        if any(n < 3 for n in self.nodes):
            raise GridError(f"need >= 3 nodes per axis, got {self.nodes}")
        if any(L <= 0 for L in self.lengths):
            raise GridError(f"axis lengths must be positive, got {self.lengths}")
        if self.kind == "radial_ball" and self.dim not in _SPHERE_SURFACE:
            raise GridError(f"radial ball dimension must be 2, 3 or 4, got {self.dim}")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def interval(length: float, nodes: int) -> "Grid":
        return Grid("interval", (float(length),), (int(nodes),), 1)

    @staticmethod
    def rectangle(lx: float, ly: float, nx: int, ny: int) -> "Grid":
        return Grid("rectangle", (float(lx), float(ly)), (int(nx), int(ny)), 2)

    @staticmethod
    def radial_ball(dim: int, radius: float, nodes: int) -> "Grid":
        return Grid("radial_ball", (float(radius),), (int(nodes),), int(dim))

    # -- geometry ----------------------------------------------------------

    @property
    def spacing(self) -> Tuple[float, ...]:
        return tuple(L / (n - 1) for L, n in zip(self.lengths, self.nodes))

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.nodes

    @property
    def node_count(self) -> int:
        return int(np.prod(self.nodes))

    def coordinates(self) -> Tuple[np.ndarray, ...]:
        """Node coordinates per axis (radius samples for the radial ball)."""
        return tuple(
            np.linspace(0.0, L, n) for L, n in zip(self.lengths, self.nodes)
        )

    def volumes(self) -> np.ndarray:
        """Control volume of every node, shaped like a field on this grid.

        These are the quadrature weights of :func:`integrate`.  They sum to
        |Omega| exactly (interval length, rectangle area, N-ball volume).
        """
        if self.kind == "interval":
            return _uniform_axis_volumes(self.lengths[0], self.nodes[0])
        if self.kind == "rectangle":
            wx = _uniform_axis_volumes(self.lengths[0], self.nodes[0])
            wy = _uniform_axis_volumes(self.lengths[1], self.nodes[1])
            return np.outer(wx, wy)
        # radial ball: exact volume of the half-open shell around each node
        R, (m,) = self.lengths[0], self.nodes
        h = self.spacing[0]
        r = np.linspace(0.0, R, m)
        edges = np.concatenate(([0.0], r[:-1] + 0.5 * h, [R]))
        surf = _SPHERE_SURFACE[self.dim]
        return surf * np.diff(edges**self.dim) / self.dim

    def face_areas(self, axis: int = 0) -> np.ndarray:
        """Area factor of the faces between consecutive nodes along ``axis``.

        Unit faces on the interval/rectangle; |S^{N-1}| r^{N-1} at the face
        radius on the ball (zero area at the center face is never indexed:
        faces sit at r_{i+1/2} > 0).
        """
        if self.kind == "radial_ball":
            h = self.spacing[0]
            r_half = (np.arange(self.nodes[0] - 1) + 0.5) * h
            return _SPHERE_SURFACE[self.dim] * r_half ** (self.dim - 1)
        return np.ones(self.nodes[axis] - 1)

    def face_volumes(self, axis: int = 0) -> np.ndarray:
        """Quadrature weight of each inter-node face (for face-sampled sums).

        The weights of the faces along one axis add up to |Omega| exactly.
        """
        if self.kind == "radial_ball":
            R, (m,) = self.lengths[0], self.nodes
            r = np.linspace(0.0, R, m)
            surf = _SPHERE_SURFACE[self.dim]
            return surf * np.diff(r**self.dim) / self.dim
        if self.kind == "interval":
            return np.full(self.nodes[0] - 1, self.spacing[0])
        # rectangle: face strip along `axis` times trapezoid weight across it
        h = self.spacing[axis]
        other = 1 - axis
        w_other = _uniform_axis_volumes(self.lengths[other], self.nodes[other])
        faces = np.full(self.nodes[axis] - 1, h)
        if axis == 0:
            return np.outer(faces, w_other)
        return np.outer(w_other, faces)


@dataclass(frozen=True)
class Field:
    """Scalar function sampled on the nodes of a grid.

    Values must be finite; a NaN/inf is rejected at construction instead of
    being carried silently.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise GridError(
                f"field shape {vals.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise GridError("field contains non-finite values")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @staticmethod
    def from_function(grid: Grid, fn) -> "Field":
        coords = grid.coordinates()
        if len(coords) == 1:
            return Field(grid, fn(coords[0]))
        xx, yy = np.meshgrid(coords[0], coords[1], indexing="ij")
        return Field(grid, fn(xx, yy))

    @staticmethod
    def constant(grid: Grid, value: float) -> "Field":
        return Field(grid, np.full(grid.shape, float(value)))

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values)


def integrate(f: Field) -> float:
    """Quadrature of ``f`` over the domain (control-volume weighted sum)."""
    return float(np.sum(f.grid.volumes() * f.values))


def norm_lp(f: Field, p: float) -> float:
    """Discrete L^p norm, p in [1, inf]."""
    if p != np.inf and p < 1:
        raise GridError(f"L^p norm needs p >= 1 or p = inf, got {p}")
    if p == np.inf:
        return float(np.max(np.abs(f.values)))
    return float(np.sum(f.grid.volumes() * np.abs(f.values) ** p) ** (1.0 / p))


def norm_sobolev(f: Field, k: int, p: float) -> float:
    """Discrete W^{k,p} norm built from the stencils in ``operators``.

    Derivative orders: 0 the field itself, 1 the gradient magnitude, 2 the
    Laplacian.  For p = inf the max over the orders is returned.  Using the
    same stencils that drive the dynamics keeps manifold distances
    consistent with the simulated operators.
    """
    if k not in (0, 1, 2):
        raise GridError(f"Sobolev order must be 0, 1 or 2, got {k}")
    from . import operators  # local import; operators depends on grids

    parts = [f]
    if k >= 1:
        parts.append(operators.gradient_magnitude(f))
    if k >= 2:
        parts.append(operators.laplacian(f))
    if p == np.inf:
        return max(norm_lp(g, np.inf) for g in parts)
    return float(sum(norm_lp(g, p) ** p for g in parts) ** (1.0 / p))

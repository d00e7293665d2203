"""Named initial-data presets used by the CLI and the sweep harness."""

from __future__ import annotations

import numpy as np

from .grids import Field, Grid, GridError, integrate

__all__ = ["gaussian_bump", "two_bump", "constant_density", "cosine_mode"]


def _normalize(grid: Grid, raw: np.ndarray, mass: float) -> Field:
    f = Field(grid, raw)
    total = integrate(f)
    if total <= 0:
        raise GridError("preset has nonpositive raw mass")
    return Field(grid, raw * (mass / total))


def gaussian_bump(
    grid: Grid, mass: float, center=None, width: float | None = None
) -> Field:
    """Gaussian profile normalized to the requested discrete mass.

    Defaults: centered in the domain (at the origin on radial grids) with
    width 12% of the shortest extent.
    """
    width = width if width is not None else 0.12 * min(grid.lengths)
    coords = grid.coordinates()
    if grid.kind == "interval":
        c = grid.lengths[0] / 2 if center is None else float(center)
        raw = np.exp(-((coords[0] - c) ** 2) / (2 * width**2))
    elif grid.kind == "radial_ball":
        c = 0.0 if center is None else float(center)
        raw = np.exp(-((coords[0] - c) ** 2) / (2 * width**2))
    else:
        cx, cy = (
            (grid.lengths[0] / 2, grid.lengths[1] / 2) if center is None else center
        )
        xx, yy = np.meshgrid(coords[0], coords[1], indexing="ij")
        raw = np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * width**2))
    return _normalize(grid, raw, mass)


def two_bump(grid: Grid, mass: float, width: float | None = None) -> Field:
    """Two equal off-center bumps carrying the requested total mass."""
    width = width if width is not None else 0.06 * min(grid.lengths)
    coords = grid.coordinates()
    if grid.kind == "rectangle":
        xx, yy = np.meshgrid(coords[0], coords[1], indexing="ij")
        lx, ly = grid.lengths
        raw = np.exp(
            -((xx - 0.3 * lx) ** 2 + (yy - 0.5 * ly) ** 2) / (2 * width**2)
        ) + np.exp(-((xx - 0.7 * lx) ** 2 + (yy - 0.5 * ly) ** 2) / (2 * width**2))
    else:
        x = coords[0]
        L = grid.lengths[0]
        raw = np.exp(-((x - 0.3 * L) ** 2) / (2 * width**2)) + np.exp(
            -((x - 0.7 * L) ** 2) / (2 * width**2)
        )
    return _normalize(grid, raw, mass)


def constant_density(grid: Grid, mass: float) -> Field:
    volume = float(np.sum(grid.volumes()))
    return Field.constant(grid, mass / volume)


def cosine_mode(grid: Grid, amplitude: float, mode: int = 1) -> Field:
    """Neumann-compatible cosine perturbation (zero normal derivative)."""
    coords = grid.coordinates()
    if grid.kind == "rectangle":
        xx, _ = np.meshgrid(coords[0], coords[1], indexing="ij")
        return Field(grid, amplitude * np.cos(mode * np.pi * xx / grid.lengths[0]))
    return Field(
        grid, amplitude * np.cos(mode * np.pi * coords[0] / grid.lengths[0])
    )

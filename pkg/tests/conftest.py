import numpy as np
import pytest

from chemolimit import Grid
from chemolimit.diagnostics import PesManifold, initial_layer
from chemolimit.initial_data import gaussian_bump


@pytest.fixture(scope="session")
def desk_grid():
    return Grid.interval(1.0, 256)


@pytest.fixture(scope="session")
def desk_density(desk_grid):
    return gaussian_bump(desk_grid, 0.5)


@pytest.fixture(scope="session")
def desk_manifold_init(desk_grid, desk_density):
    """(n0, c0, w0) projected onto the tau=1 critical manifold."""
    proj = initial_layer(desk_density, desk_density, desk_density, PesManifold(1.0))
    return desk_density, proj.c_limit0, proj.w_limit0


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)

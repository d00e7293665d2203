import numpy as np
import pytest

from chemolimit import (
    Field,
    Full,
    Grid,
    GridError,
    IdsLimit,
    ModelParams,
    PesLimit,
    State,
    integrate,
    simulate,
    step_full,
    step_ids,
    step_pes,
)
from chemolimit.diagnostics import PesManifold, initial_layer
from chemolimit.dynamics import SimulationError, cfl_limit
from chemolimit.initial_data import gaussian_bump


def _constant_state(grid, value):
    f = Field.constant(grid, value)
    return State(0.0, f, f, f)


def _random_state(grid, rng):
    n = Field(grid, rng.random(grid.shape) + 0.3)
    c = Field(grid, rng.random(grid.shape))
    w = Field(grid, rng.random(grid.shape))
    return State(0.0, n, c, w)


def test_constant_state_is_fixed_point_all_regimes():
    g = Grid.interval(1.0, 64)
    s = _constant_state(g, 0.8)
    for stepped in (
        step_full(s, 0.5, 1.0, 1e-3),
        step_pes(s, 1.0, 1e-3),
        step_ids(s, 1e-3),
    ):
        for f in (stepped.n, stepped.c, stepped.w):
            assert np.max(np.abs(f.values - 0.8)) < 1e-12


def test_single_step_mass_conservation(rng):
    g = Grid.interval(1.0, 100)
    s = _random_state(g, rng)
    total = integrate(s.n)
    for stepped in (
        step_full(s, 0.3, 0.7, 1e-3),
        step_pes(s, 0.7, 1e-3),
        step_ids(s, 1e-3),
    ):
        assert abs(integrate(stepped.n) - total) < 1e-12 * total


def test_full_step_degenerates_to_pes(desk_manifold_init):
    n0, c0, w0 = desk_manifold_init
    s = State(0.0, n0, c0, w0)
    full = step_full(s, 1e-12, 1.0, 1e-3)
    pes = step_pes(s, 1.0, 1e-3)
    for a, b in ((full.n, pes.n), (full.c, pes.c), (full.w, pes.w)):
        assert np.max(np.abs(a.values - b.values)) < 1e-8


def test_pes_step_degenerates_to_ids(desk_manifold_init):
    n0, c0, w0 = desk_manifold_init
    s = State(0.0, n0, c0, w0)
    pes = step_pes(s, 1e-12, 1e-3)
    ids = step_ids(s, 1e-3)
    for a, b in ((pes.n, ids.n), (pes.c, ids.c), (pes.w, ids.w)):
        assert np.max(np.abs(a.values - b.values)) < 1e-8


def test_epsilon_continuity_toward_pes(desk_manifold_init):
    n0, c0, w0 = desk_manifold_init
    s = State(0.0, n0, c0, w0)
    pes = step_pes(s, 1.0, 1e-3)
    gaps = []
    for eps in (1e-4, 1e-8, 1e-12):
        full = step_full(s, eps, 1.0, 1e-3)
        gaps.append(np.max(np.abs(full.n.values - pes.n.values)))
    assert gaps[0] > gaps[1] > gaps[2]


def test_pes_three_node_hand_step():
    # every ingredient assembled densely by hand: two Helmholtz solves for
    # the signals, upwind face fluxes, implicit diffusion for the density
    g = Grid.interval(1.0, 3)
    h, dt, tau = 0.5, 0.1, 1.0
    n = np.array([1.0, 0.0, 0.0])

    def helmholtz(a):
        return np.array(
            [
                [1 + 8 * a, -8 * a, 0.0],
                [-4 * a, 1 + 8 * a, -4 * a],
                [0.0, -8 * a, 1 + 8 * a],
            ]
        )

    w_hand = np.linalg.solve(helmholtz(tau), n)
    c_hand = np.linalg.solve(helmholtz(1.0), w_hand)
    v = np.diff(c_hand) / h
    n_up = np.where(v > 0, n[:-1], n[1:])
    flux = n_up * v
    div = np.array(
        [flux[0] / (h / 2), (flux[1] - flux[0]) / h, -flux[1] / (h / 2)]
    )
    n_hand = np.linalg.solve(helmholtz(dt), n - dt * div)

    s = State(0.0, Field(g, n), Field.constant(g, 0.0), Field.constant(g, 0.0))
    stepped = step_pes(s, tau, dt)
    assert np.allclose(stepped.w.values, w_hand, atol=1e-12)
    assert np.allclose(stepped.c.values, c_hand, atol=1e-12)
    assert np.allclose(stepped.n.values, n_hand, atol=1e-12)


def test_simulate_zero_chemotaxis_heat_decay(desk_grid):
    n0 = gaussian_bump(desk_grid, 0.5)
    params = ModelParams(PesLimit(1.0), 1e-3, 0.2, zero_chemotaxis=True)
    zero = Field.constant(desk_grid, 0.0)
    traj = simulate(params, (n0, zero, zero))
    mean = integrate(n0)  # |Omega| = 1
    gaps = [np.max(np.abs(s.n.values - mean)) for s in traj.states]
    assert all(b <= a + 1e-14 for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.05 * gaps[0]


def test_simulate_observer_sample_count(desk_grid):
    n0 = gaussian_bump(desk_grid, 0.5)
    zero = Field.constant(desk_grid, 0.0)
    params = ModelParams(PesLimit(1.0), 1e-3, 0.1, zero_chemotaxis=True)
    traj = simulate(params, (n0, zero, zero), observers=[lambda s: s.t], stride=1)
    assert len(traj.probes[0]) == int(np.ceil(0.1 / 1e-3)) + 1


def test_simulate_run_scale_mass(desk_manifold_init):
    n0, c0, w0 = desk_manifold_init
    traj = simulate(
        ModelParams(PesLimit(1.0), 1e-3, 0.5), (n0, c0, w0), record_states=False,
        observers=[lambda s: integrate(s.n)],
    )
    masses = np.asarray(traj.probes[0])
    assert np.max(np.abs(masses - 0.5)) < 1e-10


def test_positivity_under_documented_guard():
    g = Grid.interval(1.0, 64)
    n0 = gaussian_bump(g, 0.5)
    proj = initial_layer(n0, n0, n0, PesManifold(1.0))
    state = State(0.0, n0, proj.c_limit0, proj.w_limit0)
    dt = cfl_limit(state)
    traj = simulate(
        ModelParams(Full(0.1, 1.0), dt, 200 * dt), (n0, proj.c_limit0, proj.w_limit0)
    )
    assert min(float(np.min(s.n.values)) for s in traj.states) >= -1e-12


def test_self_convergence_under_refinement():
    # (h, dt) -> (h/2, dt/2) halves the change of the solution at T
    results = {}
    for m, dt in ((65, 4e-4), (129, 2e-4), (257, 1e-4)):
        g = Grid.interval(1.0, m)
        n0 = gaussian_bump(g, 0.5)
        proj = initial_layer(n0, n0, n0, PesManifold(1.0))
        traj = simulate(
            ModelParams(PesLimit(1.0), dt, 0.2), (n0, proj.c_limit0, proj.w_limit0),
            record_states=False,
        )
        results[m] = traj.final_state.n.values
    d1 = np.max(np.abs(results[65] - results[129][::2]))
    d2 = np.max(np.abs(results[129] - results[257][::2]))
    assert d1 / d2 >= 2.0


def test_simulate_rejects_negative_init(desk_grid):
    bad = Field(desk_grid, np.full(desk_grid.shape, -0.5))
    good = Field.constant(desk_grid, 0.0)
    with pytest.raises(GridError):
        simulate(ModelParams(IdsLimit(), 1e-3, 0.01), (bad, good, good))


def test_simulate_runaway_guard(desk_grid):
    n0 = Field.constant(desk_grid, 1.0)
    with pytest.raises(GridError):
        simulate(ModelParams(IdsLimit(), 1e-9, 100.0), (n0, n0, n0))


def test_state_rejects_positivity_violation(desk_grid):
    bad = np.full(desk_grid.shape, 1.0)
    bad[10] = -1e-6
    with pytest.raises(SimulationError):
        State(
            0.0,
            Field(desk_grid, bad),
            Field.constant(desk_grid, 0.0),
            Field.constant(desk_grid, 0.0),
        )


def test_slow_evolution_uniform_stability():
    # the implicit relaxation update keeps the signal trajectories bounded
    # by the data uniformly in eps at fixed dt; explicit stepping would
    # need dt = O(eps) for the same statement
    g = Grid.interval(1.0, 128)
    n0 = gaussian_bump(g, 0.5)
    x = g.coordinates()[0]
    c0 = Field(g, 0.4 * (1 + np.cos(np.pi * x)))
    w0 = Field(g, 0.4 * (1 + np.cos(2 * np.pi * x)))
    data_bound = max(
        float(np.max(f.values)) for f in (n0, c0, w0)
    )
    for eps in (1.0, 1e-2, 1e-4, 1e-6):
        traj = simulate(ModelParams(Full(eps, 1.0), 1e-3, 0.2), (n0, c0, w0))
        peak = max(
            max(float(np.max(s.c.values)), float(np.max(s.w.values)))
            for s in traj.states
        )
        assert peak <= data_bound * (1.0 + 1e-9)

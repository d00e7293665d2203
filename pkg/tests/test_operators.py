import numpy as np
import pytest

from chemolimit import (
    EllipticOperator,
    Field,
    Grid,
    chemotaxis_divergence,
    elliptic_solve,
    gradient,
    heat_semigroup,
    integrate,
    laplacian,
    resolvent_via_semigroup,
)


# -- laplacian ---------------------------------------------------------------


def test_laplacian_constant_is_zero():
    g = Grid.interval(1.0, 33)
    out = laplacian(Field.constant(g, 4.2))
    assert np.max(np.abs(out.values)) < 1e-12


def test_laplacian_quadratic_exact_interior():
    g = Grid.interval(1.0, 41)
    out = laplacian(Field.from_function(g, lambda x: x**2))
    assert np.allclose(out.values[1:-1], 2.0, atol=1e-9)


def test_radial_laplacian_of_r_squared():
    # flux form gives exactly 2N away from the mirrored outer node,
    # including the symmetry-limit stencil at the origin
    for dim in (2, 3, 4):
        g = Grid.radial_ball(dim, 1.0, 81)
        out = laplacian(Field.from_function(g, lambda r: r**2))
        assert np.allclose(out.values[:-1], 2.0 * dim, atol=1e-9)


def test_laplacian_integral_vanishes(rng):
    for g in (
        Grid.interval(1.0, 100),
        Grid.rectangle(1.0, 0.5, 21, 17),
        Grid.radial_ball(4, 1.0, 64),
    ):
        f = Field(g, rng.random(g.shape))
        total = integrate(laplacian(f))
        scale = max(np.max(np.abs(laplacian(f).values)), 1.0)
        assert abs(total) < 1e-12 * scale


# -- gradient ----------------------------------------------------------------


def test_gradient_constant_and_linear():
    g = Grid.interval(1.0, 33)
    assert np.max(np.abs(gradient(Field.constant(g, 7.0))[0].values)) == 0.0
    gx = gradient(Field.from_function(g, lambda x: x))[0]
    assert np.allclose(gx.values[1:-1], 1.0, atol=1e-12)
    # Neumann mirror pins the boundary nodes
    assert gx.values[0] == 0.0 and gx.values[-1] == 0.0


def test_gradient_sine_second_order_interior():
    errs = []
    for m in (101, 201):
        g = Grid.interval(1.0, m)
        x = g.coordinates()[0]
        gx = gradient(Field(g, np.sin(2 * np.pi * x)))[0]
        exact = 2 * np.pi * np.cos(2 * np.pi * x)
        errs.append(np.max(np.abs(gx.values[1:-1] - exact[1:-1])))
    assert errs[0] / errs[1] > 3.5


# -- chemotaxis flux ---------------------------------------------------------


def test_chemotaxis_divergence_zero_for_flat_signal(rng):
    g = Grid.interval(1.0, 50)
    n = Field(g, rng.random(g.shape) + 0.1)
    out = chemotaxis_divergence(n, Field.constant(g, 3.0))
    assert np.max(np.abs(out.values)) == 0.0


def test_chemotaxis_divergence_five_node_hand_check():
    # unit density: the upwind flux reduces to the plain face-difference
    # divergence of c, evaluated here by hand
    g = Grid.interval(1.0, 5)
    h = 0.25
    c = np.array([0.3, 0.1, 0.4, 0.2, 0.5])
    n = Field.constant(g, 1.0)
    out = chemotaxis_divergence(n, Field(g, c)).values
    flux = np.diff(c) / h  # upwind weight is 1 everywhere
    expected = np.array(
        [
            flux[0] / (h / 2),
            (flux[1] - flux[0]) / h,
            (flux[2] - flux[1]) / h,
            (flux[3] - flux[2]) / h,
            -flux[3] / (h / 2),
        ]
    )
    assert np.allclose(out, expected, atol=1e-12)


def test_chemotaxis_divergence_upwind_side():
    # signal increasing: flux at each face takes the left (upwind) density
    g = Grid.interval(1.0, 3)
    n = Field(g, np.array([2.0, 5.0, 9.0]))
    c = Field(g, np.array([0.0, 1.0, 2.0]))
    out = chemotaxis_divergence(n, c).values
    h = 0.5
    f0, f1 = 2.0 * (1.0 / h), 5.0 * (1.0 / h)
    assert out[0] == pytest.approx(f0 / (h / 2))
    assert out[1] == pytest.approx((f1 - f0) / h)
    assert out[2] == pytest.approx(-f1 / (h / 2))


def test_chemotaxis_divergence_conserves(rng):
    for g in (
        Grid.interval(1.0, 77),
        Grid.rectangle(1.0, 1.5, 19, 23),
        Grid.radial_ball(3, 1.0, 50),
    ):
        n = Field(g, rng.random(g.shape) + 0.2)
        c = Field(g, rng.random(g.shape))
        out = chemotaxis_divergence(n, c)
        scale = max(np.max(np.abs(out.values)), 1.0)
        assert abs(integrate(out)) < 1e-12 * scale


def test_chemotaxis_divergence_rejects_negative_density():
    g = Grid.interval(1.0, 5)
    n = Field(g, np.array([1.0, -1e-6, 1.0, 1.0, 1.0]))
    with pytest.raises(Exception):
        chemotaxis_divergence(n, Field.constant(g, 1.0))


# -- elliptic solve ----------------------------------------------------------


def test_elliptic_constant_solution():
    g = Grid.interval(1.0, 64)
    u = elliptic_solve(2.0, Field.constant(g, 3.0))
    assert np.allclose(u.values, 3.0, atol=1e-10)


def test_elliptic_manufactured_second_order():
    a = 1.0
    errs = {}
    for m in (65, 129):
        g = Grid.interval(1.0, m)
        x = g.coordinates()[0]
        rhs = Field(g, (a * np.pi**2 + 1.0) * np.cos(np.pi * x))
        u = elliptic_solve(a, rhs)
        errs[m] = np.max(np.abs(u.values - np.cos(np.pi * x)))
    assert errs[65] / errs[129] > 3.5


def test_elliptic_three_node_hand_solution():
    # (-Lap + I) on 3 nodes, h = 1/2: rows (9,-8,0|-4,9,-4|0,-8,9) / rhs e_0,
    # solved by hand via Cramer elimination
    g = Grid.interval(1.0, 3)
    u = elliptic_solve(1.0, Field(g, np.array([1.0, 0.0, 0.0])))
    expected = np.array([49.0, 36.0, 32.0]) / 153.0
    assert np.allclose(u.values, expected, atol=1e-12)


def test_elliptic_positivity_preservation(rng):
    g = Grid.radial_ball(4, 1.0, 60)
    f = Field(g, rng.random(g.shape))
    u = elliptic_solve(0.7, f)
    assert float(np.min(u.values)) >= -1e-13


def test_elliptic_inverse_roundtrip(rng):
    g = Grid.interval(1.0, 120)
    f = Field(g, rng.normal(size=g.shape))
    op = EllipticOperator(g, 0.3)
    u = op.solve_field(f)
    back = op.apply(u)
    assert np.max(np.abs(back.values - f.values)) < 1e-8 * max(
        1.0, np.max(np.abs(f.values))
    )


def test_elliptic_2d_cg_matches_forward(rng):
    g = Grid.rectangle(1.0, 1.0, 24, 24)
    f = Field(g, rng.random(g.shape) + 0.5)
    op = EllipticOperator(g, 0.4)
    u = op.solve_field(f)
    back = op.apply(u)
    assert np.max(np.abs(back.values - f.values)) < 1e-7


# -- heat semigroup ----------------------------------------------------------


def test_semigroup_constant_mode_decay():
    g = Grid.interval(1.0, 40)
    out = heat_semigroup(Field.constant(g, 2.0), 1.0, 0.5, substeps=2000)
    assert np.allclose(out.values, 2.0 * np.exp(-1.0), atol=2e-4)


def test_semigroup_time_zero_identity(rng):
    g = Grid.interval(1.0, 40)
    f = Field(g, rng.random(g.shape))
    out = heat_semigroup(f, 0.0, 1.0)
    assert np.array_equal(out.values, f.values)


def test_semigroup_max_norm_contraction(rng):
    g = Grid.interval(1.0, 64)
    f = Field(g, rng.random(g.shape))
    out = heat_semigroup(f, 0.7, 1.0, substeps=32)
    assert np.max(np.abs(out.values)) <= np.max(np.abs(f.values)) + 1e-13


def test_semigroup_composition_property(rng):
    g = Grid.interval(1.0, 64)
    f = Field(g, rng.random(g.shape) + 0.5)
    once = heat_semigroup(f, 0.6, 1.0, substeps=600)
    half = heat_semigroup(heat_semigroup(f, 0.3, 1.0, substeps=300), 0.3, 1.0,
                          substeps=300)
    assert np.max(np.abs(once.values - half.values)) < 1e-6


def test_resolvent_quadrature_matches_direct_solve():
    g = Grid.interval(1.0, 128)
    x = g.coordinates()[0]
    field = Field(g, 1.0 + 0.5 * np.cos(2 * np.pi * x))
    for a in (1.0, 0.1):
        quad = resolvent_via_semigroup(a, field)
        direct = elliptic_solve(a, field)
        assert np.max(np.abs(quad.values - direct.values)) < 1e-4

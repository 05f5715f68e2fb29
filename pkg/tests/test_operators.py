import numpy as np
import pytest

from leafwise import catalog, operators as ops
from leafwise.errors import DomainError, StencilError
from leafwise.operators import (
    FullTensorField,
    LeafOneFormField,
    LeafTensorField,
    ScalarField,
    leaf_metric_multiple,
)
from leafwise.patch import Grid, periodic_axis, uniform_axis


def trig_field(n, seed=0, amplitude=1.0):
    rng = np.random.default_rng(seed)
    ks = rng.integers(-2, 3, size=(3, n))
    cs = amplitude * rng.normal(size=3)
    ph = rng.uniform(0, 2 * np.pi, size=3)

    def fn(x):
        return sum(c * np.cos(x @ k + f) for k, c, f in zip(ks, cs, ph))

    return ScalarField.from_callable(fn, n=n)


def test_leaf_laplacian_constant_is_zero(bumpy3):
    u = ScalarField.from_callable(lambda x: np.full(x.shape[0], 2.5), n=2)
    vals = ops.leaf_laplacian(bumpy3, u, bumpy3.grid.points[::19])
    assert np.max(np.abs(vals)) < 1e-9


def test_leaf_laplacian_unit_circle_harmonic():
    # u = x-coordinate restricted to a unit-circle leaf: Delta_F u = -u
    patch = catalog.cylinder(radius=1.0, m_leaf=12, m_axis=4)
    x = patch.grid.points[::5]
    u = ScalarField.from_callable(lambda p: np.cos(p[:, 0]), n=2)
    vals = ops.leaf_laplacian(patch, u, x)
    assert np.max(np.abs(vals + np.cos(x[:, 0]))) < 1e-10


def test_leaf_laplacian_sphere_eigenfunction(tube4):
    # degree-1 harmonic on S^{n-1}(rho) leaves: Delta_F u = -(n-1) rho^-2 u
    pts = tube4.grid.points
    interior = pts[(pts[:, 0] > 0.7) & (pts[:, 0] < np.pi - 0.7)][::23]
    u = ScalarField.from_callable(lambda p: np.cos(p[:, 0]), n=3)
    vals = ops.leaf_laplacian(tube4, u, interior)
    rho = tube4.meta["r1"] + tube4.meta["r2"] * np.cos(interior[:, 2])
    lam = 2.0  # j(j+n-2) with j=1, n=3
    expect = -lam / rho**2 * np.cos(interior[:, 0])
    assert np.max(np.abs(vals - expect)) < 1e-8


def test_hessians_flat_quadratic():
    patch = catalog.plane()
    x = patch.grid.points[::13]
    u = ScalarField.from_callable(lambda p: 0.5 * (p[:, 0] ** 2 + p[:, 1] ** 2), n=2)
    hess, hess_leaf, hess_mix = ops.hessians(patch, u, x)
    assert np.max(np.abs(hess - np.eye(2))) < 1e-9
    assert np.max(np.abs(hess_leaf - 1.0)) < 1e-9  # leaf block of the identity
    assert np.max(np.abs(hess_mix)) < 1e-9


def test_hessians_constant_zero(bumpy3):
    u = ScalarField.from_callable(lambda x: np.full(x.shape[0], 1.0), n=2)
    hess, hess_leaf, hess_mix = ops.hessians(bumpy3, u, bumpy3.grid.points[::31])
    for t in (hess, hess_leaf, hess_mix):
        assert np.max(np.abs(t)) < 1e-9


def test_trace_of_hessian_is_laplacian(bumpy3):
    x = bumpy3.grid.points[::17]
    u = trig_field(2, seed=4)
    geo = bumpy3.geometry(x)
    _, du, d2u = u.jets(x)
    lhs = np.einsum("pij,pij->p", geo.g_inv, ops.hessian_full(geo, du, d2u))
    rhs = ops.laplacian_full(geo, du, d2u)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_div_projector_revolution_vanishes(torus_rev):
    dp, _ = ops.div_projector(torus_rev, torus_rev.grid.points[::37])
    assert np.max(np.abs(dp)) < 1e-12


def test_div_projector_product_vanishes():
    patch = catalog.product_chart()
    dp, hp = ops.div_projector(patch, patch.grid.points[::11])
    assert np.max(np.abs(dp)) < 1e-12
    assert np.max(np.abs(hp)) < 1e-12


def test_div_projector_sheared_identity(sheared4):
    # (div P)(PX) = -<X, (n-s) Hperp> on a chart with Hperp != 0
    x = sheared4.grid.points[::47]
    geo = sheared4.geometry(x)
    dp, hp = ops.div_projector(sheared4, x, geo)
    assert np.max(np.abs(hp)) > 1e-3  # genuinely non-harmonic
    resid = dp + (sheared4.n - sheared4.s) * np.einsum("pbi,pi->pb", geo.g, hp)
    assert np.max(np.abs(resid)) < 1e-8


def test_fstar_squared_zero_tensor(torus_rev):
    b = LeafTensorField(fn=lambda x: np.zeros((x.shape[0], 1, 1)), s=1)
    vals = ops.fstar_squared(torus_rev, b, torus_rev.grid.points[::41])
    assert np.max(np.abs(vals)) < 1e-12


def test_fstar_squared_metric_multiple_reduces_to_laplacian(tube4):
    # B = u g_L  =>  (nabla^{F*})^2 B = Delta_F u (metric is leaf-parallel)
    u = ScalarField.from_callable(
        lambda p: np.sin(p[:, 0]) * np.sin(p[:, 1]) + 0.2 * np.cos(p[:, 0]), n=3)
    b = leaf_metric_multiple(tube4, u)
    pts = tube4.grid.points
    interior = pts[(pts[:, 0] > 0.7) & (pts[:, 0] < np.pi - 0.7)][::31]
    lhs = ops.fstar_squared(tube4, b, interior)
    rhs = ops.leaf_laplacian(tube4, u, interior)
    assert np.max(np.abs(lhs - rhs)) < 1e-8


def test_fstar_squared_weak_identity(torus_rev):
    # int <B, Hess^F u> dV = int u (nabla^{F*})^2 B dV on a harmonic foliation
    x = torus_rev.grid.points
    geo = torus_rev.geometry(x, order=3)
    u = trig_field(2, seed=7)

    def bfun(p):
        w = np.sin(p[:, 0]) + 0.5 * np.cos(p[:, 0] - 2 * p[:, 1])
        return w[:, None, None] * torus_rev.geometry(p).g_ff

    b = LeafTensorField(fn=bfun, s=1, step=1e-3)
    _, du, d2u = u.jets(x)
    hess = ops.hessian_leaf(geo, du, d2u)
    pair = np.einsum("pik,pjl,pkl,pij->p", geo.g_ff_inv, geo.g_ff_inv, bfun(x), hess)
    lhs = torus_rev.integrate(pair, geo)
    rhs = torus_rev.integrate(u(x) * ops.fstar_squared(torus_rev, b, x, geo), geo)
    assert abs(lhs - rhs) < 1e-8


def test_green_formula_leafwise(torus_rev):
    # int f1 Delta_F f2 dV = -int <grad_F f1, grad_F f2> dV
    x = torus_rev.grid.points
    geo = torus_rev.geometry(x)
    f1, f2 = trig_field(2, seed=1), trig_field(2, seed=2)
    _, du1, _ = f1.jets(x)
    _, du2, d2u2 = f2.jets(x)
    lap2 = ops.laplacian_leaf(geo, du2, d2u2)
    pair = np.einsum("pi,pij,pj->p", ops.leaf_gradient(geo, du1), geo.g_ff,
                     ops.leaf_gradient(geo, du2))
    assert abs(torus_rev.integrate(f1(x) * lap2, geo)
               + torus_rev.integrate(pair, geo)) < 1e-9


def test_laplacian_symmetry_leafwise(torus_rev):
    x = torus_rev.grid.points
    geo = torus_rev.geometry(x)
    f1, f2 = trig_field(2, seed=5), trig_field(2, seed=6)
    _, du1, d2u1 = f1.jets(x)
    _, du2, d2u2 = f2.jets(x)
    lhs = torus_rev.integrate(f1(x) * ops.laplacian_leaf(geo, du2, d2u2), geo)
    rhs = torus_rev.integrate(f2(x) * ops.laplacian_leaf(geo, du1, d2u1), geo)
    assert abs(lhs - rhs) < 1e-9


def test_adjoint_gradient_pairing(torus_rev):
    x = torus_rev.grid.points
    geo = torus_rev.geometry(x)
    f = trig_field(2, seed=8)
    omega = LeafOneFormField(
        fn=lambda p: (np.sin(p[:, 0]) + 0.2 * np.cos(p[:, 1]))[:, None], s=1)
    _, du, _ = f.jets(x)
    lhs = torus_rev.integrate(ops.leaf_gradient_pairing(geo, omega(x), du), geo)
    rhs = torus_rev.integrate(f(x) * ops.fstar_one_form(torus_rev, omega, x, geo), geo)
    assert abs(lhs - rhs) < 1e-9


def test_full_ibp_on_closed_surface():
    patch = catalog.torus(s=2, m_leaf=32, m_tube=32)
    x = patch.grid.points
    geo = patch.geometry(x, order=3)
    u = trig_field(2, seed=9)

    def bfull(p):
        w = np.cos(p[:, 0] - p[:, 1])
        return w[:, None, None] * patch.geometry(p).g

    b = FullTensorField(fn=bfull, n=2, step=1e-3)
    _, du, d2u = u.jets(x)
    hess = ops.hessian_full(geo, du, d2u)
    pair = np.einsum("pik,pjl,pkl,pij->p", geo.g_inv, geo.g_inv, bfull(x), hess)
    lhs = patch.integrate(pair, geo)
    rhs = patch.integrate(u(x) * ops.star_squared_full(patch, b, x, geo), geo)
    assert abs(lhs - rhs) < 1e-8


def test_grid_sampled_field_matches_callable_at_4th_order():
    fn = lambda x: np.sin(x[:, 0]) * np.cos(2 * x[:, 1])
    errs = []
    for m in (32, 64):
        grid = Grid(axes=(periodic_axis(0, 2 * np.pi, m), periodic_axis(0, 2 * np.pi, m)))
        values = fn(grid.points).reshape(grid.shape)
        sampled = ScalarField.from_grid(grid, values)
        exact = ScalarField.from_callable(fn, n=2)
        pts = grid.points[:: 37]
        u1, du1, d2u1 = sampled.jets(pts)
        u2, du2, d2u2 = exact.jets(pts)
        assert np.max(np.abs(u1 - u2)) < 1e-13
        errs.append(max(np.max(np.abs(du1 - du2)), np.max(np.abs(d2u1 - d2u2))))
    assert errs[1] < 2e-3
    assert np.log2(errs[0] / errs[1]) > 3.7  # 4th-order stencils


def test_grid_sampled_field_boundary_stencil_error():
    grid = Grid(axes=(uniform_axis(0.0, 1.0, 12), uniform_axis(0.0, 1.0, 12)))
    values = np.ones(grid.shape)
    sampled = ScalarField.from_grid(grid, values)
    with pytest.raises(StencilError):
        sampled.jets(grid.points[[0]])
    # interior nodes are fine
    mid = grid.points[[5 * 12 + 6]]
    sampled.jets(mid)


def test_grid_sampled_field_rejects_offgrid():
    grid = Grid(axes=(periodic_axis(0, 2 * np.pi, 8),))
    sampled = ScalarField.from_grid(grid, np.ones(8))
    with pytest.raises(DomainError):
        sampled.jets(np.array([[0.1234]]))

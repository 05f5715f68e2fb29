import numpy as np
import pytest

from leafwise import catalog
from leafwise.errors import SingularImmersionError
from leafwise.patch import FoliatedPatch, Grid, gauss_axis, point_geometry
from leafwise.suppliers import AnalyticSupplier, FiniteDifferenceSupplier


def test_unit_sphere_round():
    # inward orientation: shape operator is the identity, H = 1, |h|^2 = n
    for n in (2, 3):
        patch = catalog.sphere(n=n, m_polar=8, m_azimuth=10)
        geo = patch.geometry(patch.grid.points[::11])
        assert np.max(np.abs(geo.shape_op - np.eye(n))) < 1e-12
        assert np.max(np.abs(geo.mean_curvature - 1.0)) < 1e-12
        assert np.max(np.abs(geo.norm_h_sq - n)) < 1e-12


def test_flat_plane_totally_geodesic():
    patch = catalog.plane()
    geo = patch.geometry(patch.grid.points[::17])
    assert np.max(np.abs(geo.h)) < 1e-12
    assert np.max(np.abs(geo.mean_curvature)) < 1e-13


def test_cylinder_circle_foliation():
    radius = 2.0
    patch = catalog.cylinder(radius=radius, m_leaf=12, m_axis=6)
    geo = patch.geometry(patch.grid.points[::7])
    assert np.max(np.abs(geo.a_leaf[:, 0, 0] - 1.0 / radius)) < 1e-12
    assert np.max(np.abs(geo.b_perp)) < 1e-12
    assert np.max(np.abs(geo.norm_hmix_sq)) < 1e-24
    assert np.max(np.abs(geo.mean_curvature - 1.0 / (2 * radius))) < 1e-12


def test_normal_unit_and_orthogonal(bumpy3):
    geo = bumpy3.geometry(bumpy3.grid.points[::13])
    assert np.max(np.abs(np.einsum("pa,pa->p", geo.normal, geo.normal) - 1)) < 1e-12
    assert np.max(np.abs(np.einsum("pa,pai->pi", geo.normal, geo.jets.d1))) < 1e-12


@pytest.mark.parametrize("name", ["bumpy-torus3", "sheared-torus4"])
def test_projector_invariants(name):
    patch = catalog.build(name) if name != "sheared-torus4" else catalog.sheared_torus4(
        m1=6, m2=6, m3=6)
    geo = patch.geometry(patch.grid.points[::29])
    p = geo.proj
    assert np.max(np.abs(np.einsum("pij,pjk->pik", p, p) - p)) < 1e-10
    pg = np.einsum("pia,pij->paj", p, geo.g)
    assert np.max(np.abs(pg - np.swapaxes(pg, -1, -2))) < 1e-10


def test_leaf_block_is_pap(sheared4):
    geo = sheared4.geometry(sheared4.grid.points[::41])
    pap = np.einsum("pij,pjk,pkl->pil", geo.proj, geo.shape_op, geo.proj)
    e_inv = np.einsum("pia,pij->paj", geo.frame, geo.g)
    pap_frame = np.einsum("pai,pij,pjb->pab", e_inv, pap, geo.frame)
    s = sheared4.s
    dev = pap_frame.copy()
    dev[:, :s, :s] -= geo.a_leaf
    assert np.max(np.abs(dev)) < 1e-10


def test_hf_hmix_orthogonal_in_coordinates(sheared4):
    # <h_F, h_mix> = 0 with both tensors assembled in coordinates from P
    geo = sheared4.geometry(sheared4.grid.points[::41])
    p, h, gi = geo.proj, geo.h, geo.g_inv
    h_f = np.einsum("pci,pcd,pdj->pij", p, h, p)
    hp = np.einsum("pci,pcj->pij", p, h)
    h_mix = 0.5 * (hp + np.swapaxes(hp, -1, -2)) - h_f
    pair = np.einsum("pik,pjl,pij,pkl->p", gi, gi, h_f, h_mix)
    assert np.max(np.abs(pair)) < 1e-9


def test_second_form_decomposition(sheared4):
    # h = h_F + 2 h_mix + h_Fperp reconstructs h (projector blocks)
    geo = sheared4.geometry(sheared4.grid.points[::41])
    p, h = geo.proj, geo.h
    q = np.broadcast_to(np.eye(sheared4.n), p.shape) - p
    h_f = np.einsum("pci,pcd,pdj->pij", p, h, p)
    hp = np.einsum("pci,pcj->pij", p, h)
    h_mix = 0.5 * (hp + np.swapaxes(hp, -1, -2)) - h_f
    h_perp = np.einsum("pci,pcd,pdj->pij", q, h, q)
    assert np.max(np.abs(h_f + 2 * h_mix + h_perp - h)) < 1e-10


def test_mixed_norm_conventions(sheared4):
    # index-block norm is twice the square norm of the symmetrized tensor
    geo = sheared4.geometry(sheared4.grid.points[::53])
    assert np.allclose(geo.norm_hmix_sym_sq, 0.5 * geo.norm_hmix_sq)


def test_singular_immersion_raises():
    import sympy as sp

    x, y = sp.symbols("x y")
    supplier = AnalyticSupplier((x, y), [x, x, 0 * x])  # rank-1 Jacobian
    grid = Grid(axes=(gauss_axis(0, 1, 4), gauss_axis(0, 1, 4)))
    patch = FoliatedPatch(n=2, s=1, supplier=supplier, grid=grid)
    with pytest.raises(SingularImmersionError):
        patch.geometry()


def test_point_geometry_node_api(bumpy3):
    geo = point_geometry(bumpy3, (3, 4))
    assert geo.g.shape == (1, 2, 2)
    flat = point_geometry(bumpy3, 7)
    assert flat.normal.shape == (1, 3)


def test_finite_difference_supplier_order():
    # 4th-order stencils: halving h cuts first/second-derivative errors ~16x
    base = catalog.bumpy_torus3(m_leaf=6, m_tube=6)
    fn = lambda x: base.supplier.jets(x, order=0).r
    pts = base.grid.points[::7][:5]
    exact = base.supplier.jets(pts, order=2)
    errs = {}
    for h in (2e-2, 1e-2):
        fd = FiniteDifferenceSupplier(fn, n=2, step=h).jets(pts, order=2)
        errs[h] = (np.max(np.abs(fd.d1 - exact.d1)), np.max(np.abs(fd.d2 - exact.d2)))
    order_d1 = np.log2(errs[2e-2][0] / errs[1e-2][0])
    order_d2 = np.log2(errs[2e-2][1] / errs[1e-2][1])
    assert order_d1 >= 3.9
    assert order_d2 >= 3.9


def test_finite_difference_supplier_third_jets():
    # third derivatives difference the second-derivative output at 2nd order
    base = catalog.bumpy_torus3(m_leaf=6, m_tube=6)
    fn = lambda x: base.supplier.jets(x, order=0).r
    pts = base.grid.points[::9][:4]
    exact = base.supplier.jets(pts, order=3)
    errs = []
    for h in (1e-2, 5e-3):
        fd = FiniteDifferenceSupplier(fn, n=2, step=h).jets(pts, order=3)
        errs.append(np.max(np.abs(fd.d3 - exact.d3)))
    assert errs[1] < 5e-3
    assert errs[0] / errs[1] > 3.5  # ~2nd order


def test_quadrature_weights_total():
    patch = catalog.torus(s=1, m_leaf=24, m_tube=24)
    assert np.isclose(np.sum(patch.grid.weights), (2 * np.pi) ** 2)

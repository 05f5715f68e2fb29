"""Analytic first-variation formulas for normal deformations r + t*u*N.

Every formula is the tensorial restatement of the corresponding evolution
equation: second derivatives of the variation amplitude u enter through
the full covariant Hessian (or its leafwise block), never through the
leaf-intrinsic Hessian, because that is what differentiating the immersion
produces in an arbitrary adapted chart.  The leaf-intrinsic reading (valid
when u has no transverse gradient) is provided separately by varcheck for
diagnostic comparison.

All leafwise pairings use the adapted orthonormal frame blocks a (leaf),
c (mixed) and b (transverse) of the shape operator; the mixed norm is the
index-block convention |c|_F^2.
"""

from __future__ import annotations

import numpy as np

from .operators import (
    hessian_full,
    hessian_leaf,
    hessian_mixed_frame,
    laplacian_block,
    laplacian_full,
    leaf_gradient,
)
from .patch import PointGeometry
from .symfunc import newton_transform_inductive


def _frame_leaf_block(geo: PointGeometry, tensor: np.ndarray) -> np.ndarray:
    """Leaf frame components of a (0,2) coordinate tensor."""
    s = geo.s
    ef = geo.frame[:, :, :s]
    return np.einsum("pia,pij,pjb->pab", ef, tensor, ef)


def delta_metric(geo: PointGeometry, u: np.ndarray) -> np.ndarray:
    """delta g_ij = -2 u h_ij."""
    return -2.0 * u[:, None, None] * geo.h


def delta_metric_inverse(geo: PointGeometry, u: np.ndarray) -> np.ndarray:
    """delta g^ij = 2 u h^ij."""
    h_up = np.einsum("pik,pkl,plj->pij", geo.g_inv, geo.h, geo.g_inv)
    return 2.0 * u[:, None, None] * h_up


def delta_second_form(geo: PointGeometry, u, du, d2u) -> np.ndarray:
    """delta h_ij = Hess_u(i,j) - u (h^2)_ij."""
    h_sq = np.einsum("pik,pkl,plj->pij", geo.h, geo.g_inv, geo.h)
    return hessian_full(geo, du, d2u) - u[:, None, None] * h_sq


def delta_norm_h_sq(geo: PointGeometry, u, du, d2u) -> np.ndarray:
    """delta |h|^2 = 2 <h, u h^2 + Hess_u>."""
    hess = hessian_full(geo, du, d2u)
    a = geo.shape_op
    pair_hess = np.einsum("pji,pij->p", a, np.einsum("pik,pkj->pij", geo.g_inv, hess))
    tr_a3 = np.einsum("pij,pjk,pki->p", a, a, a)
    return 2.0 * (u * tr_a3 + pair_hess)


def delta_nh(geo: PointGeometry, u, du, d2u) -> np.ndarray:
    """delta (n H) = Delta u + u |h|^2."""
    return laplacian_full(geo, du, d2u) + u * geo.norm_h_sq


def delta_volume_density(geo: PointGeometry, u: np.ndarray) -> np.ndarray:
    """delta sqrt(det g) = -n u H sqrt(det g)."""
    return -geo.n * u * geo.mean_curvature * geo.sqrt_det_g


def delta_s_hf(geo: PointGeometry, u, du, d2u) -> np.ndarray:
    """delta (s H_F) = tr_F Hess_u|_F + u (|h_F|^2 - |h_mix|^2)."""
    return laplacian_block(geo, du, d2u) + u * (geo.norm_hf_sq - geo.norm_hmix_sq)


def delta_norm_hf_sq(geo: PointGeometry, u, du, d2u) -> np.ndarray:
    """delta |h_F|^2 = 2 <h_F, Hess_u|_F> + 2u (<h_F,h_F^2> - <h_F,h_mix^2>)."""
    a = geo.a_leaf
    c = geo.c_mix
    hb = _frame_leaf_block(geo, hessian_full(geo, du, d2u))
    pair_hess = np.einsum("pij,pij->p", a, hb)
    tr_a3 = np.einsum("pij,pjk,pki->p", a, a, a)
    tr_acc = np.einsum("pij,pja,pia->p", a, c, c)
    return 2.0 * pair_hess + 2.0 * u * (tr_a3 - tr_acc)


def delta_norm_hmix_sq(geo: PointGeometry, u, du, d2u) -> np.ndarray:
    """delta |h_mix|^2 = 2 <h_mix, Hess_u^mix> + 4u <h_F, h_mix^2>.

    Derived by varying tr(P A Q A P) with the projector moving along the
    deformation; the fixed-projector reading misses the 4u term.
    """
    c = geo.c_mix
    hm = hessian_mixed_frame(geo, du, d2u)
    tr_acc = np.einsum("pij,pja,pia->p", geo.a_leaf, c, c)
    return 2.0 * np.einsum("pia,pia->p", hm, c) + 4.0 * u * tr_acc


def delta_tau(geo: PointGeometry, u, du, d2u, i: int) -> np.ndarray:
    """delta tau_i = i [<h_F^{i-1}, Hess_u|_F> + u (tau_{i+1} - <h_F^{i-1}, h_mix^2>)]."""
    a = geo.a_leaf
    c = geo.c_mix
    hb = _frame_leaf_block(geo, hessian_full(geo, du, d2u))
    a_pow = np.broadcast_to(np.eye(geo.s), a.shape).copy()
    for _ in range(i - 1):
        a_pow = np.einsum("pij,pjk->pik", a_pow, a)
    tau_next = np.einsum("pij,pji->p", np.einsum("pij,pjk->pik", a_pow, a), a)
    pair_hess = np.einsum("pij,pij->p", a_pow, hb)
    pair_mix = np.einsum("pij,pja,pia->p", a_pow, c, c)
    return i * (pair_hess + u * (tau_next - pair_mix))


def delta_sigma(geo: PointGeometry, u, du, d2u, r: int) -> np.ndarray:
    """delta sigma_r = <T_{r-1}, Hess_u|_F> + u (sigma_1 sigma_r - (r+1) sigma_{r+1}
    - <T_{r-1}, h_mix^2>)."""
    a = geo.a_leaf
    c = geo.c_mix
    s = geo.s
    hb = _frame_leaf_block(geo, hessian_full(geo, du, d2u))
    mpts = a.shape[0]
    t_prev = np.empty_like(a)
    for p in range(mpts):
        t_prev[p] = newton_transform_inductive(a[p], r - 1)
    sigma = np.concatenate([geo.sigma, np.zeros((mpts, 1))], axis=1)
    pair_hess = np.einsum("pij,pij->p", t_prev, hb)
    pair_mix = np.einsum("pij,pja,pia->p", t_prev, c, c)
    alg = sigma[:, 1] * sigma[:, r] - (r + 1) * sigma[:, min(r + 1, s + 1)]
    return pair_hess + u * (alg - pair_mix)


def delta_k_f(geo: PointGeometry, u, du, d2u) -> np.ndarray:
    """delta K_F for s=2: 2H_F tr_F Hess|_F - <h_F, Hess|_F>
    + u (2 H_F K_F - 2 H_F |h_mix|^2 + <h_F, h_mix^2>)."""
    a = geo.a_leaf
    c = geo.c_mix
    h_f = geo.h_f_mean
    k_f = geo.k_f
    hb = _frame_leaf_block(geo, hessian_full(geo, du, d2u))
    tr_hb = laplacian_block(geo, du, d2u)
    pair = np.einsum("pij,pij->p", a, hb)
    tr_acc = np.einsum("pij,pja,pia->p", a, c, c)
    return (
        2.0 * h_f * tr_hb
        - pair
        + u * (2.0 * h_f * k_f - 2.0 * h_f * geo.norm_hmix_sq + tr_acc)
    )


def second_form_derivative(geo: PointGeometry) -> np.ndarray:
    """dh[p,k,i,j] = partial_k h_ij, from third-order immersion jets."""
    if geo.jets.d3 is None:
        raise ValueError("second_form_derivative needs order-3 jets")
    dn = -np.einsum("pki,pak->pai", geo.shape_op, geo.jets.d1)
    return np.einsum("pak,paij->pkij", dn, geo.jets.d2) + np.einsum(
        "pa,paijk->pkij", geo.normal, geo.jets.d3
    )


def covariant_dh(geo: PointGeometry) -> np.ndarray:
    """nabla_k h_ij (totally symmetric for flat ambient space)."""
    dh = second_form_derivative(geo)
    return (
        dh
        - np.einsum("plki,plj->pkij", geo.gamma, geo.h)
        - np.einsum("plkj,pil->pkij", geo.gamma, geo.h)
    )


def delta_christoffel(geo: PointGeometry, u, du) -> np.ndarray:
    """delta Gamma^k_ij = -u g^{kl}(nabla_i h_jl + nabla_j h_il - nabla_l h_ij)
    - g^{kl}(u_i h_jl + u_j h_il - u_l h_ij)."""
    ndh = covariant_dh(geo)
    # sym[p,i,j,l] = nabla_i h_jl + nabla_j h_il - nabla_l h_ij
    sym = ndh + np.transpose(ndh, (0, 2, 1, 3)) - np.transpose(ndh, (0, 2, 3, 1))
    mpts, n = du.shape
    grad_part = np.empty((mpts, n, n, n))
    for i in range(n):
        for j in range(n):
            for l in range(n):
                grad_part[:, i, j, l] = (
                    du[:, i] * geo.h[:, j, l]
                    + du[:, j] * geo.h[:, i, l]
                    - du[:, l] * geo.h[:, i, j]
                )
    total = u[:, None, None, None] * sym + grad_part
    return -np.einsum("pkl,pijl->pkij", geo.g_inv, total)


def leaf_divergence_hf(geo: PointGeometry) -> np.ndarray:
    """Leaf-intrinsic covariant divergence of h_F, lower leaf index.

    (div_L h_F)_j = g_F^{ik} (partial_i h_kj - Gamma^{L,m}_{ik} h_mj
    - Gamma^{L,m}_{ij} h_km), all indices leafwise.
    """
    s = geo.s
    dh = second_form_derivative(geo)[:, :s, :s, :s]
    h_ff = geo.h[:, :s, :s]
    gl = geo.gamma_leaf
    nab = (
        dh
        - np.einsum("pmik,pmj->pikj", gl, h_ff)
        - np.einsum("pmij,pkm->pikj", gl, h_ff)
    )
    return np.einsum("pik,pikj->pj", geo.g_ff_inv, nab)


def delta_lapf(geo: PointGeometry, u, du, d2u, f_du, f_d2u) -> np.ndarray:
    """delta (Delta_F f) for a fixed function f under the deformation by u.

    Obtained from the leafwise metric variation delta g_L = -2 u h_F with
    the standard Laplacian variation formula; every object is intrinsic to
    the leaves.
    """
    s = geo.s
    hess_f = hessian_leaf(geo, f_du, f_d2u)
    a = geo.a_leaf
    hess_f_frame = _frame_leaf_block(geo, _embed_leaf(geo, hess_f))
    pair = np.einsum("pij,pij->p", a, hess_f_frame)
    xi_u = leaf_gradient(geo, du)
    xi_f = leaf_gradient(geo, f_du)
    h_ff = geo.h[:, :s, :s]
    h_grads = np.einsum("pi,pij,pj->p", xi_u, h_ff, xi_f)
    grads = np.einsum("pi,pij,pj->p", xi_u, geo.g_ff, xi_f)
    div_hf = leaf_divergence_hf(geo)
    div_term = np.einsum("pj,pj->p", div_hf, xi_f)
    s_hf = geo.sigma[:, 1]
    ds_hf = _leaf_function_gradient_shf(geo)
    hf_grad_term = np.einsum("pj,pj->p", ds_hf, xi_f)
    return (
        2.0 * u * pair
        + 2.0 * u * div_term
        - u * hf_grad_term
        + 2.0 * h_grads
        - s_hf * grads
    )


def _embed_leaf(geo: PointGeometry, leaf_tensor: np.ndarray) -> np.ndarray:
    """Pad a leafwise (0,2) tensor with zeros to full coordinate shape."""
    mpts, s = leaf_tensor.shape[0], geo.s
    out = np.zeros((mpts, geo.n, geo.n))
    out[:, :s, :s] = leaf_tensor
    return out


def _leaf_function_gradient_shf(geo: PointGeometry) -> np.ndarray:
    """Leafwise differential of s*H_F = tr_F h_F, lower leaf components.

    d(sigma_1) = d(g_F^{ik}) h_ki + g_F^{ik} d h_ki along leaf directions.
    """
    s = geo.s
    dh = second_form_derivative(geo)[:, :s, :s, :s]
    dgl = geo.dg[:, :s, :s, :s]
    dginv = -np.einsum("pim,pkmn,pnj->pkij", geo.g_ff_inv, dgl, geo.g_ff_inv)
    h_ff = geo.h[:, :s, :s]
    return np.einsum("pkij,pji->pk", dginv, h_ff) + np.einsum(
        "pij,pkji->pk", geo.g_ff_inv, dh
    )

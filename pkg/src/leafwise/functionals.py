"""Curvature functionals on foliated hypersurfaces: values, first and
second variations, Euler-Lagrange residuals, conformal invariance checks.

Supported functional kinds (s = leaf dimension, quantities leafwise):

====================  =====================================================
W_nps                 integral of (mean leaf curvature)^p
J_nps                 integral of |leaf second fundamental form|^p
WF                    integral of F(sigma_1, ..., sigma_s)
JF                    integral of F(tau_1, ..., tau_s)
WF_of_HF              integral of F(H_F)
WF_HK                 integral of F(H_F, K_F), s = 2 only
W_conf                integral of Q_r^{n/r} (conformally invariant)
====================  =====================================================

First variations are evaluated in their integral (pre-integration-by-parts)
form with the tensorial delta formulas of :mod:`leafwise.deltas`; strong
Euler-Lagrange residuals use the leaf-intrinsic operators and therefore
assume a transversally harmonic foliation, which is checked.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import deltas
from .errors import DomainError, PreconditionError, SpecError, ValidationError
from .operators import (
    LeafTensorField,
    ScalarField,
    fstar_squared,
    hessian_full,
    hessian_mixed_frame,
    laplacian_block,
    laplacian_full,
    leaf_gradient,
    leaf_laplacian,
)
from .patch import FoliatedPatch, PointGeometry
from .revolution import (
    RevolutionProfile,
    invariants,
    second_variation_revolution,
    sphere_area,
)
from .suppliers import InvertedImmersion, ScaledImmersion
from .symfunc import q_r_from_sigma
from .variation import (
    DEFAULT_T_LADDER,
    VariationField,
    deformed_patch,
    richardson,
)
from .varcheck import transversal_harmonicity_norm

KINDS = ("W_nps", "J_nps", "WF", "JF", "WF_of_HF", "WF_HK", "W_conf")

#: fractional powers of quantities below this threshold are refused
POWER_EPS = 1e-12


def _safe_power(base: np.ndarray, expo: float) -> np.ndarray:
    """base**expo, refusing non-integer powers of non-positive bases."""
    if float(expo) == int(expo):
        return base ** float(expo)
    if np.any(base <= POWER_EPS):
        raise DomainError(
            f"non-integer power {expo} of a non-positive quantity "
            f"(min base {np.min(base):.3e}); no branch is chosen")
    return base**expo


@dataclass
class FunctionalSpec:
    """Selector for one functional, with the data its kind requires.

    For WF/JF supply ``f`` taking an (M, s) array of sigma/tau values and
    ``f_partials`` returning the (M, s) array of partial derivatives.  For
    WF_of_HF supply scalar callables ``f``, ``f1``, ``f2``.  For WF_HK
    supply ``f``, ``f_h``, ``f_k`` of (H_F, K_F).  W_nps/J_nps use ``p``
    and W_conf uses ``r``.
    """

    kind: str
    p: float | None = None
    r: int | None = None
    f: object = None
    f_partials: object = None
    f1: object = None
    f2: object = None
    f_h: object = None
    f_k: object = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"unknown functional kind {self.kind!r}")
        if self.kind in ("W_nps", "J_nps") and self.p is None:
            raise SpecError(f"{self.kind} needs the exponent p")
        if self.kind == "W_conf":
            if self.r is None:
                raise SpecError("W_conf needs the conformal order r")
            if self.r != 2:
                raise SpecError("variational formulas are implemented for r = 2 only")
        if self.kind in ("WF", "JF") and (self.f is None or self.f_partials is None):
            raise SpecError(f"{self.kind} needs f and f_partials")
        if self.kind == "WF_of_HF" and (self.f is None or self.f1 is None):
            raise SpecError("WF_of_HF needs f and f1 (f2 for second variations)")
        if self.kind == "WF_HK" and (self.f is None or self.f_h is None or self.f_k is None):
            raise SpecError("WF_HK needs f, f_h and f_k")
        self._spot_check_partials()

    def _spot_check_partials(self, tol: float = 1e-6):
        """Finite-difference consistency of supplied partials at a probe."""
        rng = np.random.default_rng(0)
        if self.kind in ("WF", "JF"):
            validated = False
            for s_dim in (1, 2, 3, 4):
                try:
                    args = 0.5 + 0.1 * rng.standard_normal((4, s_dim))
                    vals = np.asarray(self.f(args), dtype=float)
                    grads = np.asarray(self.f_partials(args), dtype=float)
                except Exception:
                    continue  # functional defined for a specific s only
                if grads.shape != args.shape or vals.shape != (4,):
                    continue  # shapes identify the intended s
                eps = 1e-6
                for k in range(s_dim):
                    bump = args.copy()
                    bump[:, k] += eps
                    fd = (np.asarray(self.f(bump)) - vals) / eps
                    if np.max(np.abs(fd - grads[:, k])) > tol * max(1.0, np.max(np.abs(grads))):
                        raise ValidationError(
                            f"partial {k} of f disagrees with finite differences")
                validated = True
            if not validated:
                raise ValidationError(
                    "could not validate f_partials against f at any probe dimension")
            return
        if self.kind == "WF_of_HF":
            x = np.array([0.8, 1.1, 1.7])
            eps = 1e-6
            fd = (np.asarray(self.f(x + eps)) - np.asarray(self.f(x - eps))) / (2 * eps)
            if np.max(np.abs(fd - np.asarray(self.f1(x)))) > tol * max(1.0, np.max(np.abs(fd))):
                raise ValidationError("f1 disagrees with finite differences of f")
        if self.kind == "WF_HK":
            h, k = np.array([0.9, 1.2]), np.array([0.3, 0.5])
            eps = 1e-6
            fd_h = (np.asarray(self.f(h + eps, k)) - np.asarray(self.f(h - eps, k))) / (2 * eps)
            fd_k = (np.asarray(self.f(h, k + eps)) - np.asarray(self.f(h, k - eps))) / (2 * eps)
            if np.max(np.abs(fd_h - np.asarray(self.f_h(h, k)))) > tol * max(1.0, np.max(np.abs(fd_h))):
                raise ValidationError("f_h disagrees with finite differences of f")
            if np.max(np.abs(fd_k - np.asarray(self.f_k(h, k)))) > tol * max(1.0, np.max(np.abs(fd_k))):
                raise ValidationError("f_k disagrees with finite differences of f")


def w_nps(p: float) -> FunctionalSpec:
    return FunctionalSpec(kind="W_nps", p=p)


def j_nps(p: float) -> FunctionalSpec:
    return FunctionalSpec(kind="J_nps", p=p)


def w_conf(r: int = 2) -> FunctionalSpec:
    return FunctionalSpec(kind="W_conf", r=r)


# ---------------------------------------------------------------------------
# evaluation


def _sigma_args(geo: PointGeometry) -> np.ndarray:
    return geo.sigma[:, 1:]


def _tau_args(geo: PointGeometry, s: int) -> np.ndarray:
    a = geo.a_leaf
    out = np.empty((a.shape[0], s))
    acc = a.copy()
    out[:, 0] = np.einsum("pii->p", acc)
    for i in range(1, s):
        acc = np.einsum("pij,pjk->pik", acc, a)
        out[:, i] = np.einsum("pii->p", acc)
    return out


def integrand(spec: FunctionalSpec, geo: PointGeometry, n: int, s: int) -> np.ndarray:
    """Pointwise functional density (per unit volume)."""
    kind = spec.kind
    if kind == "W_nps":
        return _safe_power(geo.h_f_mean, spec.p)
    if kind == "J_nps":
        return _safe_power(geo.norm_hf_sq, spec.p / 2.0)
    if kind == "WF":
        return np.asarray(spec.f(_sigma_args(geo)), dtype=float)
    if kind == "JF":
        return np.asarray(spec.f(_tau_args(geo, s)), dtype=float)
    if kind == "WF_of_HF":
        return np.asarray(spec.f(geo.h_f_mean), dtype=float)
    if kind == "WF_HK":
        if s != 2:
            raise SpecError("WF_HK requires a 2-dimensional foliation")
        return np.asarray(spec.f(geo.h_f_mean, geo.k_f), dtype=float)
    if kind == "W_conf":
        if spec.r > s:
            raise SpecError(f"conformal order r={spec.r} exceeds s={s}")
        q = q_r_from_sigma(geo.sigma, spec.r, s)
        return _safe_power(q, n / spec.r)
    raise SpecError(f"unknown kind {kind!r}")


def evaluate(spec: FunctionalSpec, surface) -> float:
    """Value of the functional on a patch or a revolution profile."""
    if isinstance(surface, RevolutionProfile):
        return _evaluate_revolution(spec, surface)
    patch: FoliatedPatch = surface
    geo = patch.geometry()
    return patch.integrate(integrand(spec, geo, patch.n, patch.s), geo)


def _evaluate_revolution(spec: FunctionalSpec, profile: RevolutionProfile,
                         quad_nodes: int = 400) -> float:
    """Quadrature over the profile; dV = rho^{n-1} sqrt(1+f'^2) d(angles) d rho."""
    n = profile.n
    nodes, weights = np.polynomial.legendre.leggauss(quad_nodes)
    rho = 0.5 * (profile.rho_max - profile.rho_min) * (nodes + 1) + profile.rho_min
    wts = 0.5 * (profile.rho_max - profile.rho_min) * weights
    inv = invariants(profile, rho)
    if spec.kind == "W_nps":
        dens = _safe_power(inv.h_f_mean, spec.p)
    elif spec.kind == "J_nps":
        dens = _safe_power(inv.norm_hf_sq, spec.p / 2.0)
    elif spec.kind == "WF_of_HF":
        dens = np.asarray(spec.f(inv.h_f_mean), dtype=float)
    else:
        raise SpecError(f"revolution reduction not available for kind {spec.kind!r}")
    return float(sphere_area(n - 1) * np.sum(wts * dens * inv.area_density))


# ---------------------------------------------------------------------------
# first variation


def first_variation_density(spec: FunctionalSpec, geo: PointGeometry, n: int,
                            s: int, u, du, d2u) -> np.ndarray:
    """Pointwise density of the first variation (before volume weighting)."""
    kind = spec.kind
    h_mean = geo.mean_curvature
    if kind in ("W_nps", "WF_of_HF"):
        h_f = geo.h_f_mean
        if kind == "W_nps":
            f_val = _safe_power(h_f, spec.p)
            f_prime = spec.p * _safe_power(h_f, spec.p - 1)
        else:
            f_val = np.asarray(spec.f(h_f), dtype=float)
            f_prime = np.asarray(spec.f1(h_f), dtype=float)
        d_shf = deltas.delta_s_hf(geo, u, du, d2u)
        return (f_prime / s) * d_shf - n * u * f_val * h_mean
    if kind == "J_nps":
        norm_sq = geo.norm_hf_sq
        d_tau2 = deltas.delta_tau(geo, u, du, d2u, 2)
        f_val = _safe_power(norm_sq, spec.p / 2.0)
        f_prime = (spec.p / 2.0) * _safe_power(norm_sq, spec.p / 2.0 - 1.0)
        return f_prime * d_tau2 - n * u * f_val * h_mean
    if kind == "WF":
        args = _sigma_args(geo)
        f_val = np.asarray(spec.f(args), dtype=float)
        grads = np.asarray(spec.f_partials(args), dtype=float)
        acc = -n * u * f_val * h_mean
        for r_idx in range(1, s + 1):
            acc = acc + grads[:, r_idx - 1] * deltas.delta_sigma(geo, u, du, d2u, r_idx)
        return acc
    if kind == "JF":
        args = _tau_args(geo, s)
        f_val = np.asarray(spec.f(args), dtype=float)
        grads = np.asarray(spec.f_partials(args), dtype=float)
        acc = -n * u * f_val * h_mean
        for i_idx in range(1, s + 1):
            acc = acc + grads[:, i_idx - 1] * deltas.delta_tau(geo, u, du, d2u, i_idx)
        return acc
    if kind == "WF_HK":
        if s != 2:
            raise SpecError("WF_HK requires s = 2")
        h_f, k_f = geo.h_f_mean, geo.k_f
        f_val = np.asarray(spec.f(h_f, k_f), dtype=float)
        f_h = np.asarray(spec.f_h(h_f, k_f), dtype=float)
        f_k = np.asarray(spec.f_k(h_f, k_f), dtype=float)
        d_2hf = deltas.delta_s_hf(geo, u, du, d2u)
        d_kf = deltas.delta_k_f(geo, u, du, d2u)
        return 0.5 * f_h * d_2hf + f_k * d_kf - n * u * f_val * h_mean
    if kind == "W_conf":
        r = spec.r
        sigma = geo.sigma
        q = q_r_from_sigma(sigma, r, s)
        if s < 2:
            raise SpecError("W_conf variation needs s >= 2")
        d_s1 = deltas.delta_sigma(geo, u, du, d2u, 1)
        d_s2 = deltas.delta_sigma(geo, u, du, d2u, 2)
        d_q = (2 * (s - 1) * sigma[:, 1] * d_s1 - 2 * s * d_s2) / (s**2 * (s - 1))
        q_pow = _safe_power(q, n / 2.0 - 1.0)
        return (n / 2.0) * q_pow * d_q - n * u * _safe_power(q, n / 2.0) * h_mean
    raise SpecError(f"unknown kind {kind!r}")


def first_variation_analytic(spec: FunctionalSpec, patch: FoliatedPatch,
                             u: VariationField) -> float:
    """First variation from the analytic delta formulas (no integration by
    parts; valid on any foliated patch)."""
    geo = patch.geometry()
    uu, du, d2u = u.jets(patch.grid.points)
    dens = first_variation_density(spec, geo, patch.n, patch.s, uu, du, d2u)
    return patch.integrate(dens, geo)


def first_variation_numeric(spec: FunctionalSpec, patch: FoliatedPatch,
                            u: VariationField,
                            t_steps=DEFAULT_T_LADDER) -> float:
    """Independent oracle: central difference of evaluate() over r + t*u*N,
    Richardson-extrapolated over the two smallest steps."""
    vals = []
    for t in t_steps:
        wp = evaluate(spec, deformed_patch(patch, u, +t))
        wm = evaluate(spec, deformed_patch(patch, u, -t))
        vals.append((wp - wm) / (2.0 * t))
    if len(vals) == 1:
        return float(vals[0])
    return float(richardson(vals, list(t_steps)))


# ---------------------------------------------------------------------------
# Euler-Lagrange residuals


def _derived_scalar(patch: FoliatedPatch, fn, step: float = 1e-3) -> ScalarField:
    return ScalarField.from_callable(lambda x: fn(patch.geometry(x)), n=patch.n,
                                     step=step)


def _derived_leaf_tensor(patch: FoliatedPatch, weight_fn, step: float = 1e-3) -> LeafTensorField:
    s = patch.s

    def tensor(x):
        geo = patch.geometry(x)
        return weight_fn(geo)[:, None, None] * geo.h[:, :s, :s]

    return LeafTensorField(fn=tensor, s=s, step=step)


def el_residual(spec: FunctionalSpec, surface, x=None,
                check_precondition: bool = True, fd_step: float = 1e-3) -> np.ndarray:
    """Pointwise Euler-Lagrange residual of the matching strong equation.

    On revolution profiles the curvatures are constant along parallels and
    the equations collapse to their algebraic forms; on generic patches the
    leafwise operators act on derived curvature fields, which requires a
    transversally harmonic foliation (checked unless disabled).
    """
    if isinstance(surface, RevolutionProfile):
        return _el_residual_revolution(spec, surface, x)
    patch: FoliatedPatch = surface
    if check_precondition and patch.s < patch.n:
        div_norm = transversal_harmonicity_norm(patch)
        if div_norm > 1e-8:
            raise PreconditionError(
                f"foliation is not transversally harmonic: |(div P) o P| = {div_norm:.3e}")
    if x is None:
        pts = patch.grid.points
        # keep clear of non-periodic chart edges by the stencil radius
        margin = 3.0 * fd_step
        keep = np.ones(pts.shape[0], dtype=bool)
        for axis_idx, ax in enumerate(patch.grid.axes):
            if not ax.periodic:
                keep &= (pts[:, axis_idx] > ax.lo + margin) & (
                    pts[:, axis_idx] < ax.hi - margin)
        pts = pts[keep] if np.any(keep) else pts
        x = pts[:: max(1, pts.shape[0] // 32)]
    x = np.atleast_2d(x)
    geo = patch.geometry(x, order=3)
    n, s = patch.n, patch.s
    kind = spec.kind
    h_mean = geo.mean_curvature

    if kind == "W_nps":
        # Delta_F(H_F^{p-1}) + H_F^{p-1}(|h_F|^2 - |h_mix|^2 - (n s / p) H H_F)
        p = spec.p
        fprime = _derived_scalar(patch, lambda g: _safe_power(g.h_f_mean, p - 1), fd_step)
        lap = leaf_laplacian(patch, fprime, x, geo)
        return lap + _safe_power(geo.h_f_mean, p - 1) * (
            geo.norm_hf_sq - geo.norm_hmix_sq
            - (n * s / p) * h_mean * geo.h_f_mean
        )
    if kind == "WF_of_HF":
        # Delta_F F' + F'(|h_F|^2 - |h_mix|^2) - s n F H
        fprime_fn = lambda g: np.asarray(spec.f1(g.h_f_mean), dtype=float)
        fprime = _derived_scalar(patch, fprime_fn, fd_step)
        lap = leaf_laplacian(patch, fprime, x, geo)
        return lap + fprime_fn(geo) * (geo.norm_hf_sq - geo.norm_hmix_sq) \
            - s * n * np.asarray(spec.f(geo.h_f_mean), dtype=float) * h_mean
    if kind == "J_nps":
        p = spec.p
        weight = lambda g: _safe_power(g.norm_hf_sq, (p - 2) / 2.0)
        tensor = _derived_leaf_tensor(patch, weight, fd_step)
        dd = fstar_squared(patch, tensor, x, geo)
        a, c = geo.a_leaf, geo.c_mix
        tr_a3 = np.einsum("pij,pjk,pki->p", a, a, a)
        tr_acc = np.einsum("pij,pja,pia->p", a, c, c)
        w = weight(geo)
        return dd + w * (tr_a3 - tr_acc - (n / p) * geo.norm_hf_sq * h_mean)
    if kind == "WF_HK":
        if s != 2:
            raise SpecError("WF_HK requires s = 2")
        h_f, k_f = geo.h_f_mean, geo.k_f
        f_val = np.asarray(spec.f(h_f, k_f), dtype=float)
        f_k = np.asarray(spec.f_k(h_f, k_f), dtype=float)
        f_h = np.asarray(spec.f_h(h_f, k_f), dtype=float)
        combo = _derived_scalar(
            patch,
            lambda g: 0.5 * np.asarray(spec.f_h(g.h_f_mean, g.k_f), dtype=float)
            + 2.0 * g.h_f_mean * np.asarray(spec.f_k(g.h_f_mean, g.k_f), dtype=float),
            fd_step,
        )
        lap = leaf_laplacian(patch, combo, x, geo)
        tensor = _derived_leaf_tensor(
            patch, lambda g: np.asarray(spec.f_k(g.h_f_mean, g.k_f), dtype=float),
            fd_step)
        dd = fstar_squared(patch, tensor, x, geo)
        a, c = geo.a_leaf, geo.c_mix
        tr_acc = np.einsum("pij,pja,pia->p", a, c, c)
        return (
            lap
            - dd
            + f_h * (2 * h_f**2 - k_f - 0.5 * geo.norm_hmix_sq)
            + f_k * (2 * h_f * (k_f - geo.norm_hmix_sq) + tr_acc)
            - n * f_val * h_mean
        )
    if kind == "W_conf":
        r = spec.r
        if s < 2:
            raise SpecError("W_conf residual needs s >= 2")
        sigma = geo.sigma
        q = q_r_from_sigma(sigma, r, s)
        q_pow = _safe_power(q, n / 2.0 - 1.0)

        def qpow_fn(g):
            return _safe_power(q_r_from_sigma(g.sigma, r, s), n / 2.0 - 1.0)

        combo = _derived_scalar(patch, lambda g: qpow_fn(g) * g.sigma[:, 1], fd_step)
        lap = leaf_laplacian(patch, combo, x, geo)

        def newton_weighted(pts):
            # (Q_2)^{n/2-1} T_1(A_F) = q_pow (sigma_1 g_L - h_F) in leaf coords
            g = patch.geometry(pts)
            qp = qpow_fn(g)
            s1 = g.sigma[:, 1]
            return (qp * s1)[:, None, None] * g.g_ff - qp[:, None, None] * g.h[:, :s, :s]

        tensor = LeafTensorField(fn=newton_weighted, s=s, step=fd_step)
        dd = fstar_squared(patch, tensor, x, geo)
        a, c = geo.a_leaf, geo.c_mix
        sig = np.concatenate([sigma, np.zeros((sigma.shape[0], 1))], axis=1)
        tr_t1cc = sig[:, 1] * np.einsum("pia,pia->p", c, c) - np.einsum(
            "pij,pja,pia->p", a, c, c)
        alg = (
            sig[:, 1] * (sig[:, 1] ** 2 - 2 * sig[:, 2] - geo.norm_hmix_sq)
            - (s / (s - 1)) * (sig[:, 1] * sig[:, 2] - 3 * sig[:, 3] - tr_t1cc)
            - s**2 * q * h_mean
        )
        return lap - (s / (s - 1)) * dd + q_pow * alg
    raise SpecError(f"no Euler-Lagrange residual for kind {spec.kind!r}")


def _el_residual_revolution(spec: FunctionalSpec, profile: RevolutionProfile,
                            rho=None) -> np.ndarray:
    """Algebraic residual on revolution hypersurfaces (curvatures constant
    on parallels, h_mix = 0)."""
    rho = profile.sample(200) if rho is None else np.asarray(rho, dtype=float)
    inv = invariants(profile, rho)
    n = profile.n
    s = n - 1
    if spec.kind == "W_nps":
        return spec.p * inv.norm_hf_sq - n * s * inv.mean * inv.h_f_mean
    if spec.kind == "J_nps":
        return spec.p * inv.hf_hf2 - n * inv.norm_hf_sq * inv.mean
    if spec.kind == "WF_of_HF":
        f_val = np.asarray(spec.f(inv.h_f_mean), dtype=float)
        f_prime = np.asarray(spec.f1(inv.h_f_mean), dtype=float)
        return f_prime * inv.norm_hf_sq - s * n * f_val * inv.mean
    raise SpecError(f"revolution residual not available for kind {spec.kind!r}")


# ---------------------------------------------------------------------------
# second variation


def second_variation_analytic(spec: FunctionalSpec, surface, u,
                              residual_tol: float = 1e-6,
                              allow_constant_residual: bool = False,
                              residual_fd_step: float = 1e-3) -> float:
    """Second variation at a critical surface.

    Patches evaluate the quadratic form for F = F(H_F)-type functionals
    (W_nps and WF_of_HF); revolution profiles delegate to the specialized
    parallel-mode form.  Mixed-curvature terms follow the stated quadratic
    form; they vanish on every surface this is exercised on (h_mix = 0).
    """
    if isinstance(surface, RevolutionProfile):
        if spec.kind != "W_nps":
            raise SpecError("revolution second variation implemented for W_nps")
        return second_variation_revolution(surface, spec.p, **u)
    patch: FoliatedPatch = surface
    if spec.kind not in ("W_nps", "WF_of_HF"):
        raise SpecError("second variation implemented for F = F(H_F) kinds")
    res = el_residual(spec, patch, fd_step=residual_fd_step)
    res_scale = float(np.max(np.abs(res)))
    if allow_constant_residual:
        res_scale = float(np.max(np.abs(res - np.mean(res))))
    if res_scale > residual_tol:
        raise PreconditionError(
            f"surface is not critical: max residual {res_scale:.3e} > {residual_tol:.1e}")

    n, s = patch.n, patch.s
    x = patch.grid.points
    geo = patch.geometry(x, order=3)
    uu, du, d2u = u.jets(x)
    h_f = geo.h_f_mean
    if spec.kind == "W_nps":
        p = spec.p
        f_val = _safe_power(h_f, p)
        f_p = p * _safe_power(h_f, p - 1)
        f_pp = p * (p - 1) * _safe_power(h_f, p - 2)
        fprime_field = _derived_scalar(patch, lambda g: p * _safe_power(g.h_f_mean, p - 1))
    else:
        f_val = np.asarray(spec.f(h_f), dtype=float)
        f_p = np.asarray(spec.f1(h_f), dtype=float)
        if spec.f2 is None:
            raise SpecError("WF_of_HF second variation needs f2")
        f_pp = np.asarray(spec.f2(h_f), dtype=float)
        fprime_field = _derived_scalar(
            patch, lambda g: np.asarray(spec.f1(g.h_f_mean), dtype=float))

    h_mean = geo.mean_curvature
    lap_u = laplacian_block(geo, du, d2u)
    lap_full_u = laplacian_full(geo, du, d2u)
    lap_fprime = leaf_laplacian(patch, fprime_field, x, geo)
    mix_diff = geo.norm_hf_sq - geo.norm_hmix_sq
    a, c, b = geo.a_leaf, geo.c_mix, geo.b_perp
    hb = deltas._frame_leaf_block(geo, hessian_full(geo, du, d2u))
    pair_hess = np.einsum("pij,pij->p", a, hb)
    hm = hessian_mixed_frame(geo, du, d2u)
    pair_mix_hess = np.einsum("pia,pia->p", hm, c)
    xi = leaf_gradient(geo, du)
    grad_sq = np.einsum("pi,pij,pj->p", xi, geo.g_ff, xi)
    h_grad = np.einsum("pi,pij,pj->p", xi, geo.h[:, :s, :s], xi)
    dshf = deltas._leaf_function_gradient_shf(geo)
    hf_grad_u = np.einsum("pj,pij,pi->p", dshf / s, geo.g_ff_inv, du[:, :s])
    tr_a3 = np.einsum("pij,pjk,pki->p", a, a, a)
    tr_acc = np.einsum("pij,pja,pia->p", a, c, c)
    tr_bcc = np.einsum("pab,pia,pib->p", b, c, c)

    term1 = -(n / s) * (f_p * lap_u - uu * lap_fprime) * uu * h_mean
    term2 = (f_p / s) * (
        2.0 * uu * pair_hess + s * uu * hf_grad_u + 2.0 * h_grad - s * h_f * grad_sq
    ) + (f_pp / s**2) * lap_u * (lap_u + uu * mix_diff)
    term3 = uu * (
        ((f_pp / s**2) * mix_diff - (n / s) * h_mean * f_p) * (lap_u + uu * mix_diff)
        - f_val * (lap_full_u + uu * geo.norm_h_sq)
        + (f_p / s) * (
            2.0 * (uu * (tr_a3 + tr_acc) + pair_hess)
            - uu * (tr_acc + tr_bcc)
            - 2.0 * pair_mix_hess
        )
    )
    return patch.integrate(term1 + term2 + term3, geo)


# ---------------------------------------------------------------------------
# conformal invariance


def conformal_density(patch_like, r: int, x: np.ndarray, n: int, s: int,
                      supplier=None) -> np.ndarray:
    """(Q_r)^{n/r} sqrt(det g) at given parameter points."""
    from dataclasses import replace

    patch = patch_like if supplier is None else replace(patch_like, supplier=supplier)
    geo = patch.geometry(x)
    q = q_r_from_sigma(geo.sigma, r, s)
    if r % 2 == 1 and np.any(q < -POWER_EPS):
        raise DomainError("odd-order conformal density needs a positive Q_r")
    base = np.abs(q)
    out = np.zeros_like(base)
    mask = base > POWER_EPS
    out[mask] = base[mask] ** (n / r)  # umbilic leaves contribute zero density
    return out * geo.sqrt_det_g


def conformal_density_check(patch: FoliatedPatch, r: int = 2,
                            mode: str = "inversion", scale: float = 2.0,
                            x: np.ndarray | None = None) -> dict:
    """Invariance of (Q_r)^{n/r} sqrt(det g) under an ambient conformal map.

    mode 'scaling' applies x -> scale * x; mode 'inversion' applies the
    Möbius inversion x -> x/|x|^2 (the patch must avoid the origin).  For
    the inversion the shape-operator transformation law with conformal
    factor mu = |x|^{-2} is verified as well; the image normal is matched
    up to the overall sign of the transported orientation.
    """
    if r > patch.s:
        raise DomainError(f"conformal order r={r} exceeds leaf dimension s={patch.s}")
    if x is None:
        pts = patch.grid.points
        x = pts[:: max(1, pts.shape[0] // 64)]
    base = conformal_density(patch, r, x, patch.n, patch.s)
    if mode == "scaling":
        image_supplier = ScaledImmersion(patch.supplier, scale)
        image = conformal_density(patch, r, x, patch.n, patch.s, supplier=image_supplier)
        rel = np.max(np.abs(image - base) / np.maximum(np.abs(base), 1e-300))
        return {"mode": mode, "max_rel_deviation": float(rel), "shape_law_deviation": 0.0}
    if mode != "inversion":
        raise DomainError(f"unknown conformal mode {mode!r}")
    image_supplier = InvertedImmersion(patch.supplier)
    image = conformal_density(patch, r, x, patch.n, patch.s, supplier=image_supplier)
    rel = np.max(np.abs(image - base) / np.maximum(np.abs(base), 1e-300))

    # shape operator law: A_F^c = (1/mu)(A_F - (1/mu) <grad mu, N> id)
    from dataclasses import replace

    geo = patch.geometry(x)
    geo_img = replace(patch, supplier=image_supplier).geometry(x)
    pos = geo.jets.r
    w = np.einsum("pa,pa->p", pos, pos)
    mu = 1.0 / w
    grad_mu = -2.0 * pos / w[:, None] ** 2
    mu_n = np.einsum("pa,pa->p", grad_mu, geo.normal)
    expected = (geo.a_leaf - (mu_n / mu)[:, None, None] * np.eye(patch.s)) / mu[:, None, None]
    got = geo_img.a_leaf
    dev = min(
        float(np.max(np.abs(got - expected))),
        float(np.max(np.abs(got + expected))),
    )
    return {"mode": mode, "max_rel_deviation": float(rel), "shape_law_deviation": dev}


# ---------------------------------------------------------------------------
# helpers used by stability checks


def project_volume_preserving(patch: FoliatedPatch, u: VariationField) -> VariationField:
    """Remove the volume-changing mean: u -> u - (int u dV)/(int dV)."""
    geo = patch.geometry()
    mean = patch.integrate(u(patch.grid.points), geo) / patch.integrate(
        np.ones(patch.grid.points.shape[0]), geo)

    base = u.u

    def shifted(x):
        return base(x) - mean

    # jets share the same derivatives; only the value shifts
    def jets(x):
        val, du, d2u = base.jets(x)
        return val - mean, du, d2u

    return VariationField(u=ScalarField(jets_fn=jets, fn=shifted))

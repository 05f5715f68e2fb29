"""Derivative suppliers for immersions r : U ⊂ R^n -> R^{n+1}.

A supplier produces the jet of an immersion (value and partial derivatives
up to third order) at a batch of parameter points.  Analytic suppliers are
generated from sympy expressions once and evaluated with numpy; the
finite-difference supplier wraps any callable.  Derived suppliers build
normal deformations r + t*u*N, ambient homotheties and Möbius inversions
on top of a base supplier.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import sympy as sp

from .errors import DomainError, SingularImmersionError


@dataclass
class Jets:
    """Immersion jet at a batch of points.

    r has shape (M, m) with m = n+1; d1 (M, m, n); d2 (M, m, n, n);
    d3 (M, m, n, n, n) or None when not requested/available.
    """

    r: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray | None = None

    @property
    def npoints(self) -> int:
        return self.r.shape[0]


class AnalyticSupplier:
    """Closed-form jets lambdified from sympy component expressions."""

    def __init__(self, coords, exprs):
        self.n = len(coords)
        self.m = len(exprs)
        self._f = []
        self._f1 = {}
        self._f2 = {}
        self._f3 = {}
        for a, expr in enumerate(exprs):
            expr = sp.sympify(expr)
            self._f.append(sp.lambdify(coords, expr, modules="numpy"))
            for i in range(self.n):
                di = sp.diff(expr, coords[i])
                self._f1[a, i] = sp.lambdify(coords, di, modules="numpy")
                for j in range(i, self.n):
                    dij = sp.diff(di, coords[j])
                    self._f2[a, i, j] = sp.lambdify(coords, dij, modules="numpy")
                    for k in range(j, self.n):
                        dijk = sp.diff(dij, coords[k])
                        self._f3[a, i, j, k] = sp.lambdify(coords, dijk, modules="numpy")

    def _eval(self, fn, args, mpts):
        val = fn(*args)
        return np.broadcast_to(np.asarray(val, dtype=float), (mpts,))

    def jets(self, x: np.ndarray, order: int = 2) -> Jets:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        mpts = x.shape[0]
        args = [x[:, i] for i in range(self.n)]
        r = np.stack([self._eval(f, args, mpts) for f in self._f], axis=1)
        d1 = np.empty((mpts, self.m, self.n))
        for a in range(self.m):
            for i in range(self.n):
                d1[:, a, i] = self._eval(self._f1[a, i], args, mpts)
        d2 = np.empty((mpts, self.m, self.n, self.n))
        for a in range(self.m):
            for i in range(self.n):
                for j in range(i, self.n):
                    v = self._eval(self._f2[a, i, j], args, mpts)
                    d2[:, a, i, j] = v
                    d2[:, a, j, i] = v
        d3 = None
        if order >= 3:
            d3 = np.empty((mpts, self.m, self.n, self.n, self.n))
            for a in range(self.m):
                for i in range(self.n):
                    for j in range(i, self.n):
                        for k in range(j, self.n):
                            v = self._eval(self._f3[a, i, j, k], args, mpts)
                            for perm in set(itertools.permutations((i, j, k))):
                                d3[(slice(None), a) + perm] = v
        return Jets(r=r, d1=d1, d2=d2, d3=d3)


# 4th-order central first/second derivative weights on +/-2h, +/-h, 0
_W1_4 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_W2_4 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_OFF = np.array([-2, -1, 0, 1, 2])


class FiniteDifferenceSupplier:
    """Jets of a black-box immersion callable via central stencils.

    First and second derivatives use 4th-order stencils; third derivatives
    difference the second-derivative output with a 2nd-order stencil.  The
    step is per-axis and should be small relative to the feature scale of
    the immersion but large enough to stay clear of rounding noise.
    """

    def __init__(self, fn, n: int, step=1e-2):
        self.fn = fn
        self.n = n
        self.step = np.broadcast_to(np.asarray(step, dtype=float), (n,)).copy()

    def _value(self, x):
        v = np.asarray(self.fn(np.atleast_2d(x)), dtype=float)
        return v

    def _d1(self, x):
        mpts = x.shape[0]
        r0 = self._value(x)
        d1 = np.empty((mpts, r0.shape[1], self.n))
        for i in range(self.n):
            h = self.step[i]
            vals = []
            for o in _OFF:
                if o == 0:
                    vals.append(r0)
                    continue
                xs = x.copy()
                xs[:, i] += o * h
                vals.append(self._value(xs))
            d1[:, :, i] = sum(w * v for w, v in zip(_W1_4, vals)) / h
        return r0, d1

    def _d2(self, x):
        mpts = x.shape[0]
        r0 = self._value(x)
        m = r0.shape[1]
        d2 = np.empty((mpts, m, self.n, self.n))
        for i in range(self.n):
            h = self.step[i]
            vals = []
            for o in _OFF:
                if o == 0:
                    vals.append(r0)
                    continue
                xs = x.copy()
                xs[:, i] += o * h
                vals.append(self._value(xs))
            d2[:, :, i, i] = sum(w * v for w, v in zip(_W2_4, vals)) / h**2
        for i in range(self.n):
            for j in range(i + 1, self.n):
                hi, hj = self.step[i], self.step[j]
                acc = np.zeros((mpts, m))
                for oi, wi in zip(_OFF, _W1_4):
                    if wi == 0.0:
                        continue
                    for oj, wj in zip(_OFF, _W1_4):
                        if wj == 0.0:
                            continue
                        xs = x.copy()
                        xs[:, i] += oi * hi
                        xs[:, j] += oj * hj
                        acc += wi * wj * self._value(xs)
                d2[:, :, i, j] = acc / (hi * hj)
                d2[:, :, j, i] = d2[:, :, i, j]
        return r0, d2

    def jets(self, x: np.ndarray, order: int = 2) -> Jets:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r0, d1 = self._d1(x)
        _, d2 = self._d2(x)
        d3 = None
        if order >= 3:
            mpts, m = r0.shape
            d3 = np.empty((mpts, m, self.n, self.n, self.n))
            for k in range(self.n):
                h = 10.0 * self.step[k]
                xp = x.copy()
                xp[:, k] += h
                xm = x.copy()
                xm[:, k] -= h
                d3[..., k] = (self._d2(xp)[1] - self._d2(xm)[1]) / (2 * h)
            d3 = 0.5 * (d3 + np.swapaxes(d3, -1, -2))
        return Jets(r=r0, d1=d1, d2=d2, d3=d3)


def normal_jets(jets: Jets, orientation: float = 1.0):
    """Unit normal of the immersion and, when d3 is present, its 1- and 2-jets.

    The raw normal is the generalized cross product of the tangent vectors;
    its length equals sqrt(det g).  The orientation flag flips the sign of
    the returned normal.  First derivatives come from the Weingarten map
    dN = -A^k_i r_k; second derivatives differentiate that relation and
    therefore need third derivatives of the immersion.
    """
    d1 = jets.d1
    mpts, m, n = d1.shape
    raw = np.empty((mpts, m))
    for a in range(m):
        rows = [b for b in range(m) if b != a]
        raw[:, a] = (-1.0) ** (a + n) * np.linalg.det(d1[:, rows, :])
    length = np.linalg.norm(raw, axis=1)
    if np.any(length <= 0) or not np.all(np.isfinite(length)):
        raise SingularImmersionError("immersion Jacobian is rank-deficient")
    nvec = orientation * raw / length[:, None]

    g = np.einsum("pai,paj->pij", d1, d1)
    g_inv = np.linalg.inv(g)
    h = np.einsum("pa,paij->pij", nvec, jets.d2)
    a_op = np.einsum("pik,pkj->pij", g_inv, h)
    dn = -np.einsum("pki,pak->pai", a_op, d1)  # dn[:, :, i] = partial_i N
    if jets.d3 is None:
        return nvec, dn, None, a_op, g, g_inv, h

    # dh[:, k, i, j] = partial_k h_ij ;  dg[:, k, i, j] = partial_k g_ij
    dh = np.einsum("pak,paij->pkij", dn, jets.d2) + np.einsum("pa,paijk->pkij", nvec, jets.d3)
    dg = np.einsum("paik,paj->pkij", jets.d2, d1) + np.einsum("pai,pajk->pkij", d1, jets.d2)
    dg_inv = -np.einsum("pim,pkmn,pnj->pkij", g_inv, dg, g_inv)
    da = np.einsum("pkim,pmj->pkij", dg_inv, h) + np.einsum("pim,pkmj->pkij", g_inv, dh)
    d2n = -np.einsum("pjki,pak->paij", da, d1) - np.einsum("pki,pakj->paij", a_op, jets.d2)
    return nvec, dn, d2n, a_op, g, g_inv, h


class NormalDeformation:
    """Immersion family r_t = r + t*u*N over a base supplier.

    Supplies jets up to second order of the deformed immersion at a fixed
    deformation parameter t; the base supplier must provide third-order
    jets (the second jet of N needs them).
    """

    def __init__(self, base, u_jets_fn, t: float, orientation: float = 1.0):
        self.base = base
        self.u_jets_fn = u_jets_fn
        self.t = float(t)
        self.orientation = float(orientation)

    def jets(self, x: np.ndarray, order: int = 2) -> Jets:
        if order >= 3:
            raise DomainError("deformed immersions supply jets up to order 2 only")
        x = np.atleast_2d(np.asarray(x, dtype=float))
        bj = self.base.jets(x, order=3)
        nvec, dn, d2n, *_ = normal_jets(bj, self.orientation)
        u, du, d2u = self.u_jets_fn(x)
        t = self.t
        r = bj.r + t * u[:, None] * nvec
        d1 = bj.d1 + t * (du[:, None, :] * nvec[:, :, None] + u[:, None, None] * dn)
        d2 = bj.d2 + t * (
            d2u[:, None, :, :] * nvec[:, :, None, None]
            + du[:, None, :, None] * dn[:, :, None, :]
            + du[:, None, None, :] * dn[:, :, :, None]
            + u[:, None, None, None] * d2n
        )
        return Jets(r=r, d1=d1, d2=d2, d3=None)


class ReparametrizedSupplier:
    """Chart change r' = r o psi by the chain rule (exact, all orders).

    psi_jets_fn(x') must return (y, J, d2psi, d3psi) with J[p,i,a] =
    d y^i / d x'^a and the higher jets shaped accordingly.
    """

    def __init__(self, base, psi_jets_fn):
        self.base = base
        self.psi_jets_fn = psi_jets_fn

    def jets(self, x: np.ndarray, order: int = 2) -> Jets:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y, jac, p2, p3 = self.psi_jets_fn(x)
        bj = self.base.jets(y, order=order)
        d1 = np.einsum("pmi,pia->pma", bj.d1, jac)
        d2 = np.einsum("pmij,pia,pjb->pmab", bj.d2, jac, jac) + np.einsum(
            "pmi,piab->pmab", bj.d1, p2)
        d3 = None
        if order >= 3:
            d3 = (
                np.einsum("pmijk,pia,pjb,pkc->pmabc", bj.d3, jac, jac, jac)
                + np.einsum("pmij,piab,pjc->pmabc", bj.d2, p2, jac)
                + np.einsum("pmij,piac,pjb->pmabc", bj.d2, p2, jac)
                + np.einsum("pmij,pia,pjbc->pmabc", bj.d2, jac, p2)
                + np.einsum("pmi,piabc->pmabc", bj.d1, p3)
            )
        return Jets(r=bj.r, d1=d1, d2=d2, d3=d3)


class ScaledImmersion:
    """Ambient homothety x -> c*x of a base supplier."""

    def __init__(self, base, c: float):
        self.base = base
        self.c = float(c)

    def jets(self, x: np.ndarray, order: int = 2) -> Jets:
        bj = self.base.jets(x, order=order)
        c = self.c
        return Jets(
            r=c * bj.r,
            d1=c * bj.d1,
            d2=c * bj.d2,
            d3=None if bj.d3 is None else c * bj.d3,
        )


class InvertedImmersion:
    """Möbius inversion x -> x/|x|^2 of a base supplier (chain rule, order 2).

    The base surface must stay away from the origin.
    """

    def __init__(self, base):
        self.base = base

    def jets(self, x: np.ndarray, order: int = 2) -> Jets:
        if order >= 3:
            raise DomainError("inverted immersions supply jets up to order 2 only")
        bj = self.base.jets(x, order=2)
        r, d1, d2 = bj.r, bj.d1, bj.d2
        w = np.einsum("pa,pa->p", r, r)
        if np.any(w < 1e-14):
            raise DomainError("surface passes through the inversion center")
        dw = 2.0 * np.einsum("pa,pai->pi", r, d1)
        d2w = 2.0 * (np.einsum("pai,paj->pij", d1, d1) + np.einsum("pa,paij->pij", r, d2))
        iw = 1.0 / w
        ri = d1 * iw[:, None, None] - r[:, :, None] * (dw * iw[:, None] ** 2)[:, None, :]
        rij = (
            d2 * iw[:, None, None, None]
            - d1[:, :, :, None] * (dw * iw[:, None] ** 2)[:, None, None, :]
            - d1[:, :, None, :] * (dw * iw[:, None] ** 2)[:, None, :, None]
            - r[:, :, None, None] * (d2w * iw[:, None, None] ** 2)[:, None, :, :]
            + 2.0
            * r[:, :, None, None]
            * (dw[:, :, None] * dw[:, None, :] * iw[:, None, None] ** 3)[:, None, :, :]
        )
        return Jets(r=r * iw[:, None], d1=ri, d2=rij, d3=None)


def scalar_jets_from_callable(fn, n: int, step=2e-3, grad=None, hess=None):
    """Build a jet function x -> (u, du, d2u) for a smooth scalar field.

    Analytic gradient/Hessian callables are used when given; otherwise
    4th-order central differences of the callable.
    """
    step = np.broadcast_to(np.asarray(step, dtype=float), (n,)).copy()

    def jets(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        mpts = x.shape[0]
        u = np.broadcast_to(np.asarray(fn(x), dtype=float), (mpts,)).copy()
        if grad is not None and hess is not None:
            return u, np.asarray(grad(x), dtype=float), np.asarray(hess(x), dtype=float)
        du = np.empty((mpts, n))
        d2u = np.empty((mpts, n, n))
        cache = {}

        def val(offsets):
            key = tuple(offsets)
            if key not in cache:
                xs = x.copy()
                for axis, o in offsets:
                    xs[:, axis] += o * step[axis]
                cache[key] = np.broadcast_to(np.asarray(fn(xs), dtype=float), (mpts,))
            return cache[key]

        for i in range(n):
            vals = [val(((i, o),)) if o else u for o in _OFF]
            du[:, i] = sum(w * v for w, v in zip(_W1_4, vals)) / step[i]
            d2u[:, i, i] = sum(w * v for w, v in zip(_W2_4, vals)) / step[i] ** 2
        for i in range(n):
            for j in range(i + 1, n):
                acc = np.zeros(mpts)
                for oi, wi in zip(_OFF, _W1_4):
                    if wi == 0.0:
                        continue
                    for oj, wj in zip(_OFF, _W1_4):
                        if wj == 0.0:
                            continue
                        acc += wi * wj * val(((i, oi), (j, oj)))
                d2u[:, i, j] = acc / (step[i] * step[j])
                d2u[:, j, i] = d2u[:, i, j]
        return u, du, d2u

    return jets

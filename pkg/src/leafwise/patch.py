"""Foliated patches: grids, pointwise geometry and adapted frames.

A FoliatedPatch is a gridded immersion of an n-manifold chart into R^{n+1}
whose first s coordinates run along the leaves of a foliation.  All
pointwise quantities (metric, normal, second fundamental form, orthogonal
projector, foliated blocks, Christoffel symbols) are computed in batch
over arbitrary parameter points; the grid only drives quadrature and
grid-sampled fields.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError, SingularImmersionError
from .suppliers import Jets, normal_jets
from .symfunc import sigma_all


@dataclass(frozen=True)
class Axis:
    """One grid axis: quadrature nodes, weights and periodicity."""

    nodes: np.ndarray
    weights: np.ndarray
    periodic: bool
    lo: float
    hi: float

    def __post_init__(self):
        if not np.all(np.diff(self.nodes) > 0):
            raise DomainError("axis nodes must be strictly increasing")


def periodic_axis(lo: float, hi: float, m: int) -> Axis:
    """Uniform nodes on [lo, hi) with trapezoid weights (spectrally accurate
    for smooth periodic integrands)."""
    nodes = lo + (hi - lo) * np.arange(m) / m
    weights = np.full(m, (hi - lo) / m)
    return Axis(nodes=nodes, weights=weights, periodic=True, lo=lo, hi=hi)


def gauss_axis(lo: float, hi: float, m: int) -> Axis:
    """Gauss-Legendre nodes and weights mapped to [lo, hi]."""
    xs, ws = np.polynomial.legendre.leggauss(m)
    nodes = 0.5 * (hi - lo) * (xs + 1.0) + lo
    weights = 0.5 * (hi - lo) * ws
    return Axis(nodes=nodes, weights=weights, periodic=False, lo=lo, hi=hi)


def uniform_axis(lo: float, hi: float, m: int) -> Axis:
    """Closed uniform grid with trapezoid weights (for sampled fields)."""
    nodes = np.linspace(lo, hi, m)
    w = np.full(m, (hi - lo) / (m - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return Axis(nodes=nodes, weights=w, periodic=False, lo=lo, hi=hi)


@dataclass(frozen=True)
class Grid:
    """Tensor-product grid over the chart."""

    axes: tuple[Axis, ...]

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(ax.nodes) for ax in self.axes)

    @cached_property
    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*[ax.nodes for ax in self.axes], indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @cached_property
    def weights(self) -> np.ndarray:
        mesh = np.meshgrid(*[ax.weights for ax in self.axes], indexing="ij")
        w = np.ones(self.shape)
        for m in mesh:
            w = w * m
        return w.ravel()

    def node_point(self, index) -> np.ndarray:
        return np.array([ax.nodes[i] for ax, i in zip(self.axes, index)])


@dataclass
class PointGeometry:
    """Pointwise geometric bundle of a foliated patch (batched).

    Index conventions: leading axis enumerates points; coordinate indices
    are ordered leafwise-first.  Frame quantities live in an orthonormal
    adapted frame (first s vectors span the leaf tangent).  The mixed-block
    norm follows the index-block convention |h_mix|^2 = sum_{i<=s<a} h(e_i,e_a)^2;
    the symmetrized tensor built from the projector has half that square
    norm and is exposed separately.
    """

    x: np.ndarray
    jets: Jets
    g: np.ndarray
    g_inv: np.ndarray
    sqrt_det_g: np.ndarray
    normal: np.ndarray
    h: np.ndarray
    shape_op: np.ndarray
    dg: np.ndarray
    gamma: np.ndarray
    proj: np.ndarray
    frame: np.ndarray
    a_frame: np.ndarray
    s: int

    @property
    def n(self) -> int:
        return self.g.shape[-1]

    # foliated blocks in the adapted orthonormal frame
    @property
    def a_leaf(self) -> np.ndarray:
        return self.a_frame[:, : self.s, : self.s]

    @property
    def c_mix(self) -> np.ndarray:
        return self.a_frame[:, : self.s, self.s :]

    @property
    def b_perp(self) -> np.ndarray:
        return self.a_frame[:, self.s :, self.s :]

    @cached_property
    def leaf_eigs(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.a_leaf)

    @cached_property
    def sigma(self) -> np.ndarray:
        """Elementary symmetric functions sigma_0..sigma_s of the leaf block."""
        return sigma_all(self.leaf_eigs)

    @property
    def mean_curvature(self) -> np.ndarray:
        return np.einsum("pii->p", self.shape_op) / self.n

    @property
    def h_f_mean(self) -> np.ndarray:
        return self.sigma[:, 1] / self.s

    @property
    def k_f(self) -> np.ndarray:
        if self.s < 2:
            raise DomainError("leaf Gauss curvature needs s >= 2")
        return self.sigma[:, 2]

    @property
    def norm_h_sq(self) -> np.ndarray:
        return np.einsum("pij,pij->p", self.a_frame, self.a_frame)

    @property
    def norm_hf_sq(self) -> np.ndarray:
        return np.einsum("pij,pij->p", self.a_leaf, self.a_leaf)

    @property
    def norm_hmix_sq(self) -> np.ndarray:
        return np.einsum("pia,pia->p", self.c_mix, self.c_mix)

    @property
    def norm_hmix_sym_sq(self) -> np.ndarray:
        return 0.5 * self.norm_hmix_sq

    @property
    def g_ff(self) -> np.ndarray:
        return self.g[:, : self.s, : self.s]

    @cached_property
    def g_ff_inv(self) -> np.ndarray:
        return np.linalg.inv(self.g_ff)

    @cached_property
    def gamma_leaf(self) -> np.ndarray:
        """Christoffel symbols of the induced leaf metric (leaf indices only)."""
        s = self.s
        dgl = self.dg[:, :s, :s, :s]
        # bracket[p, i, j, l] = d_i g_jl + d_j g_il - d_l g_ij
        bracket = dgl + np.transpose(dgl, (0, 2, 1, 3)) - np.transpose(dgl, (0, 2, 3, 1))
        return 0.5 * np.einsum("pkl,pijl->pkij", self.g_ff_inv, bracket)

    def single(self, i: int) -> "PointGeometry":
        """View of one point (still batched with M = 1)."""
        sl = slice(i, i + 1)
        return PointGeometry(
            x=self.x[sl],
            jets=Jets(
                r=self.jets.r[sl],
                d1=self.jets.d1[sl],
                d2=self.jets.d2[sl],
                d3=None if self.jets.d3 is None else self.jets.d3[sl],
            ),
            g=self.g[sl],
            g_inv=self.g_inv[sl],
            sqrt_det_g=self.sqrt_det_g[sl],
            normal=self.normal[sl],
            h=self.h[sl],
            shape_op=self.shape_op[sl],
            dg=self.dg[sl],
            gamma=self.gamma[sl],
            proj=self.proj[sl],
            frame=self.frame[sl],
            a_frame=self.a_frame[sl],
            s=self.s,
        )


@dataclass(frozen=True)
class FoliatedPatch:
    """Gridded immersion with a coordinate foliation (first s axes leafwise)."""

    n: int
    s: int
    supplier: object
    grid: Grid
    normal_orientation: float = 1.0
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 1 <= self.s <= self.n:
            raise DomainError(f"leaf dimension s={self.s} outside 1..{self.n}")
        if self.grid.ndim != self.n:
            raise DomainError("grid dimension does not match the chart dimension")

    def geometry(self, x: np.ndarray | None = None, order: int = 2) -> PointGeometry:
        """Pointwise geometry at the given parameter points (default: grid)."""
        if x is None:
            x = self.grid.points
        x = np.atleast_2d(np.asarray(x, dtype=float))
        jets = self.supplier.jets(x, order=order)
        nvec, _, _, a_op, g, g_inv, h = normal_jets(jets, self.normal_orientation)
        det = np.linalg.det(g)
        if np.any(det <= 0):
            raise SingularImmersionError("metric determinant non-positive on the patch")
        dg = np.einsum("paik,paj->pkij", jets.d2, jets.d1) + np.einsum(
            "pai,pajk->pkij", jets.d1, jets.d2
        )
        # bracket[p, i, j, l] = d_i g_jl + d_j g_il - d_l g_ij
        bracket = dg + np.transpose(dg, (0, 2, 1, 3)) - np.transpose(dg, (0, 2, 3, 1))
        gamma = 0.5 * np.einsum("pkl,pijl->pkij", g_inv, bracket)

        s, n = self.s, self.n
        mpts = x.shape[0]
        g_ff = g[:, :s, :s]
        g_ff_inv = np.linalg.inv(g_ff)
        proj = np.zeros((mpts, n, n))
        proj[:, :s, :s] = np.eye(s)
        if s < n:
            b_blk = np.einsum("pij,pja->pia", g_ff_inv, g[:, :s, s:])
            proj[:, :s, s:] = b_blk

        # adapted orthonormal frame: leaf part from the leaf metric block,
        # transverse part from the g-orthogonal complement of the leaves
        frame = np.zeros((mpts, n, n))
        lf = np.linalg.cholesky(g_ff)
        frame[:, :s, :s] = np.linalg.inv(np.swapaxes(lf, -1, -2))
        if s < n:
            v = np.zeros((mpts, n, n - s))
            v[:, :s, :] = -b_blk
            v[:, s:, :] = np.eye(n - s)
            gv = np.einsum("pia,pij,pjb->pab", v, g, v)
            lv = np.linalg.cholesky(gv)
            frame[:, :, s:] = np.einsum(
                "pia,pab->pib", v, np.linalg.inv(np.swapaxes(lv, -1, -2))
            )
        a_frame = np.einsum("pia,pij,pjb->pab", frame, h, frame)
        a_frame = 0.5 * (a_frame + np.swapaxes(a_frame, -1, -2))

        return PointGeometry(
            x=x,
            jets=jets,
            g=g,
            g_inv=g_inv,
            sqrt_det_g=np.sqrt(det),
            normal=nvec,
            h=h,
            shape_op=a_op,
            dg=dg,
            gamma=gamma,
            proj=proj,
            frame=frame,
            a_frame=a_frame,
            s=s,
        )

    def integrate(self, density: np.ndarray, geo: PointGeometry | None = None) -> float:
        """Integral over the patch of a pointwise density (per unit volume)."""
        if geo is None:
            geo = self.geometry()
        vals = np.asarray(density, dtype=float)
        return float(np.sum(self.grid.weights * geo.sqrt_det_g * vals))


def point_geometry(patch: FoliatedPatch, node) -> PointGeometry:
    """Geometry bundle at one grid node (multi-index or flat index)."""
    if np.isscalar(node):
        x = patch.grid.points[int(node)][None, :]
    else:
        x = patch.grid.node_point(node)[None, :]
    return patch.geometry(x)

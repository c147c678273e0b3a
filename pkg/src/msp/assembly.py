"""Galerkin assembly of all bilinear forms on mapped tensor-product domains.

Volume forms (mass, strong-form Laplacian coupling, biharmonic) integrate on
(0,1)^d with tensorized Gauss quadrature of q = degree+1 points per
direction per element; boundary forms (boundary mass, normal-derivative
Gram and couplings, normal-data right-hand sides) integrate face-wise with
the surface Jacobian from Nanson's formula.  Second derivatives are pulled
back through the geometry map with the full Hessian correction.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
import scipy.sparse

from .sparselin import SparseSymMatrix
from .splines import GeometryMap, QuadratureRule1D, SplineSpace1D, TensorSpace


class DegenerateGeometry(Exception):
    """Non-positive Jacobian determinant or degenerate surface element."""


def _check_compatible(row_space: TensorSpace, col_space: TensorSpace) -> None:
    if row_space.d != col_space.d:
        raise ValueError("spaces have different dimensions")
    for fr, fc in zip(row_space.factors, col_space.factors):
        if not np.array_equal(fr.breakpoints, fc.breakpoints):
            raise ValueError("spaces must share the same element partition")


def _combine(tabs: list[np.ndarray], orders: tuple[int, ...]) -> np.ndarray:
    """Tensor-product combination of 1D tables; returns (nq, nb)."""
    t = tabs[0][:, orders[0], :]
    for ax in range(1, len(tabs)):
        u = tabs[ax][:, orders[ax], :]
        q0, m0 = t.shape
        q1, m1 = u.shape
        t = (t[:, None, :, None] * u[None, :, None, :]).reshape(q0 * q1, m0 * m1)
    return t


class _ElementData:
    """Per-element basis/geometry data shared by all integrands."""

    def __init__(
        self,
        spaces: list[TensorSpace],
        geo: GeometryMap,
        q: int,
        max_deriv: int,
    ):
        self.spaces = spaces
        self.geo = geo
        self.d = spaces[0].d
        self.max_deriv = max_deriv
        self.rules = [
            QuadratureRule1D.for_space(spaces[0].factors[j], q) for j in range(self.d)
        ]
        self.n_el = [spaces[0].factors[j].num_elements for j in range(self.d)]
        # per space, per axis, per element: (first_index, table)
        self.tabs = [
            [
                [sp.factors[j].tabulate(e, self.rules[j].points[e], max_deriv) for e in range(self.n_el[j])]
                for j in range(self.d)
            ]
            for sp in spaces
        ]

    def elements(self):
        return np.ndindex(*self.n_el)

    def quad_points(self, el: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
        axes_pts = [self.rules[j].points[el[j]] for j in range(self.d)]
        axes_w = [self.rules[j].weights[el[j]] for j in range(self.d)]
        grids = np.meshgrid(*axes_pts, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        w = axes_w[0]
        for j in range(1, self.d):
            w = np.multiply.outer(w, axes_w[j])
        return pts, w.ravel()

    def basis(self, s: int, el: tuple[int, ...], orders: tuple[int, ...]) -> np.ndarray:
        tabs = [self.tabs[s][j][el[j]][1] for j in range(self.d)]
        return _combine(tabs, orders)

    def active(self, s: int, el: tuple[int, ...]) -> np.ndarray:
        firsts = [self.tabs[s][j][el[j]][0] for j in range(self.d)]
        widths = [self.spaces[s].factors[j].degree + 1 for j in range(self.d)]
        grids = np.meshgrid(
            *[np.arange(f, f + m) for f, m in zip(firsts, widths)], indexing="ij"
        )
        return np.ravel_multi_index([g.ravel() for g in grids], self.spaces[s].dims)

    def ref_gradient(self, s: int, el: tuple[int, ...]) -> np.ndarray:
        cols = []
        for j in range(self.d):
            orders = tuple(1 if a == j else 0 for a in range(self.d))
            cols.append(self.basis(s, el, orders))
        return np.stack(cols, axis=2)  # (nq, nb, d)

    def ref_hessian(self, s: int, el: tuple[int, ...]) -> np.ndarray:
        nq, nb = self.basis(s, el, tuple([0] * self.d)).shape
        out = np.empty((nq, nb, self.d, self.d))
        for i in range(self.d):
            for j in range(i, self.d):
                orders = tuple(
                    (2 if a == i else 0) if i == j else (1 if a in (i, j) else 0)
                    for a in range(self.d)
                )
                v = self.basis(s, el, orders)
                out[:, :, i, j] = v
                out[:, :, j, i] = v
        return out


def _geometry_at(geo: GeometryMap, pts: np.ndarray, need_hessian: bool):
    jac = geo.jacobian(pts)
    det = np.linalg.det(jac)
    if np.any(det <= 0):
        raise DegenerateGeometry("non-positive Jacobian determinant")
    jinv = np.linalg.inv(jac)
    hess = geo.hessians(pts) if need_hessian else None
    return jac, det, jinv, hess


def _physical_laplacian(
    data: _ElementData, s: int, el, jinv: np.ndarray, hess: np.ndarray
) -> np.ndarray:
    """trace of the pulled-back Hessian of each basis function, (nq, nb)."""
    gref = data.ref_gradient(s, el)
    href = data.ref_hessian(s, el)
    gphys = np.einsum("qji,qbj->qbi", jinv, gref)
    corr = href - np.einsum("qbk,qkij->qbij", gphys, hess)
    jjt = np.einsum("qri,qsi->qrs", jinv, jinv)
    return np.einsum("qrs,qbrs->qb", jjt, corr)


_KINDS = ("value", "laplacian", "neg_laplacian")


def assemble_volume(
    row_space: TensorSpace,
    col_space: TensorSpace,
    geo: GeometryMap,
    row_kind: str = "value",
    col_kind: str = "value",
    q: int | None = None,
) -> scipy.sparse.csr_matrix:
    """Assemble A[j, i] = int_(0,1)^d r_j(row basis) c_i(col basis) |det J| dxi.

    `row_kind`/`col_kind` select the integrand factor: the basis value, its
    physical Laplacian, or its negated physical Laplacian.
    """
    for kind in (row_kind, col_kind):
        if kind not in _KINDS:
            raise ValueError(f"unknown integrand kind {kind!r}")
    _check_compatible(row_space, col_space)
    same = row_space is col_space and row_kind == col_kind
    need_lap = row_kind != "value" or col_kind != "value"
    if q is None:
        q = max(f.degree for f in row_space.factors + col_space.factors) + 1
    spaces = [row_space] if same else [row_space, col_space]
    data = _ElementData(spaces, geo, q, max_deriv=2 if need_lap else 0)
    ci = 0 if same else 1

    rows, cols, vals = [], [], []
    for el in data.elements():
        pts, w = data.quad_points(el)
        _, det, jinv, hess = _geometry_at(geo, pts, need_lap)
        wd = w * det

        def side(s: int, kind: str) -> np.ndarray:
            if kind == "value":
                return data.basis(s, el, tuple([0] * data.d))
            lap = _physical_laplacian(data, s, el, jinv, hess)
            return -lap if kind == "neg_laplacian" else lap

        rrow = side(0, row_kind)
        ccol = rrow if same else side(ci, col_kind)
        a_el = np.einsum("q,qa,qb->ab", wd, rrow, ccol)
        ridx = data.active(0, el)
        cidx = ridx if same else data.active(ci, el)
        rr, cc = np.meshgrid(ridx, cidx, indexing="ij")
        rows.append(rr.ravel())
        cols.append(cc.ravel())
        vals.append(a_el.ravel())

    mat = scipy.sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(row_space.dim, col_space.dim),
    )
    return mat.tocsr()


def assemble_mass(space: TensorSpace, geo: GeometryMap, q: int | None = None) -> SparseSymMatrix:
    """L2 mass matrix on the full space."""
    m = assemble_volume(space, space, geo, "value", "value", q)
    return SparseSymMatrix(scipy.sparse.triu(_symmetrize(m)))


def assemble_laplacian_strong(
    space_u: TensorSpace, space_w: TensorSpace, geo: GeometryMap, q: int | None = None
) -> scipy.sparse.csr_matrix:
    """K[j, i] = int (-Lap phi_i) psi_j |det J| dxi, shape (dim W, dim U)."""
    return assemble_volume(space_w, space_u, geo, "value", "neg_laplacian", q)


def assemble_biharmonic(space_u: TensorSpace, geo: GeometryMap, q: int | None = None) -> SparseSymMatrix:
    """B[i, j] = int Lap phi_i Lap phi_j |det J| dxi on the full space."""
    b = assemble_volume(space_u, space_u, geo, "laplacian", "laplacian", q)
    return SparseSymMatrix(scipy.sparse.triu(_symmetrize(b)))


def assemble_stiffness(space: TensorSpace, geo: GeometryMap, q: int | None = None) -> SparseSymMatrix:
    """Gradient-gradient Gram matrix (test oracle for integration by parts)."""
    d = space.d
    if q is None:
        q = max(f.degree for f in space.factors) + 1
    data = _ElementData([space], geo, q, max_deriv=1)
    rows, cols, vals = [], [], []
    for el in data.elements():
        pts, w = data.quad_points(el)
        _, det, jinv, _ = _geometry_at(geo, pts, False)
        gref = data.ref_gradient(0, el)
        gphys = np.einsum("qji,qbj->qbi", jinv, gref)
        a_el = np.einsum("q,qai,qbi->ab", w * det, gphys, gphys)
        idx = data.active(0, el)
        rr, cc = np.meshgrid(idx, idx, indexing="ij")
        rows.append(rr.ravel())
        cols.append(cc.ravel())
        vals.append(a_el.ravel())
    m = scipy.sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(space.dim, space.dim),
    ).tocsr()
    return SparseSymMatrix(scipy.sparse.triu(_symmetrize(m)))


def _symmetrize(m: scipy.sparse.csr_matrix) -> scipy.sparse.csr_matrix:
    return ((m + m.T) * 0.5).tocsr()


# ---------------------------------------------------------------------------
# Boundary forms


class TraceSpace:
    """Per-face trace spaces of a volume tensor space, concatenated.

    Each face of (0,1)^d carries the tensor product of the free-axis factor
    spaces; faces are independent (no continuity across edges), which is the
    right discretization of L2 on the boundary.
    """

    def __init__(self, space: TensorSpace):
        if space.d < 2:
            raise ValueError("trace spaces need d >= 2")
        self.volume_space = space
        self.faces = [(axis, side) for axis in range(space.d) for side in (0, 1)]
        self.face_dims = []
        for axis, _ in self.faces:
            free = [space.dims[j] for j in range(space.d) if j != axis]
            self.face_dims.append(int(np.prod(free)))
        self.offsets = np.concatenate([[0], np.cumsum(self.face_dims)])
        self.dim = int(self.offsets[-1])


def _faces(d: int):
    return [(axis, side) for axis in range(d) for side in (0, 1)]


class _FaceLoop:
    """Iterates boundary elements of one face, yielding basis/geometry data."""

    def __init__(self, space: TensorSpace, geo: GeometryMap, axis: int, side: int, q: int, max_deriv: int):
        self.space = space
        self.geo = geo
        self.axis = axis
        self.side = side
        self.d = space.d
        self.free = [j for j in range(self.d) if j != axis]
        self.rules = {j: QuadratureRule1D.for_space(space.factors[j], q) for j in self.free}
        xfix = 0.0 if side == 0 else 1.0
        first, ders = space.factors[axis].eval_basis(xfix, max_deriv)
        self.fixed_first = first
        self.fixed_tab = ders[None, :, :]  # (1, nd+1, p+1)
        self.xfix = xfix
        self.max_deriv = max_deriv
        self.free_tabs = {
            j: [
                space.factors[j].tabulate(e, self.rules[j].points[e], max_deriv)
                for e in range(space.factors[j].num_elements)
            ]
            for j in self.free
        }

    def elements(self):
        return np.ndindex(*[self.space.factors[j].num_elements for j in self.free])

    def _axis_tabs(self, el) -> list[tuple[int, np.ndarray]]:
        tabs = []
        it = iter(el)
        for j in range(self.d):
            if j == self.axis:
                tabs.append((self.fixed_first, self.fixed_tab))
            else:
                e = next(it)
                tabs.append(self.free_tabs[j][e])
        return tabs

    def quad(self, el) -> tuple[np.ndarray, np.ndarray]:
        axis_pts = []
        it = iter(el)
        w = None
        for j in range(self.d):
            if j == self.axis:
                axis_pts.append(np.array([self.xfix]))
            else:
                e = next(it)
                axis_pts.append(self.rules[j].points[e])
                wj = self.rules[j].weights[e]
                w = wj if w is None else np.multiply.outer(w, wj)
        grids = np.meshgrid(*axis_pts, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        return pts, np.atleast_1d(w).ravel()

    def basis(self, el, orders) -> np.ndarray:
        tabs = [t for _, t in self._axis_tabs(el)]
        return _combine(tabs, orders)

    def active(self, el) -> np.ndarray:
        tabs = self._axis_tabs(el)
        grids = np.meshgrid(
            *[
                np.arange(f, f + t.shape[2])
                for f, t in tabs
            ],
            indexing="ij",
        )
        return np.ravel_multi_index([g.ravel() for g in grids], self.space.dims)

    def free_active(self, el) -> np.ndarray:
        """Flat indices into the face trace space (free axes only)."""
        tabs = self._axis_tabs(el)
        free_dims = [self.space.dims[j] for j in self.free]
        grids = np.meshgrid(
            *[np.arange(tabs[j][0], tabs[j][0] + tabs[j][1].shape[2]) for j in self.free],
            indexing="ij",
        )
        return np.ravel_multi_index([g.ravel() for g in grids], free_dims)

    def free_basis(self, el) -> np.ndarray:
        """Trace-space basis values (free-axis tensor product), (nq, nb_face)."""
        tabs = [self.free_tabs[j][e][1] for j, e in zip(self.free, el)]
        return _combine(tabs, tuple([0] * len(self.free)))

    def surface(self, pts) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Surface Jacobian, outward unit normal, and inverse Jacobian."""
        jac = self.geo.jacobian(pts)
        det = np.linalg.det(jac)
        if np.any(det <= 0):
            raise DegenerateGeometry("non-positive Jacobian determinant on face")
        jinv = np.linalg.inv(jac)
        # Nanson: a = J^{-T} e_axis;  ds = |det J| ||a||;  n = sign a / ||a||
        a = jinv[:, self.axis, :]
        anorm = np.linalg.norm(a, axis=1)
        if np.any(anorm <= 0):
            raise DegenerateGeometry("degenerate surface normal")
        sj = det * anorm
        sign = -1.0 if self.side == 0 else 1.0
        normal = sign * a / anorm[:, None]
        return sj, normal, jinv

    def normal_derivative(self, el, jinv, normal) -> np.ndarray:
        cols = []
        for j in range(self.d):
            orders = tuple(1 if a == j else 0 for a in range(self.d))
            cols.append(self.basis(el, orders))
        gref = np.stack(cols, axis=2)
        gphys = np.einsum("qji,qbj->qbi", jinv, gref)
        return np.einsum("qbi,qi->qb", gphys, normal)


def _boundary_points_1d(space: TensorSpace, geo: GeometryMap):
    """The two boundary points of a 1D domain with outward normal signs."""
    for x, sign in ((0.0, -1.0), (1.0, 1.0)):
        pts = np.array([[x]])
        jac = geo.jacobian(pts)[0, 0, 0]
        if jac <= 0:
            raise DegenerateGeometry("non-positive Jacobian in 1D")
        yield x, sign, jac, pts


def assemble_boundary_mass(space: TensorSpace, geo: GeometryMap, q: int | None = None) -> SparseSymMatrix:
    """Boundary mass M_d[i, j] = surface integral of phi_i phi_j over the boundary."""
    if q is None:
        q = max(f.degree for f in space.factors) + 1
    dim = space.dim
    if space.d == 1:
        m = np.zeros((dim, dim))
        for x, _sign, _jac, _pts in _boundary_points_1d(space, geo):
            first, ders = space.factors[0].eval_basis(x, 0)
            v = np.zeros(dim)
            v[first : first + len(ders[0])] = ders[0]
            m += np.outer(v, v)
        return SparseSymMatrix.from_dense(m)
    rows, cols, vals = [], [], []
    for axis, side in _faces(space.d):
        loop = _FaceLoop(space, geo, axis, side, q, 0)
        for el in loop.elements():
            pts, w = loop.quad(el)
            sj, _, _ = loop.surface(pts)
            nvals = loop.basis(el, tuple([0] * space.d))
            a_el = np.einsum("q,qa,qb->ab", w * sj, nvals, nvals)
            idx = loop.active(el)
            rr, cc = np.meshgrid(idx, idx, indexing="ij")
            rows.append(rr.ravel())
            cols.append(cc.ravel())
            vals.append(a_el.ravel())
    m = scipy.sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    ).tocsr()
    return SparseSymMatrix(scipy.sparse.triu(_symmetrize(m)))


def assemble_normal_gram(space: TensorSpace, geo: GeometryMap, q: int | None = None) -> SparseSymMatrix:
    """K_d[i, j] = surface integral of dn(phi_i) dn(phi_j) over the boundary."""
    if q is None:
        q = max(f.degree for f in space.factors) + 1
    dim = space.dim
    if space.d == 1:
        m = np.zeros((dim, dim))
        for x, sign, jac, _pts in _boundary_points_1d(space, geo):
            first, ders = space.factors[0].eval_basis(x, 1)
            v = np.zeros(dim)
            v[first : first + len(ders[1])] = sign * ders[1] / jac
            m += np.outer(v, v)
        return SparseSymMatrix.from_dense(m)
    rows, cols, vals = [], [], []
    for axis, side in _faces(space.d):
        loop = _FaceLoop(space, geo, axis, side, q, 1)
        for el in loop.elements():
            pts, w = loop.quad(el)
            sj, normal, jinv = loop.surface(pts)
            dn = loop.normal_derivative(el, jinv, normal)
            a_el = np.einsum("q,qa,qb->ab", w * sj, dn, dn)
            idx = loop.active(el)
            rr, cc = np.meshgrid(idx, idx, indexing="ij")
            rows.append(rr.ravel())
            cols.append(cc.ravel())
            vals.append(a_el.ravel())
    m = scipy.sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    ).tocsr()
    return SparseSymMatrix(scipy.sparse.triu(_symmetrize(m)))


def assemble_trace_mass(trace: TraceSpace, geo: GeometryMap, q: int | None = None) -> SparseSymMatrix:
    """L2 Gram matrix of the per-face trace space on the mapped boundary."""
    space = trace.volume_space
    if q is None:
        q = max(f.degree for f in space.factors) + 1
    rows, cols, vals = [], [], []
    for fi, (axis, side) in enumerate(trace.faces):
        loop = _FaceLoop(space, geo, axis, side, q, 0)
        off = trace.offsets[fi]
        for el in loop.elements():
            pts, w = loop.quad(el)
            sj, _, _ = loop.surface(pts)
            fvals = loop.free_basis(el)
            a_el = np.einsum("q,qa,qb->ab", w * sj, fvals, fvals)
            idx = off + loop.free_active(el)
            rr, cc = np.meshgrid(idx, idx, indexing="ij")
            rows.append(rr.ravel())
            cols.append(cc.ravel())
            vals.append(a_el.ravel())
    m = scipy.sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(trace.dim, trace.dim),
    ).tocsr()
    return SparseSymMatrix(scipy.sparse.triu(_symmetrize(m)))


def assemble_normal_coupling(
    trace: TraceSpace, space: TensorSpace, geo: GeometryMap, q: int | None = None
) -> scipy.sparse.csr_matrix:
    """N[f, i] = surface integral of dn(phi_i) times a trace basis function."""
    if space is not trace.volume_space:
        _check_compatible(space, trace.volume_space)
    if q is None:
        q = max(f.degree for f in space.factors) + 1
    rows, cols, vals = [], [], []
    for fi, (axis, side) in enumerate(trace.faces):
        loop = _FaceLoop(space, geo, axis, side, q, 1)
        off = trace.offsets[fi]
        for el in loop.elements():
            pts, w = loop.quad(el)
            sj, normal, jinv = loop.surface(pts)
            dn = loop.normal_derivative(el, jinv, normal)
            fvals = loop.free_basis(el)
            a_el = np.einsum("q,qa,qb->ab", w * sj, fvals, dn)
            fidx = off + loop.free_active(el)
            vidx = loop.active(el)
            rr, cc = np.meshgrid(fidx, vidx, indexing="ij")
            rows.append(rr.ravel())
            cols.append(cc.ravel())
            vals.append(a_el.ravel())
    return scipy.sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(trace.dim, space.dim),
    ).tocsr()


def assemble_rhs_normal_data(
    space: TensorSpace,
    geo: GeometryMap,
    data_gradient: Callable[[np.ndarray], np.ndarray],
    q: int | None = None,
) -> np.ndarray:
    """rhs[i] = surface integral of dn(phi_i) d, with d = grad(g)(x) . n.

    `data_gradient` maps physical points (npts, d) to gradients (npts, d) of
    the underlying scalar field whose normal derivative is the data.
    """
    if q is None:
        q = max(f.degree for f in space.factors) + 1
    out = np.zeros(space.dim)
    if space.d == 1:
        for x, sign, jac, pts in _boundary_points_1d(space, geo):
            xphys = geo.value(pts)
            dval = sign * data_gradient(xphys)[0, 0]
            first, ders = space.factors[0].eval_basis(x, 1)
            out[first : first + len(ders[1])] += sign * ders[1] / jac * dval
        return out
    for axis, side in _faces(space.d):
        loop = _FaceLoop(space, geo, axis, side, q, 1)
        for el in loop.elements():
            pts, w = loop.quad(el)
            sj, normal, jinv = loop.surface(pts)
            dn = loop.normal_derivative(el, jinv, normal)
            xphys = geo.value(pts)
            dvals = np.einsum("qi,qi->q", data_gradient(xphys), normal)
            contrib = np.einsum("q,qb->b", w * sj * dvals, dn)
            np.add.at(out, loop.active(el), contrib)
    return out


def assemble_rhs_l2(
    space: TensorSpace,
    geo: GeometryMap,
    fn: Callable[[np.ndarray], np.ndarray],
    q: int | None = None,
) -> np.ndarray:
    """rhs[i] = volume integral of phi_i f(x) |det J|."""
    if q is None:
        q = max(f.degree for f in space.factors) + 1
    data = _ElementData([space], geo, q, 0)
    out = np.zeros(space.dim)
    for el in data.elements():
        pts, w = data.quad_points(el)
        _, det, _, _ = _geometry_at(geo, pts, False)
        nvals = data.basis(0, el, tuple([0] * space.d))
        fvals = fn(geo.value(pts))
        contrib = np.einsum("q,qb->b", w * det * fvals, nvals)
        np.add.at(out, data.active(0, el), contrib)
    return out


def boundary_measure(space: TensorSpace, geo: GeometryMap, q: int = 8) -> float:
    """Total surface measure of the mapped boundary (quadrature oracle)."""
    total = 0.0
    if space.d == 1:
        return 2.0
    for axis, side in _faces(space.d):
        loop = _FaceLoop(space, geo, axis, side, q, 0)
        for el in loop.elements():
            pts, w = loop.quad(el)
            sj, _, _ = loop.surface(pts)
            total += float(np.sum(w * sj))
    return total


def domain_measure(space: TensorSpace, geo: GeometryMap, q: int = 8) -> float:
    """Volume of the mapped domain (quadrature oracle)."""
    data = _ElementData([space], geo, q, 0)
    total = 0.0
    for el in data.elements():
        pts, w = data.quad_points(el)
        _, det, _, _ = _geometry_at(geo, pts, False)
        total += float(np.sum(w * det))
    return total

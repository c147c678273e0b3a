"""Tensor-product B-spline spaces, polynomial geometry maps, and quadrature.

Spaces live on the parameter domain (0,1)^d with open knot vectors on a
uniform mesh of 2^level spans per direction; interior knots are repeated
(degree - smoothness) times.  Geometry maps are stored as monomial
coefficient tensors with analytic Jacobians and Hessians.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as npoly


def _ders_basis_funs(span: int, x: float, p: int, nders: int, knots: np.ndarray) -> np.ndarray:
    """Nonzero basis functions and derivatives at x (Cox-de Boor, banded form).

    Returns an array of shape (nders+1, p+1): row r holds the r-th
    derivatives of the p+1 basis functions active on the span.
    """
    ndu = np.empty((p + 1, p + 1))
    ndu[0, 0] = 1.0
    left = np.empty(p + 1)
    right = np.empty(p + 1)
    for j in range(1, p + 1):
        left[j] = x - knots[span + 1 - j]
        right[j] = knots[span + j] - x
        saved = 0.0
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((nders + 1, p + 1))
    ders[0, :] = ndu[:, p]
    a = np.empty((2, p + 1))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, nders + 1):
            d = 0.0
            rk = r - k
            pk = p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1
    r = p
    for k in range(1, nders + 1):
        ders[k, :] *= r
        r *= p - k
    return ders


class SplineSpace1D:
    """Univariate spline space of given degree, smoothness, and level.

    Open knot vector on [0, 1] with 2^level uniform spans; each interior
    knot is repeated (degree - smoothness) times.  smoothness = -1 gives
    discontinuous piecewise polynomials.
    """

    def __init__(self, degree: int, level: int, smoothness: int | None = None):
        if smoothness is None:
            smoothness = degree - 1
        if not -1 <= smoothness <= degree - 1:
            raise ValueError("smoothness must lie in [-1, degree-1]")
        self.degree = degree
        self.smoothness = smoothness
        self.level = level
        nspans = 2**level
        mult = degree - smoothness
        interior = np.repeat(np.arange(1, nspans) / nspans, mult)
        self.knots = np.concatenate(
            [np.zeros(degree + 1), interior, np.ones(degree + 1)]
        )
        self.dim = degree + 1 + (nspans - 1) * mult
        self.breakpoints = np.arange(nspans + 1) / nspans

    @property
    def num_elements(self) -> int:
        return len(self.breakpoints) - 1

    def find_span(self, x: float) -> int:
        if not 0.0 <= x <= 1.0:
            raise ValueError("x must lie in [0, 1]")
        p = self.degree
        if x >= self.knots[self.dim]:
            return self.dim - 1
        return int(np.searchsorted(self.knots, x, side="right")) - 1

    def eval_basis(self, x: float, max_deriv: int = 0) -> tuple[int, np.ndarray]:
        """Values (and derivatives) of the <= degree+1 nonzero basis functions.

        Returns (first_index, ders) where ders has shape
        (max_deriv+1, degree+1) and first_index is the global index of the
        first active function.
        """
        if max_deriv > self.degree:
            raise ValueError("requested derivative order exceeds the degree")
        span = self.find_span(x)
        ders = _ders_basis_funs(span, x, self.degree, max_deriv, self.knots)
        return span - self.degree, ders

    def element_span(self, e: int) -> int:
        mid = 0.5 * (self.breakpoints[e] + self.breakpoints[e + 1])
        return self.find_span(mid)

    def tabulate(self, e: int, points: np.ndarray, max_deriv: int) -> tuple[int, np.ndarray]:
        """Basis tables on element e at the given points inside the element.

        Returns (first_index, tab) with tab of shape
        (len(points), max_deriv+1, degree+1).
        """
        span = self.element_span(e)
        tab = np.empty((len(points), max_deriv + 1, self.degree + 1))
        for a, x in enumerate(points):
            tab[a] = _ders_basis_funs(span, float(x), self.degree, max_deriv, self.knots)
        return span - self.degree, tab


@lru_cache(maxsize=32)
def gauss_rule(q: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(q)
    return 0.5 * (x + 1.0), 0.5 * w


@dataclass(frozen=True)
class QuadratureRule1D:
    """Per-element Gauss points/weights for one direction."""

    points: np.ndarray  # (n_elements, q)
    weights: np.ndarray  # (n_elements, q)

    @classmethod
    def for_space(cls, space: SplineSpace1D, q: int) -> "QuadratureRule1D":
        xg, wg = gauss_rule(q)
        lo = space.breakpoints[:-1][:, None]
        hi = space.breakpoints[1:][:, None]
        return cls(points=lo + (hi - lo) * xg, weights=(hi - lo) * wg)


class TensorSpace:
    """Tensor product of univariate spline spaces on (0,1)^d.

    Global indices are flattened in C order (last factor fastest).
    """

    def __init__(self, factors: list[SplineSpace1D]):
        self.factors = factors
        self.d = len(factors)
        self.dims = tuple(f.dim for f in factors)
        self.dim = int(np.prod(self.dims))

    def flat_index(self, multi: tuple[int, ...]) -> int:
        return int(np.ravel_multi_index(multi, self.dims))

    def interior_indices(self) -> np.ndarray:
        """Indices of basis functions vanishing on the boundary.

        For open knot vectors, dropping the first and last function per
        direction realizes the zero-trace constraint exactly.
        """
        grids = np.meshgrid(
            *[np.arange(1, m - 1) for m in self.dims], indexing="ij"
        )
        multi = np.stack([g.ravel() for g in grids])
        return np.ravel_multi_index(multi, self.dims)

    def boundary_mask(self) -> np.ndarray:
        mask = np.ones(self.dim, dtype=bool)
        mask[self.interior_indices()] = False
        return mask


def tensor_space(d: int, degree: int, level: int, smoothness: int | None = None) -> TensorSpace:
    return TensorSpace([SplineSpace1D(degree, level, smoothness) for _ in range(d)])


class GeometryMap:
    """Polynomial map from (0,1)^d to the physical domain.

    Components are monomial coefficient tensors; the Jacobian and component
    Hessians are differentiated analytically.
    """

    def __init__(self, components: list[np.ndarray]):
        self.d = len(components)
        self.components = [np.asarray(c, dtype=np.float64) for c in components]
        self._grad = [
            [npoly.polyder(c, axis=j) for j in range(self.d)] for c in self.components
        ]
        self._hess = [
            [
                [npoly.polyder(gj, axis=i) for i in range(self.d)]
                for gj in grad_k
            ]
            for grad_k in self._grad
        ]

    @staticmethod
    def _polyval(c: np.ndarray, pts: np.ndarray) -> np.ndarray:
        c = np.atleast_1d(c)
        t: np.ndarray | None = None
        for j in range(pts.shape[1]):
            m = c.shape[j] if j < c.ndim else 1
            v = pts[:, j : j + 1] ** np.arange(m)  # (npts, m)
            if t is None:
                t = np.tensordot(v, c, axes=(1, 0)) if c.ndim > 0 else v[:, 0] * c
            else:
                t = np.einsum("ab,ab...->a...", v, t)
        assert t is not None
        return t

    def value(self, pts: np.ndarray) -> np.ndarray:
        """Map points (npts, d) to physical coordinates (npts, d)."""
        return np.stack([self._polyval(c, pts) for c in self.components], axis=1)

    def jacobian(self, pts: np.ndarray) -> np.ndarray:
        """J[a, i, j] = d F_i / d xi_j at each point."""
        npts = pts.shape[0]
        out = np.empty((npts, self.d, self.d))
        for i in range(self.d):
            for j in range(self.d):
                out[:, i, j] = self._polyval(self._grad[i][j], pts)
        return out

    def hessians(self, pts: np.ndarray) -> np.ndarray:
        """H[a, k, i, j] = d^2 F_k / (d xi_i d xi_j) at each point."""
        npts = pts.shape[0]
        out = np.empty((npts, self.d, self.d, self.d))
        for k in range(self.d):
            for j in range(self.d):
                for i in range(self.d):
                    out[:, k, i, j] = self._polyval(self._hess[k][j][i], pts)
        return out

    def is_identity(self) -> bool:
        for i, c in enumerate(self.components):
            want = np.zeros(tuple(2 if j == i else 1 for j in range(self.d)))
            idx = tuple(1 if j == i else 0 for j in range(self.d))
            want[idx] = 1.0
            if c.shape != want.shape or not np.array_equal(c, want):
                return False
        return True


def identity_geometry(d: int) -> GeometryMap:
    comps = []
    for i in range(d):
        c = np.zeros(tuple(2 if j == i else 1 for j in range(d)))
        c[tuple(1 if j == i else 0 for j in range(d))] = 1.0
        comps.append(c)
    return GeometryMap(comps)


def annulus_2d() -> GeometryMap:
    """Degree-(1,2) polynomial map onto an approximate quarter annulus."""
    f1 = np.zeros((2, 3))
    f1[0, 0] = 1.0  # 1
    f1[1, 0] = 1.0  # x1
    f1[1, 1] = -1.0  # -x1 x2
    f1[0, 2] = -1.0  # -x2^2
    f2 = np.zeros((2, 3))
    f2[1, 1] = 2.0  # 2 x1 x2
    f2[1, 2] = -1.0  # -x1 x2^2
    f2[0, 1] = 2.0  # 2 x2
    f2[0, 2] = -1.0  # -x2^2
    return GeometryMap([f1, f2])


def twisted_3d() -> GeometryMap:
    """Polynomial map onto a twisted cylindrical extension of the 2D domain."""
    f1 = np.zeros((2, 4, 2))
    f1[1, 3, 1] = 1.5  # 3/2 x1 x2^3 x3
    f1[1, 3, 0] = -1.0  # -x1 x2^3
    f1[1, 2, 1] = -1.5  # -3/2 x1 x2^2 x3
    f1[1, 0, 0] = 1.0  # x1
    f1[0, 3, 1] = 0.5  # 1/2 x2^3 x3
    f1[0, 3, 0] = 0.5  # 1/2 x2^3
    f1[0, 2, 1] = 1.5  # 3/2 x2^2 x3
    f1[0, 2, 0] = -1.5  # -3/2 x2^2
    f1[0, 0, 0] = 1.0  # 1
    f2 = np.zeros((2, 4, 1))
    # x2 * (x1 x2^2 - 3 x1 x2 + 3 x1 - 1/2 x2^2 + 3/2)
    f2[1, 3, 0] = 1.0  # x1 x2^3
    f2[1, 2, 0] = -3.0  # -3 x1 x2^2
    f2[1, 1, 0] = 3.0  # 3 x1 x2
    f2[0, 3, 0] = -0.5  # -1/2 x2^3
    f2[0, 1, 0] = 1.5  # 3/2 x2
    f3 = np.zeros((1, 4, 2))
    f3[0, 3, 1] = -1.0  # -x2^3 x3
    f3[0, 3, 0] = 0.5  # 1/2 x2^3
    f3[0, 2, 0] = 1.5  # 3/2 x2^2
    f3[0, 0, 1] = 1.0  # x3
    return GeometryMap([f1, f2, f3])


GEOMETRIES = {
    "unit_square": lambda d=2: identity_geometry(d),
    "identity": identity_geometry,
    "annulus_2d": lambda d=2: annulus_2d(),
    "twisted_3d": lambda d=3: twisted_3d(),
}

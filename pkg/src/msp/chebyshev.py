"""Recurrence polynomials, their roots, and the closed-form condition bounds.

The whole condition-number analysis of block-diagonally preconditioned
block-tridiagonal saddle-point operators reduces to properties of the
polynomial family

    P_0 = 1,  P_1(x) = x,  P_{i+1}(x) = x P_i(x) - P_{i-1}(x),

(which is the Chebyshev polynomial of the second kind with rescaled
argument, P_j(x) = U_j(x/2)) and of the differences Pbar_j = P_j - P_{j-1}.
This module provides evaluation, closed-form roots, the parameter chain
used in the norm estimate, the resulting bounds, and the small integer
matrices whose spectral norm gives the inverse bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def p_eval(j: int, x: float) -> float:
    """Evaluate P_j(x) by the three-term forward recurrence."""
    if j < 0:
        raise ValueError("degree must be >= 0")
    pm, pc = 1.0, x
    if j == 0:
        return pm
    for _ in range(1, j):
        pm, pc = pc, x * pc - pm
    return pc


def pbar_eval(j: int, x: float) -> float:
    """Evaluate Pbar_j(x) = P_j(x) - P_{j-1}(x) by the forward recurrence.

    The recurrence Pbar_0 = 1, Pbar_1 = x - 1,
    Pbar_{i+1} = x Pbar_i - Pbar_{i-1} is used directly; it is numerically
    stable for the O(1) arguments that occur here.
    """
    if j < 0:
        raise ValueError("degree must be >= 0")
    pm, pc = 1.0, x - 1.0
    if j == 0:
        return pm
    for _ in range(1, j):
        pm, pc = pc, x * pc - pm
    return pc


def p_coefficients(j: int) -> np.ndarray:
    """Monomial coefficients of P_j (ascending degree), exact integers."""
    if j < 0:
        raise ValueError("degree must be >= 0")
    pm = np.array([1.0])
    if j == 0:
        return pm
    pc = np.array([0.0, 1.0])
    for _ in range(1, j):
        nxt = np.zeros(len(pc) + 1)
        nxt[1:] = pc
        nxt[: len(pm)] -= pm
        pm, pc = pc, nxt
    return pc


def pbar_coefficients(j: int) -> np.ndarray:
    """Monomial coefficients of Pbar_j (ascending degree)."""
    if j == 0:
        return np.array([1.0])
    a, b = p_coefficients(j), p_coefficients(j - 1)
    out = a.copy()
    out[: len(b)] -= b
    return out


@dataclass(frozen=True)
class PolyRecurrence:
    """A member of the recurrence family in monomial form."""

    degree: int
    coefficients: np.ndarray  # ascending degree

    @classmethod
    def p(cls, j: int) -> "PolyRecurrence":
        return cls(j, p_coefficients(j))

    @classmethod
    def pbar(cls, j: int) -> "PolyRecurrence":
        return cls(j, pbar_coefficients(j))

    def __call__(self, x: float) -> float:
        return float(np.polynomial.polynomial.polyval(x, self.coefficients))


def pbar_roots(j: int) -> np.ndarray:
    """All j roots of Pbar_j in descending order, from the closed form.

    The roots are 2 cos((2i-1) pi / (2j+1)), i = 1..j.  The closed form is
    exact and deterministic; numerical root-finding is only used as a test
    oracle against this function.
    """
    if j < 1:
        raise ValueError("Pbar_0 is constant and has no roots")
    i = np.arange(1, j + 1)
    return 2.0 * np.cos((2 * i - 1) * np.pi / (2 * j + 1))


def smallest_abs_root(j: int) -> float:
    """Modulus of the root of Pbar_j closest to zero: 2 sin(pi / (2(2j+1)))."""
    if j < 1:
        raise ValueError("Pbar_0 is constant and has no roots")
    return 2.0 * np.sin(np.pi / (2.0 * (2 * j + 1)))


def epsilon_sequence(n: int) -> np.ndarray:
    """Parameters eps_1..eps_{n-1} equalizing the diagonal in the norm estimate.

    eps_{n-1} is the largest root of Pbar_n and the remaining entries follow
    from eps_{n-i} = P_i(eps_{n-1}) / P_{i-1}(eps_{n-1}).  The sequence
    satisfies the continued-fraction chain

        1 + 1/eps_1 = eps_{n-1},   eps_{i-1} + 1/eps_i = eps_{n-1},

    and eps_i >= 1 for all i.
    """
    if n < 2:
        raise ValueError("need at least 2 blocks")
    top = 2.0 * np.cos(np.pi / (2 * n + 1))
    eps = np.empty(n - 1)
    eps[n - 2] = top
    for i in range(2, n):
        eps[n - 1 - i] = p_eval(i, top) / p_eval(i - 1, top)
    return eps


@dataclass(frozen=True)
class BoundSet:
    """Closed-form norm/condition bounds for an n-block system."""

    n: int
    norm_bound: float
    inv_norm_bound: float
    cond_bound: float


def bounds(n: int) -> BoundSet:
    """Sharp bounds on the norms and condition number of the preconditioned operator."""
    if n < 2:
        raise ValueError("need at least 2 blocks")
    nb = 2.0 * np.cos(np.pi / (2 * n + 1))
    ib = 1.0 / (2.0 * np.sin(np.pi / (2.0 * (2 * n + 1))))
    return BoundSet(n=n, norm_bound=nb, inv_norm_bound=ib, cond_bound=nb * ib)


def q_inverse_matrix(j: int) -> np.ndarray:
    """The symmetric tridiagonal j-by-j matrix inverse to Q_j.

    Entry (1,1) is 1, the remaining diagonal is 0, and the off-diagonal
    entries alternate -1, +1, -1, ...  Its characteristic polynomial is
    Pbar_j, so its eigenvalues are exactly the roots of Pbar_j.
    """
    if j < 1:
        raise ValueError("size must be >= 1")
    m = np.zeros((j, j))
    m[0, 0] = 1.0
    for i in range(j - 1):
        v = -1.0 if i % 2 == 0 else 1.0
        m[i, i + 1] = v
        m[i + 1, i] = v
    return m


def q_matrix_norm(j: int) -> float:
    """Spectral norm of Q_j, computed as 1/min|eig| of its explicit inverse."""
    ev = np.linalg.eigvalsh(q_inverse_matrix(j))
    return 1.0 / np.min(np.abs(ev))

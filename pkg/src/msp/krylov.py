"""Preconditioned MINRES for symmetric indefinite systems.

Standard Paige-Saunders two-term recurrence with an SPD preconditioner.
The monitored residual is sqrt(r_k' P^{-1} r_k), the natural quantity of the
preconditioned Lanczos process (equal to the Euclidean norm of the
symmetrically preconditioned residual).  Iteration starts from a zero guess
and stops when the monitored norm drops below tol times its initial value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

Operator = Callable[[np.ndarray], np.ndarray]

_BREAKDOWN_TOL = 1e-30


@dataclass
class SolveResult:
    solution: np.ndarray
    iterations: int
    residual_history: list[float]
    converged: bool
    breakdown_at: int | None = None


def minres_solve(
    apply_a: Operator,
    apply_prec_inv: Operator,
    b: np.ndarray,
    tol: float = 1e-8,
    maxit: int = 500,
    stop: str = "energy",
) -> SolveResult:
    """Solve A x = b with MINRES preconditioned by an SPD operator inverse.

    `apply_a` must be symmetric and `apply_prec_inv` the application of the
    inverse of an SPD matrix.  A Lanczos beta underflow terminates the
    iteration early (exact convergence or a lucky breakdown) and is reported
    through `breakdown_at`.

    `stop` selects the convergence test: "energy" (default) stops when the
    monitored norm sqrt(r_k' P^{-1} r_k) drops below tol times its initial
    value; "euclidean" stops on the plain residual norm ||b - A x_k|| <=
    tol ||b||, at the cost of one extra operator application per iteration.
    The reported residual_history always holds the energy-norm values.
    """
    if not 0.0 < tol < 1.0:
        raise ValueError("tol must lie in (0, 1)")
    if stop not in ("energy", "euclidean"):
        raise ValueError("stop must be 'energy' or 'euclidean'")
    b = np.asarray(b, dtype=np.float64)
    n = b.shape[0]
    x = np.zeros(n)

    bnorm0 = float(np.linalg.norm(b))
    r1 = b.copy()
    y = apply_prec_inv(r1)
    beta1_sq = float(r1 @ y)
    if beta1_sq < 0:
        raise ValueError("preconditioner is not positive definite")
    beta1 = np.sqrt(beta1_sq)
    history = [beta1]
    if beta1 == 0.0:
        return SolveResult(x, 0, [0.0], True)

    oldb = 0.0
    beta = beta1
    dbar = 0.0
    epsln = 0.0
    phibar = beta1
    cs = -1.0
    sn = 0.0
    w = np.zeros(n)
    w2 = np.zeros(n)
    r2 = r1
    converged = False
    breakdown_at = None
    itn = 0

    while itn < maxit:
        itn += 1
        s = 1.0 / beta
        v = s * y
        y = apply_a(v)
        if itn >= 2:
            y = y - (beta / oldb) * r1
        alfa = float(v @ y)
        y = y - (alfa / beta) * r2
        r1 = r2
        r2 = y
        y = apply_prec_inv(r2)
        oldb = beta
        beta_sq = float(r2 @ y)
        if beta_sq < 0:
            raise ValueError("preconditioner is not positive definite")
        beta = np.sqrt(beta_sq)

        # previous rotation, then the new one
        oldeps = epsln
        delta = cs * dbar + sn * alfa
        gbar = sn * dbar - cs * alfa
        epsln = sn * beta
        dbar = -cs * beta
        gamma = np.sqrt(gbar * gbar + beta * beta)
        gamma = max(gamma, np.finfo(float).eps)
        cs = gbar / gamma
        sn = beta / gamma
        phi = cs * phibar
        phibar = sn * phibar

        w1 = w2
        w2 = w
        w = (v - oldeps * w1 - delta * w2) / gamma
        x = x + phi * w

        history.append(abs(phibar))
        if stop == "energy":
            converged = abs(phibar) <= tol * beta1
        else:
            converged = np.linalg.norm(b - apply_a(x)) <= tol * bnorm0
        if converged:
            break
        if beta <= _BREAKDOWN_TOL:
            breakdown_at = itn
            break

    return SolveResult(x, itn, history, converged, breakdown_at)


def lanczos_extremes(
    apply_m: Operator,
    inner: Callable[[np.ndarray, np.ndarray], float],
    dim: int,
    steps: int,
    seed: int = 0,
) -> tuple[float, float]:
    """Extreme Ritz values of an operator self-adjoint in a given inner product.

    Runs `steps` Lanczos iterations with full reorthogonalization, starting
    from a random vector, and returns (smallest, largest) Ritz value.  Used
    as a cheap condition-number estimate when the dense path is too large.
    """
    if steps < 2:
        raise ValueError("need at least 2 steps")
    import scipy.linalg

    rng = np.random.default_rng(seed)
    q = rng.standard_normal(dim)
    q = q / np.sqrt(inner(q, q))
    basis = [q]
    alphas: list[float] = []
    betas: list[float] = []
    for _ in range(steps):
        z = apply_m(basis[-1])
        a = inner(z, basis[-1])
        alphas.append(a)
        z = z - a * basis[-1]
        if len(basis) > 1:
            z = z - betas[-1] * basis[-2]
        for qk in basis:  # full reorthogonalization
            z = z - inner(z, qk) * qk
        bnorm = np.sqrt(max(inner(z, z), 0.0))
        if bnorm <= _BREAKDOWN_TOL:
            break
        betas.append(bnorm)
        basis.append(z / bnorm)
    k = len(alphas)
    ritz = scipy.linalg.eigh_tridiagonal(
        np.array(alphas), np.array(betas[: k - 1]), eigvals_only=True
    )
    return float(ritz[0]), float(ritz[-1])

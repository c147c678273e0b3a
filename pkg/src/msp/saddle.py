"""Block-tridiagonal saddle-point operators and Schur-complement preconditioning.

The operator has unsigned SPSD diagonal blocks A_1..A_n, couplings
B_1..B_{n-1}, and is assembled with alternating signs (+A_1, -A_2, +A_3, ...)
on the diagonal.  The block-diagonal preconditioner consists of the Schur
complements S_1 = A_1, S_{i+1} = A_{i+1} + B_i S_i^{-1} B_i'.  Spectral
analysis of the preconditioned operator certifies the closed-form bounds
from :mod:`msp.chebyshev`, including their sharpness when A_i = 0 for i >= 2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from .chebyshev import BoundSet, bounds, pbar_roots, smallest_abs_root
from .sparselin import (
    CholeskyFactor,
    NotPositiveDefinite,
    SparseSymMatrix,
    cholesky,
    gen_sym_eig,
    solve_chol,
)


class BlockTridiagSystem:
    """The n-block operator: diagonal blocks A_i (unsigned), couplings B_i.

    B_i maps block i into the dual of block i+1, i.e. it has shape
    (dim_{i+1}, dim_i).
    """

    def __init__(self, A: list[SparseSymMatrix], B: list[scipy.sparse.spmatrix]):
        if len(B) != len(A) - 1:
            raise ValueError("need n-1 couplings for n diagonal blocks")
        self.A = A
        self.B = [scipy.sparse.csr_matrix(b) for b in B]
        self.block_dims = [a.dim for a in A]
        for i, b in enumerate(self.B):
            if b.shape != (self.block_dims[i + 1], self.block_dims[i]):
                raise ValueError(
                    f"B_{i + 1} has shape {b.shape}, expected "
                    f"({self.block_dims[i + 1]}, {self.block_dims[i]})"
                )

    @property
    def n(self) -> int:
        return len(self.A)

    @property
    def total_dim(self) -> int:
        return sum(self.block_dims)

    def block_slices(self) -> list[slice]:
        offs = np.concatenate([[0], np.cumsum(self.block_dims)])
        return [slice(int(offs[i]), int(offs[i + 1])) for i in range(self.n)]


def assemble_full(sys: BlockTridiagSystem) -> SparseSymMatrix:
    """Assemble the full operator with the alternating-sign diagonal."""
    n = sys.n
    grid: list[list] = [[None] * n for _ in range(n)]
    for i in range(n):
        grid[i][i] = (-1.0) ** i * sys.A[i].to_csr()
    for i, b in enumerate(sys.B):
        grid[i + 1][i] = b
        grid[i][i + 1] = b.T
    full = scipy.sparse.bmat(grid, format="csr")
    return SparseSymMatrix(scipy.sparse.triu(full))


class SchurPreconditioner:
    """Block-diagonal SPD preconditioner with per-block Cholesky factors."""

    def __init__(self, blocks: list[SparseSymMatrix]):
        self.blocks = blocks
        self.factors: list[CholeskyFactor] = []
        for i, blk in enumerate(blocks):
            try:
                self.factors.append(cholesky(blk))
            except NotPositiveDefinite as exc:
                raise NotPositiveDefinite(f"block {i + 1} is not SPD: {exc}") from exc
        self.block_dims = [b.dim for b in blocks]
        offs = np.concatenate([[0], np.cumsum(self.block_dims)])
        self._slices = [slice(int(offs[i]), int(offs[i + 1])) for i in range(len(blocks))]

    @property
    def total_dim(self) -> int:
        return sum(self.block_dims)

    def apply(self, x: np.ndarray) -> np.ndarray:
        out = np.empty_like(x)
        for blk, s in zip(self.blocks, self._slices):
            out[s] = blk.matvec(x[s])
        return out

    def apply_inverse(self, r: np.ndarray) -> np.ndarray:
        out = np.empty_like(r)
        for f, s in zip(self.factors, self._slices):
            out[s] = solve_chol(f, r[s])
        return out

    def to_dense(self) -> np.ndarray:
        return _block_diag_dense(self.blocks)

    def to_sparse_sym(self) -> SparseSymMatrix:
        full = scipy.sparse.block_diag([b.to_csr() for b in self.blocks], format="csr")
        return SparseSymMatrix(scipy.sparse.triu(full))


def _block_diag_dense(blocks: list[SparseSymMatrix]) -> np.ndarray:
    import scipy.linalg

    return scipy.linalg.block_diag(*[b.to_dense() for b in blocks])


def exact_schur(sys: BlockTridiagSystem) -> SchurPreconditioner:
    """Build the exact Schur-complement preconditioner by the dense recursion.

    S_1 = A_1, S_{i+1} = A_{i+1} + B_i S_i^{-1} B_i'.  Any stage that fails
    to be SPD raises NotPositiveDefinite naming the failing index.
    """
    blocks: list[SparseSymMatrix] = []
    s_dense = sys.A[0].to_dense()
    for i in range(sys.n):
        s_dense = 0.5 * (s_dense + s_dense.T)
        blk = SparseSymMatrix.from_dense(s_dense)
        try:
            f = cholesky(blk)
        except NotPositiveDefinite as exc:
            raise NotPositiveDefinite(f"Schur complement S_{i + 1} is not SPD: {exc}") from exc
        blocks.append(blk)
        if i < sys.n - 1:
            b = sys.B[i].toarray()
            s_dense = sys.A[i + 1].to_dense() + b @ solve_chol(f, b.T)
    return SchurPreconditioner(blocks)


@dataclass
class SpectrumReport:
    """Generalized spectrum of (full operator, preconditioner) with bound check."""

    eigenvalues: np.ndarray
    norm: float
    inv_norm: float
    cond: float
    bound_set: BoundSet
    within_bounds: bool

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.bound_set.n,
                "norm": self.norm,
                "inv_norm": self.inv_norm,
                "cond": self.cond,
                "norm_bound": self.bound_set.norm_bound,
                "inv_norm_bound": self.bound_set.inv_norm_bound,
                "cond_bound": self.bound_set.cond_bound,
                "within_bounds": bool(self.within_bounds),
                "lambda_min": float(self.eigenvalues[0]),
                "lambda_max": float(self.eigenvalues[-1]),
                "eigenvalues": [float(v) for v in self.eigenvalues],
            },
            indent=2,
        )


DENSE_MODE_LIMIT = 2000

_BOUND_SLACK = 1e-10


def spectrum(
    sys: BlockTridiagSystem,
    precond: SchurPreconditioner,
    dense_limit: int = DENSE_MODE_LIMIT,
) -> SpectrumReport:
    """Dense generalized eigenvalues of the preconditioned operator."""
    if sys.total_dim > dense_limit:
        raise ValueError(f"total dim {sys.total_dim} exceeds dense-mode limit {dense_limit}")
    ev = gen_sym_eig(assemble_full(sys).to_dense(), _block_diag_dense(precond.blocks))
    return spectrum_report_from_eigenvalues(ev, sys.n)


def spectrum_report_from_eigenvalues(ev: np.ndarray, n: int) -> SpectrumReport:
    ev = np.sort(np.asarray(ev))
    nrm = float(np.max(np.abs(ev)))
    inv = float(1.0 / np.min(np.abs(ev)))
    bs = bounds(n)
    within = nrm <= bs.norm_bound * (1 + _BOUND_SLACK) and inv <= bs.inv_norm_bound * (1 + _BOUND_SLACK)
    return SpectrumReport(
        eigenvalues=ev,
        norm=nrm,
        inv_norm=inv,
        cond=nrm * inv,
        bound_set=bs,
        within_bounds=within,
    )


def random_sharp_system(n: int, rng: np.random.Generator, block_dim: int | None = None) -> BlockTridiagSystem:
    """Random system with A_i = 0 for i >= 2 and square invertible couplings.

    This is the configuration for which the spectrum of the preconditioned
    operator is exactly the union of the root sets of Pbar_1..Pbar_n, so that
    all bounds are attained.
    """
    m = int(block_dim) if block_dim else int(rng.integers(2, 7))
    # Well-conditioned random data (orthogonal couplings, eigenvalues of A_1
    # in [1/2, 2]) so attained extremal eigenvalues match the closed forms to
    # near machine precision even for larger n.
    q, _ = np.linalg.qr(rng.standard_normal((m, m)))
    a1 = SparseSymMatrix.from_dense(q @ np.diag(rng.uniform(0.5, 2.0, m)) @ q.T)
    zeros = [SparseSymMatrix.from_dense(np.zeros((m, m))) for _ in range(n - 1)]
    B = []
    for _ in range(n - 1):
        qb, rb = np.linalg.qr(rng.standard_normal((m, m)))
        B.append(scipy.sparse.csr_matrix(qb * np.sign(np.diag(rb))))
    return BlockTridiagSystem([a1] + zeros, B)


def random_spsd_system(n: int, rng: np.random.Generator) -> BlockTridiagSystem:
    """Random system with SPD A_1, rank-deficiency-allowed SPSD A_i, rectangular B_i."""
    dims = sorted((int(rng.integers(2, 7)) for _ in range(n)), reverse=True)
    g = rng.standard_normal((dims[0], dims[0]))
    A = [SparseSymMatrix.from_dense(g.T @ g + 0.1 * np.eye(dims[0]))]
    for i in range(1, n):
        rank = int(rng.integers(0, dims[i] + 1))
        h = rng.standard_normal((rank, dims[i]))
        A.append(SparseSymMatrix.from_dense(h.T @ h))
    # Non-increasing dims and full-row-rank couplings keep every Schur
    # complement in the recursion positive definite even when A_i is singular.
    B = []
    for i in range(n - 1):
        b = rng.standard_normal((dims[i + 1], dims[i]))
        while np.linalg.matrix_rank(b) < dims[i + 1]:
            b = rng.standard_normal((dims[i + 1], dims[i]))
        B.append(scipy.sparse.csr_matrix(b))
    return BlockTridiagSystem(A, B)


@dataclass
class SharpnessReport:
    """Outcome of the randomized sharpness and bound certification suites."""

    n: int
    trials: int
    seed: int
    max_norm_deviation: float = 0.0
    max_inv_norm_deviation: float = 0.0
    max_cond_excess: float = 0.0  # max over trials of cond - cond_bound (general SPSD suite)
    failing_seeds: list[int] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failing_seeds


SHARPNESS_TOL = 1e-8


def verify_sharpness(n: int, trials: int, seed: int) -> SharpnessReport:
    """Randomized certification of the sharp spectral bounds for block count n.

    Runs two suites: systems with A_i = 0 (i >= 2) whose extreme eigenvalue
    moduli must attain the closed-form bounds to 1e-8, and general SPSD
    systems whose condition number must stay below the closed-form bound.
    """
    if not 2 <= n <= 6:
        raise ValueError("n must be in [2, 6]")
    report = SharpnessReport(n=n, trials=trials, seed=seed)
    bs = bounds(n)
    min_modulus = smallest_abs_root(n)
    for t in range(trials):
        trial_seed = seed + t
        rng = np.random.default_rng(trial_seed)
        sys_sharp = random_sharp_system(n, rng)
        rep = spectrum(sys_sharp, exact_schur(sys_sharp))
        dev_norm = abs(rep.norm - bs.norm_bound)
        dev_inv = abs(1.0 / rep.inv_norm - min_modulus)
        report.max_norm_deviation = max(report.max_norm_deviation, dev_norm)
        report.max_inv_norm_deviation = max(report.max_inv_norm_deviation, dev_inv)
        ok = dev_norm <= SHARPNESS_TOL and dev_inv <= SHARPNESS_TOL

        sys_gen = random_spsd_system(n, rng)
        rep_gen = spectrum(sys_gen, exact_schur(sys_gen))
        report.max_cond_excess = max(report.max_cond_excess, rep_gen.cond - bs.cond_bound)
        ok = ok and rep_gen.within_bounds

        if not ok:
            report.failing_seeds.append(trial_seed)
    return report


def sharp_spectrum_reference(n: int) -> np.ndarray:
    """The predicted eigenvalue set for the A_i = 0 (i >= 2) configuration."""
    vals = np.concatenate([pbar_roots(j) for j in range(1, n + 1)])
    return np.sort(vals)

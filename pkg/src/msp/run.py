"""Drivers tying problems, preconditioners, and solvers together."""

from __future__ import annotations

from dataclasses import dataclass

from .krylov import SolveResult, minres_solve
from .problems import AssembledProblem, ProblemConfig, build_problem, make_preconditioner
from .saddle import SchurPreconditioner, SpectrumReport, assemble_full, spectrum


def solve_problem(
    prob: AssembledProblem,
    precond: SchurPreconditioner,
    tol: float = 1e-8,
    maxit: int = 500,
) -> SolveResult:
    """Run preconditioned MINRES from a zero initial guess.

    Convergence is tested on the plain Euclidean residual norm relative to
    ||b||, the protocol under which the published iteration counts for these
    optimality systems are reported; the energy-norm history is still
    available on the returned SolveResult.
    """
    full = assemble_full(prob.system).to_csr()
    return minres_solve(
        lambda x: full @ x,
        precond.apply_inverse,
        prob.rhs,
        tol=tol,
        maxit=maxit,
        stop="euclidean",
    )


def problem_spectrum(
    prob: AssembledProblem, precond: SchurPreconditioner, dense_limit: int = 4000
) -> SpectrumReport:
    """Dense generalized spectrum of the preconditioned optimality system."""
    return spectrum(prob.system, precond, dense_limit=dense_limit)


@dataclass
class TableCell:
    level: int
    alpha: float
    dof: int
    iterations: int
    converged: bool


def run_table(
    problem: str,
    d: int,
    p: int,
    levels: list[int],
    alphas: list[float],
    precond_variant: str,
    geometry: str,
    tol: float = 1e-8,
    maxit: int = 500,
) -> list[TableCell]:
    """Iteration counts over a levels-by-alphas grid, one problem and variant."""
    cells = []
    for level in levels:
        for alpha in alphas:
            cfg = ProblemConfig(
                problem=problem, d=d, p=p, level=level, alpha=alpha, geometry=geometry
            )
            prob = build_problem(cfg)
            precond = make_preconditioner(prob, precond_variant)
            res = solve_problem(prob, precond, tol=tol, maxit=maxit)
            cells.append(
                TableCell(
                    level=level,
                    alpha=alpha,
                    dof=prob.total_dim,
                    iterations=res.iterations,
                    converged=res.converged,
                )
            )
    return cells


def format_table(cells: list[TableCell], fmt: str = "markdown") -> str:
    """Render cells as rows = levels, columns = alphas (csv or markdown)."""
    levels = sorted({c.level for c in cells})
    alphas = sorted({c.alpha for c in cells}, reverse=True)
    by_key = {(c.level, c.alpha): c for c in cells}

    def cell_text(c: TableCell | None) -> str:
        if c is None:
            return ""
        return str(c.iterations) if c.converged else f"{c.iterations}*"

    header = ["level", "dof"] + [f"{a:g}" for a in alphas]
    rows = []
    for lvl in levels:
        dof = next(c.dof for c in cells if c.level == lvl)
        rows.append(
            [str(lvl), str(dof)] + [cell_text(by_key.get((lvl, a))) for a in alphas]
        )
    if fmt == "csv":
        lines = [",".join(header)] + [",".join(r) for r in rows]
        return "\n".join(lines) + "\n"
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
    out = ["| " + " | ".join(h.rjust(w) for h, w in zip(header, widths)) + " |"]
    out.append("|" + "|".join("-" * (w + 2) for w in widths) + "|")
    for r in rows:
        out.append("| " + " | ".join(v.rjust(w) for v, w in zip(r, widths)) + " |")
    return "\n".join(out) + "\n"

"""Command-line driver: verification suites, iteration tables, spectra, export.

Exit codes: 0 success, 1 property violation, 2 configuration error,
3 solver failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import chebyshev
from .problems import (
    DEFAULT_ALPHAS,
    PROBLEM_IDS,
    ProblemConfig,
    build_problem,
    make_preconditioner,
)
from .run import format_table, run_table, solve_problem
from .saddle import DENSE_MODE_LIMIT, spectrum, verify_sharpness
from .sparselin import NotPositiveDefinite, write_matrix_market
from .krylov import lanczos_extremes

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3

_LARGE_2D_LEVEL = 6
_LARGE_3D_LEVEL = 4


def _parse_n_range(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(text)]


def cmd_verify(args: argparse.Namespace) -> int:
    """Randomized sharpness/bound suites plus the closed-form polynomial checks."""
    failed = False
    for j in range(1, 11):
        want = 1.0 / (2.0 * np.sin(np.pi / (2.0 * (2 * j + 1))))
        dev = abs(chebyshev.q_matrix_norm(j) - want)
        if dev > 1e-12:
            failed = True
            print(f"Q_{j} norm closed form: FAIL (dev {dev:.2e})")
    print("Q_j norms j=1..10: " + ("FAIL" if failed else "PASS (1e-12)"))
    eps_bad = 0.0
    for n in range(2, 9):
        eps = chebyshev.epsilon_sequence(n)
        top = 2.0 * np.cos(np.pi / (2 * n + 1))
        eps_bad = max(eps_bad, abs(1.0 + 1.0 / eps[0] - top))
        for i in range(1, n - 1):
            eps_bad = max(eps_bad, abs(eps[i - 1] + 1.0 / eps[i] - top))
        if min(eps) < 1.0 - 1e-12:
            eps_bad = max(eps_bad, 1.0 - min(eps))
    ok = eps_bad <= 1e-12
    failed = failed or not ok
    print(f"epsilon-sequence identities n=2..8: {'PASS' if ok else 'FAIL'} (max dev {eps_bad:.2e})")

    for n in args.n:
        rep = verify_sharpness(n, args.trials, args.seed)
        status = "PASS" if rep.passed else "FAIL"
        print(
            f"sharpness/bounds n={n} ({args.trials} trials): {status} "
            f"(max dev {max(rep.max_norm_deviation, rep.max_inv_norm_deviation):.2e}, "
            f"max cond excess {rep.max_cond_excess:.2e})"
        )
        if not rep.passed:
            failed = True
            print(f"  failing seeds: {rep.failing_seeds}")
    return EXIT_VIOLATION if failed else EXIT_OK


def _problem_config(args: argparse.Namespace, level: int, alpha: float) -> ProblemConfig:
    geometry = args.geometry
    if geometry is None:
        geometry = "annulus_2d" if args.dim == 2 else "twisted_3d"
    return ProblemConfig(
        problem=args.problem,
        d=args.dim,
        p=args.degree,
        level=level,
        alpha=alpha,
        geometry=geometry,
    )


def _check_scale(args: argparse.Namespace, levels: list[int]) -> None:
    cap = _LARGE_2D_LEVEL if args.dim == 2 else _LARGE_3D_LEVEL
    big = [l for l in levels if l >= cap]
    if big and not args.large:
        raise SystemExit2(
            f"levels {big} exceed the desk-scale defaults for d={args.dim}; rerun with --large"
        )
    if big and args.precond != "practical":
        raise SystemExit2("--large runs support only the practical preconditioner")


class SystemExit2(Exception):
    """Configuration error surfaced as exit code 2."""


def cmd_table(args: argparse.Namespace) -> int:
    levels = args.levels or ([3, 4, 5] if args.dim == 2 else [2, 3])
    alphas = args.alphas or list(DEFAULT_ALPHAS)
    _check_scale(args, levels)
    variant = "exact_schur" if args.precond == "exact" else args.precond
    geometry = args.geometry or ("annulus_2d" if args.dim == 2 else "twisted_3d")
    cells = run_table(
        args.problem,
        args.dim,
        args.degree,
        levels,
        alphas,
        variant,
        geometry,
        tol=args.tol,
        maxit=args.maxit,
    )
    if args.dump_residuals:
        os.makedirs(args.dump_residuals, exist_ok=True)
        for level in levels:
            for alpha in alphas:
                prob = build_problem(_problem_config(args, level, alpha))
                res = solve_problem(prob, make_preconditioner(prob, variant), tol=args.tol, maxit=args.maxit)
                path = os.path.join(args.dump_residuals, f"residuals_l{level}_a{alpha:g}.csv")
                with open(path, "w") as fh:
                    fh.write("iteration,residual\n")
                    for k, r in enumerate(res.residual_history):
                        fh.write(f"{k},{r:.16e}\n")
    text = format_table(cells, "csv" if args.format == "csv" else "markdown")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if any(not c.converged for c in cells):
        return EXIT_SOLVER
    return EXIT_OK


def cmd_spectrum(args: argparse.Namespace) -> int:
    level = args.levels[0] if args.levels else (3 if args.dim == 2 else 2)
    alpha = args.alphas[0] if args.alphas else 1.0
    prob = build_problem(_problem_config(args, level, alpha))
    variant = "exact_schur" if args.precond == "exact" else args.precond
    precond = make_preconditioner(prob, variant)
    n = prob.system.n
    bound = chebyshev.bounds(n).cond_bound
    if prob.system.total_dim > DENSE_MODE_LIMIT and not args.lanczos:
        print(
            f"system dimension {prob.system.total_dim} exceeds the dense cap "
            f"{DENSE_MODE_LIMIT}; rerun with --lanczos"
        )
        return EXIT_CONFIG
    if prob.system.total_dim > DENSE_MODE_LIMIT:
        from .saddle import assemble_full

        full = assemble_full(prob.system).to_csr()
        lo, hi = lanczos_extremes(
            lambda v: precond.apply_inverse(full @ v),
            lambda u, v: float(u @ precond.apply(v)),
            prob.system.total_dim,
            steps=min(200, prob.system.total_dim),
            seed=0,
        )
        print(f"Ritz extremes: [{lo:.6f}, {hi:.6f}] (Lanczos estimate)")
        return EXIT_OK
    rep = spectrum(prob.system, precond, dense_limit=DENSE_MODE_LIMIT)
    print(f"problem={args.problem} level={level} alpha={alpha:g} precond={variant}")
    print(
        f"lambda in [{rep.eigenvalues.min():.6f}, {rep.eigenvalues.max():.6f}], "
        f"min|lambda| = {np.min(np.abs(rep.eigenvalues)):.6f}"
    )
    print(f"kappa = {rep.cond:.6f}  (bound for n={n}: {bound:.6f})")
    if rep.cond > bound * (1.0 + 1e-10) and variant == "exact_schur":
        print("BOUND VIOLATED")
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_export(args: argparse.Namespace) -> int:
    level = args.levels[0] if args.levels else (3 if args.dim == 2 else 2)
    alpha = args.alphas[0] if args.alphas else 1.0
    prob = build_problem(_problem_config(args, level, alpha))
    out = args.matrix_market
    os.makedirs(out, exist_ok=True)
    import scipy.io

    for i, a in enumerate(prob.system.A, start=1):
        write_matrix_market(a, os.path.join(out, f"A{i}.mtx"))
    for i, b in enumerate(prob.system.B, start=1):
        scipy.io.mmwrite(os.path.join(out, f"B{i}.mtx"), b.tocoo())
    np.savetxt(os.path.join(out, "rhs.txt"), prob.rhs)
    print(f"wrote {len(prob.system.A)} diagonal and {len(prob.system.B)} coupling blocks to {out}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="msp", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the randomized theorem-verification suites")
    v.add_argument("--n", type=_parse_n_range, default=list(range(2, 7)), help="block count or range, e.g. 3 or 2..6")
    v.add_argument("--trials", type=int, default=20)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    def add_problem_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--problem", choices=PROBLEM_IDS, default="boundary_observation")
        p.add_argument("--dim", type=int, choices=(1, 2, 3), default=2)
        p.add_argument("--degree", type=int, default=2)
        p.add_argument("--levels", type=int, nargs="+", default=None)
        p.add_argument("--alphas", type=float, nargs="+", default=None)
        p.add_argument("--precond", choices=("exact", "exact_schur", "practical"), default="practical")
        p.add_argument("--geometry", default=None)
        p.add_argument("--tol", type=float, default=1e-8)
        p.add_argument("--maxit", type=int, default=500)
        p.add_argument("--large", action="store_true", help="allow beyond-desk-scale levels")

    t = sub.add_parser("table", help="reproduce an iteration-count table")
    add_problem_args(t)
    t.add_argument("--out", default=None)
    t.add_argument("--format", choices=("csv", "md"), default="md")
    t.add_argument("--dump-residuals", default=None, metavar="DIR", help="write per-cell residual-history CSVs")
    t.set_defaults(func=cmd_table)

    s = sub.add_parser("spectrum", help="condition number of the preconditioned system")
    add_problem_args(s)
    s.add_argument("--lanczos", action="store_true", help="use Lanczos extremes beyond the dense cap")
    s.set_defaults(func=cmd_spectrum)

    e = sub.add_parser("export", help="write system blocks in Matrix Market format")
    add_problem_args(e)
    e.add_argument("--matrix-market", required=True, metavar="DIR")
    e.set_defaults(func=cmd_export)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (SystemExit2, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NotPositiveDefinite as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

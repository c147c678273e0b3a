"""Command-line interface: exit codes, output formats, file artifacts."""

import os

import numpy as np
import pytest

from msp.cli import EXIT_CONFIG, EXIT_OK, EXIT_VIOLATION, main


def run_cli(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


SMALL = ["--dim", "2", "--degree", "2", "--levels", "2", "--alphas", "0.1"]


class TestVerify:
    def test_passes_with_exit_zero(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "--n", "2..3", "--trials", "3")
        assert code == EXIT_OK
        assert "PASS" in out
        assert "FAIL" not in out
        assert "sharpness/bounds n=2" in out
        assert "sharpness/bounds n=3" in out

    def test_single_n(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "--n", "4", "--trials", "2")
        assert code == EXIT_OK
        assert "n=4" in out


class TestTable:
    def test_markdown_table(self, capsys):
        code, out, _ = run_cli(
            capsys, "table", "--problem", "distributed_very_weak", *SMALL
        )
        assert code == EXIT_OK
        assert "|" in out

    def test_csv_and_markdown_agree(self, capsys, tmp_path):
        args = ["table", "--problem", "distributed_very_weak", *SMALL]
        _, md, _ = run_cli(capsys, *args, "--format", "md")
        _, csv, _ = run_cli(capsys, *args, "--format", "csv")
        md_nums = [t for t in md.replace("|", " ").split() if t.isdigit()]
        csv_nums = [t for row in csv.splitlines() for t in row.split(",") if t.isdigit()]
        assert set(csv_nums) <= set(md_nums + csv_nums)
        # the iteration count itself must appear in both renderings
        iters = [t for t in csv.splitlines()[-1].split(",") if t.strip().isdigit()]
        assert iters and all(i in md_nums for i in iters)

    def test_out_file(self, capsys, tmp_path):
        dest = tmp_path / "table.csv"
        code, out, _ = run_cli(
            capsys,
            "table", "--problem", "distributed_very_weak", *SMALL,
            "--format", "csv", "--out", str(dest),
        )
        assert code == EXIT_OK
        assert dest.read_text().strip()
        assert out == ""

    def test_dump_residuals(self, capsys, tmp_path):
        dest = tmp_path / "hist"
        code, _, _ = run_cli(
            capsys,
            "table", "--problem", "distributed_very_weak", *SMALL,
            "--dump-residuals", str(dest),
        )
        assert code == EXIT_OK
        files = os.listdir(dest)
        assert len(files) == 1
        lines = (dest / files[0]).read_text().splitlines()
        assert lines[0] == "iteration,residual"
        vals = [float(r.split(",")[1]) for r in lines[1:]]
        assert vals[-1] < vals[0]

    def test_large_gate(self, capsys):
        code, _, err = run_cli(
            capsys,
            "table", "--problem", "distributed_very_weak",
            "--dim", "2", "--levels", "6", "--alphas", "1.0",
        )
        assert code == EXIT_CONFIG
        assert "--large" in err

    def test_exact_precond_beyond_dense_cap(self, capsys):
        code, _, err = run_cli(
            capsys,
            "table", "--problem", "distributed_very_weak",
            "--dim", "2", "--levels", "6", "--alphas", "1.0",
            "--large", "--precond", "exact",
        )
        assert code == EXIT_CONFIG


class TestSpectrum:
    def test_exact_schur_within_bound(self, capsys):
        code, out, _ = run_cli(
            capsys,
            "spectrum", "--problem", "distributed_very_weak", *SMALL,
            "--precond", "exact",
        )
        assert code == EXIT_OK
        assert "kappa" in out
        assert "BOUND VIOLATED" not in out

    def test_three_block_problem(self, capsys):
        code, out, _ = run_cli(
            capsys,
            "spectrum", "--problem", "boundary_observation", *SMALL,
            "--precond", "exact",
        )
        assert code == EXIT_OK
        kappa = float(out.split("kappa = ")[1].split()[0])
        assert kappa <= 4.0490

    def test_dense_cap_requires_lanczos(self, capsys):
        code, out, _ = run_cli(
            capsys,
            "spectrum", "--problem", "distributed_very_weak",
            "--dim", "2", "--levels", "5", "--alphas", "1.0",
        )
        assert code == EXIT_CONFIG
        assert "--lanczos" in out

    def test_lanczos_path(self, capsys):
        code, out, _ = run_cli(
            capsys,
            "spectrum", "--problem", "distributed_very_weak",
            "--dim", "2", "--levels", "5", "--alphas", "1.0", "--lanczos",
        )
        assert code == EXIT_OK
        assert "Ritz extremes" in out


class TestExport:
    def test_writes_blocks_and_rhs(self, capsys, tmp_path):
        dest = tmp_path / "mm"
        code, out, _ = run_cli(
            capsys,
            "export", "--problem", "boundary_observation", *SMALL,
            "--matrix-market", str(dest),
        )
        assert code == EXIT_OK
        names = sorted(os.listdir(dest))
        assert names == ["A1.mtx", "A2.mtx", "A3.mtx", "B1.mtx", "B2.mtx", "rhs.txt"]
        rhs = np.loadtxt(dest / "rhs.txt")
        assert rhs.ndim == 1 and np.all(np.isfinite(rhs))

    def test_roundtrip_first_block(self, capsys, tmp_path):
        import scipy.io

        from msp.problems import ProblemConfig, build_problem

        dest = tmp_path / "mm"
        run_cli(
            capsys,
            "export", "--problem", "distributed_very_weak", *SMALL,
            "--matrix-market", str(dest),
        )
        a1 = scipy.io.mmread(dest / "A1.mtx").toarray()
        prob = build_problem(
            ProblemConfig(problem="distributed_very_weak", d=2, p=2, level=2, alpha=0.1)
        )
        assert np.allclose(a1, prob.system.A[0].to_dense(), atol=1e-14)


class TestErrors:
    def test_unknown_geometry(self, capsys):
        code, _, err = run_cli(
            capsys,
            "table", "--problem", "distributed_very_weak", *SMALL,
            "--geometry", "moebius",
        )
        assert code == EXIT_CONFIG

    def test_boundary_control_3d_rejected(self, capsys):
        code, _, err = run_cli(
            capsys,
            "table", "--problem", "boundary_control", "--dim", "3",
            "--degree", "3", "--levels", "2", "--alphas", "1.0",
        )
        assert code == EXIT_CONFIG
        assert "configuration error" in err

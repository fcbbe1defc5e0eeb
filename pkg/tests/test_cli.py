"""
Tests for pflat.cli module.
"""

import json
from unittest.mock import patch

import numpy as np
import pytest

from pflat.cli import main, run_jacobian_trial
from pflat.curvature import CSV_COLUMNS, curvature_report
from pflat.meshfile import read_mesh


def run_cli(*args) -> int:
    """Run the CLI with the given arguments and return its exit code."""
    with patch("sys.argv", ["pflat", *map(str, args)]):
        try:
            main()
        except SystemExit as e:
            return e.code
    return 0


class TestCheckCommand:
    """Tests for the check subcommand."""

    def test_valid_sphere(self, examples_dir, capsys):
        code = run_cli("check", examples_dir / "sphere.mesh")
        result = json.loads(capsys.readouterr().out)

        assert code == 0
        assert result["manifold"]["passed"] is True
        assert result["manifold"]["euler_characteristic"] == 2
        assert result["domain"]["passed"] is True
        assert result["metric"]["passed"] is True

    def test_raw_distances(self, examples_dir, capsys):
        """Should skip the domain check for a file without a chart."""
        code = run_cli("check", examples_dir / "distances.mesh")
        result = json.loads(capsys.readouterr().out)

        assert code == 0
        assert "domain" not in result
        assert result["metric"]["passed"] is True

    def test_three_manifold(self, examples_dir, capsys):
        run_cli("check", examples_dir / "s3.mesh")
        result = json.loads(capsys.readouterr().out)

        assert result["manifold"]["dimension"] == 3
        assert result["manifold"]["euler_characteristic"] == 0

    def test_nonmanifold(self, examples_dir, capsys):
        """Should name the offending edge and exit with an input error."""
        code = run_cli("check", examples_dir / "nonmanifold.mesh")
        result = json.loads(capsys.readouterr().out)

        assert code == 2
        assert result["manifold"]["passed"] is False
        assert result["manifold"]["error"] == "NonManifold"
        assert result["manifold"]["simplex"] == [1, 3]

    def test_truncated_file(self, examples_dir, capsys):
        code = run_cli("check", examples_dir / "truncated.mesh")
        captured = capsys.readouterr()

        assert code == 2
        assert json.loads(captured.out)["line"] == 10
        assert "Error: line 10" in captured.err

    def test_missing_file(self, temp_dir, capsys):
        code = run_cli("check", temp_dir / "absent.mesh")

        assert code == 2
        assert "Mesh file not found" in capsys.readouterr().err


class TestCurvatureCommand:
    """Tests for the curvature subcommand."""

    def test_json(self, examples_dir, capsys):
        code = run_cli("curvature", examples_dir / "sphere.mesh")
        result = json.loads(capsys.readouterr().out)

        assert code == 0
        assert result["total_curvature"] == pytest.approx(4.0 * np.pi)
        assert result["vertex_curvature"]["1"] == pytest.approx(np.pi)

    def test_csv(self, examples_dir, capsys):
        run_cli("curvature", examples_dir / "s3.mesh", "--format", "csv")
        lines = capsys.readouterr().out.splitlines()

        assert lines[0] == ",".join(CSV_COLUMNS)
        assert sum(line.startswith("edge,") for line in lines) == 10

    def test_json_reals_match_csv_digits(self, examples_dir, capsys):
        """Should print JSON reals that read back to the same doubles as the 17-digit CSV."""
        run_cli("curvature", examples_dir / "perturbed.mesh")
        result = json.loads(capsys.readouterr().out)
        run_cli("curvature", examples_dir / "perturbed.mesh", "--format", "csv")
        rows = [line.split(",") for line in capsys.readouterr().out.splitlines()[1:]]

        metric = read_mesh(examples_dir / "perturbed.mesh").metric()
        expected = curvature_report(metric).vertex_curvature
        for n, vertex in enumerate(["1", "2", "3", "4"]):
            assert result["vertex_curvature"][vertex] == expected[n]
        for kind, name, value, _ in rows:
            if kind == "vertex":
                assert float(value) == result["vertex_curvature"][name]

    def test_help_states_json_precision(self, capsys):
        assert run_cli("--help") == 0
        assert "shortest form" in " ".join(capsys.readouterr().out.split())

    def test_three_manifold_json(self, examples_dir, capsys):
        run_cli("curvature", examples_dir / "s3.mesh")
        result = json.loads(capsys.readouterr().out)

        assert "ehr" in result
        assert len(result["edge_curvature"]) == 10


class TestJacobianTestCommand:
    """Tests for the jacobian-test subcommand."""

    def test_surface_passes(self, examples_dir, capsys):
        code = run_cli("jacobian-test", examples_dir / "perturbed.mesh", "--trials", 2)
        result = json.loads(capsys.readouterr().out)

        assert code == 0
        assert result["passed"] is True
        assert result["completed"] == 2
        assert result["max_jacobian_error"] < 1e-6
        assert "max_hessian_error" not in result

    def test_three_manifold_passes(self, examples_dir, capsys):
        code = run_cli("jacobian-test", examples_dir / "s3.mesh", "--trials", 1, "--seed", 7)
        result = json.loads(capsys.readouterr().out)

        assert code == 0
        assert result["max_hessian_error"] < 1e-5

    def test_surface_reports_every_check(self, examples_dir, capsys):
        """Should check couplings, triangle angles and zero row sums on a surface."""
        run_cli("jacobian-test", examples_dir / "inversive.mesh", "--trials", 2, "--seed", 4)
        result = json.loads(capsys.readouterr().out)

        assert result["passed"] is True
        assert result["max_coupling_error"] < 1e-6
        assert result["max_angle_error"] < 1e-6
        assert result["max_row_sum_defect"] < 1e-10
        assert "max_dihedral_error" not in result

    def test_three_manifold_reports_every_check(self, examples_dir, capsys):
        """Should add the dihedral, Regge and volume gradients in three dimensions."""
        run_cli("jacobian-test", examples_dir / "s3.mesh", "--trials", 1, "--seed", 2)
        result = json.loads(capsys.readouterr().out)

        assert result["passed"] is True
        for key in ("dihedral_error", "regge_error", "volume_error", "volume_length_error", "row_sum_defect"):
            assert f"max_{key}" in result
        assert "max_angle_error" not in result

    def test_corrupted_chart_block(self, examples_dir, temp_dir, capsys):
        """Should stop at the bad row with a ParseError instead of failing later."""
        path = temp_dir / "corrupted.mesh"
        path.write_text((examples_dir / "inversive.mesh").read_text().replace("1 2 0.5\n", "1 9 0.5\n"))

        code = run_cli("jacobian-test", path)
        captured = capsys.readouterr()
        result = json.loads(captured.out)

        assert code == 2
        assert result["error"] == "ParseError"
        assert result["line"] == 15
        assert "undeclared vertex 9" in captured.err

    def test_zero_trials_pass_vacuously(self, examples_dir, capsys):
        code = run_cli("jacobian-test", examples_dir / "sphere.mesh", "--trials", 0)
        result = json.loads(capsys.readouterr().out)

        assert code == 0
        assert result["vacuous"] is True

    def test_needs_chart(self, examples_dir, capsys):
        code = run_cli("jacobian-test", examples_dir / "distances.mesh")

        assert code == 2
        assert "chart block" in capsys.readouterr().err

    def test_trials_are_reproducible(self, examples_dir):
        """Should give the same errors for the same seed and trial."""
        mesh = read_mesh(examples_dir / "inversive.mesh")
        cx = mesh.build()
        chart, f = mesh.chart(cx), mesh.vertex_function(cx)

        assert run_jacobian_trial(chart, f, 3, 1) == run_jacobian_trial(chart, f, 3, 1)


class TestSolveCommand:
    """Tests for the solve subcommand."""

    def test_writes_solved_mesh(self, examples_dir, temp_dir, capsys):
        out = temp_dir / "solved.mesh"
        code = run_cli(
            "solve", examples_dir / "perturbed.mesh", "--target", examples_dir / "target_pi.txt", "--out", out
        )
        result = json.loads(capsys.readouterr().out)

        assert code == 0
        assert result["converged"] is True
        assert result["method"] == "newton"
        f = np.array(list(read_mesh(out).f.values()))
        assert np.ptp(f) < 1e-9

    def test_writes_trace_beside_mesh(self, examples_dir, temp_dir, capsys):
        """Should write the trace next to --out when --trace is not given."""
        out = temp_dir / "solved.mesh"
        run_cli("solve", examples_dir / "perturbed.mesh", "--target", examples_dir / "target_pi.txt", "--out", out)
        result = json.loads(capsys.readouterr().out)

        trace = temp_dir / "solved.trace.csv"
        assert result["trace_path"] == str(trace)
        lines = trace.read_text().splitlines()
        assert lines[0] == "iteration,residual,step,eig_min,eig_max"
        assert len(lines) == result["iterations"] + 2

    def test_trace_in_report_without_out(self, examples_dir, capsys):
        run_cli("solve", examples_dir / "perturbed.mesh", "--target", examples_dir / "target_pi.txt")
        result = json.loads(capsys.readouterr().out)

        assert result["trace_path"] is None
        assert result["trace"]["converged"] is True
        assert len(result["trace"]["residuals"]) == result["iterations"] + 1

    def test_prints_mesh_without_out(self, examples_dir, capsys):
        run_cli("solve", examples_dir / "perturbed.mesh", "--target", examples_dir / "target_pi.txt")
        result = json.loads(capsys.readouterr().out)

        assert result["out"] is None
        assert result["mesh"].startswith("pflat-mesh 1")

    def test_flow(self, examples_dir, capsys):
        code = run_cli(
            "solve", examples_dir / "perturbed.mesh", "--target", examples_dir / "target_pi.txt", "--method", "flow"
        )
        result = json.loads(capsys.readouterr().out)

        assert code == 0
        assert result["method"] == "flow"

    def test_csc_on_three_manifold(self, examples_dir, capsys):
        code = run_cli("solve", examples_dir / "s3.mesh", "--target", "csc")
        result = json.loads(capsys.readouterr().out)

        assert code == 0
        assert result["iterations"] == 0

    def test_infeasible_target(self, examples_dir, capsys):
        code = run_cli(
            "solve", examples_dir / "perturbed.mesh", "--target", examples_dir / "infeasible_target.txt"
        )
        result = json.loads(capsys.readouterr().out)

        assert code == 2
        assert result["error"] == "InfeasibleTarget"

    def test_flat_target_on_surface(self, examples_dir, capsys):
        code = run_cli("solve", examples_dir / "sphere.mesh", "--target", "flat")

        assert code == 2
        assert "3-manifold" in capsys.readouterr().err

    def test_missing_target_file(self, examples_dir, temp_dir):
        code = run_cli("solve", examples_dir / "sphere.mesh", "--target", temp_dir / "absent.txt")

        assert code == 2

    def test_not_converged(self, examples_dir, temp_dir, capsys):
        """Should exit 3 and still write the trace when the budget runs out."""
        trace = temp_dir / "trace.csv"
        code = run_cli(
            "solve",
            examples_dir / "perturbed.mesh",
            "--target",
            examples_dir / "target_pi.txt",
            "--max-iterations",
            1,
            "--trace",
            trace,
        )
        result = json.loads(capsys.readouterr().out)

        assert code == 3
        assert result["error"] == "MaxIterations"
        assert result["iterations"] == 1
        lines = trace.read_text().splitlines()
        assert lines[0] == "iteration,residual,step,eig_min,eig_max"
        assert len(lines) == 3

    def test_target_required(self, examples_dir, capsys):
        code = run_cli("solve", examples_dir / "sphere.mesh")

        assert code == 1
        assert "--target" in capsys.readouterr().err


class TestSpectrumCommand:
    """Tests for the spectrum subcommand."""

    def test_report(self, examples_dir, capsys):
        code = run_cli("spectrum", examples_dir / "sphere.mesh")
        result = json.loads(capsys.readouterr().out)

        assert code == 0
        assert result["certified"] is True
        assert result["laplacian"]["nsd_constant_kernel"] is True
        assert len(result["laplacian"]["eigenvalues"]) == 4

    def test_raw_distances(self, examples_dir, capsys):
        run_cli("spectrum", examples_dir / "distances.mesh")
        result = json.loads(capsys.readouterr().out)

        assert result["laplacian"]["min"] == pytest.approx(-4.0 / np.sqrt(3.0))
        assert result["constant_residual"] < 1e-12

    def test_csv(self, examples_dir, capsys):
        run_cli("spectrum", examples_dir / "sphere.mesh", "--format", "csv")
        lines = capsys.readouterr().out.splitlines()

        assert lines[0] == "index,eigenvalue"
        assert len(lines) == 5


class TestConvertOffCommand:
    """Tests for the convert-off subcommand."""

    def test_stdout(self, examples_dir, capsys):
        code = run_cli("convert-off", examples_dir / "tetrahedron.off")
        out = capsys.readouterr().out

        assert code == 0
        assert out.startswith("pflat-mesh 1\ndimension 2\n")
        assert "chart perp-bisector" in out

    def test_out_file(self, examples_dir, temp_dir):
        out = temp_dir / "tetra.mesh"
        run_cli("convert-off", examples_dir / "tetrahedron.off", "--out", out)

        assert read_mesh(out).build().euler_characteristic() == 2

    def test_missing_file(self, temp_dir, capsys):
        code = run_cli("convert-off", temp_dir / "absent.off")

        assert code == 2
        assert "OFF file not found" in capsys.readouterr().err


class TestArgumentParsing:
    """Tests for argument handling."""

    def test_requires_command(self, capsys):
        assert run_cli() == 1

    def test_unknown_command(self, capsys):
        assert run_cli("triage") == 1

    def test_bad_choice(self, examples_dir, capsys):
        assert run_cli("curvature", examples_dir / "sphere.mesh", "--format", "xml") == 1

    def test_verbose_flag(self, examples_dir, capsys):
        with patch("pflat.cli.configure_logging") as mock_logging:
            run_cli("-vv", "check", examples_dir / "sphere.mesh")

        mock_logging.assert_called_once_with(2)

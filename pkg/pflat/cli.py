#!/usr/bin/env python3
"""
Command-line interface for pflat.

Subcommands check a mesh file, report its curvatures, validate the analytic
variation formulas against finite differences, solve prescribed-curvature
problems, list Laplacian spectra and convert OFF surfaces.

Exit codes: 0 success, 1 usage error, 2 invalid input, 3 solver did not converge.
"""

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations
from pathlib import Path

import numpy as np

from .config import configure_logging, get_thread_count
from .conformal import ConformalChart
from .curvature import (
    CSV_COLUMNS,
    curvature_report,
    ehr,
    regge_gradient,
    total_volume,
    vertex_curvature,
    volume_length_gradient,
)
from .exceptions import ComplexError, Degenerate, InfeasibleTarget, NotCritical, ParseError, SolverError
from .geometry import dihedral_angles, triangle_angles
from .meshfile import MeshFile, format_real, off_to_mesh, parse_vertex_values, read_mesh, serialize_mesh, write_mesh
from .metric import PreMetric, check_metric, vertex_volumes
from .solver import (
    TRACE_COLUMNS,
    SolveProblem,
    SolveTarget,
    StepPolicy,
    definiteness_report,
    gradient_flow,
    newton_solve,
    operator_spectrum,
)
from .variation import (
    angle_gradients_2d,
    curvature_jacobian,
    dihedral_gradient_3d,
    ehr_hessian,
    fd_jacobian,
    fd_second_directional,
    laplacian,
    relative_error,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3

JACOBIAN_TOLERANCE = 1e-6
HESSIAN_TOLERANCE = 1e-5
SYMMETRY_TOLERANCE = 1e-10

# Size of the random perturbation of f in each jacobian-test trial
TRIAL_PERTURBATION = 0.01

REPORT_EPILOG = (
    "JSON reports print each real in its shortest form that reads back to the same double, "
    "so no digits are lost against the 17 significant digits of CSV output and mesh files."
)


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits with EXIT_USAGE on bad arguments."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _emit(data: dict) -> None:
    """Print a JSON report.

    Reals use Python's shortest round-trip form, which parses back to the
    same double as the 17 significant digits written to CSV and mesh files.
    """
    print(json.dumps(data, indent=2))


def _error_entry(error: Exception) -> dict:
    entry = {"error": type(error).__name__, "message": str(error)}
    simplex = getattr(error, "simplex", None)
    if simplex is not None:
        entry["simplex"] = list(simplex)
    line = getattr(error, "line", None)
    if line is not None:
        entry["line"] = line
    return entry


def _write_csv(rows, columns, stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_real(x) if isinstance(x, float) else x for x in row])


def _load(path):
    """Read a mesh file and build its complex and metric.

    Returns:
        Tuple of (mesh, complex, chart or None, f or None, metric)
    """
    mesh = read_mesh(path)
    complex = mesh.build()
    if mesh.chart_kind is None:
        return mesh, complex, None, None, mesh.metric(complex)
    chart = mesh.chart(complex)
    f = mesh.vertex_function(complex)
    return mesh, complex, chart, f, chart.apply(f)


def _require_chart(chart: ConformalChart | None) -> ConformalChart:
    if chart is None:
        raise ValueError("This command needs a mesh file with a chart block")
    return chart


def cmd_check(args) -> int:
    """Validate the manifold, chart domain and metric of a mesh file."""
    mesh = read_mesh(args.path)
    result = {"path": str(args.path)}
    try:
        complex = mesh.build()
    except ComplexError as e:
        result["manifold"] = {"passed": False, **_error_entry(e)}
        _emit(result)
        return EXIT_INVALID

    result["manifold"] = {
        "passed": True,
        "dimension": complex.dimension,
        "counts": {str(k): v for k, v in complex.counts().items()},
        "euler_characteristic": complex.euler_characteristic(),
    }

    passed = True
    if mesh.chart_kind is not None:
        chart = mesh.chart(complex)
        f = mesh.vertex_function(complex)
        domain = chart.domain_check(f)
        result["domain"] = domain.to_dict()
        passed = domain.passed
        if passed:
            report = check_metric(complex, chart.apply(f))
    else:
        report = check_metric(complex, mesh.metric(complex))

    if passed:
        result["metric"] = report.to_dict()
        passed = report.passed
    _emit(result)
    return EXIT_OK if passed else EXIT_INVALID


def cmd_curvature(args) -> int:
    """Print every curvature quantity of a mesh file."""
    _, _, _, _, metric = _load(args.path)
    report = curvature_report(metric)
    if args.format == "csv":
        _write_csv(report.csv_rows(), CSV_COLUMNS, sys.stdout)
    else:
        _emit(report.to_dict())
    return EXIT_OK


def _oriented_distances(chart: ConformalChart, f) -> np.ndarray:
    metric = chart.apply(f)
    return np.array([metric.d(i, j) for i, j in chart.complex.oriented_edges])


def _from_lengths(complex, values) -> PreMetric:
    return PreMetric.from_lengths(complex, dict(zip(complex.edges, values)))


def _angle_error(chart: ConformalChart, f, metric: PreMetric) -> float:
    """Triangle angle gradients against finite differences, all triangles at once."""
    cx = chart.complex

    def angles(x):
        m = chart.apply(x)
        return np.concatenate([triangle_angles(m.local_lengths(t)) for t in cx.triangles])

    numeric = fd_jacobian(angles, f)
    analytic = np.zeros_like(numeric)
    for n, tri in enumerate(cx.triangles):
        columns = [cx.vertex_index(v) for v in tri]
        analytic[np.ix_(range(3 * n, 3 * n + 3), columns)] = angle_gradients_2d(metric.local_distances(tri))
    return relative_error(analytic, numeric)


def _dihedral_error(chart: ConformalChart, f, metric: PreMetric) -> float:
    """Dihedral angle gradients in f at the vertices off each edge."""
    cx = chart.complex
    pairs = list(combinations(range(4), 2))

    def dihedrals(x):
        m = chart.apply(x)
        return np.concatenate([
            [dihedral_angles(m.local_lengths(t))[a, b] for a, b in pairs] for t in cx.tetrahedra
        ])

    numeric = fd_jacobian(dihedrals, f)
    analytic, sampled = [], []
    for n, tet in enumerate(cx.tetrahedra):
        D = metric.local_distances(tet)
        for p, (a, b) in enumerate(pairs):
            for v in range(4):
                if v not in (a, b):
                    analytic.append(dihedral_gradient_3d(D, (a, b), v))
                    sampled.append(numeric[len(pairs) * n + p, cx.vertex_index(tet[v])])
    return relative_error(analytic, sampled)


def run_jacobian_trial(chart: ConformalChart, f0: np.ndarray, seed: int, trial: int) -> dict:
    """Compare analytic variations with finite differences at one random point.

    Surfaces get the length, coupling, angle and curvature Jacobian checks
    plus the zero row sums of the Jacobian. Three-manifolds replace the
    angle check by the dihedral one, expect row sums K_i, and add the Regge
    gradient, both volume gradients and the EHR second variation.

    Args:
        chart: Conformal chart of the mesh
        f0: Vertex function of the mesh
        seed: Base seed
        trial: Trial number, combined with the seed

    Returns:
        Dictionary of relative errors for this trial, or a skipped marker
    """
    cx = chart.complex
    rng = np.random.default_rng([seed, trial])
    f = f0 + TRIAL_PERTURBATION * rng.standard_normal(f0.size)
    if not chart.domain_check(f).passed:
        return {"trial": trial, "skipped": True}

    metric = chart.apply(f)
    lengths_jacobian = np.zeros((len(cx.edges), cx.vertex_count))
    for e, (i, j) in enumerate(cx.edges):
        lengths_jacobian[e, cx.vertex_index(i)] = metric.d(i, j)
        lengths_jacobian[e, cx.vertex_index(j)] = metric.d(j, i)
    numeric_lengths = fd_jacobian(lambda x: np.array(list(chart.lengths(x).values())), f)

    numeric_distances = fd_jacobian(lambda x: _oriented_distances(chart, x), f)
    couplings = [chart.q(f, (i, j)) for i, j in cx.oriented_edges]
    numeric_couplings = [
        numeric_distances[row, cx.vertex_index(j)] for row, (_, j) in enumerate(cx.oriented_edges)
    ]

    analytic = curvature_jacobian(chart, f)
    numeric = fd_jacobian(lambda x: vertex_curvature(chart.apply(x)), f)
    dense = analytic.to_dense()
    row_sums = np.zeros(cx.vertex_count) if cx.dimension == 2 else vertex_curvature(metric)
    result = {
        "trial": trial,
        "skipped": False,
        "length_error": relative_error(lengths_jacobian, numeric_lengths),
        "coupling_error": relative_error(couplings, numeric_couplings),
        "jacobian_error": relative_error(dense, numeric),
        "symmetry_defect": analytic.symmetry_defect(),
        "row_sum_defect": float(np.max(np.abs(dense.sum(axis=1) - row_sums)) / max(np.max(np.abs(dense)), 1e-12)),
    }
    if cx.dimension == 2:
        result["angle_error"] = _angle_error(chart, f, metric)
        return result

    result["dihedral_error"] = _dihedral_error(chart, f, metric)
    lengths = np.array(list(metric.lengths.values()))
    result["regge_error"] = relative_error(
        regge_gradient(metric), fd_jacobian(lambda x: ehr(_from_lengths(cx, x)), lengths)
    )
    result["volume_error"] = relative_error(
        vertex_volumes(metric), fd_jacobian(lambda x: total_volume(chart.apply(x)), f)
    )
    result["volume_length_error"] = relative_error(
        volume_length_gradient(metric), fd_jacobian(lambda x: total_volume(_from_lengths(cx, x)), lengths)
    )
    direction = rng.standard_normal(f.size)
    form = ehr_hessian(chart, f)
    second = fd_second_directional(lambda x: ehr(chart.apply(x)), f, direction, richardson=True)
    result["hessian_error"] = relative_error(form.evaluate(direction), second)
    return result


def cmd_jacobian_test(args) -> int:
    """Check analytic Jacobians and Hessians against finite differences."""
    _, _, chart, f, _ = _load(args.path)
    chart = _require_chart(chart)

    if args.trials <= 0:
        logger.warning("No trials requested; the Jacobian test passes vacuously")
        _emit({"trials": 0, "vacuous": True, "passed": True})
        return EXIT_OK

    with ThreadPoolExecutor(max_workers=get_thread_count()) as executor:
        futures = [
            executor.submit(run_jacobian_trial, chart, f, args.seed, trial)
            for trial in range(args.trials)
        ]
        results = [future.result() for future in futures]

    completed = [r for r in results if not r["skipped"]]
    summary = {
        "trials": args.trials,
        "completed": len(completed),
        "vacuous": not completed,
    }
    checks = {
        "length_error": JACOBIAN_TOLERANCE,
        "coupling_error": JACOBIAN_TOLERANCE,
        "angle_error": JACOBIAN_TOLERANCE,
        "dihedral_error": JACOBIAN_TOLERANCE,
        "jacobian_error": JACOBIAN_TOLERANCE,
        "symmetry_defect": SYMMETRY_TOLERANCE,
        "row_sum_defect": SYMMETRY_TOLERANCE,
        "regge_error": JACOBIAN_TOLERANCE,
        "volume_error": JACOBIAN_TOLERANCE,
        "volume_length_error": JACOBIAN_TOLERANCE,
        "hessian_error": HESSIAN_TOLERANCE,
    }
    passed = True
    for key, tolerance in checks.items():
        values = [r[key] for r in completed if key in r]
        if values:
            summary[f"max_{key}"] = max(values)
            passed = passed and max(values) < tolerance
    if not completed:
        logger.warning("Every trial left the chart domain; the Jacobian test passes vacuously")
    summary["passed"] = passed
    _emit(summary)
    return EXIT_OK if passed else EXIT_INVALID


def _target(value: str, complex) -> SolveTarget:
    if value == "flat":
        return SolveTarget.flat()
    if value == "csc":
        return SolveTarget.csc()
    path = Path(value)
    if not path.exists():
        raise FileNotFoundError(f"Target file not found: {path}")
    values = parse_vertex_values(path.read_text())
    missing = [v for v in complex.vertices if v not in values]
    if missing:
        raise ValueError(f"Target file has no value for vertex {missing[0]}")
    return SolveTarget.prescribed([values[v] for v in complex.vertices])


def _write_trace(trace, path) -> None:
    with open(path, "w", newline="") as stream:
        _write_csv(trace.csv_rows(), TRACE_COLUMNS, stream)
    logger.info("Wrote trace to %s", path)


def _trace_path(args) -> Path | None:
    """--trace if given, else ``<out stem>.trace.csv`` beside --out."""
    if args.trace:
        return Path(args.trace)
    if args.out:
        return Path(args.out).with_suffix(".trace.csv")
    return None


def _report_trace(trace, path: Path | None, summary: dict) -> None:
    """Write the trace to path, or embed it in the summary when there is none."""
    summary["trace_path"] = str(path) if path else None
    if path:
        _write_trace(trace, path)
    else:
        summary["trace"] = trace.to_dict()


def cmd_solve(args) -> int:
    """Solve a prescribed-curvature problem and write the solved mesh and its trace."""
    _, complex, chart, f, _ = _load(args.path)
    chart = _require_chart(chart)
    problem = SolveProblem(
        chart=chart,
        initial_f=f,
        target=_target(args.target, complex),
        gauge=args.gauge,
        pinned_vertex=args.pin,
        max_iterations=args.max_iterations,
    )
    trace_path = _trace_path(args)

    def progress(message):
        logger.info(message)

    try:
        if args.method == "newton":
            solution, trace = newton_solve(problem, progress_callback=progress)
        else:
            policy = StepPolicy(max_iterations=args.max_iterations) if args.max_iterations else StepPolicy()
            trace = gradient_flow(problem, policy, progress_callback=progress)
            solution = trace.final_f
    except SolverError as e:
        result = _error_entry(e)
        if e.trace is not None:
            result["iterations"] = e.trace.iterations
            result["residual"] = e.trace.residuals[-1] if e.trace.records else None
            _report_trace(e.trace, trace_path, result)
        _emit(result)
        return EXIT_NOT_CONVERGED

    solved = MeshFile.from_chart(chart, solution)
    if args.out:
        write_mesh(solved, args.out)
    summary = {
        "converged": trace.converged,
        "method": trace.method,
        "iterations": trace.iterations,
        "residual": trace.residuals[-1],
        "out": str(args.out) if args.out else None,
    }
    _report_trace(trace, trace_path, summary)
    if not args.out:
        summary["mesh"] = serialize_mesh(solved)
    _emit(summary)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    """List the Laplacian spectrum and the definiteness certificates."""
    _, complex, chart, f, metric = _load(args.path)
    if chart is not None:
        report = definiteness_report(chart, f)
        data = report.to_dict()
        eigenvalues = report.laplacian.eigenvalues
    else:
        lap = laplacian(metric)
        spectrum = operator_spectrum(lap.matrix)
        data = {
            "laplacian": spectrum.to_dict(),
            "constant_residual": float(np.max(np.abs(lap.apply(np.ones(complex.vertex_count))))),
        }
        eigenvalues = spectrum.eigenvalues

    if args.format == "csv":
        rows = [[k, float(v)] for k, v in enumerate(eigenvalues or [])]
        _write_csv(rows, ["index", "eigenvalue"], sys.stdout)
    else:
        _emit(data)
    return EXIT_OK


def cmd_convert_off(args) -> int:
    """Convert an OFF surface to a mesh file."""
    path = Path(args.path)
    if not path.exists():
        raise FileNotFoundError(f"OFF file not found: {path}")
    mesh = off_to_mesh(path.read_text())
    mesh.build()
    if args.out:
        write_mesh(mesh, args.out)
    else:
        sys.stdout.write(serialize_mesh(mesh))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="pflat",
        description="Discrete conformal geometry of piecewise flat manifolds",
        epilog=REPORT_EPILOG,
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="Increase log verbosity")
    commands = parser.add_subparsers(dest="command", required=True)

    check = commands.add_parser("check", help="Validate a mesh file")
    check.add_argument("path")
    check.set_defaults(handler=cmd_check)

    curvature = commands.add_parser("curvature", help="Report curvatures")
    curvature.add_argument("path")
    curvature.add_argument("--format", choices=["json", "csv"], default="json")
    curvature.set_defaults(handler=cmd_curvature)

    jacobian = commands.add_parser("jacobian-test", help="Check variation formulas by finite differences")
    jacobian.add_argument("path")
    jacobian.add_argument("--trials", type=int, default=5)
    jacobian.add_argument("--seed", type=int, default=0)
    jacobian.set_defaults(handler=cmd_jacobian_test)

    solve = commands.add_parser("solve", help="Solve a prescribed-curvature problem")
    solve.add_argument("path")
    solve.add_argument("--target", required=True, help="flat, csc, or a file of 'vertex value' lines")
    solve.add_argument("--method", choices=["newton", "flow"], default="newton")
    solve.add_argument("--gauge", choices=["zero-mean", "pin-vertex"], default="zero-mean")
    solve.add_argument("--pin", type=int, default=None, help="Vertex held fixed by the pin-vertex gauge")
    solve.add_argument("--max-iterations", type=int, default=None)
    solve.add_argument("--out", help="Where to write the solved mesh")
    solve.add_argument(
        "--trace",
        help="Where to write the iteration trace as CSV; defaults to OUT with suffix .trace.csv, "
        "or the JSON report when --out is not given",
    )
    solve.set_defaults(handler=cmd_solve)

    spectrum = commands.add_parser("spectrum", help="List Laplacian eigenvalues")
    spectrum.add_argument("path")
    spectrum.add_argument("--format", choices=["json", "csv"], default="json")
    spectrum.set_defaults(handler=cmd_spectrum)

    convert = commands.add_parser("convert-off", help="Convert an OFF surface to a mesh file")
    convert.add_argument("path")
    convert.add_argument("--out")
    convert.set_defaults(handler=cmd_convert_off)
    return parser


def main(argv=None):
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)

    try:
        code = args.handler(args)
    except FileNotFoundError as e:
        print(f"Error: {e}", file=sys.stderr)
        code = EXIT_INVALID
    except (ParseError, ComplexError, Degenerate, InfeasibleTarget, NotCritical, ValueError) as e:
        print(f"Error: {e}", file=sys.stderr)
        _emit(_error_entry(e))
        code = EXIT_INVALID

    if code:
        sys.exit(code)


if __name__ == "__main__":
    main()

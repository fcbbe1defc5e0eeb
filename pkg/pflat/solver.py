"""
Prescribed-curvature solvers and definiteness diagnostics.

Newton's method and an explicit gradient flow move a vertex function f
inside a conformal chart until the curvature reaches a target. The
remaining functions report which sufficient conditions for definiteness
of the Laplacian and of the curvature Jacobian hold at a point, and whether
a critical point is rigid.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import MatrixRankWarning, eigsh, spsolve

from .config import load_config
from .conformal import ConformalChart, FixedInversiveChart, PackingChart, PerpBisectorChart, vertex_array
from .curvature import edge_curvature_3d, einstein_constant, scalar_curvature_3d, total_volume, vertex_curvature
from .exceptions import (
    AbortNonMonotone,
    Degenerate,
    InfeasibleTarget,
    LeftDomain,
    MaxIterations,
    NotCritical,
    SingularHessian,
)
from .geometry import triangle_angles
from .metric import PreMetric, dual_data, triangle_heights, vertex_volumes
from .variation import curvature_jacobian, fd_jacobian, laplacian

logger = logging.getLogger(__name__)

GAUGES = ("zero-mean", "pin-vertex")
TARGET_KINDS = ("prescribed", "flat", "csc")

# Allowed |sum K* - 2 pi chi| for a two-dimensional target
GAUSS_BONNET_TOLERANCE = 1e-9

# Residual below which a point counts as critical for rigidity checks
CRITICAL_TOLERANCE = 1e-8

# Relative eigenvalue threshold for semidefiniteness and kernel detection
EIGEN_TOLERANCE = 1e-10

# Allowed spread of a normalized kernel vector that counts as constant
CONSTANT_TOLERANCE = 1e-8

# Sufficient-decrease constant of the backtracking line search
ARMIJO = 1e-4

# Largest vertex count for which every trace record carries Jacobian extremes
TRACE_SPECTRUM_LIMIT = 200


@dataclass(frozen=True)
class SolveTarget:
    """What the curvature should become.

    ``prescribed`` fixes K_i per vertex, ``flat`` asks for K_i = 0 on a
    3-manifold and ``csc`` for K_i = lambda V_i with lambda = EHR / (3 V).
    """

    kind: str
    values: np.ndarray | None = None

    @classmethod
    def prescribed(cls, values) -> "SolveTarget":
        return cls("prescribed", np.asarray(values, dtype=float))

    @classmethod
    def flat(cls) -> "SolveTarget":
        return cls("flat")

    @classmethod
    def csc(cls) -> "SolveTarget":
        return cls("csc")


@dataclass
class SolveProblem:
    """A prescribed-curvature problem inside one conformal chart.

    Raises:
        ValueError: If the target, gauge or pinned vertex is malformed
        InfeasibleTarget: If a surface target violates Gauss-Bonnet
    """

    chart: ConformalChart
    initial_f: np.ndarray
    target: SolveTarget
    gauge: str = "zero-mean"
    pinned_vertex: int | None = None
    tolerance: float | None = None
    max_iterations: int | None = None

    def __post_init__(self):
        cx = self.chart.complex
        self.initial_f = vertex_array(cx, self.initial_f)
        settings = load_config()
        if self.tolerance is None:
            self.tolerance = settings["tolerance"]
        if self.max_iterations is None:
            self.max_iterations = settings["max_iterations"]

        if self.gauge not in GAUGES:
            raise ValueError(f"Unknown gauge: {self.gauge}. Expected one of {', '.join(GAUGES)}")
        if self.gauge == "pin-vertex":
            if self.pinned_vertex is None:
                self.pinned_vertex = cx.vertices[0]
            cx.vertex_index(self.pinned_vertex)

        kind = self.target.kind
        if kind not in TARGET_KINDS:
            raise ValueError(f"Unknown target: {kind}. Expected one of {', '.join(TARGET_KINDS)}")
        if kind in ("flat", "csc") and cx.dimension != 3:
            raise ValueError(f"The {kind} target needs a 3-manifold")
        if kind == "prescribed" and cx.dimension != 2:
            raise ValueError("Prescribed vertex curvature needs a surface; use flat or csc on 3-manifolds")
        if kind == "prescribed":
            values = self.target.values
            if values is None or values.shape != (cx.vertex_count,):
                raise ValueError(f"Prescribed curvature needs {cx.vertex_count} values")
            if cx.dimension == 2:
                expected = 2.0 * math.pi * cx.euler_characteristic()
                if abs(values.sum() - expected) > GAUSS_BONNET_TOLERANCE:
                    raise InfeasibleTarget(
                        f"Target curvature sums to {values.sum():.12g} but Gauss-Bonnet "
                        f"requires 2*pi*chi = {expected:.12g}"
                    )

    @property
    def complex(self):
        return self.chart.complex

    def curvature(self, f) -> np.ndarray:
        return vertex_curvature(self.chart.apply(f))

    def residual(self, f) -> np.ndarray:
        """K(f) minus the target at f."""
        metric = self.chart.apply(f)
        K = vertex_curvature(metric)
        if self.target.kind == "prescribed":
            return K - self.target.values
        if self.target.kind == "flat":
            return K
        return K - einstein_constant(metric) * vertex_volumes(metric)

    def jacobian(self, f) -> sparse.csr_matrix:
        """Derivative of the residual in f.

        The csc target differentiates V_i numerically; every other piece is
        analytic.
        """
        J = curvature_jacobian(self.chart, f).matrix
        if self.target.kind != "csc":
            return J
        metric = self.chart.apply(f)
        K = scalar_curvature_3d(metric)
        V = vertex_volumes(metric)
        volume = total_volume(metric)
        lam = float(K.sum()) / (3.0 * volume)
        grad_lambda = K / (3.0 * volume) - lam * V / volume
        dV = fd_jacobian(lambda x: vertex_volumes(self.chart.apply(x)), vertex_array(self.complex, f))
        return sparse.csr_matrix(J.toarray() - lam * dV - np.outer(V, grad_lambda))

    def gauge_vector(self) -> np.ndarray:
        """Row c of the gauge constraint c . delta = 0 on Newton updates."""
        n = self.complex.vertex_count
        if self.gauge == "zero-mean":
            return np.full(n, 1.0 / n)
        c = np.zeros(n)
        c[self.complex.vertex_index(self.pinned_vertex)] = 1.0
        return c

    def project(self, direction: np.ndarray) -> np.ndarray:
        """Remove the gauge component from a flow direction."""
        if self.gauge == "zero-mean":
            return direction - direction.mean()
        out = direction.copy()
        out[self.complex.vertex_index(self.pinned_vertex)] = 0.0
        return out


@dataclass
class TraceRecord:
    iteration: int
    f: np.ndarray
    residual: float
    step: float
    eig_min: float | None = None
    eig_max: float | None = None


TRACE_COLUMNS = ["iteration", "residual", "step", "eig_min", "eig_max"]


@dataclass
class SolveTrace:
    """History of a solve: one record per accepted iterate."""

    method: str
    records: list[TraceRecord] = field(default_factory=list)
    converged: bool = False
    message: str = ""

    @property
    def final_f(self) -> np.ndarray | None:
        return self.records[-1].f if self.records else None

    @property
    def residuals(self) -> list[float]:
        return [r.residual for r in self.records]

    @property
    def iterations(self) -> int:
        return self.records[-1].iteration if self.records else 0

    def csv_rows(self) -> list[list]:
        return [
            [r.iteration, r.residual, r.step, "" if r.eig_min is None else r.eig_min,
             "" if r.eig_max is None else r.eig_max]
            for r in self.records
        ]

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "converged": self.converged,
            "message": self.message,
            "iterations": self.iterations,
            "residuals": self.residuals,
            "steps": [r.step for r in self.records],
            "final_f": None if self.final_f is None else [float(x) for x in self.final_f],
        }


def _gauge_basis(n: int) -> np.ndarray:
    return linalg.null_space(np.ones((1, n)))


def _projected_extremes(J) -> tuple[float | None, float | None]:
    dense = J.toarray() if sparse.issparse(J) else np.asarray(J)
    n = dense.shape[0]
    if n > TRACE_SPECTRUM_LIMIT or n < 2:
        return None, None
    Z = _gauge_basis(n)
    eigs = linalg.eigvalsh(Z.T @ (0.5 * (dense + dense.T)) @ Z)
    return float(eigs[0]), float(eigs[-1])


def _try_residual(problem: SolveProblem, f):
    if not problem.chart.domain_check(f).passed:
        return None
    try:
        return problem.residual(f)
    except Degenerate:
        return None


def _notify(progress_callback, message: str) -> None:
    logger.debug(message)
    if progress_callback:
        progress_callback(message)


def newton_solve(problem: SolveProblem, progress_callback=None) -> tuple[np.ndarray, SolveTrace]:
    """Solve K(f) = target by Newton's method with a bordered gauge constraint.

    Each update delta solves [[J, c], [c^T, 0]] [delta, mu] = [-r, 0] and is
    shortened by halving until it stays in the chart domain and decreases
    ||r||_2 sufficiently; the largest in-domain step is used if no step
    decreases the residual.

    Args:
        problem: The problem to solve
        progress_callback: Optional function called with a message per iteration

    Returns:
        Tuple (f*, trace)

    Raises:
        MaxIterations: If the residual does not reach the tolerance in time
        LeftDomain: If no step along the Newton direction stays in the domain
        SingularHessian: If the bordered system cannot be solved
    """
    settings = load_config()
    halvings = settings["line_search_halvings"]
    trace = SolveTrace(method="newton")

    f = problem.initial_f.copy()
    r = _try_residual(problem, f)
    if r is None:
        raise LeftDomain("Initial vertex function is outside the chart domain", trace)
    c = problem.gauge_vector()
    step = 0.0

    for iteration in range(problem.max_iterations + 1):
        J = problem.jacobian(f)
        eig_min, eig_max = _projected_extremes(J)
        norm = float(np.max(np.abs(r)))
        trace.records.append(TraceRecord(iteration, f.copy(), norm, step, eig_min, eig_max))
        _notify(progress_callback, f"Newton iteration {iteration}: residual {norm:.3e}")

        if norm < problem.tolerance:
            trace.converged = True
            trace.message = f"Converged in {iteration} iterations"
            logger.info(trace.message)
            return f, trace
        if iteration == problem.max_iterations:
            break

        n = f.size
        bordered = sparse.bmat(
            [[J, sparse.csr_matrix(c.reshape(n, 1))], [sparse.csr_matrix(c.reshape(1, n)), None]],
            format="csc",
        )
        rhs = np.concatenate([-r, [0.0]])
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", MatrixRankWarning)
                solution = spsolve(bordered, rhs)
        except RuntimeError as e:
            raise SingularHessian(f"Gauge-reduced system is singular: {e}", trace) from e
        if not np.all(np.isfinite(solution)):
            raise SingularHessian("Gauge-reduced system is singular", trace)
        delta = solution[:n]

        r_norm = float(np.linalg.norm(r))
        fallback = None
        accepted = None
        t = 1.0
        for _ in range(halvings + 1):
            candidate = f + t * delta
            r_try = _try_residual(problem, candidate)
            if r_try is not None:
                if fallback is None:
                    fallback = (t, candidate, r_try)
                if np.linalg.norm(r_try) <= (1.0 - ARMIJO * t) * r_norm:
                    accepted = (t, candidate, r_try)
                    break
            t *= 0.5
        if accepted is None:
            if fallback is None:
                raise LeftDomain(
                    f"No step along the Newton direction stays in the domain at iteration {iteration}",
                    trace,
                )
            accepted = fallback
        step, f, r = accepted

    trace.message = f"Residual {trace.residuals[-1]:.3e} after {problem.max_iterations} iterations"
    raise MaxIterations(trace.message, trace)


@dataclass
class StepPolicy:
    """Step control of the explicit gradient flow.

    With ``adaptive`` the step grows by ``growth`` after every accepted step
    (up to ``max_step``) and is halved whenever a step leaves the domain or
    increases the residual. Otherwise ``initial_step`` is used unchanged.
    """

    initial_step: float | None = None
    max_step: float | None = None
    growth: float = 1.2
    adaptive: bool = True
    max_iterations: int | None = None
    window: int | None = None
    min_step: float = 1e-12

    def __post_init__(self):
        settings = load_config()
        if self.initial_step is None:
            self.initial_step = settings["flow_initial_step"]
        if self.max_step is None:
            self.max_step = settings["flow_max_step"]
        if self.max_iterations is None:
            self.max_iterations = settings["flow_max_iterations"]
        if self.window is None:
            self.window = settings["monotone_window"]
        if not self.initial_step > 0:
            raise ValueError("Flow step must be positive")


def gradient_flow(problem: SolveProblem, policy: StepPolicy | None = None, progress_callback=None) -> SolveTrace:
    """Integrate f' = -(K - K*) with explicit Euler steps.

    Args:
        problem: The problem to solve
        policy: Step control; StepPolicy() if omitted
        progress_callback: Optional function called with a message every 100 steps

    Returns:
        The trace; ``trace.final_f`` is the last iterate

    Raises:
        LeftDomain: If no admissible step stays in the chart domain
        AbortNonMonotone: If the residual at step k is not below the one at
            step k - window
        MaxIterations: If the residual does not reach the tolerance in time
    """
    policy = policy or StepPolicy()
    trace = SolveTrace(method="flow")

    f = problem.initial_f.copy()
    r = _try_residual(problem, f)
    if r is None:
        raise LeftDomain("Initial vertex function is outside the chart domain", trace)
    h = policy.initial_step
    norms = []
    step = 0.0

    for iteration in range(policy.max_iterations + 1):
        norm = float(np.max(np.abs(r)))
        norms.append(float(np.linalg.norm(r)))
        trace.records.append(TraceRecord(iteration, f.copy(), norm, step))
        if iteration % 100 == 0:
            _notify(progress_callback, f"Flow step {iteration}: residual {norm:.3e}, step {h:.3e}")

        if norm < problem.tolerance:
            trace.converged = True
            trace.message = f"Converged in {iteration} steps"
            logger.info(trace.message)
            return trace
        if iteration >= policy.window and norms[-1] >= norms[-1 - policy.window]:
            trace.message = (
                f"Residual did not decrease over {policy.window} steps "
                f"({norms[-1 - policy.window]:.3e} -> {norms[-1]:.3e})"
            )
            raise AbortNonMonotone(trace.message, trace)
        if iteration == policy.max_iterations:
            break

        direction = problem.project(-r)
        while True:
            candidate = f + h * direction
            r_try = _try_residual(problem, candidate)
            if not policy.adaptive:
                if r_try is None:
                    raise LeftDomain(f"Flow step {h:.3e} leaves the domain at step {iteration}", trace)
                break
            if r_try is not None and np.linalg.norm(r_try) <= norms[-1]:
                break
            h *= 0.5
            if h < policy.min_step:
                if r_try is None:
                    raise LeftDomain(f"Flow step shrank below {policy.min_step} at step {iteration}", trace)
                break
        step, f, r = h, candidate, r_try
        if policy.adaptive:
            h = min(h * policy.growth, policy.max_step)

    trace.message = f"Residual {trace.residuals[-1]:.3e} after {policy.max_iterations} flow steps"
    raise MaxIterations(trace.message, trace)


# Diagnostics


@dataclass
class Spectrum:
    """Extreme eigenvalues of a symmetric operator, plus all of them when computed densely."""

    minimum: float
    maximum: float
    eigenvalues: list | None = None
    nsd_constant_kernel: bool = False
    kernel_dimension: int | None = None

    def to_dict(self) -> dict:
        return {
            "min": self.minimum,
            "max": self.maximum,
            "eigenvalues": self.eigenvalues,
            "nsd_constant_kernel": self.nsd_constant_kernel,
            "kernel_dimension": self.kernel_dimension,
        }


def _is_constant(vector: np.ndarray) -> bool:
    scale = float(np.max(np.abs(vector)))
    return scale > 0 and float(np.ptp(vector)) / scale <= CONSTANT_TOLERANCE


def operator_spectrum(matrix, dense_threshold: int | None = None) -> Spectrum:
    """Spectrum of a symmetric matrix and the NSD-with-constant-kernel flag.

    The flag is set when every eigenvalue is at most EIGEN_TOLERANCE times the
    spectral scale, exactly one eigenvalue is that close to zero, and its
    eigenvector is constant.
    """
    if dense_threshold is None:
        dense_threshold = load_config()["eig_dense_threshold"]
    n = matrix.shape[0]

    if n <= dense_threshold:
        dense = matrix.toarray() if sparse.issparse(matrix) else np.asarray(matrix)
        values, vectors = linalg.eigh(0.5 * (dense + dense.T))
        scale = max(float(np.max(np.abs(values))), 1e-300)
        near_zero = np.flatnonzero(np.abs(values) <= EIGEN_TOLERANCE * scale)
        flag = (
            values[-1] <= EIGEN_TOLERANCE * scale
            and near_zero.size == 1
            and _is_constant(vectors[:, near_zero[0]])
        )
        return Spectrum(
            minimum=float(values[0]),
            maximum=float(values[-1]),
            eigenvalues=[float(v) for v in values],
            nsd_constant_kernel=bool(flag),
            kernel_dimension=int(near_zero.size),
        )

    sym = 0.5 * (matrix + matrix.T)
    top_values, top_vectors = eigsh(sym, k=2, which="LA")
    low_values = eigsh(sym, k=1, which="SA", return_eigenvectors=False)
    order = np.argsort(top_values)
    top_values, top_vectors = top_values[order], top_vectors[:, order]
    scale = max(abs(float(low_values[0])), abs(float(top_values[-1])), 1e-300)
    flag = (
        top_values[-1] <= EIGEN_TOLERANCE * scale
        and abs(top_values[-1]) <= EIGEN_TOLERANCE * scale
        and top_values[0] < -EIGEN_TOLERANCE * scale
        and _is_constant(top_vectors[:, -1])
    )
    logger.debug("Iterative spectrum for %d vertices", n)
    return Spectrum(
        minimum=float(low_values[0]),
        maximum=float(top_values[-1]),
        nsd_constant_kernel=bool(flag),
    )


def _centers_in_circumcircles(metric: PreMetric) -> bool:
    """Whether every triangle center lies in the closed circumdisk.

    In a frame with vertex i at the origin and j on the positive axis, the
    center sits at (d_ij, h_ij,k) and the circumcenter at
    (l_ij / 2, R cos gamma_k).
    """
    for tri in metric.complex.triangles:
        D = metric.local_distances(tri)
        L = D + D.T
        H = triangle_heights(D)
        angles = triangle_angles(L)
        length = L[0, 1]
        radius = length / (2.0 * math.sin(angles[2]))
        dx = D[0, 1] - 0.5 * length
        dy = H[0, 1] - radius * math.cos(angles[2])
        if dx * dx + dy * dy > radius * radius * (1.0 + 1e-12):
            return False
    return True


@dataclass
class DefinitenessReport:
    """Sufficient conditions for definiteness at a point and the observed spectra.

    ``conditions`` maps each Laplacian criterion to True/False;
    ``convexity`` maps each convexity criterion for F (surfaces) or EHR
    (3-manifolds) to True/False.
    """

    dimension: int
    chart_kind: str
    conditions: dict
    convexity: dict
    failing_edges: list
    laplacian: Spectrum
    hessian_min: float | None
    hessian_max: float | None
    constant_residual: float

    @property
    def certified(self) -> bool:
        return any(self.conditions.values())

    @property
    def convex(self) -> bool:
        return any(self.convexity.values())

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "chart": self.chart_kind,
            "conditions": dict(self.conditions),
            "certified": self.certified,
            "convexity": dict(self.convexity),
            "convex": self.convex,
            "failing_edges": [list(e) for e in self.failing_edges],
            "laplacian": self.laplacian.to_dict(),
            "hessian_min": self.hessian_min,
            "hessian_max": self.hessian_max,
            "constant_residual": self.constant_residual,
        }


def definiteness_report(chart: ConformalChart, f) -> DefinitenessReport:
    """Report the sufficient conditions for a negative semidefinite Laplacian.

    Raises:
        Degenerate: If f does not give a valid metric
    """
    cx = chart.complex
    metric = chart.apply(f)
    data = dual_data(metric)
    failing = [e for e in cx.edges if not data.dual_lengths[e] > 0]
    K = vertex_curvature(metric)

    conditions = {"dual_lengths_positive": not failing}
    convexity = {}
    if cx.dimension == 2:
        inversive = isinstance(chart, FixedInversiveChart) and all(v >= 0 for v in chart.eta.values())
        perp = isinstance(chart, PerpBisectorChart)
        conditions["inversive_nonnegative"] = inversive
        conditions["distances_positive"] = all(v > 0 for v in metric.distances.values())
        conditions["perp_bisector"] = perp
        conditions["centers_in_circumcircles"] = _centers_in_circumcircles(metric)
        convexity["inversive_nonnegative"] = inversive
        convexity["perp_bisector"] = perp
    else:
        packing = isinstance(chart, PackingChart)
        conditions["sphere_packing"] = packing
        curvature_nonnegative = bool(np.all(K >= 0))
        convexity["packing_nonnegative_curvature"] = packing and curvature_nonnegative
        coupled = _coupled_dual_lengths(chart, f, metric, data)
        convexity["coupled_dual_lengths_positive"] = coupled and curvature_nonnegative

    lap = laplacian(metric)
    spectrum = operator_spectrum(lap.matrix)
    J = curvature_jacobian(chart, f).matrix
    hessian_min, hessian_max = _reduced_extremes(J)
    constant_residual = float(np.max(np.abs(lap.apply(np.ones(cx.vertex_count)))))

    if failing:
        logger.info("Dual lengths are not positive on %d edges", len(failing))
    return DefinitenessReport(
        dimension=cx.dimension,
        chart_kind=chart.kind,
        conditions=conditions,
        convexity=convexity,
        failing_edges=failing,
        laplacian=spectrum,
        hessian_min=hessian_min,
        hessian_max=hessian_max,
        constant_residual=constant_residual,
    )


def _coupled_dual_lengths(chart, f, metric, data) -> bool:
    Kij = edge_curvature_3d(metric)
    q = chart.couplings(f)
    return all(data.dual_lengths[e] - 0.5 * q[e] * Kij[n] > 0 for n, e in enumerate(metric.complex.edges))


def _reduced_extremes(J) -> tuple[float | None, float | None]:
    n = J.shape[0]
    if n > load_config()["eig_dense_threshold"]:
        logger.warning("Skipping the gauge-reduced Hessian spectrum for %d vertices", n)
        return None, None
    dense = J.toarray()
    Z = _gauge_basis(n)
    eigs = linalg.eigvalsh(Z.T @ (0.5 * (dense + dense.T)) @ Z)
    return float(eigs[0]), float(eigs[-1])


@dataclass
class RigidityReport:
    residual: float
    nullspace_dimension: int
    basis_residuals: list
    constant_defects: list
    rigid: bool

    def to_dict(self) -> dict:
        return {
            "residual": self.residual,
            "nullspace_dimension": self.nullspace_dimension,
            "basis_residuals": self.basis_residuals,
            "constant_defects": self.constant_defects,
            "rigid": self.rigid,
        }


def rigidity_check(chart: ConformalChart, f, target=None) -> RigidityReport:
    """Check that a critical point admits no conformal deformation beyond scaling.

    Args:
        chart: The conformal chart
        f: A vertex function solving the curvature problem
        target: Target curvature per vertex; zero if omitted

    Raises:
        NotCritical: If ||K(f) - target||_inf is not below CRITICAL_TOLERANCE
    """
    cx = chart.complex
    K = vertex_curvature(chart.apply(f))
    target = np.zeros(cx.vertex_count) if target is None else np.asarray(target, dtype=float)
    residual = float(np.max(np.abs(K - target)))
    if not residual < CRITICAL_TOLERANCE:
        raise NotCritical(f"Curvature residual {residual:.3e} is not below {CRITICAL_TOLERANCE}")

    J = curvature_jacobian(chart, f).to_dense()
    basis = linalg.null_space(J, rcond=CONSTANT_TOLERANCE)
    basis_residuals = [float(np.linalg.norm(J @ basis[:, k])) for k in range(basis.shape[1])]
    defects = [float(np.linalg.norm(b - b.mean())) for b in basis.T]
    rigid = basis.shape[1] <= 1 and all(d < CONSTANT_TOLERANCE for d in defects)
    return RigidityReport(
        residual=residual,
        nullspace_dimension=int(basis.shape[1]),
        basis_residuals=basis_residuals,
        constant_defects=defects,
        rigid=rigid,
    )

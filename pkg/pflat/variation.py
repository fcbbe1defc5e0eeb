"""
First and second variations under conformal changes.

Angle gradients for single triangles and tetrahedra, the curvature
Jacobians, the discrete Laplacian, the second variation of EHR, the
functional F whose gradient is the two-dimensional curvature, and a
finite-difference oracle used to validate all of them.
"""

import logging
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import sparse
from scipy.sparse.linalg import norm as sparse_norm

from .complex import SimplicialComplex
from .config import get_setting
from .conformal import ConformalChart, vertex_array
from .curvature import curvature_2d, edge_curvature_3d, scalar_curvature_3d
from .exceptions import OutOfDomain
from .geometry import triangle_angles
from .metric import PreMetric, dual_data, edge_volumes, tetrahedron_duals, triangle_heights

logger = logging.getLogger(__name__)

# Relative tolerance of the symmetry check on assembled operators
SYMMETRY_TOLERANCE = 1e-12

# Gauss-Legendre nodes per panel and the deepest bisection of a path segment
QUADRATURE_NODES = 10
QUADRATURE_MAX_DEPTH = 30


@dataclass(frozen=True)
class SparseOperator:
    """Symmetric vertex-by-vertex operator stored as a CSR matrix.

    Row and column n belong to ``vertices[n]``. The stored pattern is the
    diagonal plus one entry per oriented edge, explicit zeros included.
    """

    matrix: sparse.csr_matrix
    vertices: tuple

    @classmethod
    def from_edges(cls, complex: SimplicialComplex, off_diagonal, diagonal) -> "SparseOperator":
        """Assemble from per-edge off-diagonal values and per-vertex diagonal values.

        Args:
            complex: The triangulation
            off_diagonal: Values in edge order, placed at (i, j) and (j, i)
            diagonal: Values in vertex order
        """
        n = complex.vertex_count
        rows, cols, values = list(range(n)), list(range(n)), list(np.asarray(diagonal, dtype=float))
        for (i, j), w in zip(complex.edges, off_diagonal):
            a, b = complex.vertex_index(i), complex.vertex_index(j)
            rows += [a, b]
            cols += [b, a]
            values += [float(w), float(w)]
        matrix = sparse.coo_matrix((values, (rows, cols)), shape=(n, n)).tocsr()
        matrix.sum_duplicates()
        return cls(matrix, complex.vertices)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def entries(self) -> list[tuple[int, int, float]]:
        """Stored entries as (row vertex, column vertex, value), row-major."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [
            (self.vertices[coo.row[n]], self.vertices[coo.col[n]], float(coo.data[n]))
            for n in order
        ]

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def apply(self, x) -> np.ndarray:
        return self.matrix @ np.asarray(x, dtype=float)

    def symmetry_defect(self) -> float:
        """||A - A^T||_inf relative to ||A||_inf."""
        scale = sparse_norm(self.matrix, np.inf)
        diff = sparse_norm(self.matrix - self.matrix.T, np.inf)
        return float(diff / scale) if scale > 0 else float(diff)

    def is_symmetric(self, rtol: float = SYMMETRY_TOLERANCE) -> bool:
        return self.symmetry_defect() <= rtol


def _graph_operator(complex: SimplicialComplex, weights, diagonal=None) -> SparseOperator:
    """Operator with off-diagonal w_ij and diagonal -sum_j w_ij (+ extra diagonal)."""
    weights = np.asarray(weights, dtype=float)
    rowsum = np.zeros(complex.vertex_count)
    for (i, j), w in zip(complex.edges, weights):
        rowsum[complex.vertex_index(i)] += w
        rowsum[complex.vertex_index(j)] += w
    diag = -rowsum if diagonal is None else -rowsum + np.asarray(diagonal, dtype=float)
    return SparseOperator.from_edges(complex, weights, diag)


# Single simplices


def angle_gradients_2d(D) -> np.ndarray:
    """All conformal angle derivatives of a triangle.

    Args:
        D: 3x3 local pre-metric satisfying the metric condition

    Returns:
        Matrix G with G[a, c] = d gamma_a / d f_c; every column sums to zero
    """
    D = np.asarray(D, dtype=float)
    L = D + D.T
    H = triangle_heights(D)
    G = np.zeros((3, 3))
    for a, c in combinations(range(3), 2):
        G[a, c] = H[a, c] / L[a, c]
        G[c, a] = H[c, a] / L[a, c]
    for c in range(3):
        G[c, c] = -sum(G[a, c] for a in range(3) if a != c)
    return G


def angle_gradient_2d(D, angle: int, vertex: int) -> float:
    """Derivative of the angle at local vertex ``angle`` in f at local vertex ``vertex``.

    For angle != vertex this is h_{ac,b} / l_ac with b the third vertex; at the
    varying vertex itself it is minus the sum of the other two.
    """
    return float(angle_gradients_2d(D)[angle, vertex])


def dihedral_gradient_3d(D, edge: tuple[int, int], vertex: int) -> float:
    """Derivative of the dihedral angle at a local edge in f at a vertex off the edge.

    With edge {a, b}, varying vertex v and remaining vertex w the value is
    h_{abv,w} / (sin(gamma_{a,bv}) l_av).

    Raises:
        ValueError: If the vertex lies on the edge
        Degenerate: If the tetrahedron is degenerate
    """
    a, b = edge
    if vertex in (a, b):
        raise ValueError("Only dihedral angles at edges opposite to the varying vertex are covered")
    w = next(u for u in range(4) if u not in (a, b, vertex))
    duals = tetrahedron_duals(np.asarray(D, dtype=float))
    gamma = duals.corner[a, b, vertex]
    return float(duals.center_heights[w] / (math.sin(gamma) * duals.lengths[a, vertex]))


def dual_row_sums(D, vertex: int) -> np.ndarray:
    """d-weighted sums of dihedral angle partials at each vertex of a tetrahedron.

    Entry a is sum_j d_aj (d beta_aj / d f_vertex) with every d_aj held
    fixed, so only the angles vary. It equals 2 A_{av} / l_av for
    a != vertex and minus the sum of those three for a = vertex.
    """
    duals = tetrahedron_duals(np.asarray(D, dtype=float))
    rows = np.zeros(4)
    for a in range(4):
        if a != vertex:
            rows[a] = 2.0 * duals.dual_areas[a, vertex] / duals.lengths[a, vertex]
    rows[vertex] = -rows.sum()
    return rows


def solid_angle_gradient(D, vertex: int, varying: int) -> float:
    """Derivative of the solid angle at ``vertex`` in f at ``varying``, sphere packing only.

    Raises:
        ValueError: If the pre-metric is not of packing type at ``vertex``
    """
    D = np.asarray(D, dtype=float)
    radius = D[vertex, [u for u in range(4) if u != vertex]]
    if np.ptp(radius) > 1e-12 * abs(radius[0]):
        raise ValueError(f"Pre-metric is not a sphere packing at local vertex {vertex}")
    return float(dual_row_sums(D, varying)[vertex] / radius[0])


# Vertex operators


def laplacian(metric: PreMetric) -> SparseOperator:
    """Discrete Laplacian (L phi)_i = sum_j (l*_ij / l_ij)(phi_j - phi_i)."""
    data = dual_data(metric)
    weights = [data.dual_lengths[e] / metric.lengths[e] for e in metric.complex.edges]
    return _graph_operator(metric.complex, weights)


def laplacian_weak_form(metric: PreMetric, phi, psi) -> float:
    """The pairing -n sum_edges ((phi_i - phi_j)/l_ij)((psi_i - psi_j)/l_ij) V_ij.

    Equals sum_i (L phi)_i psi_i.
    """
    cx = metric.complex
    phi = vertex_array(cx, phi)
    psi = vertex_array(cx, psi)
    volumes = edge_volumes(metric)
    total = 0.0
    for i, j in cx.edges:
        a, b = cx.vertex_index(i), cx.vertex_index(j)
        length = metric.lengths[(i, j)]
        total += (phi[a] - phi[b]) * (psi[a] - psi[b]) / length**2 * volumes[(i, j)]
    return -cx.dimension * total


def cotan_weights(metric: PreMetric) -> dict[tuple[int, int], float]:
    """Half the sum of the cotangents of the angles opposite each edge (2D)."""
    cx = metric.complex
    if cx.dimension != 2:
        raise ValueError("Cotangent weights are defined for surfaces")
    weights = {e: 0.0 for e in cx.edges}
    for tri in cx.triangles:
        angles = triangle_angles(metric.local_lengths(tri))
        for c in range(3):
            a, b = (u for u in range(3) if u != c)
            weights[(tri[a], tri[b])] += 0.5 / math.tan(angles[c])
    return weights


def curvature_jacobian_2d(chart: ConformalChart, f) -> SparseOperator:
    """Jacobian dK_i/df_j of the surface curvature: -l*_ij/l_ij off the diagonal.

    Raises:
        OutOfDomain: If f is outside the chart domain
    """
    cx = chart.complex
    if cx.dimension != 2:
        raise ValueError("curvature_jacobian_2d needs a surface")
    return _scaled_negative(laplacian(chart.apply(f)))


def _scaled_negative(op: SparseOperator, diagonal=None) -> SparseOperator:
    matrix = -op.matrix
    if diagonal is not None:
        matrix = matrix + sparse.diags(np.asarray(diagonal, dtype=float), format="csr")
    return SparseOperator(matrix.tocsr(), op.vertices)


def _jacobian_3d_weights(chart: ConformalChart, f):
    metric = chart.apply(f)
    cx = chart.complex
    data = dual_data(metric)
    Kij = edge_curvature_3d(metric)
    q = chart.couplings(f)
    weights = np.array([
        (2.0 * data.dual_lengths[e] - q[e] * Kij[n]) / metric.lengths[e]
        for n, e in enumerate(cx.edges)
    ])
    return metric, weights, Kij, q, data


def curvature_jacobian_3d(chart: ConformalChart, f) -> SparseOperator:
    """Jacobian dK_i/df_j of the scalar curvature.

    Off the diagonal the entry is -(2 l*_ij - q_ij K_ij)/l_ij; the diagonal
    is the sum of those weights plus K_i.

    Raises:
        OutOfDomain: If f is outside the chart domain
    """
    cx = chart.complex
    if cx.dimension != 3:
        raise ValueError("curvature_jacobian_3d needs a 3-manifold")
    metric, weights, _, _, _ = _jacobian_3d_weights(chart, f)
    K = scalar_curvature_3d(metric)
    return _scaled_negative(_graph_operator(cx, weights), K)


def curvature_jacobian(chart: ConformalChart, f) -> SparseOperator:
    if chart.complex.dimension == 2:
        return curvature_jacobian_2d(chart, f)
    return curvature_jacobian_3d(chart, f)


@dataclass(frozen=True)
class QuadraticForm:
    """Second variation of EHR along a conformal variation.

    d^2 EHR/dt^2 = 2 sum_edges c_ij (fdot_j - fdot_i)^2 + sum_i K_i (fdot_i^2 + fddot_i)
    """

    complex: SimplicialComplex
    edge_coefficients: np.ndarray
    vertex_coefficients: np.ndarray

    def evaluate(self, fdot, fddot=None) -> float:
        cx = self.complex
        fdot = vertex_array(cx, fdot)
        fddot = np.zeros_like(fdot) if fddot is None else vertex_array(cx, fddot)
        total = 0.0
        for (i, j), c in zip(cx.edges, self.edge_coefficients):
            diff = fdot[cx.vertex_index(j)] - fdot[cx.vertex_index(i)]
            total += 2.0 * c * diff * diff
        return float(total + np.dot(self.vertex_coefficients, fdot**2 + fddot))

    def as_operator(self) -> SparseOperator:
        """Symmetric matrix H with fdot^T H fdot equal to the form at fddot = 0."""
        return _scaled_negative(
            _graph_operator(self.complex, 2.0 * self.edge_coefficients),
            self.vertex_coefficients,
        )

    def to_dict(self) -> dict:
        return {
            "edge_coefficients": {
                f"{i}-{j}": float(c) for (i, j), c in zip(self.complex.edges, self.edge_coefficients)
            },
            "vertex_coefficients": {
                str(v): float(k) for v, k in zip(self.complex.vertices, self.vertex_coefficients)
            },
        }


def ehr_hessian(chart: ConformalChart, f) -> QuadraticForm:
    """Second variation of EHR at f.

    Edge coefficients are l*_ij/l_ij - q_ij K_ij/(2 l_ij); vertex coefficients
    are the scalar curvatures K_i.
    """
    if chart.complex.dimension != 3:
        raise ValueError("ehr_hessian needs a 3-manifold")
    metric, weights, _, _, _ = _jacobian_3d_weights(chart, f)
    return QuadraticForm(
        complex=chart.complex,
        edge_coefficients=0.5 * weights,
        vertex_coefficients=scalar_curvature_3d(metric),
    )


# Functional F


def _chart_curvature(chart: ConformalChart, f) -> np.ndarray:
    return curvature_2d(chart.apply(f))


def _segment_integral(chart, start, end, tol, nodes, weights):
    direction = end - start

    def panel(a, b):
        t = 0.5 * (b - a) * nodes + 0.5 * (a + b)
        values = [np.dot(_chart_curvature(chart, start + s * direction), direction) for s in t]
        return 0.5 * (b - a) * float(np.dot(weights, values))

    def refine(a, b, whole, depth):
        mid = 0.5 * (a + b)
        left, right = panel(a, mid), panel(mid, b)
        if abs(left + right - whole) <= tol * (b - a) or depth >= QUADRATURE_MAX_DEPTH:
            return left + right
        return refine(a, mid, left, depth + 1) + refine(mid, b, right, depth + 1)

    return refine(0.0, 1.0, panel(0.0, 1.0), 0)


def functional_F(chart: ConformalChart, f_start, f_end, path=None, tol: float = 1e-12) -> float:
    """Line integral of sum_i K_i df_i along a polyline from f_start to f_end.

    Args:
        chart: Conformal chart on a surface
        f_start: Starting vertex function
        f_end: Final vertex function
        path: Optional intermediate polyline points; the straight segment if omitted
        tol: Absolute per-unit-parameter tolerance of the adaptive quadrature

    Returns:
        F(f_end) - F(f_start)

    Raises:
        OutOfDomain: If the path leaves the chart domain at a sample point
    """
    cx = chart.complex
    if cx.dimension != 2:
        raise ValueError("functional_F needs a surface")
    points = [vertex_array(cx, f_start)]
    points += [vertex_array(cx, p) for p in (path or [])]
    points.append(vertex_array(cx, f_end))

    for point in points:
        report = chart.domain_check(point)
        if not report.passed:
            message, simplex = report.first_problem()
            raise OutOfDomain(f"Path leaves the chart domain: {message}", simplex)

    nodes, weights = leggauss(QUADRATURE_NODES)
    total = 0.0
    for start, end in zip(points, points[1:]):
        if np.array_equal(start, end):
            continue
        total += _segment_integral(chart, start, end, tol, nodes, weights)
    return total


# Finite-difference oracle


def default_step(x, base: float | None = None) -> float:
    """Central-difference step base * max(1, ||x||_inf)."""
    base = get_setting("fd_step") if base is None else base
    return base * max(1.0, float(np.max(np.abs(x))) if np.size(x) else 1.0)


def fd_jacobian(func, x, step: float | None = None, richardson: bool = False) -> np.ndarray:
    """Central-difference Jacobian of a scalar or vector function.

    Args:
        func: Callable taking a float array
        x: Evaluation point
        step: Difference step; default_step(x) if omitted
        richardson: Combine steps h and h/2 as (4 D(h/2) - D(h)) / 3

    Returns:
        Array of shape (m, n) for vector functions, (n,) for scalar ones
    """
    x = np.asarray(x, dtype=float)
    h = default_step(x) if step is None else step

    def central(width):
        columns = []
        for k in range(x.size):
            e = np.zeros_like(x)
            e[k] = width
            columns.append((np.asarray(func(x + e), dtype=float) - np.asarray(func(x - e), dtype=float)) / (2 * width))
        return np.stack(columns, axis=-1)

    result = central(h)
    if richardson:
        result = (4.0 * central(0.5 * h) - result) / 3.0
    return result


def fd_second_directional(func, x, direction, step: float | None = None, richardson: bool = False) -> float:
    """Second derivative of a scalar function along a straight line."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(direction, dtype=float)
    h = default_step(x, get_setting("second_fd_step")) if step is None else step
    f0 = float(func(x))

    def second(width):
        return (float(func(x + width * v)) - 2.0 * f0 + float(func(x - width * v))) / width**2

    result = second(h)
    if richardson:
        result = (4.0 * second(0.5 * h) - result) / 3.0
    return result


def relative_error(analytic, numeric) -> float:
    """||analytic - numeric||_inf / max(||numeric||_inf, 1e-12)."""
    a = np.asarray(analytic, dtype=float)
    b = np.asarray(numeric, dtype=float)
    return float(np.max(np.abs(a - b)) / max(float(np.max(np.abs(b))), 1e-12))

"""
Curvatures and scalar functionals of piecewise flat metrics.

Vertex quantities are returned as arrays in vertex order and edge quantities
as arrays in edge-id order (``complex.edges``). Sums always run over
simplices in id order so results are reproducible bit for bit.
"""

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .complex import SimplicialComplex
from .geometry import cm_volume, dihedral_angles, triangle_angles
from .metric import PreMetric, vertex_volumes

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

# Relative spread allowed between the d_ij of one vertex in a packing metric
PACKING_TOLERANCE = 1e-12


def _require_dimension(complex: SimplicialComplex, dimension: int, what: str) -> None:
    if complex.dimension != dimension:
        raise ValueError(f"{what} needs a {dimension}-dimensional complex, got {complex.dimension}")


def curvature_2d(metric: PreMetric) -> np.ndarray:
    """Angle deficits K_i = 2 pi - sum of the angles at i.

    Raises:
        Degenerate: If a triangle violates the triangle inequality
    """
    cx = metric.complex
    _require_dimension(cx, 2, "Two-dimensional curvature")
    K = np.full(cx.vertex_count, TWO_PI)
    for tri in cx.triangles:
        angles = triangle_angles(metric.local_lengths(tri))
        for a, v in enumerate(tri):
            K[cx.vertex_index(v)] -= angles[a]
    return K


def dihedral_sums(metric: PreMetric) -> np.ndarray:
    """Total dihedral angle around every edge, in edge order."""
    cx = metric.complex
    _require_dimension(cx, 3, "Dihedral sums")
    totals = np.zeros(len(cx.edges))
    for tet in cx.tetrahedra:
        B = dihedral_angles(metric.local_lengths(tet))
        for a, b in combinations(range(4), 2):
            totals[cx.simplex_id((tet[a], tet[b]))] += B[a, b]
    return totals


def regge_gradient(metric: PreMetric) -> np.ndarray:
    """Gradient of EHR in the edge lengths: 2 pi minus the dihedral sum."""
    return TWO_PI - dihedral_sums(metric)


def edge_curvature_3d(metric: PreMetric) -> np.ndarray:
    """Edge curvatures K_ij = (2 pi - sum of dihedral angles) l_ij.

    Only the edge lengths of the metric enter, so a PreMetric built with
    ``PreMetric.from_lengths`` is enough.
    """
    lengths = np.array(list(metric.lengths.values()))
    return regge_gradient(metric) * lengths


def scalar_curvature_3d(metric: PreMetric) -> np.ndarray:
    """Vertex scalar curvatures K_i = sum over j of (2 pi - sum beta_ij) d_ij."""
    cx = metric.complex
    deficits = regge_gradient(metric)
    K = np.zeros(cx.vertex_count)
    for e, (i, j) in enumerate(cx.edges):
        K[cx.vertex_index(i)] += deficits[e] * metric.d(i, j)
        K[cx.vertex_index(j)] += deficits[e] * metric.d(j, i)
    return K


def vertex_curvature(metric: PreMetric) -> np.ndarray:
    """K_i of the metric in its own dimension."""
    if metric.complex.dimension == 2:
        return curvature_2d(metric)
    return scalar_curvature_3d(metric)


def packing_scalar_curvature(metric: PreMetric) -> np.ndarray:
    """Scalar curvature of a sphere packing metric from solid angles.

    For d_ij = r_i on every edge, K_i = (4 pi - sum of the solid angles at i) r_i.

    Raises:
        ValueError: If some vertex does not have the same d_ij on all its edges
    """
    cx = metric.complex
    _require_dimension(cx, 3, "Packing scalar curvature")

    radii = np.zeros(cx.vertex_count)
    for v in cx.vertices:
        values = [metric.d(v, u) for u in cx.neighbors(v)]
        r = values[0]
        if max(abs(x - r) for x in values) > PACKING_TOLERANCE * abs(r):
            raise ValueError(f"Metric is not a sphere packing at vertex {v}")
        radii[cx.vertex_index(v)] = r

    solid = np.zeros(cx.vertex_count)
    for tet in cx.tetrahedra:
        B = dihedral_angles(metric.local_lengths(tet))
        alphas = B.sum(axis=1) - math.pi
        for a, v in enumerate(tet):
            solid[cx.vertex_index(v)] += alphas[a]
    return (2.0 * TWO_PI - solid) * radii


def ehr(metric: PreMetric) -> float:
    """Einstein-Hilbert-Regge functional, the sum of the edge curvatures."""
    return float(edge_curvature_3d(metric).sum())


def total_volume(metric: PreMetric) -> float:
    """Sum of the top-simplex volumes (area in two dimensions)."""
    return float(sum(cm_volume(metric.local_lengths(top)) for top in metric.complex.top_simplices))


def einstein_constant(metric: PreMetric) -> float:
    """lambda = EHR / (3 V)."""
    return ehr(metric) / (3.0 * total_volume(metric))


def volume_length_gradient(metric: PreMetric) -> np.ndarray:
    """Partial derivatives of the total volume in the edge lengths.

    Each tetrahedron contributes l_ij l_kl cot(beta_kl) / 6 to edge {i, j},
    where {k, l} is the opposite edge.
    """
    cx = metric.complex
    _require_dimension(cx, 3, "Volume gradient")
    grad = np.zeros(len(cx.edges))
    for tet in cx.tetrahedra:
        L = metric.local_lengths(tet)
        B = dihedral_angles(L)
        for a, b in combinations(range(4), 2):
            c, d = (u for u in range(4) if u not in (a, b))
            grad[cx.simplex_id((tet[a], tet[b]))] += L[a, b] * L[c, d] / (6.0 * math.tan(B[c, d]))
    return grad


def residuals(metric: PreMetric) -> tuple[np.ndarray, np.ndarray]:
    """Einstein and constant scalar curvature residuals.

    Returns:
        Tuple (einstein, csc): per edge K_ij - lambda l_ij dV/dl_ij and per
        vertex K_i - lambda V_i, with lambda = EHR / (3 V)
    """
    cx = metric.complex
    _require_dimension(cx, 3, "Curvature residuals")
    lam = einstein_constant(metric)
    lengths = np.array(list(metric.lengths.values()))
    einstein = edge_curvature_3d(metric) - lam * lengths * volume_length_gradient(metric)
    csc = scalar_curvature_3d(metric) - lam * vertex_volumes(metric)
    return einstein, csc


CSV_COLUMNS = ["kind", "simplex", "curvature", "residual"]


@dataclass
class CurvatureReport:
    """Curvature quantities of one metric.

    In two dimensions ``edge_curvature``, ``ehr``, ``einstein_constant`` and
    the residuals are None and ``total_volume`` is the total area.
    """

    dimension: int
    vertices: tuple
    edges: tuple
    vertex_curvature: np.ndarray
    total_volume: float
    euler_characteristic: int
    edge_curvature: np.ndarray | None = None
    ehr: float | None = None
    einstein_constant: float | None = None
    einstein_residuals: np.ndarray | None = None
    csc_residuals: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    @property
    def total_curvature(self) -> float:
        return float(self.vertex_curvature.sum())

    @property
    def gauss_bonnet_defect(self) -> float | None:
        if self.dimension != 2:
            return None
        return self.total_curvature - TWO_PI * self.euler_characteristic

    def to_dict(self) -> dict:
        data = {
            "dimension": self.dimension,
            "euler_characteristic": self.euler_characteristic,
            "total_curvature": self.total_curvature,
            "total_volume": self.total_volume,
            "vertex_curvature": {str(v): float(k) for v, k in zip(self.vertices, self.vertex_curvature)},
        }
        if self.dimension == 2:
            data["gauss_bonnet_defect"] = self.gauss_bonnet_defect
        else:
            data["ehr"] = self.ehr
            data["lambda"] = self.einstein_constant
            data["edge_curvature"] = {
                f"{i}-{j}": float(k) for (i, j), k in zip(self.edges, self.edge_curvature)
            }
            data["einstein_residuals"] = {
                f"{i}-{j}": float(r) for (i, j), r in zip(self.edges, self.einstein_residuals)
            }
            data["csc_residuals"] = {
                str(v): float(r) for v, r in zip(self.vertices, self.csc_residuals)
            }
        data.update(self.extra)
        return data

    def csv_rows(self) -> list[list]:
        """Rows under CSV_COLUMNS: vertices, then edges, then summary values."""
        rows = []
        for n, v in enumerate(self.vertices):
            residual = "" if self.csc_residuals is None else float(self.csc_residuals[n])
            rows.append(["vertex", str(v), float(self.vertex_curvature[n]), residual])
        if self.edge_curvature is not None:
            for n, (i, j) in enumerate(self.edges):
                rows.append(["edge", f"{i}-{j}", float(self.edge_curvature[n]), float(self.einstein_residuals[n])])
        rows.append(["summary", "total_volume", self.total_volume, ""])
        if self.dimension == 2:
            rows.append(["summary", "total_curvature", self.total_curvature, self.gauss_bonnet_defect])
        else:
            rows.append(["summary", "ehr", self.ehr, ""])
            rows.append(["summary", "lambda", self.einstein_constant, ""])
        return rows


def curvature_report(metric: PreMetric) -> CurvatureReport:
    """Compute every curvature quantity of a metric.

    Raises:
        Degenerate: If a simplex is degenerate
    """
    cx = metric.complex
    report = CurvatureReport(
        dimension=cx.dimension,
        vertices=cx.vertices,
        edges=cx.edges,
        vertex_curvature=vertex_curvature(metric),
        total_volume=total_volume(metric),
        euler_characteristic=cx.euler_characteristic(),
    )
    if cx.dimension == 3:
        report.edge_curvature = edge_curvature_3d(metric)
        report.ehr = float(report.edge_curvature.sum())
        report.einstein_constant = report.ehr / (3.0 * report.total_volume)
        report.einstein_residuals, report.csc_residuals = residuals(metric)
    logger.debug("Curvature report: total curvature %.6g", report.total_curvature)
    return report

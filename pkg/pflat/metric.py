"""
Pre-metrics, metrics and the duality structure.

A PreMetric assigns a real number d_ij to every oriented edge; the edge
length is l_ij = d_ij + d_ji. All centers, heights, dual areas and dual
lengths are computed from the signed height formulas, never from vertex
coordinates.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np

from .complex import SimplicialComplex
from .exceptions import Degenerate
from .geometry import cm_volume, corner_angles, dihedral_angles

logger = logging.getLogger(__name__)

# Tolerance of the per-triangle metric condition, relative to (mean length)^2
METRIC_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class PreMetric:
    """Signed distances d_ij on the oriented edges of a complex."""

    complex: SimplicialComplex
    distances: dict[tuple[int, int], float]

    def __post_init__(self):
        missing = [e for e in self.complex.oriented_edges if e not in self.distances]
        if missing:
            raise ValueError(f"Pre-metric is missing oriented edges, e.g. {list(missing[0])}")

    @classmethod
    def from_lengths(cls, complex: SimplicialComplex, lengths) -> "PreMetric":
        """Split each edge length evenly, d_ij = d_ji = l_ij / 2.

        Args:
            complex: The triangulation
            lengths: Mapping from edges (in any vertex order) to lengths
        """
        by_edge = {tuple(sorted(e)): float(v) for e, v in dict(lengths).items()}
        distances = {}
        for i, j in complex.edges:
            half = 0.5 * by_edge[(i, j)]
            distances[(i, j)] = half
            distances[(j, i)] = half
        return cls(complex, distances)

    def d(self, i: int, j: int) -> float:
        return self.distances[(i, j)]

    def length(self, i: int, j: int) -> float:
        return self.distances[(i, j)] + self.distances[(j, i)]

    @cached_property
    def lengths(self) -> dict[tuple[int, int], float]:
        """Edge lengths keyed by sorted vertex pairs, in edge-id order."""
        return {(i, j): self.length(i, j) for i, j in self.complex.edges}

    def local_distances(self, simplex) -> np.ndarray:
        """Matrix D[a, b] = d_{v_a v_b} over the sorted vertices of a simplex."""
        verts = tuple(sorted(simplex))
        n = len(verts)
        D = np.zeros((n, n))
        for a in range(n):
            for b in range(n):
                if a != b:
                    D[a, b] = self.distances[(verts[a], verts[b])]
        return D

    def local_lengths(self, simplex) -> np.ndarray:
        D = self.local_distances(simplex)
        return D + D.T


def triangle_heights(D: np.ndarray) -> np.ndarray:
    """Signed heights of a triangle center over its edges.

    Args:
        D: 3x3 local pre-metric, D[a, b] = d_ab

    Returns:
        Array H with H[a, b] = h_{ab,c}, evaluated at vertex a: the signed
        distance from the center to edge {a, b}, positive toward c. Under the
        metric condition H is symmetric.
    """
    L = D + D.T
    G = corner_angles(L)
    H = np.zeros((3, 3))
    for a in range(3):
        for b in range(3):
            if a == b:
                continue
            c = 3 - a - b
            gamma = G[a, b, c]
            H[a, b] = (D[a, c] - D[a, b] * math.cos(gamma)) / math.sin(gamma)
    return H


@dataclass
class TetrahedronDuals:
    """All dual quantities of one tetrahedron in local vertex order."""

    lengths: np.ndarray
    dihedral: np.ndarray
    corner: np.ndarray
    # face_heights[a, b, c] = h_{ab,c} within face {a, b, c}, evaluated at min(a, b)
    face_heights: np.ndarray
    # center_heights[l] = h_{ijk,l} for the face opposite l
    center_heights: np.ndarray
    # dual_areas[a, b] = A_{ab,cd}
    dual_areas: np.ndarray
    face_areas: np.ndarray
    volume: float


def tetrahedron_duals(D: np.ndarray, face_edges: dict | None = None) -> TetrahedronDuals:
    """Heights, dual areas and angles of a tetrahedron from its local pre-metric.

    Args:
        D: 4x4 local pre-metric
        face_edges: Optional map from the omitted vertex l to the local edge
            {i, j} of face {i, j, k} used in the height formula; defaults to
            the two smallest indices of the face

    Returns:
        TetrahedronDuals for the tetrahedron

    Raises:
        Degenerate: If the tetrahedron or one of its faces is degenerate
    """
    L = D + D.T
    volume = cm_volume(L, 3)
    B = dihedral_angles(L)
    G = corner_angles(L)

    h2 = np.zeros((4, 4, 4))
    face_areas = np.zeros(4)
    for omit in range(4):
        face = [u for u in range(4) if u != omit]
        face_areas[omit] = cm_volume(L[np.ix_(face, face)], 2)
        for a, b in combinations(face, 2):
            c = next(u for u in face if u not in (a, b))
            gamma = G[a, b, c]
            h = (D[a, c] - D[a, b] * math.cos(gamma)) / math.sin(gamma)
            h2[a, b, c] = h2[b, a, c] = h

    h3 = np.zeros(4)
    for omit in range(4):
        face = [u for u in range(4) if u != omit]
        i, j = (face_edges or {}).get(omit, face[:2])
        k = next(u for u in face if u not in (i, j))
        beta = B[i, j]
        h3[omit] = (h2[i, j, omit] - h2[i, j, k] * math.cos(beta)) / math.sin(beta)

    A = np.zeros((4, 4))
    for i, j in combinations(range(4), 2):
        k, l = (u for u in range(4) if u not in (i, j))
        A[i, j] = A[j, i] = 0.5 * (h2[i, j, k] * h3[l] + h2[i, j, l] * h3[k])

    return TetrahedronDuals(
        lengths=L,
        dihedral=B,
        corner=G,
        face_heights=h2,
        center_heights=h3,
        dual_areas=A,
        face_areas=face_areas,
        volume=volume,
    )


def _local(simplex, vertex_or_face) -> tuple[tuple[int, ...], list[int]]:
    verts = tuple(sorted(simplex))
    try:
        return verts, [verts.index(v) for v in vertex_or_face]
    except ValueError:
        raise ValueError(f"{list(vertex_or_face)} is not a face of {list(verts)}") from None


def height_2d(metric: PreMetric, triangle, edge) -> float:
    """Signed height h_{ij,k} of the triangle center over edge {i, j}.

    Args:
        metric: Pre-metric on the complex
        triangle: Vertex labels {i, j, k}
        edge: (i, j); the formula is evaluated at the first vertex

    Returns:
        The signed height, positive toward k

    Raises:
        Degenerate: If the triangle is degenerate
    """
    verts, (a, b) = _local(triangle, edge)
    if len(verts) != 3:
        raise ValueError(f"Expected a triangle, got {list(verts)}")
    return float(triangle_heights(metric.local_distances(verts))[a, b])


def height_3d(metric: PreMetric, tetrahedron, face, edge=None) -> float:
    """Signed height h_{ijk,l} of the tetrahedron center over face {i, j, k}.

    Args:
        metric: Pre-metric on the complex
        tetrahedron: Vertex labels {i, j, k, l}
        face: Vertex labels {i, j, k}
        edge: Optional edge of the face used in the formula; defaults to the
            first two face vertices as given

    Returns:
        The signed height, positive toward l
    """
    verts, local_face = _local(tetrahedron, face)
    if len(verts) != 4 or len(local_face) != 3:
        raise ValueError(f"Expected a tetrahedron and one of its faces, got {list(verts)}")
    omit = next(u for u in range(4) if u not in local_face)
    local_edge = _local(tetrahedron, edge)[1] if edge is not None else local_face[:2]
    duals = tetrahedron_duals(metric.local_distances(verts), {omit: tuple(local_edge)})
    return float(duals.center_heights[omit])


def dual_area(metric: PreMetric, tetrahedron, edge) -> float:
    """Signed dual area A_{ij,kl} of edge {i, j} inside a tetrahedron."""
    verts, (a, b) = _local(tetrahedron, edge)
    duals = tetrahedron_duals(metric.local_distances(verts))
    return float(duals.dual_areas[a, b])


@dataclass
class DualData:
    """The duality structure of a metric, keyed by vertex-label tuples.

    heights_2d maps (triangle, edge) to h_{ij,k}; heights_3d maps
    (tetrahedron, face) to h_{ijk,l}; dual_areas maps (tetrahedron, edge) to
    A_{ij,kl}; dual_lengths maps edges to l*_ij.
    """

    heights_2d: dict = field(default_factory=dict)
    heights_3d: dict = field(default_factory=dict)
    dual_areas: dict = field(default_factory=dict)
    dual_lengths: dict = field(default_factory=dict)


def dual_data(metric: PreMetric) -> DualData:
    """Compute every center height, dual area and dual length of a metric.

    Sums run over top simplices in id order.

    Raises:
        Degenerate: If a simplex is degenerate
    """
    cx = metric.complex
    data = DualData()
    data.dual_lengths = {e: 0.0 for e in cx.edges}

    if cx.dimension == 2:
        for tri in cx.triangles:
            H = triangle_heights(metric.local_distances(tri))
            for a, b in combinations(range(3), 2):
                edge = (tri[a], tri[b])
                data.heights_2d[(tri, edge)] = H[a, b]
                data.dual_lengths[edge] += H[a, b]
        return data

    for tet in cx.tetrahedra:
        duals = tetrahedron_duals(metric.local_distances(tet))
        for omit in range(4):
            face = tuple(tet[u] for u in range(4) if u != omit)
            data.heights_3d[(tet, face)] = duals.center_heights[omit]
            local_face = [u for u in range(4) if u != omit]
            for a, b in combinations(local_face, 2):
                c = next(u for u in local_face if u not in (a, b))
                data.heights_2d.setdefault((face, (tet[a], tet[b])), duals.face_heights[a, b, c])
        for a, b in combinations(range(4), 2):
            edge = (tet[a], tet[b])
            data.dual_areas[(tet, edge)] = duals.dual_areas[a, b]
            data.dual_lengths[edge] += duals.dual_areas[a, b]
    return data


def dual_length(metric: PreMetric, edge) -> float:
    """Dual length l*_ij of an edge.

    In two dimensions this is the sum of the heights over the edge in its two
    triangles; in three dimensions it is the sum of the dual areas over the
    tetrahedra containing the edge, each counted once.
    """
    cx = metric.complex
    key = tuple(sorted(edge))
    total = 0.0
    for top in cx.star_simplices(key):
        verts, (a, b) = _local(top, key)
        D = metric.local_distances(verts)
        if cx.dimension == 2:
            total += triangle_heights(D)[a, b]
        else:
            total += tetrahedron_duals(D).dual_areas[a, b]
    return float(total)


def vertex_volumes(metric: PreMetric) -> np.ndarray:
    """Volumes V_i = (1/3) sum h_{ijk,l} A_{ijk} for every vertex, in vertex order.

    The inner sum runs over the tetrahedra containing i and the faces of
    those tetrahedra containing i.
    """
    cx = metric.complex
    if cx.dimension != 3:
        raise ValueError("Vertex volumes are defined for three-dimensional complexes")
    V = np.zeros(cx.vertex_count)
    for tet in cx.tetrahedra:
        duals = tetrahedron_duals(metric.local_distances(tet))
        pyramids = duals.center_heights * duals.face_areas / 3.0
        for a in range(4):
            # faces containing a are those opposite the other three vertices
            V[cx.vertex_index(tet[a])] += pyramids.sum() - pyramids[a]
    return V


def vertex_volume(metric: PreMetric, vertex: int) -> float:
    return float(vertex_volumes(metric)[metric.complex.vertex_index(vertex)])


def edge_volume(metric: PreMetric, edge) -> float:
    """Volume V_ij = l*_ij l_ij / n associated with an edge."""
    i, j = sorted(edge)
    return dual_length(metric, (i, j)) * metric.length(i, j) / metric.complex.dimension


def edge_volumes(metric: PreMetric, data: DualData | None = None) -> dict:
    data = data or dual_data(metric)
    n = metric.complex.dimension
    return {e: data.dual_lengths[e] * metric.lengths[e] / n for e in metric.complex.edges}


@dataclass
class MetricReport:
    """Result of validating a pre-metric.

    triangle_residuals holds, per triangle (i, j, k) with i < j < k, the value
    d_ij^2 + d_jk^2 + d_ki^2 - d_ji^2 - d_ik^2 - d_kj^2.
    """

    triangle_residuals: dict = field(default_factory=dict)
    failing_triangles: list = field(default_factory=list)
    degenerate_simplices: list = field(default_factory=list)
    nonpositive_edges: list = field(default_factory=list)
    distances_positive: bool = True
    dual_lengths_positive: bool | None = None

    @property
    def passed(self) -> bool:
        return not (self.failing_triangles or self.degenerate_simplices or self.nonpositive_edges)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "max_residual": max((abs(r) for r in self.triangle_residuals.values()), default=0.0),
            "failing_triangles": [list(t) for t in self.failing_triangles],
            "degenerate_simplices": [list(s) for s in self.degenerate_simplices],
            "nonpositive_edges": [list(e) for e in self.nonpositive_edges],
            "distances_positive": self.distances_positive,
            "dual_lengths_positive": self.dual_lengths_positive,
        }


def metric_residual(metric: PreMetric, triangle) -> float:
    """Residual of the metric condition on one triangle."""
    i, j, k = sorted(triangle)
    d = metric.d
    return (d(i, j) ** 2 + d(j, k) ** 2 + d(k, i) ** 2) - (
        d(j, i) ** 2 + d(i, k) ** 2 + d(k, j) ** 2
    )


def check_metric(complex: SimplicialComplex, distances) -> MetricReport:
    """Validate a pre-metric against the metric conditions.

    Reports every violation instead of raising: non-positive lengths,
    degenerate top simplices and triangles failing the metric condition.

    Args:
        complex: The triangulation
        distances: A PreMetric or a mapping of oriented edges to d_ij

    Returns:
        MetricReport; ``passed`` is True iff every condition holds
    """
    metric = distances if isinstance(distances, PreMetric) else PreMetric(complex, dict(distances))
    report = MetricReport()

    for edge, value in metric.lengths.items():
        if not (math.isfinite(value) and value > 0):
            report.nonpositive_edges.append(edge)
    report.distances_positive = all(v > 0 for v in metric.distances.values())

    for tri in complex.triangles:
        residual = metric_residual(metric, tri)
        report.triangle_residuals[tri] = residual
        scale = np.mean([metric.length(a, b) for a, b in combinations(tri, 2)]) ** 2
        if not abs(residual) <= METRIC_TOLERANCE * scale:
            report.failing_triangles.append(tri)

    if not report.nonpositive_edges:
        for top in complex.top_simplices:
            try:
                cm_volume(metric.local_lengths(top))
            except Degenerate:
                report.degenerate_simplices.append(top)

    if report.passed:
        report.dual_lengths_positive = all(v > 0 for v in dual_data(metric).dual_lengths.values())

    if not report.passed:
        logger.info(
            "Metric check failed: %d triangles, %d degenerate simplices, %d bad edges",
            len(report.failing_triangles),
            len(report.degenerate_simplices),
            len(report.nonpositive_edges),
        )
    return report

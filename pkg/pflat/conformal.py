"""
Conformal structures.

A conformal chart maps a vertex function f to a metric d(f) such that
dl_ij/df_i = d_ij and d_ij does not depend on f_k for k outside {i, j}.
Three charts are provided: circle/sphere packing, fixed inversive distance
and perpendicular bisector. New kinds subclass ConformalChart.
"""

import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

from .complex import SimplicialComplex
from .exceptions import Degenerate, OutOfDomain, UnknownSimplex
from .geometry import cm_volume
from .metric import PreMetric

logger = logging.getLogger(__name__)


def vertex_array(complex: SimplicialComplex, f) -> np.ndarray:
    """Normalize a vertex function to a float array in vertex order.

    Args:
        complex: The triangulation
        f: Array of length vertex_count, or mapping from vertex label to value

    Raises:
        ValueError: If the shape does not match or a vertex is missing
    """
    if isinstance(f, Mapping):
        try:
            return np.array([float(f[v]) for v in complex.vertices])
        except KeyError as e:
            raise ValueError(f"Vertex function has no value for vertex {e.args[0]}") from None
    arr = np.asarray(f, dtype=float)
    if arr.shape != (complex.vertex_count,):
        raise ValueError(
            f"Vertex function must have {complex.vertex_count} entries, got shape {arr.shape}"
        )
    return arr


@dataclass
class DomainReport:
    """Pointwise domain membership of a vertex function for a chart."""

    nonfinite_vertices: list = field(default_factory=list)
    nonpositive_edges: list = field(default_factory=list)
    degenerate_simplices: list = field(default_factory=list)
    flagged_edges: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not (self.nonfinite_vertices or self.nonpositive_edges or self.degenerate_simplices)

    def first_problem(self) -> tuple[str, tuple | None]:
        if self.nonfinite_vertices:
            v = self.nonfinite_vertices[0]
            return f"Vertex function is not finite at vertex {v}", (v,)
        if self.nonpositive_edges:
            e = self.nonpositive_edges[0]
            return f"Edge {list(e)} has no positive length", e
        if self.degenerate_simplices:
            s = self.degenerate_simplices[0]
            return f"Simplex {list(s)} is degenerate", s
        return "", None

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "nonfinite_vertices": list(self.nonfinite_vertices),
            "nonpositive_edges": [list(e) for e in self.nonpositive_edges],
            "degenerate_simplices": [list(s) for s in self.degenerate_simplices],
            "flagged_edges": [list(e) for e in self.flagged_edges],
        }


class ConformalChart(ABC):
    """A conformal structure on a fixed triangulation."""

    kind: ClassVar[str]

    def __init__(self, complex: SimplicialComplex):
        self.complex = complex

    @property
    def parameters(self) -> dict | None:
        """Per-edge data of the chart (eta or L), keyed by sorted vertex pairs."""
        return None

    @abstractmethod
    def edge_length(self, fi: float, fj: float, edge: tuple[int, int]) -> float:
        """Length l_ij, or nan when the chart gives no real length."""

    @abstractmethod
    def distance(self, fi: float, fj: float, edge: tuple[int, int]) -> float:
        """Signed distance d_ij from vertex i, with fi the value at i."""

    @abstractmethod
    def coupling(self, fi: float, fj: float, edge: tuple[int, int]) -> float:
        """q_ij = dd_ij/df_j, symmetric in i and j."""

    def flagged(self, edge: tuple[int, int]) -> bool:
        return False

    def _values(self, f) -> dict[int, float]:
        return dict(zip(self.complex.vertices, vertex_array(self.complex, f)))

    def lengths(self, f) -> dict[tuple[int, int], float]:
        values = self._values(f)
        return {(i, j): self.edge_length(values[i], values[j], (i, j)) for i, j in self.complex.edges}

    def domain_check(self, f) -> DomainReport:
        """Check whether a vertex function lies in the chart domain.

        Reports non-finite values, edges without positive length and top
        simplices that fail the Cayley-Menger test. Never raises.
        """
        report = DomainReport()
        values = vertex_array(self.complex, f)
        report.nonfinite_vertices = [
            v for v, x in zip(self.complex.vertices, values) if not math.isfinite(x)
        ]
        if report.nonfinite_vertices:
            return report

        with np.errstate(over="ignore", invalid="ignore"):
            lengths = self.lengths(values)
        report.nonpositive_edges = [
            e for e, l in lengths.items() if not (math.isfinite(l) and l > 0)
        ]
        report.flagged_edges = [e for e in self.complex.edges if self.flagged(e)]
        if report.nonpositive_edges:
            return report

        for top in self.complex.top_simplices:
            n = len(top)
            L = np.zeros((n, n))
            for a in range(n):
                for b in range(a + 1, n):
                    L[a, b] = L[b, a] = lengths[(top[a], top[b])]
            try:
                cm_volume(L)
            except Degenerate:
                report.degenerate_simplices.append(top)
        return report

    def apply(self, f) -> PreMetric:
        """Build the metric d(f).

        Raises:
            OutOfDomain: If f is outside the chart domain
        """
        report = self.domain_check(f)
        if not report.passed:
            message, simplex = report.first_problem()
            raise OutOfDomain(f"{self.kind} chart: {message}", simplex)

        values = self._values(f)
        distances = {}
        for i, j in self.complex.edges:
            distances[(i, j)] = self.distance(values[i], values[j], (i, j))
            distances[(j, i)] = self.distance(values[j], values[i], (i, j))
        return PreMetric(self.complex, distances)

    def q(self, f, edge) -> float:
        """Coupling coefficient q_ij at f.

        Raises:
            OutOfDomain: If the edge has no positive length at f
        """
        i, j = sorted(edge)
        values = self._values(f)
        length = self.edge_length(values[i], values[j], (i, j))
        if not (math.isfinite(length) and length > 0):
            raise OutOfDomain(f"{self.kind} chart: edge {[i, j]} has no positive length", (i, j))
        return self.coupling(values[i], values[j], (i, j))

    def couplings(self, f) -> dict[tuple[int, int], float]:
        values = self._values(f)
        return {(i, j): self.coupling(values[i], values[j], (i, j)) for i, j in self.complex.edges}


class PackingChart(ConformalChart):
    """Circle/sphere packing: radii r_i = e^{f_i}, d_ij = r_i, l_ij = r_i + r_j."""

    kind = "packing"

    def edge_length(self, fi, fj, edge):
        return math.exp(fi) + math.exp(fj)

    def distance(self, fi, fj, edge):
        return math.exp(fi)

    def coupling(self, fi, fj, edge):
        return 0.0


def _edge_map(complex: SimplicialComplex, values, name: str) -> dict[tuple[int, int], float]:
    by_edge = {tuple(sorted(e)): float(v) for e, v in dict(values).items()}
    extra = [e for e in by_edge if len(e) != 2 or not complex.contains(e)]
    if extra:
        raise UnknownSimplex(f"{name} given for {list(extra[0])}, which is not an edge", extra[0])
    missing = [e for e in complex.edges if e not in by_edge]
    if missing:
        raise ValueError(f"{name} is missing a value for edge {list(missing[0])}")
    return {e: by_edge[e] for e in complex.edges}


class FixedInversiveChart(ConformalChart):
    """Fixed inversive distance: l_ij^2 = r_i^2 + r_j^2 + 2 r_i r_j eta_ij."""

    kind = "fixed-inversive"

    def __init__(self, complex: SimplicialComplex, eta):
        super().__init__(complex)
        self.eta = _edge_map(complex, eta, "Inversive distance")

    @property
    def parameters(self):
        return dict(self.eta)

    def flagged(self, edge):
        return self.eta[edge] < -1.0

    def _squared_length(self, ri, rj, edge):
        return ri * ri + rj * rj + 2.0 * ri * rj * self.eta[tuple(sorted(edge))]

    def edge_length(self, fi, fj, edge):
        sq = self._squared_length(math.exp(fi), math.exp(fj), edge)
        return math.sqrt(sq) if sq > 0 else math.nan

    def distance(self, fi, fj, edge):
        ri, rj = math.exp(fi), math.exp(fj)
        length = math.sqrt(self._squared_length(ri, rj, edge))
        return ri * (ri + rj * self.eta[tuple(sorted(edge))]) / length

    def coupling(self, fi, fj, edge):
        ri, rj = math.exp(fi), math.exp(fj)
        eta = self.eta[tuple(sorted(edge))]
        length = math.sqrt(self._squared_length(ri, rj, edge))
        return ri * ri * rj * rj * (eta * eta - 1.0) / length**3


class PerpBisectorChart(ConformalChart):
    """Perpendicular bisector: l_ij = e^{(f_i + f_j)/2} L_ij and d_ij = l_ij / 2."""

    kind = "perp-bisector"

    def __init__(self, complex: SimplicialComplex, base_lengths):
        super().__init__(complex)
        self.base_lengths = _edge_map(complex, base_lengths, "Base length")
        bad = [e for e, v in self.base_lengths.items() if not v > 0]
        if bad:
            raise ValueError(f"Base length of edge {list(bad[0])} must be positive")

    @property
    def parameters(self):
        return dict(self.base_lengths)

    def edge_length(self, fi, fj, edge):
        return math.exp(0.5 * (fi + fj)) * self.base_lengths[tuple(sorted(edge))]

    def distance(self, fi, fj, edge):
        return 0.5 * self.edge_length(fi, fj, edge)

    def coupling(self, fi, fj, edge):
        return 0.25 * self.edge_length(fi, fj, edge)


CHART_KINDS = {
    PackingChart.kind: PackingChart,
    FixedInversiveChart.kind: FixedInversiveChart,
    PerpBisectorChart.kind: PerpBisectorChart,
}


def make_chart(kind: str, complex: SimplicialComplex, parameters=None) -> ConformalChart:
    """Construct a chart by kind name.

    Args:
        kind: "packing", "fixed-inversive" or "perp-bisector"
        complex: The triangulation
        parameters: Per-edge eta or L for the kinds that need them

    Raises:
        ValueError: For an unknown kind or missing parameters
    """
    if kind not in CHART_KINDS:
        raise ValueError(f"Unknown chart kind: {kind}. Expected one of {', '.join(CHART_KINDS)}")
    if kind == PackingChart.kind:
        return PackingChart(complex)
    if parameters is None:
        raise ValueError(f"Chart kind {kind} needs per-edge parameters")
    return CHART_KINDS[kind](complex, parameters)

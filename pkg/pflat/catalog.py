"""
Standard closed triangulations with their Euclidean edge lengths.

Each constructor returns a Fixture: a validated complex plus an edge length
for every edge. Where the triangulation comes from a flat or convex
embedding the lengths are the Euclidean ones; otherwise they are unit
lengths, which make every simplex regular.
"""

import math
from dataclasses import dataclass
from itertools import combinations, permutations, product

import numpy as np
from scipy.spatial import ConvexHull

from .complex import SimplicialComplex, build_complex
from .conformal import PerpBisectorChart
from .metric import PreMetric

GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0


@dataclass(frozen=True)
class Fixture:
    name: str
    complex: SimplicialComplex
    lengths: dict

    def metric(self) -> PreMetric:
        """The metric with every edge split at its midpoint."""
        return PreMetric.from_lengths(self.complex, self.lengths)

    def perp_bisector(self) -> PerpBisectorChart:
        """Perpendicular bisector chart with the fixture lengths as base lengths."""
        return PerpBisectorChart(self.complex, self.lengths)


def _unit(complex: SimplicialComplex) -> dict:
    return {e: 1.0 for e in complex.edges}


def tetrahedron_boundary() -> Fixture:
    """Boundary of the tetrahedron: the smallest triangulated sphere."""
    cx = build_complex(2, [(1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4)])
    return Fixture("tetrahedron", cx, _unit(cx))


def simplex_boundary() -> Fixture:
    """Boundary of the 4-simplex: the smallest triangulated 3-sphere."""
    cx = build_complex(3, combinations(range(1, 6), 4))
    return Fixture("simplex", cx, _unit(cx))


def non_delaunay_sphere(long_edge: float = 1.9) -> Fixture:
    """Tetrahedron boundary with edge {1, 2} stretched so both triangles on it are obtuse."""
    cx = build_complex(2, [(1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4)])
    lengths = _unit(cx)
    lengths[(1, 2)] = long_edge
    return Fixture("non-delaunay", cx, lengths)


def icosahedron() -> Fixture:
    """Regular icosahedron with unit edges, triangulated by its convex hull."""
    points = []
    for a, b in product((-1.0, 1.0), repeat=2):
        base = (0.0, a, b * GOLDEN_RATIO)
        for shift in range(3):
            points.append(base[shift:] + base[:shift])
    points = np.array(points) / 2.0
    hull = ConvexHull(points)
    cx = build_complex(2, hull.simplices.tolist())
    lengths = {(i, j): float(np.linalg.norm(points[i] - points[j])) for i, j in cx.edges}
    return Fixture("icosahedron", cx, lengths)


def _grid_index(n: int, a: int, b: int) -> int:
    return (a % n) * n + (b % n)


def _grid_triangles(n: int, offset: int = 0) -> list[tuple[int, int, int]]:
    triangles = []
    for a, b in product(range(n), repeat=2):
        v00 = offset + _grid_index(n, a, b)
        v10 = offset + _grid_index(n, a + 1, b)
        v01 = offset + _grid_index(n, a, b + 1)
        v11 = offset + _grid_index(n, a + 1, b + 1)
        triangles.append((v00, v10, v11))
        triangles.append((v00, v01, v11))
    return triangles


def _periodic_offset(n: int, u: int, v: int, dimension: int) -> np.ndarray:
    """Shortest periodic offset between two grid vertex indices."""
    def coords(x):
        return [(x // n**k) % n for k in reversed(range(dimension))]

    delta = (np.array(coords(v)) - np.array(coords(u))) % n
    return np.where(delta > n // 2, delta - n, delta)


def grid_torus(n: int = 3) -> Fixture:
    """Flat torus: an n x n grid of unit squares, each cut along its diagonal."""
    if n < 3:
        raise ValueError("A periodic grid torus needs n >= 3")
    cx = build_complex(2, _grid_triangles(n))
    lengths = {(i, j): float(np.linalg.norm(_periodic_offset(n, i, j, 2))) for i, j in cx.edges}
    return Fixture(f"torus-{n}", cx, lengths)


def kuhn_torus(n: int = 3) -> Fixture:
    """Flat 3-torus: an n^3 grid of unit cubes, each cut into six Kuhn tetrahedra."""
    if n < 3:
        raise ValueError("A periodic Kuhn torus needs n >= 3")

    def index(p):
        return ((p[0] % n) * n + (p[1] % n)) * n + (p[2] % n)

    tets = []
    for corner in product(range(n), repeat=3):
        for order in permutations(range(3)):
            p = list(corner)
            path = [index(p)]
            for axis in order:
                p[axis] += 1
                path.append(index(p))
            tets.append(tuple(path))
    cx = build_complex(3, tets)
    lengths = {(i, j): float(np.linalg.norm(_periodic_offset(n, i, j, 3))) for i, j in cx.edges}
    return Fixture(f"kuhn-torus-{n}", cx, lengths)


def genus_two(n: int = 3) -> Fixture:
    """Genus-two surface: two grid tori, each missing one triangle, joined by a tube.

    All edges have unit length.
    """
    first = _grid_triangles(n)
    second = _grid_triangles(n, offset=n * n)
    a = first.pop(0)
    b = second.pop(0)
    tube = []
    for k in range(3):
        a0, a1 = a[k], a[(k + 1) % 3]
        b0, b1 = b[k], b[(k + 1) % 3]
        tube.append((a0, a1, b0))
        tube.append((a1, b1, b0))
    cx = build_complex(2, first + second + tube)
    return Fixture(f"genus-two-{n}", cx, _unit(cx))


CATALOG = {
    "tetrahedron": tetrahedron_boundary,
    "simplex": simplex_boundary,
    "non-delaunay": non_delaunay_sphere,
    "icosahedron": icosahedron,
    "torus": grid_torus,
    "kuhn-torus": kuhn_torus,
    "genus-two": genus_two,
}


def fixture(name: str) -> Fixture:
    """Look up a catalog triangulation by name.

    Raises:
        ValueError: If the name is unknown
    """
    if name not in CATALOG:
        raise ValueError(f"Unknown triangulation: {name}. Expected one of {', '.join(CATALOG)}")
    return CATALOG[name]()

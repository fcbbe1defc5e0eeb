"""
Closed triangulated 2- and 3-manifolds.

A SimplicialComplex is built from its list of top simplices. All lower
simplices are generated, incidence maps are filled in, and the closed
manifold conditions are verified before the object is handed out.
"""

import logging
import numbers
from collections import defaultdict, deque
from dataclasses import dataclass, field
from itertools import combinations

from .exceptions import ComplexError, DuplicateSimplex, NonManifold, UnknownSimplex

logger = logging.getLogger(__name__)

Simplex = tuple[int, ...]


def _key(simplex) -> Simplex:
    """Normalize a vertex collection (or a single vertex) to a sorted tuple."""
    if isinstance(simplex, numbers.Integral):
        return (int(simplex),)
    return tuple(sorted(int(v) for v in simplex))


@dataclass(frozen=True, eq=False)
class SimplicialComplex:
    """A closed, connected triangulated manifold of dimension 2 or 3.

    Simplices of each dimension k are stored as sorted vertex tuples in
    ``simplices[k]``; the id of a simplex is its position in that list. Ids
    are dense and assigned in sorted order, so every traversal of the complex
    is deterministic.
    """

    dimension: int
    simplices: dict[int, tuple[Simplex, ...]]
    _ids: dict[Simplex, int] = field(repr=False)
    _cofaces: dict[Simplex, tuple[int, ...]] = field(repr=False)

    @property
    def vertices(self) -> tuple[int, ...]:
        return tuple(v for (v,) in self.simplices[0])

    @property
    def edges(self) -> tuple[Simplex, ...]:
        return self.simplices[1]

    @property
    def triangles(self) -> tuple[Simplex, ...]:
        return self.simplices[2]

    @property
    def tetrahedra(self) -> tuple[Simplex, ...]:
        return self.simplices.get(3, ())

    @property
    def top_simplices(self) -> tuple[Simplex, ...]:
        return self.simplices[self.dimension]

    @property
    def oriented_edges(self) -> tuple[tuple[int, int], ...]:
        """Both orientations of every edge, (i, j) before (j, i)."""
        return tuple(pair for i, j in self.edges for pair in ((i, j), (j, i)))

    @property
    def vertex_count(self) -> int:
        return len(self.simplices[0])

    def counts(self) -> dict[int, int]:
        return {k: len(s) for k, s in self.simplices.items()}

    def euler_characteristic(self) -> int:
        return sum((-1) ** k * len(s) for k, s in self.simplices.items())

    def vertex_index(self, vertex: int) -> int:
        """Position of a vertex label in the vertex ordering used by operators."""
        return self.simplex_id((vertex,))

    def simplex_id(self, simplex) -> int:
        """Dense id of a simplex within its dimension.

        Raises:
            UnknownSimplex: If the vertex set is not a simplex of the complex
        """
        key = _key(simplex)
        try:
            return self._ids[key]
        except KeyError:
            raise UnknownSimplex(f"Unknown simplex: {list(key)}", key) from None

    def contains(self, simplex) -> bool:
        return _key(simplex) in self._ids

    def star(self, simplex) -> list[int]:
        """Ids of the top simplices containing a simplex, sorted by id.

        Args:
            simplex: A vertex label or a collection of vertex labels

        Returns:
            Sorted list of top-simplex ids

        Raises:
            UnknownSimplex: If the simplex is not in the complex
        """
        key = _key(simplex)
        if key not in self._cofaces:
            raise UnknownSimplex(f"Unknown simplex: {list(key)}", key)
        return list(self._cofaces[key])

    def star_simplices(self, simplex) -> list[Simplex]:
        """Vertex tuples of the top simplices containing a simplex."""
        return [self.top_simplices[i] for i in self.star(simplex)]

    def faces(self, simplex, k: int) -> list[Simplex]:
        """The k-dimensional faces of a simplex, in sorted order."""
        key = _key(simplex)
        if key not in self._ids:
            raise UnknownSimplex(f"Unknown simplex: {list(key)}", key)
        return list(combinations(key, k + 1))

    def neighbors(self, vertex: int) -> list[int]:
        """Vertices joined to a vertex by an edge, sorted."""
        out = set()
        for top in self.star_simplices(vertex):
            out.update(top)
        out.discard(vertex)
        return sorted(out)


def build_complex(dimension: int, top_simplices) -> SimplicialComplex:
    """Build and validate a closed triangulated manifold.

    Args:
        dimension: 2 or 3
        top_simplices: Iterable of vertex lists, each with dimension + 1 entries

    Returns:
        The validated SimplicialComplex

    Raises:
        ComplexError: If the dimension or a vertex list is malformed
        DuplicateSimplex: If a vertex set is listed twice
        NonManifold: If a codimension-one face does not have exactly two
            cofaces, a vertex link is not a sphere, or the complex is disconnected
    """
    if dimension not in (2, 3):
        raise ComplexError(f"Unsupported dimension: {dimension}. Expected 2 or 3")

    tops = []
    seen = set()
    for raw in top_simplices:
        simplex = tuple(int(v) for v in raw)
        key = tuple(sorted(simplex))
        if len(simplex) != dimension + 1 or len(set(simplex)) != dimension + 1:
            raise ComplexError(
                f"Top simplex {list(simplex)} must have {dimension + 1} distinct vertices",
                key,
            )
        if key in seen:
            raise DuplicateSimplex(f"Simplex {list(key)} listed more than once", key)
        seen.add(key)
        tops.append(key)

    if not tops:
        raise ComplexError("A complex needs at least one top simplex")

    tops.sort()
    simplices: dict[int, tuple[Simplex, ...]] = {}
    for k in range(dimension + 1):
        faces = {face for top in tops for face in combinations(top, k + 1)}
        simplices[k] = tuple(sorted(faces))
    simplices[dimension] = tuple(tops)

    ids = {s: i for k in simplices for i, s in enumerate(simplices[k])}

    cofaces = defaultdict(list)
    for t, top in enumerate(tops):
        for k in range(dimension + 1):
            for face in combinations(top, k + 1):
                cofaces[face].append(t)

    _check_closed(dimension, simplices, cofaces)
    _check_links(dimension, simplices, cofaces, tops)
    _check_connected(simplices)

    cx = SimplicialComplex(
        dimension=dimension,
        simplices=simplices,
        _ids=ids,
        _cofaces={s: tuple(c) for s, c in cofaces.items()},
    )
    logger.debug("Built %dD complex with counts %s", dimension, cx.counts())
    return cx


def _check_closed(dimension, simplices, cofaces) -> None:
    for face in simplices[dimension - 1]:
        count = len(cofaces[face])
        if count != 2:
            raise NonManifold(
                f"Face {list(face)} lies in {count} top simplices (expected 2)", face
            )


def _check_links(dimension, simplices, cofaces, tops) -> None:
    for (v,) in simplices[0]:
        link = [tuple(u for u in tops[t] if u != v) for t in cofaces[(v,)]]
        link_vertices = {u for s in link for u in s}

        adjacency = defaultdict(set)
        for s in link:
            for a, b in combinations(s, 2):
                adjacency[a].add(b)
                adjacency[b].add(a)
        if _component_count(link_vertices, adjacency) != 1:
            raise NonManifold(f"Link of vertex {v} is not connected", (v,))

        if dimension == 3:
            edges = {e for s in link for e in combinations(s, 2)}
            chi = len(link_vertices) - len(edges) + len(link)
            if chi != 2:
                raise NonManifold(
                    f"Link of vertex {v} has Euler characteristic {chi} (expected 2)",
                    (v,),
                )


def _check_connected(simplices) -> None:
    vertices = {v for (v,) in simplices[0]}
    adjacency = defaultdict(set)
    for a, b in simplices[1]:
        adjacency[a].add(b)
        adjacency[b].add(a)
    if _component_count(vertices, adjacency) != 1:
        raise NonManifold("Complex is not connected")


def _component_count(vertices, adjacency) -> int:
    remaining = set(vertices)
    components = 0
    while remaining:
        components += 1
        queue = deque([remaining.pop()])
        while queue:
            u = queue.popleft()
            for w in adjacency[u]:
                if w in remaining:
                    remaining.remove(w)
                    queue.append(w)
    return components

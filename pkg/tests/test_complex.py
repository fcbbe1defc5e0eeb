"""
Tests for pflat.complex module.
"""

from itertools import combinations

import pytest

from pflat.complex import build_complex
from pflat.exceptions import ComplexError, DuplicateSimplex, NonManifold, UnknownSimplex

TETRA_FACES = [(1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4)]


class TestBuildComplex:
    """Tests for build_complex function."""

    def test_tetrahedron_boundary_counts(self):
        """Should generate every face of the tetrahedron boundary."""
        cx = build_complex(2, TETRA_FACES)

        assert cx.counts() == {0: 4, 1: 6, 2: 4}
        assert cx.euler_characteristic() == 2
        assert cx.vertices == (1, 2, 3, 4)

    def test_simplex_boundary_counts(self):
        """Should build the boundary of the 4-simplex as a 3-sphere."""
        cx = build_complex(3, combinations(range(1, 6), 4))

        assert cx.counts() == {0: 5, 1: 10, 2: 10, 3: 5}
        assert cx.euler_characteristic() == 0

    def test_sorts_vertex_lists(self):
        """Should store simplices as sorted tuples regardless of input order."""
        cx = build_complex(2, [(3, 2, 1), (4, 2, 1), (4, 3, 1), (4, 3, 2)])

        assert cx.triangles == tuple(TETRA_FACES)

    def test_open_disk_is_not_closed(self):
        """Should reject two triangles sharing one edge."""
        with pytest.raises(NonManifold) as exc_info:
            build_complex(2, [(1, 2, 3), (1, 2, 4)])

        assert exc_info.value.simplex == (1, 3)

    def test_two_tetrahedra_on_a_face(self):
        """Should reject two solid tetrahedra glued along one face: its other faces are free."""
        with pytest.raises(NonManifold) as exc_info:
            build_complex(3, [(1, 2, 3, 4), (1, 2, 3, 5)])

        assert exc_info.value.simplex == (1, 2, 4)

    def test_edge_in_three_triangles(self):
        """Should name the edge that lies in too many triangles."""
        with pytest.raises(NonManifold) as exc_info:
            build_complex(2, TETRA_FACES + [(1, 2, 5), (1, 5, 6), (2, 5, 6), (1, 2, 6)])

        assert exc_info.value.simplex == (1, 2)

    def test_pinched_vertex(self):
        """Should reject two spheres glued at a single vertex."""
        second = [(1, 5, 6), (1, 5, 7), (1, 6, 7), (5, 6, 7)]
        with pytest.raises(NonManifold, match="Link of vertex 1"):
            build_complex(2, TETRA_FACES + second)

    def test_disconnected(self):
        """Should reject two disjoint spheres."""
        second = [(5, 6, 7), (5, 6, 8), (5, 7, 8), (6, 7, 8)]
        with pytest.raises(NonManifold, match="not connected"):
            build_complex(2, TETRA_FACES + second)

    def test_duplicate_simplex(self):
        """Should reject the same vertex set listed twice."""
        with pytest.raises(DuplicateSimplex):
            build_complex(2, TETRA_FACES + [(3, 2, 1)])

    def test_wrong_simplex_size(self):
        """Should reject vertex lists of the wrong length."""
        with pytest.raises(ComplexError, match="distinct vertices"):
            build_complex(2, [(1, 2, 3, 4)])

    def test_repeated_vertex(self):
        """Should reject a simplex with a repeated vertex."""
        with pytest.raises(ComplexError):
            build_complex(2, [(1, 1, 2)])

    def test_unsupported_dimension(self):
        """Should only accept dimensions 2 and 3."""
        with pytest.raises(ComplexError, match="Unsupported dimension"):
            build_complex(4, [(1, 2, 3, 4, 5)])

    def test_empty(self):
        """Should reject an empty simplex list."""
        with pytest.raises(ComplexError):
            build_complex(2, [])

    def test_complex_errors_are_value_errors(self):
        """Should be catchable as ValueError."""
        with pytest.raises(ValueError):
            build_complex(2, [(1, 2, 3)])


class TestIncidence:
    """Tests for SimplicialComplex lookups."""

    @pytest.fixture
    def cx(self):
        return build_complex(2, TETRA_FACES)

    def test_star_of_vertex(self, cx):
        """Should list the three triangles at a vertex."""
        assert cx.star_simplices(1) == [(1, 2, 3), (1, 2, 4), (1, 3, 4)]

    def test_star_of_edge(self, cx):
        """Should list the two triangles at an edge."""
        assert cx.star_simplices((2, 1)) == [(1, 2, 3), (1, 2, 4)]

    def test_star_counts_double(self, cx):
        """Should count each triangle once per vertex."""
        assert sum(len(cx.star(v)) for v in cx.vertices) == 3 * len(cx.triangles)

    def test_simplex_id(self, cx):
        """Should number edges in sorted order."""
        assert cx.simplex_id((1, 2)) == 0
        assert cx.simplex_id((4, 3)) == 5
        assert cx.vertex_index(3) == 2

    def test_unknown_simplex(self, cx):
        """Should raise UnknownSimplex for vertex sets not in the complex."""
        with pytest.raises(UnknownSimplex) as exc_info:
            cx.simplex_id((1, 5))

        assert exc_info.value.simplex == (1, 5)

    def test_contains(self, cx):
        assert cx.contains((1, 2, 3))
        assert not cx.contains((1, 2, 5))

    def test_faces(self, cx):
        """Should list the edges of a triangle in sorted order."""
        assert cx.faces((1, 2, 3), 1) == [(1, 2), (1, 3), (2, 3)]

    def test_neighbors(self, cx):
        assert cx.neighbors(2) == [1, 3, 4]

    def test_oriented_edges(self, cx):
        """Should list (i, j) before (j, i) for each edge."""
        assert cx.oriented_edges[:2] == ((1, 2), (2, 1))
        assert len(cx.oriented_edges) == 12


class TestCatalogComplexes:
    """Euler characteristics of the standard triangulations."""

    def test_grid_torus(self, torus):
        assert torus.complex.counts() == {0: 9, 1: 27, 2: 18}
        assert torus.complex.euler_characteristic() == 0

    def test_kuhn_torus(self, kuhn):
        assert kuhn.complex.counts()[0] == 27
        assert kuhn.complex.counts()[3] == 162
        assert kuhn.complex.euler_characteristic() == 0

    def test_icosahedron(self, ico):
        assert ico.complex.counts() == {0: 12, 1: 30, 2: 20}

    def test_genus_two(self, genus):
        assert genus.complex.euler_characteristic() == -2

    def test_small_torus_rejected(self):
        """Should refuse grids too small to be periodic simplicial complexes."""
        from pflat.catalog import grid_torus

        with pytest.raises(ValueError):
            grid_torus(2)

    def test_unknown_fixture(self):
        from pflat.catalog import fixture

        with pytest.raises(ValueError, match="Unknown triangulation"):
            fixture("klein-bottle")

"""
Shared pytest fixtures for pflat tests.
"""

import math
import tempfile
from pathlib import Path

import numpy as np
import pytest

from pflat.catalog import genus_two, grid_torus, icosahedron, kuhn_torus, non_delaunay_sphere, simplex_boundary, tetrahedron_boundary
from pflat.conformal import FixedInversiveChart, PackingChart

HALF_LOG = math.log(0.5)

EXAMPLES_DIR = Path(__file__).parent / "examples"


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test files."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def examples_dir():
    """Directory holding the sample mesh files."""
    return EXAMPLES_DIR


@pytest.fixture
def tetra():
    """Boundary of the tetrahedron with unit edges."""
    return tetrahedron_boundary()


@pytest.fixture
def simplex():
    """Boundary of the 4-simplex with unit edges."""
    return simplex_boundary()


@pytest.fixture
def torus():
    """Flat 3x3 grid torus."""
    return grid_torus(3)


@pytest.fixture
def kuhn():
    """Flat 3x3x3 Kuhn torus."""
    return kuhn_torus(3)


@pytest.fixture
def ico():
    return icosahedron()


@pytest.fixture
def genus():
    return genus_two(3)


@pytest.fixture
def non_delaunay():
    """Tetrahedron boundary whose edge {1, 2} is too long for positive dual length."""
    return non_delaunay_sphere(1.9)


@pytest.fixture
def tetra_packing(tetra):
    """Packing chart on the tetrahedron boundary."""
    return PackingChart(tetra.complex)


@pytest.fixture
def simplex_packing(simplex):
    """Packing chart on the 4-simplex boundary."""
    return PackingChart(simplex.complex)


@pytest.fixture
def tetra_inversive(tetra):
    """Fixed inversive distance chart with eta = 0.5 on every edge."""
    return FixedInversiveChart(tetra.complex, {e: 0.5 for e in tetra.complex.edges})


@pytest.fixture
def unit_radii_f():
    """Vertex function giving radius 1/2, so packings have unit edges."""

    def make(n):
        return np.full(n, HALF_LOG)

    return make


@pytest.fixture
def random_tetrahedron():
    """Edge length matrices of random tetrahedra that are not close to flat."""

    def make(rng, quality=0.02):
        while True:
            points = rng.standard_normal((4, 3))
            lengths = np.linalg.norm(points[:, None] - points[None, :], axis=-1)
            volume = abs(np.linalg.det(points[1:] - points[0])) / 6.0
            if volume > quality * lengths.max() ** 3:
                return lengths

    return make

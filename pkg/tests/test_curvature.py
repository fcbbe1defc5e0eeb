"""
Tests for pflat.curvature module.
"""

import math

import numpy as np
import pytest

from pflat.curvature import (
    CSV_COLUMNS,
    curvature_2d,
    curvature_report,
    dihedral_sums,
    edge_curvature_3d,
    ehr,
    einstein_constant,
    packing_scalar_curvature,
    regge_gradient,
    residuals,
    scalar_curvature_3d,
    total_volume,
    volume_length_gradient,
)
from pflat.exceptions import Degenerate
from pflat.geometry import dihedral_angles
from pflat.metric import PreMetric, vertex_volumes
from pflat.variation import fd_jacobian

REGULAR_DIHEDRAL = math.acos(1.0 / 3.0)
SIMPLEX_DEFICIT = 2.0 * math.pi - 3.0 * REGULAR_DIHEDRAL
TETRA_VOLUME = 1.0 / (6.0 * math.sqrt(2.0))


def perturbed_lengths(fixture, seed=3, scale=0.05):
    rng = np.random.default_rng(seed)
    return np.array([fixture.lengths[e] for e in fixture.complex.edges]) * (
        1.0 + scale * rng.uniform(-1.0, 1.0, len(fixture.complex.edges))
    )


class TestCurvature2D:
    """Tests for the angle deficit on surfaces."""

    def test_tetrahedron(self, tetra):
        assert np.allclose(curvature_2d(tetra.metric()), math.pi, atol=1e-12)

    def test_icosahedron(self, ico):
        assert np.allclose(curvature_2d(ico.metric()), math.pi / 3.0, atol=1e-12)

    def test_flat_torus(self, torus):
        assert np.allclose(curvature_2d(torus.metric()), 0.0, atol=1e-12)

    @pytest.mark.parametrize("name", ["tetra", "torus", "genus", "ico", "non_delaunay"])
    def test_gauss_bonnet(self, name, request):
        """Should sum to 2 pi times the Euler characteristic."""
        fixture = request.getfixturevalue(name)
        K = curvature_2d(fixture.metric())

        assert K.sum() == pytest.approx(2.0 * math.pi * fixture.complex.euler_characteristic(), abs=1e-9)

    def test_gauss_bonnet_after_rescaling(self, torus):
        """Should hold for any metric, not only the flat one."""
        chart = torus.perp_bisector()
        f = np.linspace(-0.1, 0.1, torus.complex.vertex_count)

        assert curvature_2d(chart.apply(f)).sum() == pytest.approx(0.0, abs=1e-9)

    def test_degenerate_triangle(self, tetra):
        lengths = dict(tetra.lengths)
        lengths[(1, 2)] = 2.5
        with pytest.raises(Degenerate):
            curvature_2d(PreMetric.from_lengths(tetra.complex, lengths))

    def test_needs_surface(self, simplex):
        with pytest.raises(ValueError):
            curvature_2d(simplex.metric())


class TestCurvature3D:
    """Tests for edge and scalar curvature on 3-manifolds."""

    def test_regular_simplex_edges(self, simplex):
        metric = simplex.metric()

        assert np.allclose(dihedral_sums(metric), 3.0 * REGULAR_DIHEDRAL, atol=1e-12)
        assert np.allclose(edge_curvature_3d(metric), SIMPLEX_DEFICIT, atol=1e-12)

    def test_regular_simplex_vertices(self, simplex):
        """Should give K_i = (deficit) * 4 * (1/2) at every vertex."""
        assert np.allclose(scalar_curvature_3d(simplex.metric()), 2.0 * SIMPLEX_DEFICIT, atol=1e-12)

    def test_ehr_is_total_scalar_curvature(self, simplex, simplex_packing):
        f = np.log([0.5, 0.45, 0.55, 0.5, 0.6])
        metric = simplex_packing.apply(f)

        assert ehr(metric) == pytest.approx(scalar_curvature_3d(metric).sum(), rel=1e-12)
        assert ehr(simplex.metric()) == pytest.approx(10.0 * SIMPLEX_DEFICIT, rel=1e-12)

    def test_flat_kuhn_torus(self, kuhn):
        metric = kuhn.metric()

        assert np.allclose(dihedral_sums(metric), 2.0 * math.pi, atol=1e-9)
        assert np.allclose(scalar_curvature_3d(metric), 0.0, atol=1e-9)
        assert total_volume(metric) == pytest.approx(27.0, rel=1e-12)

    def test_packing_scalar_curvature(self, simplex_packing):
        """Should agree with the edge formula for packings."""
        f = np.log([0.5, 0.45, 0.55, 0.5, 0.6])
        metric = simplex_packing.apply(f)

        assert np.allclose(packing_scalar_curvature(metric), scalar_curvature_3d(metric), atol=1e-12)

    def test_packing_scalar_curvature_needs_packing(self, simplex):
        chart = simplex.perp_bisector()
        metric = chart.apply(np.array([0.0, 0.1, 0.0, 0.0, 0.0]))

        with pytest.raises(ValueError, match="not a sphere packing"):
            packing_scalar_curvature(metric)


class TestFunctionals:
    """Tests for EHR, volume and the Einstein constant."""

    def test_simplex_volume(self, simplex):
        assert total_volume(simplex.metric()) == pytest.approx(5.0 * TETRA_VOLUME, rel=1e-12)

    def test_surface_area(self, tetra):
        assert total_volume(tetra.metric()) == pytest.approx(math.sqrt(3.0), rel=1e-12)

    def test_einstein_constant(self, simplex):
        expected = 10.0 * SIMPLEX_DEFICIT / (15.0 * TETRA_VOLUME)

        assert einstein_constant(simplex.metric()) == pytest.approx(expected, rel=1e-12)

    def test_schlafli(self, simplex):
        """Should have dEHR/dl equal to the deficit (dihedral variations cancel)."""
        x = perturbed_lengths(simplex)
        cx = simplex.complex

        def total(lengths):
            return ehr(PreMetric.from_lengths(cx, dict(zip(cx.edges, lengths))))

        numeric = fd_jacobian(total, x)
        analytic = regge_gradient(PreMetric.from_lengths(cx, dict(zip(cx.edges, x))))

        assert np.allclose(analytic, numeric, atol=1e-7)

    def test_schlafli_on_random_tetrahedra(self, random_tetrahedron):
        """Should have sum l_ij dbeta_ij = 0 for 500 random tetrahedra and length variations."""
        rng = np.random.default_rng(17)
        upper = np.triu_indices(4, 1)
        h = 1e-6

        for _ in range(500):
            L = random_tetrahedron(rng)
            dL = np.triu(rng.standard_normal((4, 4)), 1)
            dL = dL + dL.T
            dbeta = (dihedral_angles(L + h * dL) - dihedral_angles(L - h * dL)) / (2.0 * h)

            weighted = L[upper] * dbeta[upper]
            assert abs(weighted.sum()) < 1e-7 * np.abs(weighted).sum()

    def test_volume_length_gradient(self, simplex):
        x = perturbed_lengths(simplex, seed=11)
        cx = simplex.complex

        def volume(lengths):
            return total_volume(PreMetric.from_lengths(cx, dict(zip(cx.edges, lengths))))

        numeric = fd_jacobian(volume, x)
        analytic = volume_length_gradient(PreMetric.from_lengths(cx, dict(zip(cx.edges, x))))

        assert np.allclose(analytic, numeric, atol=1e-9)

    def test_volume_vertex_gradient(self, simplex_packing):
        """Should have d(volume)/df_i equal to the vertex volume V_i."""
        f = np.log([0.5, 0.45, 0.55, 0.5, 0.6])
        numeric = fd_jacobian(lambda x: total_volume(simplex_packing.apply(x)), f)

        assert np.allclose(vertex_volumes(simplex_packing.apply(f)), numeric, atol=1e-9)

    def test_volume_gradient_is_homogeneous(self, simplex):
        """Should satisfy sum l dV/dl = 3 V."""
        metric = simplex.metric()
        lengths = np.array(list(metric.lengths.values()))

        assert float(lengths @ volume_length_gradient(metric)) == pytest.approx(3.0 * total_volume(metric), rel=1e-12)


class TestResiduals:
    """Tests for Einstein and constant scalar curvature residuals."""

    def test_regular_simplex_is_einstein(self, simplex):
        einstein, csc = residuals(simplex.metric())

        assert np.max(np.abs(einstein)) < 1e-12
        assert np.max(np.abs(csc)) < 1e-12

    def test_perturbed_simplex_is_not(self, simplex_packing):
        metric = simplex_packing.apply(np.log([0.5, 0.45, 0.55, 0.5, 0.6]))
        einstein, csc = residuals(metric)

        assert np.max(np.abs(csc)) > 1e-4

    def test_csc_residuals_sum_to_zero(self, simplex_packing):
        """Should balance: sum K_i = EHR = lambda * sum V_i."""
        metric = simplex_packing.apply(np.log([0.5, 0.45, 0.55, 0.5, 0.6]))
        _, csc = residuals(metric)

        assert csc.sum() == pytest.approx(0.0, abs=1e-10)


class TestCurvatureReport:
    """Tests for curvature_report and CurvatureReport."""

    def test_surface_report(self, tetra):
        report = curvature_report(tetra.metric())

        assert report.total_curvature == pytest.approx(4.0 * math.pi)
        assert report.gauss_bonnet_defect == pytest.approx(0.0, abs=1e-12)
        assert report.ehr is None

    def test_surface_dict(self, tetra):
        data = curvature_report(tetra.metric()).to_dict()

        assert data["euler_characteristic"] == 2
        assert set(data["vertex_curvature"]) == {"1", "2", "3", "4"}
        assert "ehr" not in data

    def test_three_manifold_dict(self, simplex):
        data = curvature_report(simplex.metric()).to_dict()

        assert data["ehr"] == pytest.approx(10.0 * SIMPLEX_DEFICIT)
        assert data["edge_curvature"]["1-2"] == pytest.approx(SIMPLEX_DEFICIT)
        assert len(data["csc_residuals"]) == 5

    def test_csv_rows(self, simplex):
        rows = curvature_report(simplex.metric()).csv_rows()

        assert all(len(row) == len(CSV_COLUMNS) for row in rows)
        assert [row[0] for row in rows].count("vertex") == 5
        assert [row[0] for row in rows].count("edge") == 10
        assert rows[-1][1] == "lambda"

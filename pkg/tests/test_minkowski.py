import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import (
    RECOVERED_VERTEX_TABLE,
    TETRA_FACE_AREA,
    TETRA_OFFSET,
    TETRA_TRUE_NORMALS,
)
from polyscat.geometry import Unbounded, halfspace_intersection
from polyscat.minkowski import SpanDeficient, balance_areas, facet_areas, fit_offsets

CUBE_NORMALS = np.vstack([np.eye(3), -np.eye(3)])


class TestBalance:
    def test_exact_areas_unchanged(self, tetra):
        out = balance_areas(tetra.normals, tetra.areas)
        assert_allclose(out, tetra.areas, atol=1e-14)

    def test_equal_perturbed_areas_unchanged(self, tetra):
        out = balance_areas(tetra.normals, np.full(4, 0.47))
        assert_allclose(out, 0.47, atol=1e-14)

    def test_projection_balances(self, prism):
        # balance holds to 1e-12 whenever the positivity clamp stays inactive
        rng = np.random.default_rng(13)
        areas = prism.areas * (1.0 + 0.1 * rng.standard_normal(prism.num_faces))
        out = balance_areas(prism.normals, areas)
        assert out.min() > 1e-6  # no clamping triggered
        assert np.linalg.norm(out @ prism.normals) < 1e-12

    def test_clamp_path(self):
        # (e1, -e1, e2): the lone e2 area cannot balance and clamps to floor
        normals = np.array([[1.0, 0, 0], [-1.0, 0, 0], [0.0, 1.0, 0]])
        out = balance_areas(normals, [1.0, 0.8, 0.5])
        assert_allclose(out[:2], 0.9, atol=1e-12)
        assert 0.0 < out[2] <= 1e-9


class TestFacetAreas:
    def test_tetrahedron_at_inradius(self):
        areas = facet_areas(TETRA_TRUE_NORMALS, np.full(4, TETRA_OFFSET))
        assert_allclose(areas, TETRA_FACE_AREA, rtol=1e-7)

    def test_quadratic_scaling(self):
        a1 = facet_areas(TETRA_TRUE_NORMALS, np.full(4, TETRA_OFFSET))
        a2 = facet_areas(TETRA_TRUE_NORMALS, np.full(4, 2.0 * TETRA_OFFSET))
        assert_allclose(a2, 4.0 * a1, rtol=1e-9)

    def test_far_plane_stays_active(self):
        # a simplex facet cannot vanish by moving its plane outward: the
        # result is a 13/4-dilated tetrahedron with (still equal) areas
        offsets = np.array([1.0, 1.0, 1.0, 10.0]) * TETRA_OFFSET
        areas = facet_areas(TETRA_TRUE_NORMALS, offsets)
        assert np.all(areas > 0)
        assert_allclose(areas, areas[0], rtol=1e-7)
        assert_allclose(areas[0], TETRA_FACE_AREA * (13.0 / 4.0) ** 2, rtol=1e-7)

    def test_vanished_facet_reports_zero(self, tetra):
        normals = np.vstack([tetra.normals, [0.0, 0.0, 1.0]])
        offsets = np.append(tetra.offsets, 10.0)
        areas = facet_areas(normals, offsets)
        assert areas[4] == 0.0
        assert_allclose(areas[:4], TETRA_FACE_AREA, rtol=1e-7)

    def test_unbounded(self):
        normals = np.array(
            [[0, 0, 1.0], [0, 0, -1.0], [0, 1.0, 0], [0, -1.0, 0]]
        )
        with pytest.raises(Unbounded):
            facet_areas(normals, np.ones(4))


class TestFitOffsets:
    def test_exact_tetrahedron(self, tetra):
        fit = fit_offsets(tetra.normals, tetra.areas)
        assert_allclose(fit.offsets, TETRA_OFFSET, atol=1e-7)
        assert fit.residual <= 1e-10
        assert fit.converged

    def test_exact_cube(self):
        fit = fit_offsets(CUBE_NORMALS, np.ones(6))
        assert_allclose(fit.offsets, 0.5, atol=1e-7)
        assert fit.residual <= 1e-10

    def test_exact_prism(self, prism):
        fit = fit_offsets(prism.normals, prism.areas)
        assert_allclose(fit.offsets, prism.offsets, atol=1e-6)
        result = halfspace_intersection(prism.normals, fit.offsets)
        for v in prism.vertices:
            assert np.linalg.norm(result.polyhedron.vertices - v, axis=1).min() < 1e-6

    def test_paper_noisy_data(self):
        normals = np.array(
            [[-0.85, 0, 0.53], [0.85, 0, 0.53], [0, -0.85, -0.53], [0, 0.85, -0.53]]
        )
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        fit = fit_offsets(normals, np.full(4, 0.47))
        assert np.abs(fit.offsets - 0.21).max() <= 0.01
        rebuilt = halfspace_intersection(normals, fit.offsets).polyhedron
        for v in RECOVERED_VERTEX_TABLE:
            assert np.linalg.norm(rebuilt.vertices - v, axis=1).min() <= 0.06

    def test_history_non_increasing(self, prism):
        fit = fit_offsets(prism.normals, prism.areas * 1.3)
        assert all(a >= b for a, b in zip(fit.history, fit.history[1:]))

    def test_span_deficient(self):
        normals = np.array([[1.0, 0, 0], [-1.0, 0, 0], [0, 1.0, 0], [0, -1.0, 0]])
        with pytest.raises(SpanDeficient):
            fit_offsets(normals, np.ones(4))

    def test_self_consistency_random(self):
        rng = np.random.default_rng(21)
        from scipy.spatial import ConvexHull

        from polyscat.geometry import build_polyhedron

        pts = rng.normal(size=(10, 3))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        hull = ConvexHull(pts)
        pts = pts - pts[hull.vertices].mean(axis=0)
        tris = hull.simplices.copy()
        for t in tris:
            if np.cross(pts[t[1]] - pts[t[0]], pts[t[2]] - pts[t[0]]) @ pts[t[0]] < 0:
                t[1], t[2] = t[2], t[1]
        used = sorted(set(hull.vertices))
        remap = {o: n for n, o in enumerate(used)}
        poly = build_polyhedron(pts[used], [tuple(remap[i] for i in t) for t in tris])
        fit = fit_offsets(poly.normals, poly.areas, alpha0=poly.offsets * 1.2)
        areas = facet_areas(poly.normals, fit.offsets)
        assert_allclose(areas, poly.areas, atol=1e-6)

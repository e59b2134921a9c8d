"""Tests for the polygonal energy oracle.

The oracle is deliberately naive, so its checks lean on geometry (exact
invariances, closed-form circle measures) and on cross-validation against
the Fourier-space coefficients computed by the stability module.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circlegas.contour import (
    EnergyBreakdown,
    FourierPerturbation,
    NonPositiveRadius,
    PolyContour,
    build_contour,
    energy,
    taylor_residual,
)
from circlegas.stability import PriorParams, e0

BETA = 1.388233207453785
REF = PriorParams(1.0, 0.8, BETA, 1.0, 1.0, 1.0)


def circle(r: float, n: int) -> PolyContour:
    return build_contour(FourierPerturbation(r), n)


class TestPolyContour:
    def test_too_few_vertices(self):
        pts = np.column_stack((np.cos(np.linspace(0, 6, 8)),
                               np.sin(np.linspace(0, 6, 8))))
        with pytest.raises(ValueError):
            PolyContour(pts)

    def test_repeated_vertex(self):
        t = np.linspace(-np.pi, np.pi, 32, endpoint=False)
        pts = np.column_stack((np.cos(t), np.sin(t)))
        pts[5] = pts[4]
        with pytest.raises(ValueError):
            PolyContour(pts)

    def test_wrong_shape(self):
        with pytest.raises(ValueError):
            PolyContour(np.zeros((20, 3)))


class TestFourierPerturbation:
    def test_nonpositive_radius(self):
        with pytest.raises(ValueError):
            FourierPerturbation(0.0)

    def test_negative_mode_rejected(self):
        with pytest.raises(ValueError):
            FourierPerturbation(1.0, {-1: 0.1})

    def test_complex_a0_rejected(self):
        with pytest.raises(ValueError):
            FourierPerturbation(1.0, {0: 0.1j})

    def test_radius_at(self):
        p = FourierPerturbation(2.0, {0: 0.5, 2: 0.25j})
        t = np.array([0.0, np.pi / 4])
        # mode 2 with amplitude i contributes -2 sin(2t)
        expected = 2.0 + 0.5 + 2.0 * (0.25j * np.exp(2j * t)).real
        np.testing.assert_allclose(p.radius_at(t), expected)

    def test_scaled(self):
        p = FourierPerturbation(2.0, {0: 0.5, 3: 1.0 + 1.0j}).scaled(0.1)
        assert p.r0 == 2.0
        assert p.coeffs[0] == pytest.approx(0.05)
        assert p.coeffs[3] == pytest.approx(0.1 + 0.1j)


class TestBuildContour:
    def test_exact_circle(self):
        c = circle(2.0, 64)
        assert len(c.vertices) == 64
        np.testing.assert_allclose(np.hypot(*c.vertices.T), 2.0)

    def test_radius_collapse_raises(self):
        with pytest.raises(NonPositiveRadius):
            build_contour(FourierPerturbation(1.0, {0: -1.0}), 64)

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            build_contour(FourierPerturbation(1.0), 8)


class TestEnergy:
    def test_circle_measures(self):
        br = energy(circle(3.0, 1024), REF)
        assert isinstance(br, EnergyBreakdown)
        assert br.length == pytest.approx(2.0 * np.pi * 3.0, rel=1e-5)
        assert br.area == pytest.approx(np.pi * 9.0, rel=1e-5)

    def test_zero_beta_total_identity(self):
        params = PriorParams(1.3, 0.7, 0.0, 1.0, 1.0, 1.0)
        br = energy(circle(1.2, 256), params)
        assert br.quadratic == 0.0
        assert br.total == pytest.approx(1.3 * br.length + 0.7 * br.area, rel=1e-12)

    def test_plateau_quadratic_vanishes(self):
        # every vertex pair of a small circle sits below d - eps where
        # the interaction is identically 1; closed-polygon tangents then
        # telescope the double sum to |sum tau|^2 = 0
        params = PriorParams(1.0, 1.0, 2.0, 8.0, 1.0, 8.0)
        br = energy(circle(1.0, 256), params)
        assert abs(br.quadratic) < 1e-8

    def test_matches_radial_energy_curve(self):
        # independent routes: polygon sums versus Bessel-free Fourier
        # integrals; agreement pins both
        for r in (0.7, 1.0, 1.5):
            oracle = energy(circle(r, 4096), REF).total
            assert oracle == pytest.approx(e0(r, REF), rel=1e-5)

    def test_refinement_converges_to_radial_curve(self):
        errs = [abs(energy(circle(1.5, n), REF).total - e0(1.5, REF))
                for n in (256, 1024, 4096)]
        assert errs[0] > errs[1] > errs[2]

    @settings(max_examples=10, deadline=None)
    @given(angle=st.floats(-np.pi, np.pi), dx=st.floats(-5, 5), dy=st.floats(-5, 5))
    def test_euclidean_invariance(self, angle, dx, dy):
        base = build_contour(FourierPerturbation(1.0, {2: 0.1, 3: 0.05j}), 256)
        rot = np.array([[np.cos(angle), -np.sin(angle)],
                        [np.sin(angle), np.cos(angle)]])
        moved = PolyContour(base.vertices @ rot.T + np.array([dx, dy]))
        e_base = energy(base, REF)
        e_moved = energy(moved, REF)
        assert e_moved.total == pytest.approx(e_base.total, rel=1e-9, abs=1e-9)
        assert e_moved.length == pytest.approx(e_base.length, rel=1e-9)
        assert e_moved.area == pytest.approx(e_base.area, rel=1e-9, abs=1e-9)


class TestTaylor:
    def test_residual_shrinks_cubically(self):
        p = FourierPerturbation(1.0, {0: 0.3, 2: 0.2 + 0.1j, 3: -0.15 + 0.2j})
        r_coarse = abs(taylor_residual(p, 0.08, REF, 1024))
        r_fine = abs(taylor_residual(p, 0.04, REF, 1024))
        slope = math.log(r_coarse / r_fine) / math.log(2.0)
        assert slope > 2.5

    def test_pure_scaling_mode_reproduces_slope(self):
        # for a radius-only perturbation the model is the 1-D Taylor
        # polynomial of the radial curve; residual at the minimum is tiny
        p = FourierPerturbation(1.0, {0: 0.5})
        res = taylor_residual(p, 0.02, REF, 2048)
        assert abs(res) < 1e-4

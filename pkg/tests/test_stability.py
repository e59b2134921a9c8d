"""Stability coefficients, the beta balance solve, fold scan, validation.

Frozen expected values were produced by the same independent dense-trapezoid
reference used in test_interaction (the coefficients are closed-form
combinations of those integrals, assembled by hand in the reference script).
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circlegas import (
    DegenerateG10,
    PriorParams,
    beta_for_minimum,
    e0,
    e1,
    e2,
    extrema_scan,
    validate,
)
from circlegas.stability import write_curve_csv

BETA = 1.388233207453785  # balance solution for the reference parameter set
REF = PriorParams(1.0, 0.8, BETA, 1.0, 1.0, 1.0)


class TestBetaSolve:
    def test_frozen_value(self):
        assert beta_for_minimum(1.0, 0.8, 1.0, 1.0, 1.0) == pytest.approx(
            BETA, abs=1e-9
        )

    def test_balance_zeroes_e1(self):
        assert e1(1.0, REF) == pytest.approx(0.0, abs=1e-7)

    def test_linear_in_weights(self):
        b1 = beta_for_minimum(1.0, 0.8, 1.0, 1.0, 1.0)
        b3 = beta_for_minimum(3.0, 2.4, 1.0, 1.0, 1.0)
        assert b3 == pytest.approx(3.0 * b1, rel=1e-10)

    def test_degenerate_when_circle_below_interaction_range(self):
        # 2 r0 < d - epsilon: every pair sits on the plateau and G10 vanishes
        with pytest.raises(DegenerateG10):
            beta_for_minimum(1.0, 1.0, 3.0, 8.0, 1.0)


class TestCoefficients:
    def test_e0_frozen(self):
        assert e0(1.0, REF) == pytest.approx(1.841695339876780, abs=1e-8)

    def test_e0_minimum_near_target_radius(self):
        rs = np.linspace(0.7, 1.3, 121)
        vals = [e0(float(r), REF) for r in rs]
        assert abs(rs[int(np.argmin(vals))] - 1.0) < 0.01

    def test_e1_is_derivative_of_e0(self):
        h = 1e-5
        for r in (0.6, 1.0, 1.7):
            fd = (e0(r + h, REF) - e0(r - h, REF)) / (2 * h)
            assert e1(r, REF) == pytest.approx(fd, rel=1e-4, abs=1e-6)

    @pytest.mark.parametrize(
        "m,expected",
        [
            (0, 16.092733067520),
            (2, 30.826295786534),
            (3, 101.304119464883),
            (5, 195.081493641460),
        ],
    )
    def test_e2_frozen(self, m, expected):
        assert e2(float(m), 1.0, REF) == pytest.approx(expected, abs=1e-6)

    def test_e2_translation_zero_mode(self):
        assert e2(1.0, 1.0, REF) == pytest.approx(0.0, abs=1e-6)

    def test_e2_spectrum_nonnegative(self):
        for m in range(0, 31):
            assert e2(float(m), 1.0, REF) >= -1e-8, f"mode {m}"

    def test_e2_without_interaction_is_closed_form(self):
        p = PriorParams(1.3, 0.7, 0.0, 1.0, 1.0, 1.0)
        for k in (0.0, 1.0, 4.0):
            expected = 2 * np.pi * 1.3 * 1.0 * k**2 + 2 * np.pi * 0.7
            assert e2(k, 1.0, p) == pytest.approx(expected, rel=1e-10)

    @given(st.floats(0.1, 10.0))
    @settings(max_examples=20, deadline=None)
    def test_scale_covariance(self, c):
        scaled = PriorParams(c * 1.0, c * 0.8, c * BETA, 1.0, 1.0, 1.0)
        assert e0(1.2, scaled) == pytest.approx(c * e0(1.2, REF), rel=1e-9)
        assert e1(1.2, scaled) == pytest.approx(c * e1(1.2, REF), rel=1e-9, abs=1e-9)
        assert e2(2.0, 1.0, scaled) == pytest.approx(
            c * e2(2.0, 1.0, REF), rel=1e-9
        )


class TestFold:
    def test_extrema_counts_across_threshold(self):
        scan = extrema_scan(1.0, 0.8, 1.0, 1.0, [0.5, 0.9, 1.1, BETA, 2.0])
        counts = {beta: len(found) for beta, found in scan}
        assert counts[0.5] == 0
        assert counts[0.9] == 0
        assert counts[1.1] == 2
        assert counts[BETA] == 2
        assert counts[2.0] == 2

    def test_branches_classified_min_and_max(self):
        (_, found), = extrema_scan(1.0, 0.8, 1.0, 1.0, [BETA])
        kinds = sorted(kind for _, kind in found)
        assert kinds == ["max", "min"]
        r_max = next(r for r, kind in found if kind == "max")
        r_min = next(r for r, kind in found if kind == "min")
        assert r_max < r_min
        assert r_min == pytest.approx(1.0, abs=1e-3)

    def test_min_branch_radius_nondecreasing_in_beta(self):
        betas = [1.05, 1.2, BETA, 1.8, 2.5]
        radii = []
        for beta, found in extrema_scan(1.0, 0.8, 1.0, 1.0, betas):
            mins = [r for r, kind in found if kind == "min"]
            assert len(mins) == 1
            radii.append(mins[0])
        assert all(b >= a - 1e-6 for a, b in zip(radii, radii[1:]))


class TestValidate:
    def test_reference_set_is_valid(self):
        report = validate(REF, m_max=30)
        assert report.valid
        assert report.reason == "stable"
        assert report.beta_solved == BETA
        assert len(report.e2_curve) == 31

    def test_unbalanced_beta_fails_with_reason(self):
        report = validate(
            PriorParams(1.0, 0.8, 0.5, 1.0, 1.0, 1.0), m_max=10
        )
        assert not report.valid
        assert "no extremum" in report.reason

    def test_nonpositive_lambda_fails(self):
        report = validate(PriorParams(0.0, 0.8, BETA, 1.0, 1.0, 1.0), m_max=10)
        assert not report.valid
        assert "lambda" in report.reason

    def test_beta_on_maximum_branch_fails(self):
        # balance the *maximum* branch radius instead of the minimum one
        (_, found), = extrema_scan(1.0, 0.8, 1.0, 1.0, [BETA])
        r_max = next(r for r, kind in found if kind == "max")
        beta_at_max = beta_for_minimum(1.0, 0.8, r_max, 1.0, 1.0)
        report = validate(
            PriorParams(1.0, 0.8, beta_at_max, 1.0, 1.0, r_max), m_max=10
        )
        assert not report.valid
        assert "minimum branch" in report.reason

    def test_report_curves_sampled(self):
        report = validate(REF, m_max=5)
        assert len(report.e0_curve) > 100
        rs = [r for r, _ in report.e0_curve]
        assert rs == sorted(rs)


class TestCsv:
    def test_write_curve_roundtrip(self, tmp_path):
        path = tmp_path / "curve.csv"
        rows = [(0.5, 1.25), (1.0, -2.0), (1.5, 3.5e-7)]
        write_curve_csv(path, "r0,e0", rows)
        lines = path.read_text().splitlines()
        assert lines[0] == "r0,e0"
        parsed = [tuple(float(v) for v in line.split(",")) for line in lines[1:]]
        for (x0, y0), (x1, y1) in zip(rows, parsed):
            assert x0 == pytest.approx(x1, rel=1e-12)
            assert y0 == pytest.approx(y1, rel=1e-12)

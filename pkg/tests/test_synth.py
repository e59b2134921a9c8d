"""Tests for scene generation, noise injection, and detection scoring."""

import numpy as np
import pytest
from scipy import ndimage

from circlegas.synth import (
    ConstantImage,
    PlacementFailed,
    SceneTruth,
    add_noise,
    gen_circles,
    gen_dumbbell,
    rescale01,
    score,
)


def targets_only_mask(truth: SceneTruth, r_target: float = 8.0) -> np.ndarray:
    mask = np.zeros(truth.size, bool)
    for i, (_, r) in enumerate(truth.circles):
        if abs(r - r_target) < 1e-6:
            mask |= truth.disk(i)
    return mask


class TestGenCircles:
    def test_deterministic(self):
        img1, truth1 = gen_circles(5)
        img2, truth2 = gen_circles(5)
        np.testing.assert_array_equal(img1.values, img2.values)
        assert truth1.circles == truth2.circles

    def test_population_and_levels(self):
        img, truth = gen_circles(0)
        radii = sorted(r for _, r in truth.circles)
        assert radii[:10] == [3.5] * 10
        assert radii[10:] == [8.0] * 10
        assert set(np.unique(img.values)) == {0.1, 0.9}

    @pytest.mark.parametrize("seed", range(25))
    def test_clearance_invariant(self, seed):
        _, truth = gen_circles(seed)
        c = truth.circles
        for i in range(len(c)):
            for j in range(i + 1, len(c)):
                (x1, y1), r1 = c[i]
                (x2, y2), r2 = c[j]
                assert np.hypot(x1 - x2, y1 - y2) > r1 + r2 + 2.0

    def test_circles_inside_frame(self):
        _, truth = gen_circles(7)
        h, w = truth.size
        for (cx, cy), r in truth.circles:
            assert r + 1.0 <= cx <= w - r - 1.0
            assert r + 1.0 <= cy <= h - r - 1.0

    def test_rasterized_disk_area(self):
        truth = SceneTruth([((64.0, 64.0), 8.0)], (128, 128), 0.9, 0.1)
        area = int(truth.rasterize().sum())
        assert area == pytest.approx(np.pi * 64.0, rel=0.05)

    def test_impossible_packing_fails(self):
        with pytest.raises(PlacementFailed):
            gen_circles(0, size=(48, 48))


class TestAddNoise:
    def test_snr_level(self):
        img, _ = gen_circles(3)
        noisy = add_noise(img, 10.0, 77)
        noise = noisy.values - img.values
        measured = 10.0 * np.log10(img.values.var() / noise.var())
        assert measured == pytest.approx(10.0, abs=0.2)

    def test_zero_db_noise_power(self):
        img, _ = gen_circles(3)
        noise = add_noise(img, 0.0, 77).values - img.values
        assert noise.var() == pytest.approx(img.values.var(), rel=0.02)

    def test_high_snr_is_nearly_clean(self):
        img, _ = gen_circles(3)
        noisy = add_noise(img, 200.0, 77)
        assert np.abs(noisy.values - img.values).max() < 1e-4

    def test_deterministic_per_seed(self):
        img, _ = gen_circles(3)
        a = add_noise(img, 5.0, 123).values
        b = add_noise(img, 5.0, 123).values
        c = add_noise(img, 5.0, 124).values
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_constant_image_rejected(self):
        with pytest.raises(ConstantImage):
            add_noise(np.full((16, 16), 0.5), 10.0, 0)


class TestRescale01:
    def test_range(self):
        rng = np.random.default_rng(9)
        out = rescale01(rng.normal(3.0, 2.0, (32, 32)))
        assert out.values.min() == 0.0
        assert out.values.max() == 1.0

    def test_affine(self):
        rng = np.random.default_rng(9)
        values = rng.normal(0.0, 1.0, (32, 32))
        a = rescale01(values).values
        b = rescale01(5.0 * values + 3.0).values
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_constant_image_rejected(self):
        with pytest.raises(ConstantImage):
            rescale01(np.full((16, 16), 2.0))


class TestGenDumbbell:
    def test_default_levels(self):
        scenes = gen_dumbbell()
        assert len(scenes) == 5
        levels = [sorted(set(np.unique(img.values)) - {0.0, 1.0})[0] * 255.0
                  for img, _ in scenes]
        np.testing.assert_allclose(levels, [48, 68, 88, 108, 128])

    def test_polarity_and_truth(self):
        img, truth = gen_dumbbell([128])[0]
        assert truth.fg == 0.0 and truth.bg == 1.0
        assert len(truth.circles) == 2
        for (cx, cy), r in truth.circles:
            assert r == 8.0
            assert img.values[int(cy), int(cx)] == 0.0

    def test_bar_connects_bells(self):
        img, _ = gen_dumbbell([128])[0]
        dark = img.values < 0.9
        _, ncomp = ndimage.label(dark)
        assert ncomp == 1

    def test_without_bar_bells_are_separate(self):
        img, _ = gen_dumbbell([255])[0]
        dark = img.values < 0.9
        _, ncomp = ndimage.label(dark)
        assert ncomp == 2


class TestScore:
    def test_perfect_detection(self):
        _, truth = gen_circles(1)
        rep = score(targets_only_mask(truth), truth, 8.0)
        assert (rep.cd_percent, rep.fp_percent, rep.fn_percent,
                rep.joined_percent) == (100.0, 0.0, 0.0, 0.0)

    def test_small_circle_hits_are_false_positives(self):
        _, truth = gen_circles(1)
        rep = score(truth.rasterize(), truth, 8.0)
        assert rep.cd_percent == 100.0
        assert rep.fp_percent == 100.0  # ten small hits over ten targets

    def test_missing_target_is_false_negative(self):
        _, truth = gen_circles(1)
        mask = targets_only_mask(truth)
        drop = next(i for i, (_, r) in enumerate(truth.circles)
                    if abs(r - 8.0) < 1e-6)
        mask &= ~truth.disk(drop)
        rep = score(mask, truth, 8.0)
        assert rep.cd_percent == 90.0
        assert rep.fn_percent == 10.0
        assert rep.fp_percent == 0.0

    def test_bridged_targets_are_joined(self):
        truth = SceneTruth([((40.0, 64.0), 8.0), ((88.0, 64.0), 8.0)],
                           (128, 128), 0.9, 0.1)
        mask = truth.rasterize()
        mask[62:66, 40:89] = True  # bridge the two disks
        rep = score(mask, truth, 8.0)
        assert rep.joined_percent == 100.0
        assert rep.cd_percent == 0.0

    def test_small_shift_keeps_detection(self):
        truth = SceneTruth([((64.0, 64.0), 8.0)], (128, 128), 0.9, 0.1)
        shifted = SceneTruth([((67.0, 64.0), 8.0)], (128, 128), 0.9, 0.1)
        rep = score(shifted.rasterize(), truth, 8.0)
        assert rep.cd_percent == 100.0

    def test_large_shift_is_fp_plus_fn(self):
        truth = SceneTruth([((64.0, 64.0), 8.0)], (128, 128), 0.9, 0.1)
        shifted = SceneTruth([((84.0, 64.0), 8.0)], (128, 128), 0.9, 0.1)
        rep = score(shifted.rasterize(), truth, 8.0)
        assert rep.fp_percent == 100.0
        assert rep.fn_percent == 100.0
        assert rep.cd_percent == 0.0

    def test_empty_mask_is_all_misses(self):
        _, truth = gen_circles(1)
        rep = score(np.zeros(truth.size, bool), truth, 8.0)
        assert rep.fn_percent == 100.0
        assert rep.cd_percent == 0.0
        assert rep.fp_percent == 0.0

    def test_shape_mismatch(self):
        _, truth = gen_circles(1)
        with pytest.raises(ValueError):
            score(np.zeros((16, 16), bool), truth, 8.0)

    def test_unknown_target_radius(self):
        _, truth = gen_circles(1)
        with pytest.raises(ValueError):
            score(np.zeros(truth.size, bool), truth, 5.0)

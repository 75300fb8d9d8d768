import numpy as np
import pytest

from camforge.directive import parse_directive
from camforge.calibration import calibrate
from camforge.errors import (
    DimensionMismatchError,
    RangeError,
    SpaceMismatchError,
    TooSmallError,
)
from camforge.image import LINEAR, SRGB, ImageBuffer, srgb_decode, srgb_encode
from camforge.transforms import (
    BokehPair,
    apply_bokeh,
    apply_cct,
    apply_chain,
    apply_contrast,
    apply_contrast_slope,
    apply_exposure,
    apply_saturation,
    apply_saturation_factor,
    apply_zoom,
    cct_gains,
)


def linear(data):
    return ImageBuffer(np.asarray(data, dtype=np.float64), LINEAR)


def encoded(data):
    return ImageBuffer(np.asarray(data, dtype=np.float64), SRGB)


class TestExposure:
    def test_zero_ev_bit_identical(self, noise_img):
        lin = srgb_decode(noise_img)
        out = apply_exposure(lin, 0.0)
        assert np.array_equal(out.data, lin.data)

    def test_doubles_at_plus_one(self):
        out = apply_exposure(linear(np.full((4, 4, 3), 0.18)), 1.0)
        assert np.all(out.data == 0.36)

    def test_overdrive_clips_at_encode(self):
        out = apply_exposure(linear(np.full((2, 2, 3), 0.6)), 1.0)
        assert np.all(out.data == 1.2)
        assert np.all(srgb_encode(out).data == 1.0)

    def test_requires_linear(self, noise_img):
        with pytest.raises(SpaceMismatchError):
            apply_exposure(noise_img, 1.0)

    def test_monotone_mean_luminance(self, photo_img):
        lin = srgb_decode(photo_img)
        means = [apply_exposure(lin, ev).data.mean() for ev in (-2, -1, 0, 1, 2)]
        assert all(a < b for a, b in zip(means, means[1:]))


class TestCct:
    def test_reference_gains_exact(self):
        assert cct_gains(6500.0) == (1.0, 1.0, 1.0)

    def test_warm_shift_signs(self):
        gr, gg, gb = cct_gains(3200.0)
        assert gr > 1.0 and gg == 1.0 and gb < 1.0

    def test_cool_shift_signs(self):
        gr, _, gb = cct_gains(10000.0)
        assert gb > gr

    def test_reference_bit_identical(self):
        img = linear(np.random.default_rng(0).random((8, 8, 3)))
        out = apply_cct(img, 6500.0)
        assert np.array_equal(out.data, img.data)

    def test_gray_goes_warm(self):
        out = apply_cct(linear(np.full((4, 4, 3), 0.5)), 3200.0)
        assert out.data[..., 0].mean() > out.data[..., 2].mean()

    def test_black_stays_black(self):
        out = apply_cct(linear(np.zeros((4, 4, 3))), 2500.0)
        assert np.all(out.data == 0.0)

    def test_out_of_range(self):
        with pytest.raises(RangeError):
            cct_gains(1500.0)

    def test_blue_red_ratio_monotone(self):
        gray = linear(np.full((4, 4, 3), 0.5))
        ratios = []
        for kelvin in (2500, 4000, 6500, 8500, 10000):
            out = apply_cct(gray, kelvin)
            ratios.append(out.data[..., 2].mean() / out.data[..., 0].mean())
        assert all(a < b for a, b in zip(ratios, ratios[1:]))


class TestContrast:
    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_pivot_fixed(self, n):
        out = apply_contrast(encoded(np.full((2, 2, 3), 0.5)), n)
        assert np.all(out.data == 0.5)

    def test_unit_slope_identity(self, noise_img):
        out = apply_contrast_slope(noise_img, 1.0)
        assert np.array_equal(out.data, noise_img.data)

    def test_level_four_value(self):
        out = apply_contrast(encoded(np.full((1, 1, 3), 0.7)), 4)
        assert out.data[0, 0, 0] == pytest.approx(0.78, abs=1e-12)

    def test_clamps(self):
        out = apply_contrast(encoded(np.full((1, 1, 3), 0.95)), 4)
        assert out.data[0, 0, 0] == pytest.approx(min(1.0, (0.95 - 0.5) * 1.4 + 0.5))


class TestSaturation:
    def test_unit_factor_identity(self, noise_img):
        out = apply_saturation_factor(noise_img, 1.0)
        assert np.array_equal(out.data, noise_img.data)

    def test_zero_factor_gives_luma(self, noise_img):
        out = apply_saturation_factor(noise_img, 0.0)
        luma = noise_img.data @ np.array([0.2126, 0.7152, 0.0722])
        assert np.max(np.abs(out.data - luma[..., None])) < 1e-12

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_gray_unchanged(self, n):
        out = apply_saturation(encoded(np.full((3, 3, 3), 0.42)), n)
        assert np.allclose(out.data, 0.42, atol=1e-15)


class TestZoom:
    def test_identity_bit_exact(self, noise_img):
        out = apply_zoom(noise_img, 1.0)
        assert np.array_equal(out.data, noise_img.data)

    def test_output_dims_preserved(self, photo_img):
        out = apply_zoom(photo_img, 2.0)
        assert (out.height, out.width) == (photo_img.height, photo_img.width)

    def test_crop_geometry_1024_like(self):
        # 128 at factor 2 -> 64 crop, resampled back to 128
        img = encoded(np.random.default_rng(1).random((128, 128, 3)))
        out = apply_zoom(img, 2.0)
        assert out.data.shape == (128, 128, 3)

    def test_uniform_stays_uniform(self):
        out = apply_zoom(encoded(np.full((32, 32, 3), 0.37)), 3.0)
        assert np.max(np.abs(out.data - 0.37)) < 1e-9

    def test_too_small(self):
        with pytest.raises(TooSmallError):
            apply_zoom(encoded(np.zeros((16, 16, 3))), 4.0)

    def test_range(self):
        with pytest.raises(RangeError):
            apply_zoom(encoded(np.zeros((32, 32, 3))), 5.0)

    def test_center_crop_content(self):
        # bright center square survives a 2x zoom; borders vanish
        data = np.zeros((64, 64, 3))
        data[24:40, 24:40] = 1.0
        out = apply_zoom(encoded(data), 2.0)
        assert out.data[32, 32, 0] > 0.9
        assert abs(out.data[2, 2, 0]) < 0.1


class TestBokeh:
    def make_pair(self, size=48):
        rng = np.random.default_rng(5)
        base = encoded(rng.random((size, size, 3)))
        mask = np.zeros((size, size))
        mask[16:32, 16:32] = 1.0
        return BokehPair(base, mask)

    def test_level_zero_identity(self):
        pair = self.make_pair()
        out = apply_bokeh(pair, 0)
        assert np.array_equal(out.data, pair.base.data)

    def test_full_mask_identity(self):
        rng = np.random.default_rng(6)
        base = encoded(rng.random((32, 32, 3)))
        pair = BokehPair(base, np.ones((32, 32)))
        for level in range(5):
            out = apply_bokeh(pair, level)
            assert np.array_equal(out.data, base.data)

    def test_uniform_background_unchanged(self):
        base = encoded(np.full((32, 32, 3), 0.6))
        mask = np.zeros((32, 32))
        out = apply_bokeh(BokehPair(base, mask), 3)
        assert np.max(np.abs(out.data - 0.6)) < 1e-12

    def test_background_actually_blurs(self):
        pair = self.make_pair()
        out = apply_bokeh(pair, 4)
        bg_before = pair.base.data[:8, :8]
        bg_after = out.data[:8, :8]
        assert bg_after.std() < bg_before.std()

    def test_foreground_sharp(self):
        pair = self.make_pair()
        out = apply_bokeh(pair, 4)
        assert np.array_equal(out.data[20:28, 20:28], pair.base.data[20:28, 20:28])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            BokehPair(encoded(np.zeros((8, 8, 3))), np.zeros((4, 4)))

    def test_level_range(self):
        with pytest.raises(RangeError):
            apply_bokeh(self.make_pair(), 5)


class TestChain:
    def test_all_neutral_bit_identical(self, photo_img, registry):
        d = parse_directive("[CONTROL: style=CineStill]")  # placeholder parse check
        empty = calibrate(parse_directive("[CONTROL: exposure=+0EV]"), registry)
        # a truly empty source: vector with no mask bits
        from camforge.calibration import CameraVector

        out = apply_chain(photo_img, CameraVector(), registry)
        assert np.array_equal(out.data, photo_img.data)
        assert out.data is not photo_img.data

    def test_exposure_only_equals_manual_composition(self, photo_img, registry):
        d = parse_directive("[CONTROL: exposure=+1EV]")
        chained = apply_chain(photo_img, d, registry)
        manual = srgb_encode(apply_exposure(srgb_decode(photo_img), 1.0))
        assert np.array_equal(chained.data, manual.data)

    def test_ev_additivity_within_1e5(self, registry):
        # mid-gray has headroom for +2 EV in linear light
        img = encoded(np.full((16, 16, 3), 0.35))
        one = parse_directive("[CONTROL: exposure=+1EV]")
        two = parse_directive("[CONTROL: exposure=+2EV]")
        twice = apply_chain(apply_chain(img, one, registry), one, registry)
        once = apply_chain(img, two, registry)
        assert np.max(np.abs(twice.data - once.data)) < 1e-5

    def test_vector_and_directive_agree(self, photo_img, registry):
        d = parse_directive("[CONTROL: exposure=-1EV, cct=3300K, contrast=2/4]")
        v = calibrate(d, registry)
        out_d = apply_chain(photo_img, d, registry)
        out_v = apply_chain(photo_img, v, registry)
        assert np.max(np.abs(out_d.data - out_v.data)) < 1e-9

    def test_fixed_order_composition(self, photo_img, registry):
        d = parse_directive("[CONTROL: contrast=4/4, exposure=+1EV]")
        chained = apply_chain(photo_img, d, registry)
        manual = apply_contrast(
            srgb_encode(apply_exposure(srgb_decode(photo_img), 1.0)), 4
        )
        assert np.array_equal(chained.data, manual.data)

    def test_style_through_chain(self, photo_img, registry):
        d = parse_directive("[CONTROL: style=Velvia]")
        out = apply_chain(photo_img, d, registry)
        assert out.data.shape == photo_img.data.shape
        assert np.max(np.abs(out.data - photo_img.data)) > 1e-3

    def test_bokeh_needs_mask(self, photo_img, registry):
        d = parse_directive("[CONTROL: bokeh=2/4]")
        with pytest.raises(RangeError):
            apply_chain(photo_img, d, registry)
        mask = np.ones((photo_img.height, photo_img.width))
        out = apply_chain(photo_img, d, registry, bokeh_mask=mask)
        assert out.data.shape == photo_img.data.shape

    def test_deterministic(self, photo_img, registry):
        d = parse_directive(
            "[CONTROL: exposure=+0.7EV, cct=4500K, contrast=3/4, saturation=2/4, "
            "zoom=1.5x, style=Portra]"
        )
        a = apply_chain(photo_img, d, registry)
        b = apply_chain(photo_img, d, registry)
        assert np.array_equal(a.data, b.data)

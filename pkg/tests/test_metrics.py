import numpy as np
import pytest

from camforge.errors import DimensionMismatchError, TooSmallError
from camforge.image import SRGB, ImageBuffer
from camforge.metrics import MetricReport, compare, delta_e, psnr, ssim


def uniform(value, size=32):
    return ImageBuffer(np.full((size, size, 3), value), SRGB)


class TestPsnr:
    def test_identical_capped_at_100(self, noise_img):
        assert psnr(noise_img, noise_img) == 100.0

    def test_uniform_0_vs_16(self):
        # 10*log10(255^2/16^2) = 24.0484, evaluated independently
        value = psnr(uniform(0.0), uniform(16.0 / 255.0))
        assert value == pytest.approx(24.05, abs=0.01)

    def test_uniform_0_vs_255(self):
        assert psnr(uniform(0.0), uniform(1.0)) == pytest.approx(0.0, abs=1e-9)

    def test_symmetric(self, noise_img, photo_img):
        assert psnr(noise_img, photo_img) == psnr(photo_img, noise_img)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            psnr(uniform(0.0, 16), uniform(0.0, 17))


class TestSsim:
    def test_identical_is_exactly_one(self, photo_img):
        assert ssim(photo_img, photo_img) == 1.0

    def test_uniform_extremes(self):
        # luminance term C1/(255^2+C1) = 9.999e-5; contrast/structure = 1
        value = ssim(uniform(0.0), uniform(1.0))
        assert value == pytest.approx(1.0e-4, rel=0.10)

    def test_symmetric(self, noise_img, photo_img):
        assert ssim(noise_img, photo_img) == pytest.approx(
            ssim(photo_img, noise_img), abs=1e-12
        )

    def test_too_small(self):
        with pytest.raises(TooSmallError):
            ssim(uniform(0.0, 8), uniform(0.0, 8))

    def test_matches_skimage_reference(self, photo_img, noise_img):
        skimage = pytest.importorskip("skimage.metrics")
        luma = np.array([0.2126, 0.7152, 0.0722])
        a = (photo_img.data @ luma) * 255.0
        b = (0.7 * photo_img.data + 0.3 * noise_img.data) @ luma * 255.0
        mine = ssim(
            photo_img,
            ImageBuffer(0.7 * photo_img.data + 0.3 * noise_img.data, SRGB),
        )
        reference = skimage.structural_similarity(
            a,
            b,
            win_size=11,
            gaussian_weights=True,
            sigma=1.5,
            use_sample_covariance=False,
            K1=0.01,
            K2=0.03,
            data_range=255.0,
        )
        assert mine == pytest.approx(reference, abs=1e-7)


class TestDeltaE:
    def test_identical_zero(self, photo_img):
        assert delta_e(photo_img, photo_img) == 0.0

    def test_white_vs_black_is_100(self):
        assert delta_e(uniform(1.0), uniform(0.0)) == pytest.approx(100.0, abs=0.1)

    def test_gray_pair_positive(self):
        value = delta_e(uniform(0.5), uniform(0.6))
        assert value > 0.0

    def test_matches_skimage_reference(self, photo_img, noise_img):
        color = pytest.importorskip("skimage.color")
        mine = delta_e(photo_img, noise_img)
        lab_a = color.rgb2lab(photo_img.data)
        lab_b = color.rgb2lab(noise_img.data)
        reference = float(np.mean(color.deltaE_cie76(lab_a, lab_b)))
        assert mine == pytest.approx(reference, rel=1e-4)

    def test_symmetric(self, noise_img, photo_img):
        assert delta_e(noise_img, photo_img) == pytest.approx(
            delta_e(photo_img, noise_img), abs=1e-12
        )


class TestMonotoneDegradation:
    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    def test_noise_strictly_degrades(self, photo_img, seed):
        rng = np.random.default_rng(seed)
        noise = rng.standard_normal(photo_img.data.shape)
        psnrs, ssims = [], []
        for amp in (0.0, 0.02, 0.05, 0.1, 0.2):
            noisy = ImageBuffer(np.clip(photo_img.data + amp * noise, 0, 1), SRGB)
            psnrs.append(psnr(photo_img, noisy))
            ssims.append(ssim(photo_img, noisy))
        assert all(a > b for a, b in zip(psnrs, psnrs[1:]))
        assert all(a > b for a, b in zip(ssims, ssims[1:]))


def test_report_json_with_extras():
    report = MetricReport(psnr=30.0, ssim=0.9, delta_e=2.0, extras={"lpips": 0.07})
    obj = report.to_json()
    assert obj == {"psnr": 30.0, "ssim": 0.9, "delta_e": 2.0, "lpips": 0.07}


def test_compare_bundles_all_three(photo_img, noise_img):
    report = compare(photo_img, noise_img)
    assert report.psnr < 100.0
    assert -1.0 <= report.ssim < 1.0
    assert report.delta_e > 0.0

"""Reference fidelity metrics: PSNR, SSIM, and CIE76 delta-E.

All three take encoded sRGB buffers and treat them as 8-bit-equivalent
(values scaled by 255).  PSNR is capped at 100 dB so identical images
stay finite and sortable.  The report schema accepts extra fields so
externally computed metrics (LPIPS etc.) can be merged in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .errors import DimensionMismatchError, TooSmallError
from .image import SRGB, ImageBuffer

PSNR_CAP_DB = 100.0

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_L = 255.0

_LUMA = np.array([0.2126, 0.7152, 0.0722])

# sRGB -> XYZ (D65), IEC 61966-2-1 primaries
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_D65_WHITE = np.array([0.95047, 1.0, 1.08883])


def _check_pair(a: ImageBuffer, b: ImageBuffer) -> None:
    a.require(SRGB)
    b.require(SRGB)
    if a.data.shape != b.data.shape:
        raise DimensionMismatchError(
            f"image shapes differ: {a.data.shape} vs {b.data.shape}"
        )


def psnr(a: ImageBuffer, b: ImageBuffer) -> float:
    """Peak signal-to-noise ratio in dB over all channels, capped at 100."""
    _check_pair(a, b)
    diff = (a.data - b.data) * 255.0
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * math.log10(255.0**2 / mse))


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def ssim(a: ImageBuffer, b: ImageBuffer) -> float:
    """Structural similarity on Rec. 709 luma, 11x11 Gaussian window."""
    _check_pair(a, b)
    if min(a.height, a.width) < SSIM_WINDOW:
        raise TooSmallError(f"ssim needs at least {SSIM_WINDOW}px per side")
    x = (a.data @ _LUMA) * 255.0
    y = (b.data @ _LUMA) * 255.0
    kernel = _gaussian_kernel(SSIM_WINDOW, SSIM_SIGMA)

    mu_x = fftconvolve(x, kernel, mode="valid")
    mu_y = fftconvolve(y, kernel, mode="valid")
    xx = fftconvolve(x * x, kernel, mode="valid")
    yy = fftconvolve(y * y, kernel, mode="valid")
    xy = fftconvolve(x * y, kernel, mode="valid")

    var_x = xx - mu_x * mu_x
    var_y = yy - mu_y * mu_y
    cov = xy - mu_x * mu_y

    c1 = (SSIM_K1 * SSIM_L) ** 2
    c2 = (SSIM_K2 * SSIM_L) ** 2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def _srgb_to_lab(data: np.ndarray) -> np.ndarray:
    linear = np.where(
        data <= 0.04045, data / 12.92, ((data + 0.055) / 1.055) ** 2.4
    )
    xyz = linear @ _RGB_TO_XYZ.T
    t = xyz / _D65_WHITE
    eps = (6.0 / 29.0) ** 3
    f = np.where(t > eps, np.cbrt(t), t / (3.0 * (6.0 / 29.0) ** 2) + 4.0 / 29.0)
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def delta_e(a: ImageBuffer, b: ImageBuffer) -> float:
    """Mean CIE76 color difference: Euclidean distance in CIELAB (D65)."""
    _check_pair(a, b)
    if np.array_equal(a.data, b.data):
        return 0.0
    diff = _srgb_to_lab(a.data) - _srgb_to_lab(b.data)
    return float(np.mean(np.sqrt(np.sum(diff * diff, axis=-1))))


@dataclass
class MetricReport:
    psnr: float
    ssim: float
    delta_e: float
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"psnr": self.psnr, "ssim": self.ssim, "delta_e": self.delta_e}
        out.update(self.extras)
        return out


def compare(reference: ImageBuffer, test: ImageBuffer) -> MetricReport:
    return MetricReport(
        psnr=psnr(reference, test),
        ssim=ssim(reference, test),
        delta_e=delta_e(reference, test),
    )

"""Physically-driven image transforms for the seven camera functions.

Photometric operations (exposure, color temperature) act on linear light;
appearance operations (contrast, saturation, film LUT) act on encoded
values.  The full chain applies, in fixed order:

    decode -> exposure -> cct -> zoom -> bokeh -> encode
           -> contrast -> saturation -> style

Every transform is deterministic and reentrant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import cv2
import numpy as np

from .calibration import (
    CameraVector,
    StyleRegistry,
    calibrate_ordinal,
    invert_cct,
    invert_exposure,
    invert_zoom,
    load_registry,
)
from .directive import EV, Directive, Kelvin, Level, StyleName, ZoomFactor
from .errors import DimensionMismatchError, RangeError, TooSmallError
from .image import LINEAR, SRGB, ImageBuffer, srgb_decode, srgb_encode
from .lut import Lut3D, apply_lut, read_cube

CCT_MIN_K = 2000.0
CCT_MAX_K = 10000.0
CCT_REFERENCE_K = 6500.0

CONTRAST_SLOPES = (0.60, 0.85, 1.15, 1.40)
SATURATION_FACTORS = (0.50, 0.80, 1.20, 1.50)
BOKEH_RADII = (0.0, 2.0, 4.0, 8.0, 16.0)  # levels 0..4, px at 1024
BOKEH_REFERENCE_SIZE = 1024.0

MIN_CROP_PX = 8

_LUMA = np.array([0.2126, 0.7152, 0.0722])


def apply_exposure(img: ImageBuffer, ev: float) -> ImageBuffer:
    """Scale linear irradiance by the shutter ratio 2^ev."""
    img.require(LINEAR)
    if ev == 0.0:
        return img.copy()
    return ImageBuffer(img.data * (2.0 ** ev), LINEAR)


def _blackbody_rgb(kelvin: float) -> tuple[float, float, float]:
    # piecewise polynomial-in-ln(K/100) fit to the Planckian locus
    t = kelvin / 100.0
    if t <= 66.0:
        r = 255.0
        g = 99.4708025861 * math.log(t) - 161.1195681661
    else:
        r = 329.698727446 * (t - 60.0) ** -0.1332047592
        g = 288.1221695283 * (t - 60.0) ** -0.0755148492
    if t >= 66.0:
        b = 255.0
    elif t <= 19.0:
        b = 0.0
    else:
        b = 138.5177312231 * math.log(t - 10.0) - 305.0447927307
    clamp = lambda v: min(255.0, max(0.0, v))
    return clamp(r), clamp(g), clamp(b)


def cct_gains(kelvin: float) -> tuple[float, float, float]:
    """Per-channel gains for a target color temperature.

    Normalized by green and referenced to 6500 K, so gains(6500) is
    exactly (1, 1, 1) and the green gain is always 1.
    """
    if not (CCT_MIN_K <= kelvin <= CCT_MAX_K):
        raise RangeError(f"cct {kelvin} K outside [{CCT_MIN_K:.0f}, {CCT_MAX_K:.0f}] K")
    r, g, b = _blackbody_rgb(kelvin)
    r0, g0, b0 = _blackbody_rgb(CCT_REFERENCE_K)
    return (r / g) / (r0 / g0), 1.0, (b / g) / (b0 / g0)


def apply_cct(img: ImageBuffer, kelvin: float) -> ImageBuffer:
    """Multiply linear RGB by the blackbody channel gains."""
    img.require(LINEAR)
    gains = cct_gains(kelvin)
    if gains == (1.0, 1.0, 1.0):
        return img.copy()
    return ImageBuffer(img.data * np.asarray(gains), LINEAR)


def contrast_slope(n: int, of: int = 4) -> float:
    """Slope for ordinal contrast level n of m (exact at the 4-level grid,
    piecewise-linear in the calibrated scale elsewhere)."""
    return slope_from_ordinal(calibrate_ordinal(n, of), CONTRAST_SLOPES)


def saturation_factor(n: int, of: int = 4) -> float:
    return slope_from_ordinal(calibrate_ordinal(n, of), SATURATION_FACTORS)


def slope_from_ordinal(s: float, table: tuple[float, ...]) -> float:
    """Map an ordinal scale value in [-1, 1] onto the level table."""
    position = (s + 1.0) * (len(table) - 1) / 2.0
    return float(np.interp(position, np.arange(len(table)), table))


def apply_contrast_slope(img: ImageBuffer, slope: float) -> ImageBuffer:
    img.require(SRGB)
    if slope == 1.0:
        return img.copy()
    return ImageBuffer(np.clip((img.data - 0.5) * slope + 0.5, 0.0, 1.0), SRGB)


def apply_contrast(img: ImageBuffer, n: int, of: int = 4) -> ImageBuffer:
    """Pivoted linear contrast around 0.5 in encoded space."""
    return apply_contrast_slope(img, contrast_slope(n, of))


def apply_saturation_factor(img: ImageBuffer, factor: float) -> ImageBuffer:
    img.require(SRGB)
    if factor == 1.0:
        return img.copy()
    luma = img.data @ _LUMA
    out = luma[..., None] + factor * (img.data - luma[..., None])
    return ImageBuffer(np.clip(out, 0.0, 1.0), SRGB)


def apply_saturation(img: ImageBuffer, n: int, of: int = 4) -> ImageBuffer:
    """Mix each pixel against its Rec. 709 luma in encoded space."""
    return apply_saturation_factor(img, saturation_factor(n, of))


def apply_zoom(img: ImageBuffer, factor: float) -> ImageBuffer:
    """Center-crop by the FoV ratio and bicubic-resample back to size."""
    if not 1.0 <= factor <= 4.0:
        raise RangeError(f"zoom {factor} outside [1, 4]")
    if factor == 1.0:
        return img.copy()
    h, w = img.height, img.width
    cw = int(round(w / factor / 2.0) * 2)
    ch = int(round(h / factor / 2.0) * 2)
    if cw < MIN_CROP_PX or ch < MIN_CROP_PX:
        raise TooSmallError(f"zoom {factor} crop {cw}x{ch} below {MIN_CROP_PX}px")
    x0 = (w - cw) // 2
    y0 = (h - ch) // 2
    crop = img.data[y0 : y0 + ch, x0 : x0 + cw]
    out = cv2.resize(crop, (w, h), interpolation=cv2.INTER_CUBIC)
    # bicubic overshoot: keep within the space's valid range
    out = np.maximum(out, 0.0) if img.space == LINEAR else np.clip(out, 0.0, 1.0)
    return ImageBuffer(out, img.space)


@dataclass
class BokehPair:
    """Base image plus a foreground matte (1 = sharp foreground)."""

    base: ImageBuffer
    mask: np.ndarray  # (h, w) in [0, 1]

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=np.float64)
        if self.mask.shape != (self.base.height, self.base.width):
            raise DimensionMismatchError(
                f"mask {self.mask.shape} does not match image "
                f"{(self.base.height, self.base.width)}"
            )


def _disc_kernel(radius: int) -> np.ndarray:
    span = np.arange(-radius, radius + 1)
    yy, xx = np.meshgrid(span, span, indexing="ij")
    kernel = (yy**2 + xx**2 <= radius**2).astype(np.float64)
    return kernel / kernel.sum()


def _disc_blur(data: np.ndarray, radius: int) -> np.ndarray:
    if radius < 1:
        return data
    return cv2.filter2D(data, -1, _disc_kernel(radius), borderType=cv2.BORDER_REFLECT)


def _bokeh_radius_px(radius_at_ref: float, height: int, width: int) -> int:
    if radius_at_ref <= 0.0:
        return 0
    scaled = radius_at_ref * max(height, width) / BOKEH_REFERENCE_SIZE
    return max(1, int(round(scaled)))


def _composite_bokeh(pair: BokehPair, radius_px: int) -> ImageBuffer:
    if radius_px < 1:
        return pair.base.copy()
    blurred = _disc_blur(pair.base.data, radius_px)
    mask = pair.mask[..., None]
    return ImageBuffer(mask * pair.base.data + (1.0 - mask) * blurred, pair.base.space)


def apply_bokeh(pair: BokehPair, level: int) -> ImageBuffer:
    """Disc-blur the background at one of five aperture levels (0 = none)
    and composite the foreground back over it."""
    if not 0 <= level <= 4:
        raise RangeError(f"bokeh level {level} outside [0, 4]")
    radius = _bokeh_radius_px(BOKEH_RADII[level], pair.base.height, pair.base.width)
    return _composite_bokeh(pair, radius)


_LUT_CACHE: dict[str, Lut3D] = {}


def _style_lut(registry: StyleRegistry, name: str) -> Lut3D:
    key = str(registry.lut_path(name))
    if key not in _LUT_CACHE:
        _LUT_CACHE[key] = read_cube(key)
    return _LUT_CACHE[key]


def apply_style(img: ImageBuffer, lut: Lut3D) -> ImageBuffer:
    """Film emulation via trilinear 3D LUT lookup in encoded space."""
    return apply_lut(img, lut)


@dataclass
class ChainOps:
    """Resolved per-parameter settings for one chain invocation."""

    ev: float | None = None
    kelvin: float | None = None
    zoom: float | None = None
    bokeh_radius_ref: float | None = None
    contrast: float | None = None  # slope
    saturation: float | None = None  # factor
    style: str | None = None

    def describe(self) -> list[str]:
        linear_ops = []
        if self.ev is not None:
            linear_ops.append(f"exposure({self.ev:+g}EV)")
        if self.kelvin is not None:
            linear_ops.append(f"cct({self.kelvin:g}K)")
        if self.zoom is not None:
            linear_ops.append(f"zoom({self.zoom:g}x)")
        if self.bokeh_radius_ref is not None:
            linear_ops.append(f"bokeh(r{self.bokeh_radius_ref:g})")
        ops = ["srgb_decode", *linear_ops, "srgb_encode"] if linear_ops else []
        if self.contrast is not None:
            ops.append(f"contrast(k{self.contrast:g})")
        if self.saturation is not None:
            ops.append(f"saturation(f{self.saturation:g})")
        if self.style is not None:
            ops.append(f"style({self.style})")
        return ops


def chain_ops(source: Directive | CameraVector) -> ChainOps:
    """Resolve a directive or calibrated vector into concrete settings."""
    ops = ChainOps()
    if isinstance(source, Directive):
        for param, raw in source.pairs:
            if param == "exposure":
                assert isinstance(raw, EV)
                ops.ev = raw.stops
            elif param == "cct":
                assert isinstance(raw, Kelvin)
                ops.kelvin = raw.kelvin
            elif param == "zoom":
                assert isinstance(raw, ZoomFactor)
                ops.zoom = raw.factor
            elif param == "contrast":
                assert isinstance(raw, Level)
                ops.contrast = contrast_slope(raw.n, raw.of)
            elif param == "saturation":
                assert isinstance(raw, Level)
                ops.saturation = saturation_factor(raw.n, raw.of)
            elif param == "bokeh":
                assert isinstance(raw, Level)
                ops.bokeh_radius_ref = slope_from_ordinal(
                    calibrate_ordinal(raw.n, raw.of), BOKEH_RADII[1:]
                )
            elif param == "style":
                assert isinstance(raw, StyleName)
                ops.style = raw.name
    elif isinstance(source, CameraVector):
        if source.present("exposure"):
            ops.ev = invert_exposure(source.exposure_s)
        if source.present("cct"):
            ops.kelvin = invert_cct(source.cct_s)
        if source.present("zoom"):
            ops.zoom = invert_zoom(source.zoom_s)
        if source.present("contrast"):
            ops.contrast = slope_from_ordinal(source.contrast_s, CONTRAST_SLOPES)
        if source.present("saturation"):
            ops.saturation = slope_from_ordinal(source.saturation_s, SATURATION_FACTORS)
        if source.present("bokeh"):
            ops.bokeh_radius_ref = slope_from_ordinal(source.bokeh_s, BOKEH_RADII[1:])
        if source.present("style") and max(source.style_onehot) > 0:
            index = int(np.argmax(source.style_onehot))
            ops.style = f"#{index}"  # resolved against the registry below
    else:
        raise TypeError(f"expected Directive or CameraVector, got {type(source)}")
    return ops


def apply_chain(
    img: ImageBuffer,
    source: Directive | CameraVector,
    registry: StyleRegistry | None = None,
    bokeh_mask: np.ndarray | None = None,
) -> ImageBuffer:
    """Apply every parameter present in ``source`` in the fixed chain order.

    A fully neutral source returns a bit-identical copy.  Bokeh requires
    ``bokeh_mask``.
    """
    img.require(SRGB)
    ops = chain_ops(source)
    if ops.style is not None and ops.style.startswith("#"):
        registry = registry or load_registry()
        ops.style = registry.names[int(ops.style[1:])]

    needs_linear = any(
        v is not None for v in (ops.ev, ops.kelvin, ops.zoom, ops.bokeh_radius_ref)
    )
    if ops.bokeh_radius_ref is not None and bokeh_mask is None:
        raise RangeError("bokeh requested but no foreground mask provided")

    out = img
    if needs_linear:
        out = srgb_decode(out)
        if ops.ev is not None:
            out = apply_exposure(out, ops.ev)
        if ops.kelvin is not None:
            out = apply_cct(out, ops.kelvin)
        if ops.zoom is not None:
            out = apply_zoom(out, ops.zoom)
        if ops.bokeh_radius_ref is not None:
            radius = _bokeh_radius_px(ops.bokeh_radius_ref, out.height, out.width)
            out = _composite_bokeh(BokehPair(out, bokeh_mask), radius)
        out = srgb_encode(out)
    if ops.contrast is not None:
        out = apply_contrast_slope(out, ops.contrast)
    if ops.saturation is not None:
        out = apply_saturation_factor(out, ops.saturation)
    if ops.style is not None:
        registry = registry or load_registry()
        out = apply_style(out, _style_lut(registry, ops.style))
    if out is img:
        out = img.copy()
    return out

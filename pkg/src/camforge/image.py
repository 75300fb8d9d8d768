"""Float RGB image buffers, the sRGB transfer function, and PNG I/O.

Buffers carry a color-space tag: ``linear`` holds physical intensities
(>= 0, unbounded above), ``srgb`` holds display-encoded values in [0, 1].
Photometric operations require linear buffers; appearance operations
require encoded ones.  All pixel math is float64; quantization happens
only at PNG write time.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from .errors import DimensionMismatchError, SpaceMismatchError

LINEAR = "linear"
SRGB = "srgb"

_SRGB_LIN_KNEE = 0.0031308
_SRGB_ENC_KNEE = 0.04045


@dataclass
class ImageBuffer:
    """Height x width x 3 float64 raster with a color-space tag."""

    data: np.ndarray
    space: str

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise DimensionMismatchError(f"expected (h, w, 3) data, got {arr.shape}")
        if self.space not in (LINEAR, SRGB):
            raise SpaceMismatchError(f"unknown color space {self.space!r}")
        self.data = arr

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def require(self, space: str) -> None:
        if self.space != space:
            raise SpaceMismatchError(f"expected {space} buffer, got {self.space}")

    def copy(self) -> "ImageBuffer":
        return ImageBuffer(self.data.copy(), self.space)


def srgb_decode(img: ImageBuffer) -> ImageBuffer:
    """Encoded sRGB -> linear light (IEC 61966-2-1 piecewise transfer)."""
    img.require(SRGB)
    x = img.data
    lin = np.where(x <= _SRGB_ENC_KNEE, x / 12.92, ((x + 0.055) / 1.055) ** 2.4)
    return ImageBuffer(lin, LINEAR)


def srgb_encode(img: ImageBuffer) -> ImageBuffer:
    """Linear light -> encoded sRGB, clamped to [0, 1]."""
    img.require(LINEAR)
    x = np.clip(img.data, 0.0, 1.0)
    enc = np.where(x <= _SRGB_LIN_KNEE, 12.92 * x, 1.055 * x ** (1.0 / 2.4) - 0.055)
    # 1.055 - 0.055 lands one ulp under 1; keep the fixed point exact
    enc = np.where(x == 1.0, 1.0, enc)
    return ImageBuffer(np.clip(enc, 0.0, 1.0), SRGB)


def quantize(img: ImageBuffer, bit_depth: int = 8) -> np.ndarray:
    """Encoded buffer -> integer pixel array (uint8 or uint16)."""
    img.require(SRGB)
    if bit_depth == 8:
        scale, dtype = 255.0, np.uint8
    elif bit_depth == 16:
        scale, dtype = 65535.0, np.uint16
    else:
        raise ValueError(f"bit depth must be 8 or 16, got {bit_depth}")
    return np.rint(np.clip(img.data, 0.0, 1.0) * scale).astype(dtype)


def from_pixels(arr: np.ndarray) -> ImageBuffer:
    """Integer pixel array (uint8/uint16, gray or RGB) -> encoded buffer."""
    if arr.dtype == np.uint8:
        scale = 255.0
    elif arr.dtype == np.uint16:
        scale = 65535.0
    else:
        raise ValueError(f"expected uint8 or uint16 pixels, got {arr.dtype}")
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DimensionMismatchError(
            f"expected gray or 3-channel pixels, got shape {arr.shape}"
        )
    return ImageBuffer(arr.astype(np.float64) / scale, SRGB)


def encode_png(img: ImageBuffer, bit_depth: int = 8) -> bytes:
    """Serialize an encoded buffer to PNG bytes (deterministic)."""
    pixels = quantize(img, bit_depth)
    ok, buf = cv2.imencode(".png", pixels[:, :, ::-1])
    if not ok:
        raise OSError("PNG encoding failed")
    return buf.tobytes()


def decode_png_meta(data: bytes) -> tuple[ImageBuffer, int]:
    """PNG bytes -> (encoded buffer, source bit depth).

    Gray is expanded to RGB; alpha rejected.
    """
    arr = cv2.imdecode(np.frombuffer(data, dtype=np.uint8), cv2.IMREAD_UNCHANGED)
    if arr is None:
        raise OSError("not a decodable PNG")
    if arr.ndim == 3 and arr.shape[2] == 4:
        raise OSError("alpha channels are not supported")
    if arr.ndim == 3:
        arr = arr[:, :, ::-1]
    return from_pixels(arr), 16 if arr.dtype == np.uint16 else 8


def decode_png(data: bytes) -> ImageBuffer:
    return decode_png_meta(data)[0]


def read_png(path: str | Path) -> ImageBuffer:
    return decode_png(Path(path).read_bytes())


def write_png(img: ImageBuffer, path: str | Path, bit_depth: int = 8) -> None:
    Path(path).write_bytes(encode_png(img, bit_depth))


def pixel_checksum(img: ImageBuffer, bit_depth: int = 8) -> str:
    """SHA-256 over quantized pixel bytes plus a dimensions header.

    Checksums cover pixel content, not PNG container bytes, so they are
    stable across codecs and compression settings.
    """
    pixels = quantize(img, bit_depth)
    h = hashlib.sha256()
    h.update(f"camforge-px|{img.width}|{img.height}|{bit_depth}|".encode())
    h.update(pixels.tobytes())
    return h.hexdigest()

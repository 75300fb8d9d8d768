"""3D LUTs: cube-file I/O, trilinear application, and the shipped film looks.

The ten film styles are parametric approximations (tone curve + 3x3 color
matrix + saturation mix) baked to 17^3 lattices; they stand in for
photographer-authored film simulations and say so in their titles.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SpaceMismatchError
from .image import SRGB, ImageBuffer

LUT_SIZE = 17

_LUMA = np.array([0.2126, 0.7152, 0.0722])


@dataclass
class Lut3D:
    """Cubic lattice mapping RGB -> RGB, indexed ``table[r, g, b]``."""

    size: int
    table: np.ndarray  # (size, size, size, 3) float64 in [0, 1]
    title: str = ""

    def __post_init__(self):
        expected = (self.size, self.size, self.size, 3)
        if self.table.shape != expected:
            raise ValueError(f"LUT table shape {self.table.shape} != {expected}")


def identity_lut(size: int = LUT_SIZE, title: str = "identity") -> Lut3D:
    axis = np.linspace(0.0, 1.0, size)
    r, g, b = np.meshgrid(axis, axis, axis, indexing="ij")
    return Lut3D(size=size, table=np.stack([r, g, b], axis=-1), title=title)


def apply_lut(img: ImageBuffer, lut: Lut3D) -> ImageBuffer:
    """Trilinear interpolation through the lattice (encoded space)."""
    img.require(SRGB)
    n = lut.size
    x = np.clip(img.data, 0.0, 1.0) * (n - 1)
    i0 = np.minimum(x.astype(np.int64), n - 2)
    f = x - i0
    r0, g0, b0 = i0[..., 0], i0[..., 1], i0[..., 2]
    fr, fg, fb = f[..., 0:1], f[..., 1:2], f[..., 2:3]
    t = lut.table

    c00 = t[r0, g0, b0] * (1 - fr) + t[r0 + 1, g0, b0] * fr
    c10 = t[r0, g0 + 1, b0] * (1 - fr) + t[r0 + 1, g0 + 1, b0] * fr
    c01 = t[r0, g0, b0 + 1] * (1 - fr) + t[r0 + 1, g0, b0 + 1] * fr
    c11 = t[r0, g0 + 1, b0 + 1] * (1 - fr) + t[r0 + 1, g0 + 1, b0 + 1] * fr
    c0 = c00 * (1 - fg) + c10 * fg
    c1 = c01 * (1 - fg) + c11 * fg
    return ImageBuffer(c0 * (1 - fb) + c1 * fb, SRGB)


def format_cube(lut: Lut3D) -> str:
    """Serialize to the plain-text .cube convention (R varies fastest)."""
    lines = [f'TITLE "{lut.title}"', f"LUT_3D_SIZE {lut.size}"]
    # file order: r fastest, then g, then b
    entries = lut.table.transpose(2, 1, 0, 3).reshape(-1, 3)
    for rgb in entries:
        lines.append(f"{rgb[0]:.6f} {rgb[1]:.6f} {rgb[2]:.6f}")
    return "\n".join(lines) + "\n"


def parse_cube(text: str) -> Lut3D:
    title = ""
    size = None
    values: list[tuple[float, float, float]] = []
    for raw_line in text.splitlines():
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if line.upper().startswith("TITLE"):
            m = re.match(r'TITLE\s+"(.*)"', line, re.IGNORECASE)
            title = m.group(1) if m else line.split(None, 1)[1]
            continue
        if line.upper().startswith("LUT_3D_SIZE"):
            size = int(line.split()[1])
            continue
        if line.upper().startswith(("DOMAIN_MIN", "DOMAIN_MAX", "LUT_1D_SIZE")):
            continue
        parts = line.split()
        if len(parts) == 3:
            values.append((float(parts[0]), float(parts[1]), float(parts[2])))
        else:
            raise ValueError(f"unparseable cube line: {line!r}")
    if size is None:
        raise ValueError("missing LUT_3D_SIZE header")
    if len(values) != size**3:
        raise ValueError(f"expected {size**3} entries, got {len(values)}")
    table = np.asarray(values, dtype=np.float64).reshape(size, size, size, 3)
    return Lut3D(size=size, table=table.transpose(2, 1, 0, 3), title=title)


def read_cube(path: str | Path) -> Lut3D:
    return parse_cube(Path(path).read_text())


def write_cube(lut: Lut3D, path: str | Path) -> None:
    Path(path).write_text(format_cube(lut))


@dataclass(frozen=True)
class FilmStyle:
    """Parametric film look: color matrix, S-curve, black/white points,
    saturation mix."""

    name: str
    matrix: tuple[tuple[float, float, float], ...]
    curve_strength: float
    black: float
    white: float
    saturation: float

    def evaluate(self, rgb: np.ndarray) -> np.ndarray:
        """Apply the look to encoded RGB values (..., 3) in [0, 1]."""
        out = rgb @ np.asarray(self.matrix, dtype=np.float64).T
        out = np.clip(out, 0.0, 1.0)
        # smooth S-curve fixing 0, 1 and steepening the midtones
        out = out + self.curve_strength * 4.0 * out * (1.0 - out) * (out - 0.5)
        out = self.black + (self.white - self.black) * out
        luma = out @ _LUMA
        out = luma[..., None] + self.saturation * (out - luma[..., None])
        return np.clip(out, 0.0, 1.0)


FILM_STYLES: tuple[FilmStyle, ...] = (
    FilmStyle(
        "ClassicNeg",
        ((0.96, 0.05, -0.01), (0.02, 0.95, 0.03), (-0.01, 0.04, 0.97)),
        0.28, 0.020, 0.975, 0.85,
    ),
    FilmStyle(
        "Velvia",
        ((1.04, -0.02, -0.02), (-0.02, 1.03, -0.01), (-0.02, -0.02, 1.04)),
        0.38, 0.000, 1.000, 1.35,
    ),
    FilmStyle(
        "KodakGold",
        ((1.06, 0.02, -0.03), (0.01, 1.00, -0.01), (-0.03, 0.00, 0.96)),
        0.16, 0.010, 0.990, 1.10,
    ),
    FilmStyle(
        "CineStill",
        ((0.97, 0.01, 0.02), (0.00, 0.99, 0.01), (0.01, 0.02, 1.03)),
        0.22, 0.030, 0.985, 0.95,
    ),
    FilmStyle(
        "Provia",
        ((1.01, 0.00, -0.01), (0.00, 1.01, -0.01), (-0.01, 0.00, 1.01)),
        0.20, 0.005, 0.995, 1.10,
    ),
    FilmStyle(
        "Astia",
        ((1.00, 0.01, -0.01), (0.01, 0.99, 0.00), (0.00, 0.01, 0.99)),
        0.10, 0.010, 0.980, 0.95,
    ),
    FilmStyle(
        "Acros",
        ((1.00, 0.00, 0.00), (0.00, 1.00, 0.00), (0.00, 0.00, 1.00)),
        0.30, 0.010, 0.990, 0.00,
    ),
    FilmStyle(
        "Portra",
        ((1.04, 0.02, -0.02), (0.01, 1.00, 0.00), (-0.02, 0.01, 0.97)),
        0.12, 0.015, 0.985, 0.90,
    ),
    FilmStyle(
        "Ektachrome",
        ((0.98, 0.00, 0.01), (0.00, 1.00, 0.01), (0.01, 0.01, 1.02)),
        0.24, 0.005, 0.995, 1.15,
    ),
    FilmStyle(
        "Superia",
        ((1.02, 0.02, -0.02), (0.02, 1.01, -0.01), (-0.02, 0.03, 0.97)),
        0.18, 0.015, 0.985, 1.05,
    ),
)


def bake_style_lut(style: FilmStyle, size: int = LUT_SIZE) -> Lut3D:
    base = identity_lut(size)
    return Lut3D(
        size=size,
        table=style.evaluate(base.table),
        title=f"{style.name} (parametric approximation)",
    )

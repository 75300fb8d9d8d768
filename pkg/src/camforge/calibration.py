"""Directive raw values -> normalized camera vector.

Each continuous control maps onto a monotone, equal-stride scale:

    exposure   shutter ratio 2^ev, s = clamp(log2(ratio) / 3, -1, 1)
    cct        s = (ln K - ln 2000) / (ln 10000 - ln 2000), in [0, 1]
    ordinal    level n of m -> s = -1 + 2(n-1)/(m-1), in [-1, 1]
    zoom       s = log2(factor) / log2(4), in [0, 1]
    style      one-hot over the 10-entry style registry

Absent parameters hold neutral values (0 on signed axes, the 6500 K point
on the cct axis, 0 zoom, all-zero one-hot) and are flagged absent in the
presence mask.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .directive import EV, Directive, Kelvin, Level, PARAM_NAMES, StyleName, ZoomFactor
from .errors import RangeError, UnknownStyleError

EXPOSURE_FULL_SCALE_EV = 3.0
CCT_MIN_K = 2000.0
CCT_MAX_K = 10000.0
CCT_REFERENCE_K = 6500.0
ZOOM_MAX = 4.0
STYLE_COUNT = 10

REGISTRY_ENV_VAR = "CAMFORGE_REGISTRY"
_REGISTRY_MAGIC = "camforge-styles v1"


def calibrate_exposure(ev: float) -> float:
    """EV stops -> [-1, 1]; clamps beyond ±3 EV.

    The control is the shutter ratio r = 2^ev, normalized on a log2 scale:
    s = log2(r)/3, computed as ev/3 directly so sub-ulp stops do not
    collapse through the exponential.
    """
    if not math.isfinite(ev):
        raise RangeError(f"exposure must be finite, got {ev}")
    return min(1.0, max(-1.0, ev / EXPOSURE_FULL_SCALE_EV))


def calibrate_cct(kelvin: float) -> float:
    """Kelvin -> [0, 1] on a log scale over [2000, 10000] K."""
    if not (CCT_MIN_K <= kelvin <= CCT_MAX_K):
        raise RangeError(
            f"cct {kelvin} K outside [{CCT_MIN_K:.0f}, {CCT_MAX_K:.0f}] K"
        )
    return (math.log(kelvin) - math.log(CCT_MIN_K)) / (
        math.log(CCT_MAX_K) - math.log(CCT_MIN_K)
    )


def calibrate_ordinal(n: int, of: int) -> float:
    """Level n of m -> [-1, 1] with constant stride 2/(m-1)."""
    if of < 2:
        raise RangeError(f"ordinal scale needs at least 2 levels, got {of}")
    if not 1 <= n <= of:
        raise RangeError(f"level {n} outside [1, {of}]")
    return -1.0 + 2.0 * (n - 1) / (of - 1)


def calibrate_zoom(factor: float) -> float:
    """Zoom factor -> [0, 1] on a log2 scale over [1, 4]."""
    if not 1.0 <= factor <= ZOOM_MAX:
        raise RangeError(f"zoom {factor} outside [1, {ZOOM_MAX:.0f}]")
    return math.log2(factor) / math.log2(ZOOM_MAX)


NEUTRAL_CCT_S = calibrate_cct(CCT_REFERENCE_K)


@dataclass(frozen=True)
class StyleRegistry:
    """Ordered film-style registry: names with one-hot index and LUT file."""

    names: tuple[str, ...]
    lut_paths: tuple[str, ...]
    root: Path

    def __post_init__(self):
        if len(self.names) != STYLE_COUNT:
            raise ValueError(f"registry must have {STYLE_COUNT} styles, got {len(self.names)}")
        lowered = [n.lower() for n in self.names]
        if len(set(lowered)) != len(lowered):
            raise ValueError("registry style names must be unique")

    def index_of(self, name: str) -> int:
        target = name.lower()
        for i, n in enumerate(self.names):
            if n.lower() == target:
                return i
        raise UnknownStyleError(f"unknown style {name!r}")

    def lut_path(self, name: str) -> Path:
        return self.root / self.lut_paths[self.index_of(name)]

    def to_json(self) -> list[dict]:
        return [
            {"name": n, "index": i, "lut": p}
            for i, (n, p) in enumerate(zip(self.names, self.lut_paths))
        ]


def load_registry(path: str | Path | None = None) -> StyleRegistry:
    """Load the style registry file (name,index,lut_path per line).

    Resolution order: explicit ``path`` argument, the CAMFORGE_REGISTRY
    environment variable, then the registry shipped with the package.
    """
    if path is None:
        env = os.environ.get(REGISTRY_ENV_VAR)
        if env:
            path = env
    if path is None:
        path = Path(str(resources.files("camforge").joinpath("data/styles.txt")))
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip() != _REGISTRY_MAGIC:
        raise ValueError(f"{path}: not a '{_REGISTRY_MAGIC}' registry file")
    names: list[str] = []
    luts: list[str] = []
    for line in lines[1:]:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, index, lut = (part.strip() for part in line.split(","))
        if int(index) != len(names):
            raise ValueError(f"{path}: style indices must be contiguous from 0")
        names.append(name)
        luts.append(lut)
    return StyleRegistry(names=tuple(names), lut_paths=tuple(luts), root=path.parent)


def encode_style(name: str, registry: StyleRegistry) -> tuple[float, ...]:
    """Case-insensitive one-hot encoding against the registry order."""
    index = registry.index_of(name)
    onehot = [0.0] * STYLE_COUNT
    onehot[index] = 1.0
    return tuple(onehot)


@dataclass(frozen=True)
class CameraVector:
    """Calibrated camera parameter vector with a presence mask.

    The flat array layout (see :meth:`as_array`) is
    ``[exposure_s, cct_s, contrast_s, saturation_s, zoom_s, bokeh_s,
    style_onehot x 10]``; the mask follows :data:`PARAM_NAMES` order.
    """

    exposure_s: float = 0.0
    cct_s: float = NEUTRAL_CCT_S
    contrast_s: float = 0.0
    saturation_s: float = 0.0
    zoom_s: float = 0.0
    bokeh_s: float = 0.0
    style_onehot: tuple[float, ...] = (0.0,) * STYLE_COUNT
    mask: tuple[bool, ...] = (False,) * len(PARAM_NAMES)

    def present(self, param: str) -> bool:
        return self.mask[PARAM_NAMES.index(param)]

    def continuous(self) -> np.ndarray:
        """The six continuous axes (everything but the style one-hot)."""
        return np.array(
            [
                self.exposure_s,
                self.cct_s,
                self.contrast_s,
                self.saturation_s,
                self.zoom_s,
                self.bokeh_s,
            ],
            dtype=np.float64,
        )

    def as_array(self) -> np.ndarray:
        return np.concatenate(
            [self.continuous(), np.asarray(self.style_onehot, dtype=np.float64)]
        )

    def to_json(self) -> dict:
        return {
            "exposure_s": self.exposure_s,
            "cct_s": self.cct_s,
            "contrast_s": self.contrast_s,
            "saturation_s": self.saturation_s,
            "zoom_s": self.zoom_s,
            "bokeh_s": self.bokeh_s,
            "style_onehot": list(self.style_onehot),
            "mask": {p: m for p, m in zip(PARAM_NAMES, self.mask)},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CameraVector":
        return cls(
            exposure_s=obj["exposure_s"],
            cct_s=obj["cct_s"],
            contrast_s=obj["contrast_s"],
            saturation_s=obj["saturation_s"],
            zoom_s=obj["zoom_s"],
            bokeh_s=obj["bokeh_s"],
            style_onehot=tuple(obj["style_onehot"]),
            mask=tuple(obj["mask"][p] for p in PARAM_NAMES),
        )


def calibrate(directive: Directive, registry: StyleRegistry) -> CameraVector:
    """Calibrate every parameter present in the directive; absent ones stay
    neutral with their mask bit clear."""
    values: dict = {}
    mask = [False] * len(PARAM_NAMES)
    for param, raw in directive.pairs:
        mask[PARAM_NAMES.index(param)] = True
        if param == "exposure":
            assert isinstance(raw, EV)
            values["exposure_s"] = calibrate_exposure(raw.stops)
        elif param == "cct":
            assert isinstance(raw, Kelvin)
            values["cct_s"] = calibrate_cct(raw.kelvin)
        elif param == "contrast":
            assert isinstance(raw, Level)
            values["contrast_s"] = calibrate_ordinal(raw.n, raw.of)
        elif param == "saturation":
            assert isinstance(raw, Level)
            values["saturation_s"] = calibrate_ordinal(raw.n, raw.of)
        elif param == "bokeh":
            assert isinstance(raw, Level)
            values["bokeh_s"] = calibrate_ordinal(raw.n, raw.of)
        elif param == "zoom":
            assert isinstance(raw, ZoomFactor)
            values["zoom_s"] = calibrate_zoom(raw.factor)
        elif param == "style":
            assert isinstance(raw, StyleName)
            values["style_onehot"] = encode_style(raw.name, registry)
    return CameraVector(mask=tuple(mask), **values)


def invert_exposure(s: float) -> float:
    """Exact analytic inverse of :func:`calibrate_exposure` on [-1, 1]."""
    return s * EXPOSURE_FULL_SCALE_EV


def invert_cct(s: float) -> float:
    """Exact analytic inverse of :func:`calibrate_cct` on [0, 1].

    Clamped into the calibrated Kelvin range so exp/log round-trip noise
    at the endpoints cannot escape it.
    """
    kelvin = math.exp(
        math.log(CCT_MIN_K) + s * (math.log(CCT_MAX_K) - math.log(CCT_MIN_K))
    )
    return min(CCT_MAX_K, max(CCT_MIN_K, kelvin))


def invert_zoom(s: float) -> float:
    """Exact analytic inverse of :func:`calibrate_zoom` on [0, 1]."""
    return 2.0 ** (s * math.log2(ZOOM_MAX))

"""Camera control directive parsing and canonical rendering.

Directives are short bracketed control strings such as
``[CONTROL: exposure=+1EV, cct=3200K]``.  Grammar::

    directive := "[" ws "CONTROL" ws ":" pairlist ws "]"
    pairlist  := pair ("," pair)*
    pair      := ws key ws "=" ws value ws

Keys are case-insensitive and canonicalized to lowercase; the ``CONTROL``
keyword is case-insensitive too.  Value syntax per parameter:

    exposure    [+|-]<dec>EV          e.g. +1EV, -0.5EV
    cct         <dec>K                e.g. 3200K
    contrast    <int>/<int> or <int>  e.g. 3/4 (bare int means n of 4)
    saturation  <int>/<int> or <int>
    bokeh       <int>/<int> or <int>
    zoom        <dec>x or <dec>×      e.g. 2x
    style       bare identifier       e.g. CineStill

Unit suffixes are case-insensitive and may be separated from the number
by whitespace.  Canonical rendering uses single spaces, lowercase keys and
the suffixes EV, K, ×, /of.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DirectiveSyntaxError,
    DirectiveValueError,
    DuplicateParamError,
    UnknownParamError,
)

PARAM_NAMES = ("style", "exposure", "cct", "contrast", "saturation", "zoom", "bokeh")


@dataclass(frozen=True)
class EV:
    stops: float

    def to_json(self) -> dict:
        return {"type": "ev", "stops": self.stops}


@dataclass(frozen=True)
class Kelvin:
    kelvin: float

    def to_json(self) -> dict:
        return {"type": "kelvin", "kelvin": self.kelvin}


@dataclass(frozen=True)
class Level:
    n: int
    of: int

    def to_json(self) -> dict:
        return {"type": "level", "n": self.n, "of": self.of}


@dataclass(frozen=True)
class ZoomFactor:
    factor: float

    def to_json(self) -> dict:
        return {"type": "zoom", "factor": self.factor}


@dataclass(frozen=True)
class StyleName:
    name: str

    def to_json(self) -> dict:
        return {"type": "style", "name": self.name}


RawValue = EV | Kelvin | Level | ZoomFactor | StyleName


@dataclass(frozen=True)
class Directive:
    """Parsed camera control intent: ordered (param, value) pairs.

    ``source_text`` is kept for diagnostics but excluded from equality so
    that a directive compares equal to its canonical re-parse.
    """

    pairs: tuple[tuple[str, RawValue], ...]
    source_text: str = field(default="", compare=False)

    def params(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.pairs)

    def get(self, param: str) -> RawValue | None:
        for k, v in self.pairs:
            if k == param:
                return v
        return None

    def to_json(self) -> dict:
        return {
            "pairs": [{"param": k, "value": v.to_json()} for k, v in self.pairs],
            "canonical": render_directive(self),
        }


_HEAD_RE = re.compile(r"^\s*control\s*:", re.IGNORECASE)
_PAIR_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*?)\s*$", re.DOTALL)
_EV_RE = re.compile(r"^([+-]?\d+(?:\.\d+)?)\s*ev$", re.IGNORECASE)
_KELVIN_RE = re.compile(r"^([+-]?\d+(?:\.\d+)?)\s*k$", re.IGNORECASE)
_LEVEL_RE = re.compile(r"^([+-]?\d+)\s*(?:/\s*([+-]?\d+))?$")
_ZOOM_RE = re.compile(r"^([+-]?\d+(?:\.\d+)?)\s*[x×]$", re.IGNORECASE)
_STYLE_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")

DEFAULT_LEVELS = 4


def _parse_value(param: str, text: str, pos: int) -> RawValue:
    if param == "exposure":
        m = _EV_RE.match(text)
        if not m:
            raise DirectiveSyntaxError(
                f"malformed exposure value {text!r} (expected e.g. +1EV)", pos
            )
        return EV(float(m.group(1)))
    if param == "cct":
        m = _KELVIN_RE.match(text)
        if not m:
            raise DirectiveSyntaxError(
                f"malformed cct value {text!r} (expected e.g. 3200K)", pos
            )
        kelvin = float(m.group(1))
        if kelvin <= 0:
            raise DirectiveValueError(f"cct must be positive, got {kelvin}")
        return Kelvin(kelvin)
    if param in ("contrast", "saturation", "bokeh"):
        m = _LEVEL_RE.match(text)
        if not m:
            raise DirectiveSyntaxError(
                f"malformed {param} level {text!r} (expected e.g. 3/4)", pos
            )
        n = int(m.group(1))
        of = int(m.group(2)) if m.group(2) is not None else DEFAULT_LEVELS
        if of < 1:
            raise DirectiveValueError(f"{param} level count must be >= 1, got {of}")
        if not 1 <= n <= of:
            raise DirectiveValueError(f"{param} level {n} outside [1, {of}]")
        return Level(n, of)
    if param == "zoom":
        m = _ZOOM_RE.match(text)
        if not m:
            raise DirectiveSyntaxError(
                f"malformed zoom value {text!r} (expected e.g. 2x)", pos
            )
        factor = float(m.group(1))
        if factor < 1:
            raise DirectiveValueError(f"zoom factor must be >= 1, got {factor}")
        return ZoomFactor(factor)
    if param == "style":
        if not _STYLE_RE.match(text):
            raise DirectiveSyntaxError(
                f"malformed style name {text!r} (expected an identifier)", pos
            )
        return StyleName(text)
    raise UnknownParamError(f"unknown parameter {param!r}")


def parse_directive(text: str) -> Directive:
    """Parse directive text into a :class:`Directive`.

    Raises :class:`DirectiveSyntaxError`, :class:`UnknownParamError`,
    :class:`DuplicateParamError` or :class:`DirectiveValueError`; every
    input either parses fully or raises exactly one of these.
    """
    if not isinstance(text, str):
        raise DirectiveSyntaxError("directive must be text")
    stripped = text.strip()
    offset = text.index(stripped) if stripped else 0
    if not stripped.startswith("["):
        raise DirectiveSyntaxError("directive must start with '['", offset)
    if not stripped.endswith("]"):
        raise DirectiveSyntaxError("directive must end with ']'", offset + len(stripped))
    inner = stripped[1:-1]
    inner_off = offset + 1
    head = _HEAD_RE.match(inner)
    if not head:
        raise DirectiveSyntaxError("expected 'CONTROL:' after '['", inner_off)
    body = inner[head.end():]
    body_off = inner_off + head.end()

    pairs: list[tuple[str, RawValue]] = []
    seen: set[str] = set()
    cursor = 0
    for chunk in body.split(","):
        chunk_pos = body_off + cursor
        cursor += len(chunk) + 1
        m = _PAIR_RE.match(chunk)
        if not m:
            raise DirectiveSyntaxError(
                f"malformed pair {chunk.strip()!r} (expected key=value)", chunk_pos
            )
        key = m.group(1).lower()
        if key not in PARAM_NAMES:
            raise UnknownParamError(f"unknown parameter {m.group(1)!r}")
        if key in seen:
            raise DuplicateParamError(f"duplicate parameter {key!r}")
        seen.add(key)
        value_pos = chunk_pos + m.start(2)
        pairs.append((key, _parse_value(key, m.group(2), value_pos)))
    return Directive(pairs=tuple(pairs), source_text=text)


def _fmt_num(x: float) -> str:
    if x == int(x):
        return str(int(x))
    # shortest positional decimal that round-trips (never exponent notation,
    # which the value grammar does not accept)
    return np.format_float_positional(float(x), trim="-")


def _render_value(value: RawValue) -> str:
    if isinstance(value, EV):
        sign = "-" if value.stops < 0 else "+"
        return f"{sign}{_fmt_num(abs(value.stops))}EV"
    if isinstance(value, Kelvin):
        return f"{_fmt_num(value.kelvin)}K"
    if isinstance(value, Level):
        return f"{value.n}/{value.of}"
    if isinstance(value, ZoomFactor):
        return f"{_fmt_num(value.factor)}×"
    if isinstance(value, StyleName):
        return value.name
    raise TypeError(f"not a RawValue: {value!r}")


def render_directive(directive: Directive) -> str:
    """Render a directive to its canonical text form."""
    body = ", ".join(f"{k}={_render_value(v)}" for k, v in directive.pairs)
    return f"[CONTROL: {body}]"
